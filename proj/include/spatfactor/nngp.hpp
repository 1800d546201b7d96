#pragma once

#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace spatfactor::nngp {

// Directed acyclic neighbor structure over locations in input order:
// N(s_0) is empty and N(s_i) holds the min(h, i) nearest predecessors,
// nearest first, distance ties broken by lower index.
struct NeighborGraph {
  int h = 15;
  std::vector<std::vector<int>> neighbors;
  std::vector<std::vector<int>> reverse;      // reverse[i] = { r : i in N(s_r) }, ascending
  std::vector<std::vector<int>> reverse_pos;  // position of i within N(s_r)
  int m() const { return static_cast<int>(neighbors.size()); }
};

NeighborGraph build_graph(const Eigen::MatrixXd& coords, int h);

// Exponential kernel evaluated on demand; `evals` audits how many entries of
// F(rho) are ever touched.
struct ExpKernel {
  const Eigen::MatrixXd& coords;
  double rho;
  mutable long evals = 0;
  double operator()(int i, int j) const {
    ++evals;
    if (i == j) return 1.0;
    return std::exp(-rho * (coords.row(i) - coords.row(j)).norm());
  }
};

// Spatial parts of the local kriging factors: b_i solves the neighbor
// system F_N b = F_{N,i}; f_i = 1 - b_i . F_{N,i} in (0,1], f_0 = 1.
struct LocalFactors {
  std::vector<Eigen::VectorXd> b;
  std::vector<double> f;
  double sum_log_f() const;
};

LocalFactors local_factors(const NeighborGraph& graph, const ExpKernel& kernel);

// Sparse m x m NNGP precision (spatial part): sum_i b*_i^T f_i^{-1} b*_i
// with b*_i the row holding 1 at i and -b_i on N(s_i).
Eigen::SparseMatrix<double> sparse_precision(const NeighborGraph& graph,
                                             const LocalFactors& local);

// ln det( Ftilde(rho) ⊗ kappa ) = O * sum_i ln f_i + m * ln det kappa
double nngp_logdet(const LocalFactors& local, const Eigen::MatrixXd& kappa);

// alpha^T [Ftilde^{-1} ⊗ kappa^{-1}] alpha through the local factors, for a
// site-major O x m matrix A (column i = the O-vector at location i).
double quad_form(const NeighborGraph& graph, const LocalFactors& local,
                 const Eigen::MatrixXd& kappa_inv, const Eigen::MatrixXd& A);

// Kriging factors for points outside the reference set: neighbors are the
// min(h, m) nearest reference locations. A new point that coincides with a
// reference location is returned degenerate (b = indicator, f = 0).
struct KrigeFactor {
  std::vector<int> neighbors;
  Eigen::VectorXd b;
  double f = 1.0;
  bool degenerate = false;
};

std::vector<KrigeFactor> krige_factors(const Eigen::MatrixXd& ref_coords,
                                       const Eigen::MatrixXd& new_coords, int h,
                                       double rho);

}  // namespace spatfactor::nngp
