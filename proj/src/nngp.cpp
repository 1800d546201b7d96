#include "spatfactor/nngp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "spatfactor/errors.hpp"
#include "spatfactor/spatial.hpp"

namespace spatfactor::nngp {

namespace {
constexpr double kFloorF = 1e-12;

// nearest `want` points of `target` among candidate indices, nearest first,
// ties by lower index
std::vector<int> nearest_of(const Eigen::MatrixXd& coords,
                            const Eigen::RowVectorXd& target,
                            const std::vector<int>& candidates, int want) {
  std::vector<std::pair<double, int>> d;
  d.reserve(candidates.size());
  for (int c : candidates)
    d.emplace_back((coords.row(c) - target).norm(), c);
  int n = std::min<int>(want, static_cast<int>(d.size()));
  std::partial_sort(d.begin(), d.begin() + n, d.end());
  std::vector<int> out(n);
  for (int i = 0; i < n; ++i) out[i] = d[i].second;
  return out;
}
}  // namespace

NeighborGraph build_graph(const Eigen::MatrixXd& coords, int h) {
  if (h < 1) throw NumericError("build_graph: h must be >= 1");
  const int m = static_cast<int>(coords.rows());
  NeighborGraph g;
  g.h = h;
  g.neighbors.resize(m);
  g.reverse.resize(m);
  g.reverse_pos.resize(m);
  std::vector<int> pred;
  pred.reserve(m);
  for (int i = 0; i < m; ++i) {
    if (i > 0) g.neighbors[i] = nearest_of(coords, coords.row(i), pred, h);
    pred.push_back(i);
  }
  for (int i = 0; i < m; ++i)
    for (int a = 0; a < static_cast<int>(g.neighbors[i].size()); ++a) {
      g.reverse[g.neighbors[i][a]].push_back(i);
      g.reverse_pos[g.neighbors[i][a]].push_back(a);
    }
  return g;
}

double LocalFactors::sum_log_f() const {
  double s = 0.0;
  for (double v : f) s += std::log(v);
  return s;
}

LocalFactors local_factors(const NeighborGraph& graph, const ExpKernel& kernel) {
  const int m = graph.m();
  LocalFactors lf;
  lf.b.resize(m);
  lf.f.assign(m, 1.0);
  for (int i = 0; i < m; ++i) {
    const auto& N = graph.neighbors[i];
    const int n = static_cast<int>(N.size());
    if (n == 0) continue;
    Eigen::MatrixXd FN(n, n);
    Eigen::VectorXd fni(n);
    for (int a = 0; a < n; ++a) {
      fni[a] = kernel(N[a], i);
      FN(a, a) = 1.0 + spatial::kCholJitter;
      for (int b = a + 1; b < n; ++b) FN(a, b) = FN(b, a) = kernel(N[a], N[b]);
    }
    Eigen::LLT<Eigen::MatrixXd> llt(FN);
    if (llt.info() != Eigen::Success) {
      FN.diagonal().array() += 1e-8;
      llt.compute(FN);
      if (llt.info() != Eigen::Success)
        throw NumericError("local_factors: singular neighbor submatrix");
    }
    lf.b[i] = llt.solve(fni);
    lf.f[i] = std::max(1.0 - lf.b[i].dot(fni), kFloorF);
  }
  return lf;
}

Eigen::SparseMatrix<double> sparse_precision(const NeighborGraph& graph,
                                             const LocalFactors& local) {
  const int m = graph.m();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(m) * (graph.h + 1) * (graph.h + 1));
  for (int i = 0; i < m; ++i) {
    const auto& N = graph.neighbors[i];
    const int n = static_cast<int>(N.size());
    const double fi_inv = 1.0 / local.f[i];
    trip.emplace_back(i, i, fi_inv);
    for (int a = 0; a < n; ++a) {
      const double ba = local.b[i][a];
      trip.emplace_back(i, N[a], -ba * fi_inv);
      trip.emplace_back(N[a], i, -ba * fi_inv);
      for (int b = 0; b < n; ++b)
        trip.emplace_back(N[a], N[b], ba * local.b[i][b] * fi_inv);
    }
  }
  Eigen::SparseMatrix<double> P(m, m);
  P.setFromTriplets(trip.begin(), trip.end());
  P.prune(0.0);
  return P;
}

double nngp_logdet(const LocalFactors& local, const Eigen::MatrixXd& kappa) {
  const int O = static_cast<int>(kappa.rows());
  Eigen::LLT<Eigen::MatrixXd> llt(kappa);
  if (llt.info() != Eigen::Success) throw NumericError("nngp_logdet: kappa not PD");
  double logdet_kappa =
      2.0 * Eigen::MatrixXd(llt.matrixL()).diagonal().array().log().sum();
  return O * local.sum_log_f() +
         static_cast<double>(local.f.size()) * logdet_kappa;
}

double quad_form(const NeighborGraph& graph, const LocalFactors& local,
                 const Eigen::MatrixXd& kappa_inv, const Eigen::MatrixXd& A) {
  const int m = graph.m();
  double q = 0.0;
  for (int i = 0; i < m; ++i) {
    Eigen::VectorXd r = A.col(i);
    const auto& N = graph.neighbors[i];
    for (int a = 0; a < static_cast<int>(N.size()); ++a)
      r -= local.b[i][a] * A.col(N[a]);
    q += r.dot(kappa_inv * r) / local.f[i];
  }
  return q;
}

std::vector<KrigeFactor> krige_factors(const Eigen::MatrixXd& ref_coords,
                                       const Eigen::MatrixXd& new_coords, int h,
                                       double rho) {
  const int m = static_cast<int>(ref_coords.rows());
  const int r = static_cast<int>(new_coords.rows());
  const int want = std::min(h, m);
  std::vector<int> all(m);
  std::iota(all.begin(), all.end(), 0);
  std::vector<KrigeFactor> out(r);
  for (int p = 0; p < r; ++p) {
    KrigeFactor& kf = out[p];
    // coincidence check before any kriging algebra
    int hit = -1;
    for (int i = 0; i < m; ++i)
      if ((ref_coords.row(i) - new_coords.row(p)).norm() == 0.0) {
        hit = i;
        break;
      }
    if (hit >= 0) {
      kf.neighbors = {hit};
      kf.b = Eigen::VectorXd::Ones(1);
      kf.f = 0.0;
      kf.degenerate = true;
      continue;
    }
    kf.neighbors = nearest_of(ref_coords, new_coords.row(p), all, want);
    const int n = static_cast<int>(kf.neighbors.size());
    Eigen::MatrixXd FN(n, n);
    Eigen::VectorXd fns(n);
    for (int a = 0; a < n; ++a) {
      fns[a] = std::exp(-rho * (ref_coords.row(kf.neighbors[a]) - new_coords.row(p)).norm());
      FN(a, a) = 1.0 + spatial::kCholJitter;
      for (int b = a + 1; b < n; ++b)
        FN(a, b) = FN(b, a) = std::exp(
            -rho * (ref_coords.row(kf.neighbors[a]) - ref_coords.row(kf.neighbors[b])).norm());
    }
    kf.b = FN.llt().solve(fns);
    kf.f = std::min(std::max(1.0 - kf.b.dot(fns), kFloorF), 1.0);
  }
  return out;
}

}  // namespace spatfactor::nngp
