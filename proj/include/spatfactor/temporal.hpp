#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace spatfactor::temporal {

enum class Kind { independent, ar1, exponential, sar1, sexponential };

Kind kind_from_string(const std::string& s);
std::string kind_to_string(Kind k);

// Temporal correlation structure over T ordered time points. For the
// seasonal kinds the correlation acts at index lags that are multiples of
// the period d; ar1/exponential are the d = 1 specialization.
struct Spec {
  Kind kind = Kind::independent;
  double psi = 0.5;
  int seasonal_period = 1;            // d, > 1 only for sar1/sexponential
  std::vector<double> timepoints;     // v_1..v_T
  bool equispaced = true;             // adjacent distances normalized to 1

  int T() const { return static_cast<int>(timepoints.size()); }
  bool seasonal() const { return kind == Kind::sar1 || kind == Kind::sexponential; }
  // rho = psi for ar1/sar1, exp(-psi) for exponential/sexponential
  double rho() const;
  void validate() const;

  static Spec regular(Kind kind, double psi, int T, int d = 1);
};

struct Factors {
  Eigen::SparseMatrix<double> precision;  // H^{-1}
  Eigen::SparseMatrix<double> rooti;      // upper triangular, rooti rooti^T = H^{-1}
  double logdet = 0.0;                    // ln det H
};

// Leave-one-out coefficients for eta_t | eta_{-t}: H_t^+ (sparse, over the
// compressed index space 0..T-2 where position p maps to time p if p < t,
// else p+1) and H_t^* = conditional variance.
struct CondCoeffs {
  std::vector<std::pair<int, double>> hplus;
  double hstar = 1.0;
};

// Dense H(psi); identity for the independent kind.
Eigen::MatrixXd build_H(const Spec& spec);

// Sparse closed-form H^{-1}, rooti(H) and logdet for equispaced grids.
// Requires spec.equispaced and kind != independent.
Factors closed_factors(const Spec& spec);

// Dense fallback used for irregular grids: same quantities via dense
// factorization of build_H.
Factors dense_factors(const Spec& spec);

// t is 0-based. Equispaced specs take the closed-form path (at most two
// nonzeros in H_t^+); otherwise the dense leave-one-out solve.
CondCoeffs conditional_coeffs(const Spec& spec, int t);

// Dense leave-one-out from an explicit H; oracle for the fast path.
CondCoeffs conditional_coeffs_dense(const Eigen::MatrixXd& H, int t);

}  // namespace spatfactor::temporal
