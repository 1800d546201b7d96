#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spatfactor/spatial.hpp"
#include "spatfactor/temporal.hpp"

namespace spatfactor {

// Two site orderings are in play, following the covariance structures:
//   alpha-ordering (type varies fastest):      a = i*O + o   for F ⊗ kappa
//   weight-ordering (location varies fastest): s = o*m + i   for kappa ⊗ F
inline int aidx(int i, int o, int O) { return i * O + o; }
inline int widx(int i, int o, int m) { return o * m + i; }

// Observed outcomes over (location i, type o, time t) plus optional
// covariates. y is (m*O) x T in weight-ordering.
struct Dataset {
  Eigen::MatrixXd coords;              // m x dim
  int O = 1;
  Eigen::MatrixXd y;                   // (m*O) x T
  std::vector<Eigen::MatrixXd> X;      // per t: (m*O) x p; empty if p == 0
  std::vector<double> timepoints;      // v_1..v_T (unit spacing once normalized)
  bool equispaced = true;

  int m() const { return static_cast<int>(coords.rows()); }
  int T() const { return static_cast<int>(y.cols()); }
  int p() const { return X.empty() ? 0 : static_cast<int>(X[0].cols()); }
  void validate() const;
};

enum class Variant {
  baselineNoClustering,
  fullGPfixedL,
  NNGPblockFixedL,
  NNGPsequenFixedL,
  NNGPsequenVaryLj,
};

Variant variant_from_string(const std::string& s);
std::string variant_to_string(Variant v);
inline bool variant_is_nngp(Variant v) {
  return v == Variant::NNGPblockFixedL || v == Variant::NNGPsequenFixedL ||
         v == Variant::NNGPsequenVaryLj;
}
inline bool variant_is_varyL(Variant v) { return v == Variant::NNGPsequenVaryLj; }
inline bool variant_is_clustering(Variant v) {
  return v != Variant::baselineNoClustering;
}
inline bool variant_is_sequential(Variant v) {
  return v == Variant::NNGPsequenFixedL || v == Variant::NNGPsequenVaryLj;
}

struct PriorSet {
  double a = 0.01, b = 0.01;              // IG for sigma^2
  Eigen::VectorXd mu0_beta;               // p
  Eigen::MatrixXd sigma0_beta;            // p x p
  double zeta = 0.0;                      // IW df for Upsilon (default k + 2)
  Eigen::MatrixXd omega;                  // k x k IW scale for Upsilon
  double nu = 0.0;                        // IW df for kappa (default O + 2)
  Eigen::MatrixXd theta_scale;            // O x O IW scale for kappa
  double a_psi = 0.0, b_psi = 0.0;        // 0 = derive defaults
  double a_rho = 0.0, b_rho = 0.0;
  double a1 = 2.0, a2 = 3.0;              // shrinkage gamma shapes
  bool use_shrinkage = true;
  double psi_gamma = 1.0, psi_beta = 1.0; // transformed-Beta exponents (ar1/sar1)

  // fill size-dependent defaults for unset fields
  void finalize(int k, int O, int p, const Eigen::MatrixXd& D,
                temporal::Kind temporal_kind);
};

struct Schedule {
  long burnin = 1000;
  long post_burnin = 1000;
  long thin = 1;
  std::uint64_t seed = 1;
  long adapt_window = 100;

  long kept() const { return post_burnin / thin; }
  void validate() const;
};

struct ModelSpec {
  Variant variant = Variant::NNGPsequenVaryLj;
  int k = 1;          // factors
  int L = 10;         // fixed truncation, or upper bound for varying L_j
  int h = 15;         // NNGP neighbors
  temporal::Spec temporal;
  spatial::Spec spatial;
  PriorSet priors;
  Schedule schedule;

  void validate(const Dataset& data) const;
};

}  // namespace spatfactor
