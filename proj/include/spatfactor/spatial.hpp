#pragma once

#include <string>

#include <Eigen/Dense>

namespace spatfactor::spatial {

enum class Kind { independent, continuous_exponential };

Kind kind_from_string(const std::string& s);
std::string kind_to_string(Kind k);

struct Spec {
  Kind kind = Kind::continuous_exponential;
  double rho = 0.5;
  Eigen::MatrixXd coords;  // m x dim
  double a_rho = 1e-3, b_rho = 1.0;

  int m() const { return static_cast<int>(coords.rows()); }
  void validate() const;
};

// Euclidean distances; rejects duplicate points.
Eigen::MatrixXd distance_matrix(const Eigen::MatrixXd& coords);

// F = exp(-rho D) elementwise (identity for the independent kind).
Eigen::MatrixXd build_F(const Spec& spec, const Eigen::MatrixXd& D);
Eigen::MatrixXd build_F(Kind kind, double rho, const Eigen::MatrixXd& D);

// Bounded-interval reparameterization shared by the rho and psi Metropolis
// steps: Delta = ln((x-a)/(b-x)).
double interval_logit(double x, double a, double b);
double interval_logit_inv(double delta, double a, double b);
// log |d interval_logit_inv / d Delta| up to an additive constant
double interval_log_jacobian(double delta);

// Default upper bound: correlation floor 0.01 at the nearest pair.
double default_rho_upper(const Eigen::MatrixXd& D);

// diagonal jitter applied before dense Cholesky factorizations of F
inline constexpr double kCholJitter = 1e-10;

}  // namespace spatfactor::spatial
