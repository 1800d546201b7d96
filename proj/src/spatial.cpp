#include "spatfactor/spatial.hpp"

#include <cmath>
#include <limits>

#include "spatfactor/errors.hpp"

namespace spatfactor::spatial {

Kind kind_from_string(const std::string& s) {
  if (s == "independent") return Kind::independent;
  if (s == "continuous" || s == "continuous_exponential")
    return Kind::continuous_exponential;
  throw ConfigError("unknown spatial structure: " + s);
}

std::string kind_to_string(Kind k) {
  return k == Kind::independent ? "independent" : "continuous";
}

void Spec::validate() const {
  if (coords.rows() < 1) throw DataError("spatial: need at least one location");
  if (kind == Kind::continuous_exponential) {
    if (!(a_rho < rho && rho < b_rho))
      throw NumericError("spatial: rho outside (a_rho, b_rho)");
  }
}

Eigen::MatrixXd distance_matrix(const Eigen::MatrixXd& coords) {
  const int m = static_cast<int>(coords.rows());
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) {
      double dist = (coords.row(i) - coords.row(j)).norm();
      if (dist <= 0.0) throw DataError("distance_matrix: duplicate locations");
      D(i, j) = D(j, i) = dist;
    }
  return D;
}

Eigen::MatrixXd build_F(Kind kind, double rho, const Eigen::MatrixXd& D) {
  if (kind == Kind::independent)
    return Eigen::MatrixXd::Identity(D.rows(), D.cols());
  return (-rho * D.array()).exp().matrix();
}

Eigen::MatrixXd build_F(const Spec& spec, const Eigen::MatrixXd& D) {
  spec.validate();
  return build_F(spec.kind, spec.rho, D);
}

double interval_logit(double x, double a, double b) {
  if (!(a < x && x < b)) throw NumericError("interval_logit: x outside (a,b)");
  return std::log((x - a) / (b - x));
}

double interval_logit_inv(double delta, double a, double b) {
  if (delta > 0) {
    double e = std::exp(-delta);
    return (b + a * e) / (1.0 + e);
  }
  double e = std::exp(delta);
  return (b * e + a) / (1.0 + e);
}

double interval_log_jacobian(double delta) {
  // ln[ e^D / (1+e^D)^2 ], evaluated stably on both sides
  if (delta > 0) return -delta - 2.0 * std::log1p(std::exp(-delta));
  return delta - 2.0 * std::log1p(std::exp(delta));
}

double default_rho_upper(const Eigen::MatrixXd& D) {
  double dmin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < D.rows(); ++i)
    for (int j = i + 1; j < D.cols(); ++j)
      if (D(i, j) > 0 && D(i, j) < dmin) dmin = D(i, j);
  if (!std::isfinite(dmin)) return 1.0;  // single location
  return -std::log(0.01) / dmin;
}

}  // namespace spatfactor::spatial
