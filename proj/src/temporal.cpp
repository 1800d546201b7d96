#include "spatfactor/temporal.hpp"

#include <cmath>
#include <stdexcept>

#include "spatfactor/errors.hpp"

namespace spatfactor::temporal {

namespace {
constexpr double kRhoEps = 1e-12;
}

Kind kind_from_string(const std::string& s) {
  if (s == "independent") return Kind::independent;
  if (s == "ar1") return Kind::ar1;
  if (s == "exponential") return Kind::exponential;
  if (s == "sar1") return Kind::sar1;
  if (s == "sexponential") return Kind::sexponential;
  throw ConfigError("unknown temporal structure: " + s);
}

std::string kind_to_string(Kind k) {
  switch (k) {
    case Kind::independent: return "independent";
    case Kind::ar1: return "ar1";
    case Kind::exponential: return "exponential";
    case Kind::sar1: return "sar1";
    case Kind::sexponential: return "sexponential";
  }
  return "?";
}

double Spec::rho() const {
  switch (kind) {
    case Kind::ar1:
    case Kind::sar1:
      return psi;
    case Kind::exponential:
    case Kind::sexponential:
      return std::exp(-psi);
    case Kind::independent:
      return 0.0;
  }
  return 0.0;
}

void Spec::validate() const {
  if (timepoints.empty()) throw NumericError("temporal: T must be >= 1");
  if (kind == Kind::independent) return;
  if (!std::isfinite(psi)) throw NumericError("temporal: psi not finite");
  const double r = rho();
  if (!(r > kRhoEps) || !(r < 1.0 - kRhoEps))
    throw NumericError("temporal: rho outside (0,1)");
  if (seasonal()) {
    // d = 1 is the degenerate case that coincides with ar1/exponential
    if (seasonal_period < 1)
      throw NumericError("temporal: seasonal period must be >= 1");
  } else if (seasonal_period != 1) {
    throw NumericError("temporal: d must be 1 for non-seasonal kinds");
  }
  if (equispaced) {
    for (std::size_t t = 1; t < timepoints.size(); ++t) {
      if (std::fabs((timepoints[t] - timepoints[t - 1]) - 1.0) > 1e-9)
        throw NumericError("temporal: equispaced grid must have unit spacing");
    }
  } else {
    for (std::size_t t = 1; t < timepoints.size(); ++t)
      if (!(timepoints[t] > timepoints[t - 1]))
        throw NumericError("temporal: timepoints must be strictly increasing");
  }
}

Spec Spec::regular(Kind kind, double psi, int T, int d) {
  Spec s;
  s.kind = kind;
  s.psi = psi;
  s.seasonal_period = d;
  s.equispaced = true;
  s.timepoints.resize(T);
  for (int t = 0; t < T; ++t) s.timepoints[t] = t + 1.0;
  s.validate();
  return s;
}

Eigen::MatrixXd build_H(const Spec& spec) {
  spec.validate();
  const int T = spec.T();
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(T, T);
  if (spec.kind == Kind::independent) return H;
  const double rho = spec.rho();
  if (spec.seasonal()) {
    const int d = spec.seasonal_period;
    for (int t = 0; t < T; ++t)
      for (int s = t + 1; s < T; ++s) {
        int lag = s - t;
        if (lag % d == 0) {
          double v = std::pow(rho, lag / d);
          H(t, s) = H(s, t) = v;
        }
      }
  } else {
    for (int t = 0; t < T; ++t)
      for (int s = t + 1; s < T; ++s) {
        double v = std::pow(rho, std::fabs(spec.timepoints[s] - spec.timepoints[t]));
        H(t, s) = H(s, t) = v;
      }
  }
  return H;
}

// Equispaced closed form from the banded LDL^T factorization: L has unit
// diagonal and rho at lag d below it, D = diag(1,...,1, 1-rho^2,...) with
// the first min(d,T) entries equal to 1. Then
//   H^{-1} = (L^{-1})^T D^{-1} L^{-1},  rooti = (L^{-1})^T D^{-1/2}.
Factors closed_factors(const Spec& spec) {
  spec.validate();
  if (!spec.equispaced)
    throw NumericError("closed_factors: requires an equispaced grid");
  if (spec.kind == Kind::independent)
    throw NumericError("closed_factors: independent kind has no closed form path");
  const int T = spec.T();
  const int d = spec.seasonal_period;
  const double rho = spec.rho();
  const double omr2 = 1.0 - rho * rho;

  auto Dentry = [&](int t) { return t < d ? 1.0 : omr2; };  // 0-based

  Factors out;
  out.precision.resize(T, T);
  out.rooti.resize(T, T);
  std::vector<Eigen::Triplet<double>> prec, root;
  prec.reserve(3 * T);
  root.reserve(2 * T);
  for (int t = 0; t < T; ++t) {
    double diag = 1.0 / Dentry(t);
    if (t + d < T) diag += rho * rho / Dentry(t + d);
    prec.emplace_back(t, t, diag);
    if (t + d < T) {
      double off = -rho / Dentry(t + d);
      prec.emplace_back(t, t + d, off);
      prec.emplace_back(t + d, t, off);
    }
    root.emplace_back(t, t, 1.0 / std::sqrt(Dentry(t)));
    if (t + d < T) root.emplace_back(t, t + d, -rho / std::sqrt(Dentry(t + d)));
  }
  out.precision.setFromTriplets(prec.begin(), prec.end());
  out.rooti.setFromTriplets(root.begin(), root.end());
  out.logdet = std::max(T - d, 0) * std::log(omr2);
  return out;
}

Factors dense_factors(const Spec& spec) {
  Eigen::MatrixXd H = build_H(spec);
  const int T = static_cast<int>(H.rows());
  Eigen::LLT<Eigen::MatrixXd> llt(H);
  if (llt.info() != Eigen::Success)
    throw NumericError("dense_factors: H not positive definite");
  Eigen::MatrixXd L = llt.matrixL();
  // rooti = (chol upper)^{-1} = solve U x = I, upper triangular
  Eigen::MatrixXd U = L.transpose();
  Eigen::MatrixXd rooti =
      U.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(T, T));
  Factors out;
  out.precision = (rooti * rooti.transpose()).sparseView(1.0, 1e-300);
  out.rooti = rooti.sparseView(1.0, 1e-300);
  out.logdet = 2.0 * L.diagonal().array().log().sum();
  return out;
}

CondCoeffs conditional_coeffs_dense(const Eigen::MatrixXd& H, int t) {
  const int T = static_cast<int>(H.rows());
  if (t < 0 || t >= T) throw NumericError("conditional_coeffs: t out of range");
  CondCoeffs out;
  if (T == 1) {
    out.hstar = H(0, 0);
    return out;
  }
  Eigen::MatrixXd Hmm(T - 1, T - 1);
  Eigen::VectorXd hmt(T - 1);
  for (int a = 0, ia = 0; a < T; ++a) {
    if (a == t) continue;
    hmt[ia] = H(a, t);
    for (int b = 0, ib = 0; b < T; ++b) {
      if (b == t) continue;
      Hmm(ia, ib) = H(a, b);
      ++ib;
    }
    ++ia;
  }
  Eigen::VectorXd hplus = Hmm.llt().solve(hmt);
  out.hstar = H(t, t) - hplus.dot(hmt);
  for (int p = 0; p < T - 1; ++p)
    if (hplus[p] != 0.0) out.hplus.emplace_back(p, hplus[p]);
  return out;
}

CondCoeffs conditional_coeffs(const Spec& spec, int t) {
  spec.validate();
  const int T = spec.T();
  if (t < 0 || t >= T) throw NumericError("conditional_coeffs: t out of range");
  if (spec.kind == Kind::independent) {
    CondCoeffs out;
    out.hstar = 1.0;
    return out;
  }
  if (!spec.equispaced) return conditional_coeffs_dense(build_H(spec), t);

  const int d = spec.seasonal_period;
  const double rho = spec.rho();
  CondCoeffs out;
  // compressed position of original index a (a != t): a if a < t else a-1
  const bool has_prev = (t - d >= 0);
  const bool has_next = (t + d <= T - 1);
  if (has_prev && has_next) {
    double c = rho / (1.0 + rho * rho);
    out.hplus.emplace_back(t - d, c);
    out.hplus.emplace_back(t + d - 1, c);
    out.hstar = (1.0 - rho * rho) / (1.0 + rho * rho);
  } else if (has_next) {
    out.hplus.emplace_back(t + d - 1, rho);
    out.hstar = 1.0 - rho * rho;
  } else if (has_prev) {
    out.hplus.emplace_back(t - d, rho);
    out.hstar = 1.0 - rho * rho;
  } else {
    out.hstar = 1.0;  // isolated seasonal position
  }
  return out;
}

}  // namespace spatfactor::temporal
