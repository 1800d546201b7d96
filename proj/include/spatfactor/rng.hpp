#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>

#include <Eigen/Dense>

namespace spatfactor {

// Standard normal CDF, accurate to ~1e-15 absolute via erfc.
double norm_cdf(double x);
// Survival function 1 - Phi(x), stable in the upper tail.
double norm_sf(double x);
// Quantile function Phi^{-1}(p), Wichura's AS241 double-precision branch.
double norm_quantile(double p);

// One deterministic random stream. Seeded explicitly; all draws are pure
// functions of the engine state (normals go through the inverse CDF so that
// truncated and plain draws share one code path).
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : eng_(seed) {}

  // uniform on (0,1), never returns 0 or 1
  double uniform();
  double uniform(double a, double b);
  double normal();
  double normal(double mean, double sd);
  // Gamma(shape, rate): mean shape/rate. Marsaglia-Tsang.
  double gamma(double shape, double rate);
  double chisq(double df) { return gamma(0.5 * df, 0.5); }
  double inverse_gamma(double shape, double rate) { return 1.0 / gamma(shape, rate); }
  std::uint64_t raw() { return eng_(); }
  // integer in [0, n)
  int uniform_int(int n);

  // N(mean, sd^2) truncated to (lo, hi); either bound may be +-inf.
  // Inverse-CDF with complementary tail evaluation, exact support.
  double trunc_normal(double mean, double sd, double lo, double hi);

  Eigen::VectorXd normal_vector(int n);
  // draw from N(mu, Sigma) given the lower Cholesky factor of Sigma
  Eigen::VectorXd mvn_chol(const Eigen::VectorXd& mu, const Eigen::MatrixXd& chol_lower);

  // Wishart(df, S) via Bartlett; returns a draw with E[W] = df * S.
  Eigen::MatrixXd wishart(double df, const Eigen::MatrixXd& scale);
  // Inverse-Wishart(df, S): density ~ |X|^{-(df+p+1)/2} exp{-tr(S X^{-1})/2}.
  Eigen::MatrixXd inverse_wishart(double df, const Eigen::MatrixXd& scale);

 private:
  std::mt19937_64 eng_;
};

// Named sub-streams derived from one chain seed, so that adding draws to one
// step family never shifts the streams of the others. Streams persist for
// the lifetime of the ChainRng.
class ChainRng {
 public:
  explicit ChainRng(std::uint64_t seed) : seed_(seed) {}
  RngStream& stream(const std::string& name);
  std::uint64_t derive_seed(const std::string& name) const;
  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::map<std::string, RngStream> streams_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace spatfactor
