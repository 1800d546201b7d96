#include "spatfactor/rng.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace spatfactor {

double norm_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

double norm_sf(double x) { return 0.5 * std::erfc(x * M_SQRT1_2); }

// AS241 algorithm PPND16 (Wichura 1988), |error| < 1e-15 in the central
// region and relatively accurate far into the tails.
double norm_quantile(double p) {
  if (!(p > 0.0) || !(p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    throw std::domain_error("norm_quantile: p outside [0,1]");
  }
  const double q = p - 0.5;
  double r;
  if (std::fabs(q) <= 0.425) {
    r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                 6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
               1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
             1.3314166789178437745e+2) * r + 3.3871328727963666080e+0) /
           (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                 3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
               5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
             4.2313330701600911252e+1) * r + 1.0);
  }
  r = (q < 0.0) ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                2.41780725177450611770e-1) * r + 1.27045825245236838258e+0) * r +
              3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
            4.63033784615654529590e+0) * r + 1.42343711074968357734e+0) /
          (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
              6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
            2.05319162663775882187e+0) * r + 1.0);
  } else {
    r -= 5.0;
    val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
              2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
            5.46378491116411436990e+0) * r + 6.65790464350110377720e+0) /
          (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
              1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
            5.99832206555887937690e-1) * r + 1.0);
  }
  return (q < 0.0) ? -val : val;
}

double RngStream::uniform() {
  // 53-bit mantissa, shifted into the open interval
  double u = ((eng_() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
  return u;
}

double RngStream::uniform(double a, double b) { return a + (b - a) * uniform(); }

double RngStream::normal() { return norm_quantile(uniform()); }

double RngStream::normal(double mean, double sd) { return mean + sd * normal(); }

int RngStream::uniform_int(int n) {
  if (n <= 0) throw std::invalid_argument("uniform_int: n must be positive");
  return static_cast<int>(eng_() % static_cast<std::uint64_t>(n));
}

double RngStream::gamma(double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0))
    throw std::invalid_argument("gamma: shape and rate must be positive");
  if (shape < 1.0) {
    // boost: Gamma(a) = Gamma(a+1) * U^{1/a}
    double u = uniform();
    return gamma(shape + 1.0, rate) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = normal();
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    double u = uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v / rate;
  }
}

double RngStream::trunc_normal(double mean, double sd, double lo, double hi) {
  if (!(sd > 0.0)) throw std::invalid_argument("trunc_normal: sd must be positive");
  if (!(lo < hi)) throw std::invalid_argument("trunc_normal: empty support");
  // clamp standardized bounds; beyond |8.2| the mass is below 2e-17
  const double zcap = 8.2;
  double za = (lo - mean) / sd, zb = (hi - mean) / sd;
  bool a_inf = !(za > -std::numeric_limits<double>::infinity());
  bool b_inf = !(zb < std::numeric_limits<double>::infinity());
  if (!a_inf && za > zcap) za = zcap;
  if (!a_inf && za < -zcap) { if (b_inf || zb > zcap) a_inf = true; else za = -zcap; }
  if (!b_inf && zb < -zcap) zb = -zcap;
  if (!b_inf && zb > zcap) { if (a_inf || za < -zcap) b_inf = true; else zb = zcap; }

  double z;
  const double u = uniform();
  if (a_inf && b_inf) {
    z = norm_quantile(u);
  } else if (b_inf) {
    // upper tail: work with the survival function for stability
    double pa = norm_sf(za);
    z = -norm_quantile(u * pa);
  } else if (a_inf) {
    double pb = norm_cdf(zb);
    z = norm_quantile(u * pb);
  } else if (za >= 0.0) {
    // both bounds in the upper tail
    double pa = norm_sf(za), pb = norm_sf(zb);
    z = -norm_quantile(pb + u * (pa - pb));
  } else if (zb <= 0.0) {
    double pa = norm_cdf(za), pb = norm_cdf(zb);
    z = norm_quantile(pa + u * (pb - pa));
  } else {
    double pa = norm_cdf(za), pb = norm_cdf(zb);
    z = norm_quantile(pa + u * (pb - pa));
  }
  if (z < za && !a_inf) z = za;
  if (z > zb && !b_inf) z = zb;
  return mean + sd * z;
}

Eigen::VectorXd RngStream::normal_vector(int n) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = normal();
  return v;
}

Eigen::VectorXd RngStream::mvn_chol(const Eigen::VectorXd& mu,
                                    const Eigen::MatrixXd& chol_lower) {
  return mu + chol_lower * normal_vector(static_cast<int>(mu.size()));
}

Eigen::MatrixXd RngStream::wishart(double df, const Eigen::MatrixXd& scale) {
  const int p = static_cast<int>(scale.rows());
  if (df <= p - 1) throw std::invalid_argument("wishart: df too small");
  Eigen::LLT<Eigen::MatrixXd> llt(scale);
  if (llt.info() != Eigen::Success) throw std::runtime_error("wishart: scale not PD");
  Eigen::MatrixXd L = llt.matrixL();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(p, p);
  for (int i = 0; i < p; ++i) {
    A(i, i) = std::sqrt(chisq(df - i));
    for (int j = 0; j < i; ++j) A(i, j) = normal();
  }
  Eigen::MatrixXd LA = L * A;
  return LA * LA.transpose();
}

Eigen::MatrixXd RngStream::inverse_wishart(double df, const Eigen::MatrixXd& scale) {
  const int p = static_cast<int>(scale.rows());
  Eigen::MatrixXd scale_inv =
      scale.llt().solve(Eigen::MatrixXd::Identity(p, p));
  // symmetrize against round-off before Bartlett
  scale_inv = 0.5 * (scale_inv + scale_inv.transpose()).eval();
  Eigen::MatrixXd W = wishart(df, scale_inv);
  Eigen::MatrixXd X = W.llt().solve(Eigen::MatrixXd::Identity(p, p));
  return 0.5 * (X + X.transpose()).eval();
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t ChainRng::derive_seed(const std::string& name) const {
  // FNV-1a over the name, mixed with the chain seed
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : name) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return splitmix64(seed_ ^ splitmix64(h));
}

RngStream& ChainRng::stream(const std::string& name) {
  auto it = streams_.find(name);
  if (it == streams_.end())
    it = streams_.emplace(name, RngStream(derive_seed(name))).first;
  return it->second;
}

}  // namespace spatfactor
