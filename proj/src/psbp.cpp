#include "spatfactor/psbp.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>

#include "spatfactor/errors.hpp"

namespace spatfactor::psbp {

namespace {

double floored(double w) { return std::max(w, DBL_MIN); }

// clamp a probability into the open unit interval before norm_quantile
double clamp01(double p) {
  return std::min(std::max(p, 5e-324), 1.0 - 1e-16);
}

// categorical draw from unnormalized log scores; -inf marks inadmissible
int draw_categorical_log(const Eigen::VectorXd& logscore, RngStream& rng,
                         const char* who) {
  const double mx = logscore.maxCoeff();
  if (!std::isfinite(mx)) throw NumericError(std::string(who) + ": empty support");
  double total = 0.0;
  Eigen::VectorXd p(logscore.size());
  for (int l = 0; l < logscore.size(); ++l) {
    p[l] = std::isfinite(logscore[l]) ? std::exp(logscore[l] - mx) : 0.0;
    total += p[l];
  }
  double target = rng.uniform() * total;
  double acc = 0.0;
  for (int l = 0; l < logscore.size(); ++l) {
    acc += p[l];
    if (target <= acc) return l;
  }
  return static_cast<int>(logscore.size()) - 1;
}

// per-site likelihood pieces: score(theta) = s2inv * (theta*A - 0.5*theta^2*B)
struct SiteLik {
  Eigen::VectorXd A;  // mO: sum_t resid_excl_j * eta_j
  double B = 0.0;     // sum_t eta_j^2
  bool active = false;
};

SiteLik site_lik(const LikContext& ctx) {
  SiteLik sl;
  if (ctx.resid_excl_j == nullptr) return sl;
  sl.A = (*ctx.resid_excl_j) * (*ctx.eta_j);
  sl.B = ctx.eta_j->squaredNorm();
  sl.active = true;
  return sl;
}

// one coordinate-wise Gibbs pass over an O-variate normal with box
// constraints; exact draw when O == 1
void truncated_mvn_pass(const Eigen::VectorXd& mean, const Eigen::MatrixXd& prec,
                        const std::vector<Bounds>& bounds, Eigen::VectorXd& x,
                        RngStream& rng) {
  const int O = static_cast<int>(mean.size());
  if (O == 1) {
    double sd = 1.0 / std::sqrt(prec(0, 0));
    x[0] = rng.trunc_normal(mean[0], sd, bounds[0].lo, bounds[0].hi);
    return;
  }
  for (int o = 0; o < O; ++o) {
    double poo = prec(o, o);
    double shift = 0.0;
    for (int q = 0; q < O; ++q)
      if (q != o) shift += prec(o, q) * (x[q] - mean[q]);
    double cmean = mean[o] - shift / poo;
    x[o] = rng.trunc_normal(cmean, 1.0 / std::sqrt(poo), bounds[o].lo, bounds[o].hi);
  }
}

}  // namespace

void ShrinkageState::recompute_tau() {
  const int k = static_cast<int>(delta.size());
  tau.resize(k);
  if (!use_shrinkage) {
    tau = delta;
    return;
  }
  double prod = 1.0;
  for (int j = 0; j < k; ++j) {
    prod *= delta[j];
    tau[j] = prod;
  }
}

Eigen::VectorXd weights_from_alpha(const Eigen::VectorXd& alpha_site, int L) {
  Eigen::VectorXd w(L);
  double stick = 1.0;
  for (int l = 0; l < L - 1; ++l) {
    double phi = norm_cdf(alpha_site[l]);
    w[l] = phi * stick;
    stick *= (1.0 - phi);
  }
  w[L - 1] = stick;
  return w;
}

void recompute_weights(FactorState& st, int m, int O) {
  const int mO = m * O;
  st.w.resize(mO, st.L);
  Eigen::VectorXd asite(std::max(st.L - 1, 0));
  for (int i = 0; i < m; ++i)
    for (int o = 0; o < O; ++o) {
      const int a = aidx(i, o, O);
      for (int l = 0; l < st.L - 1; ++l) asite[l] = st.alpha[l][a];
      st.w.row(widx(i, o, m)) = weights_from_alpha(asite, st.L).transpose();
    }
}

void sample_slice(FactorState& st, RngStream& rng) {
  const int mO = static_cast<int>(st.labels.size());
  st.u.resize(mO);
  for (int s = 0; s < mO; ++s) {
    double wxi = st.w(s, st.labels[s]);
    if (wxi < 0.0) throw NumericError("sample_slice: negative weight at own label");
    // weight floored so u stays positive and strictly below the floored value
    st.u[s] = rng.uniform() * floored(wxi);
  }
}

int update_Lj(FactorState& st, int m, int O) {
  const int mO = m * O;
  int Lnew = 1;
  for (int s = 0; s < mO; ++s) {
    double need = 1.0 - st.u[s];
    double acc = 0.0;
    int Ls = st.L;
    for (int l = 0; l < st.L; ++l) {
      acc += st.w(s, l);
      if (acc > need) {
        Ls = l + 1;
        break;
      }
    }
    Lnew = std::max(Lnew, Ls);
  }
  if (Lnew < st.L) {
    st.alpha.resize(Lnew - 1 < 0 ? 0 : Lnew - 1);
    st.theta.conservativeResize(Lnew);
    st.L = Lnew;
  }
  recompute_weights(st, m, O);
  return st.L;
}

void sample_labels_varyL(FactorState& st, const LikContext& ctx, RngStream& rng) {
  const int mO = static_cast<int>(st.labels.size());
  const SiteLik sl = site_lik(ctx);
  Eigen::VectorXd score(st.L);
  for (int s = 0; s < mO; ++s) {
    for (int l = 0; l < st.L; ++l) {
      if (!(st.w(s, l) > st.u[s])) {
        score[l] = -std::numeric_limits<double>::infinity();
        continue;
      }
      score[l] = 0.0;
      if (sl.active) {
        double th = st.theta[l];
        score[l] = (th * sl.A[s] - 0.5 * th * th * sl.B) / (*ctx.sigma2)[s];
      }
    }
    st.labels[s] = draw_categorical_log(score, rng, "sample_labels_varyL");
  }
}

void sample_labels_fixedL(FactorState& st, const LikContext& ctx, RngStream& rng) {
  const int mO = static_cast<int>(st.labels.size());
  const SiteLik sl = site_lik(ctx);
  Eigen::VectorXd score(st.L);
  for (int s = 0; s < mO; ++s) {
    for (int l = 0; l < st.L; ++l) {
      double w = st.w(s, l);
      score[l] = w > 0.0 ? std::log(w) : -std::numeric_limits<double>::infinity();
      if (sl.active && std::isfinite(score[l])) {
        double th = st.theta[l];
        score[l] += (th * sl.A[s] - 0.5 * th * th * sl.B) / (*ctx.sigma2)[s];
      }
    }
    st.labels[s] = draw_categorical_log(score, rng, "sample_labels_fixedL");
  }
}

void sample_atoms(FactorState& st, double tau_j, const LikContext& ctx,
                  RngStream& rng) {
  const int mO = static_cast<int>(st.labels.size());
  const SiteLik sl = site_lik(ctx);
  Eigen::VectorXd prec = Eigen::VectorXd::Constant(st.L, tau_j);
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(st.L);
  if (sl.active) {
    for (int s = 0; s < mO; ++s) {
      const int l = st.labels[s];
      const double s2inv = 1.0 / (*ctx.sigma2)[s];
      prec[l] += s2inv * sl.B;
      mu[l] += s2inv * sl.A[s];
    }
  }
  for (int l = 0; l < st.L; ++l) {
    double V = 1.0 / prec[l];
    st.theta[l] = rng.normal(V * mu[l], std::sqrt(V));
  }
}

void sample_delta(ShrinkageState& sh, const std::vector<FactorState>& factors,
                  RngStream& rng) {
  const int k = static_cast<int>(factors.size());
  if (!sh.use_shrinkage) {
    for (int j = 0; j < k; ++j) {
      double shape = sh.a1 + 0.5 * factors[j].L;
      double rate = sh.a2 + 0.5 * factors[j].theta.squaredNorm();
      sh.delta[j] = rng.gamma(shape, rate);
    }
    sh.recompute_tau();
    return;
  }
  for (int h = 0; h < k; ++h) {
    double shape = (h == 0 ? sh.a1 : sh.a2);
    double rate = 1.0;
    for (int j = h; j < k; ++j) {
      shape += 0.5 * factors[j].L;
      double prod = 1.0;
      for (int x = 0; x <= j; ++x)
        if (x != h) prod *= sh.delta[x];
      rate += 0.5 * prod * factors[j].theta.squaredNorm();
    }
    sh.delta[h] = rng.gamma(shape, rate);
  }
  sh.recompute_tau();
}

void sample_z(FactorState& st, int m, int O, RngStream& rng) {
  for (int l = 0; l < st.L - 1; ++l) {
    for (int i = 0; i < m; ++i)
      for (int o = 0; o < O; ++o) {
        const int a = aidx(i, o, O);
        const int xi = st.labels[widx(i, o, m)];
        double mean = st.alpha[l][a];
        if (xi > l)
          st.z[l][a] = rng.trunc_normal(mean, 1.0, -std::numeric_limits<double>::infinity(), 0.0);
        else if (xi == l)
          st.z[l][a] = rng.trunc_normal(mean, 1.0, 0.0, std::numeric_limits<double>::infinity());
        else
          st.z[l][a] = rng.normal(mean, 1.0);
      }
  }
}

Bounds alpha_bounds_varyL(const FactorState& st, int i, int o, int m, int O, int l) {
  Bounds b;
  const int s = widx(i, o, m);
  const int xi = st.labels[s];
  if (l > xi) return b;
  const double wxi = floored(st.w(s, xi));
  const double u = st.u[s];
  const double a_old = st.alpha[l][aidx(i, o, O)];
  if (l == xi) {
    b.lo = norm_quantile(clamp01(u * norm_cdf(a_old) / wxi));
  } else {
    b.hi = norm_quantile(clamp01(1.0 - u * norm_sf(a_old) / wxi));
  }
  return b;
}

void sample_alpha_vector_block_fixedL(FactorState& st, int l,
                                      const Eigen::LLT<Eigen::MatrixXd>& prec_chol,
                                      RngStream& rng) {
  Eigen::VectorXd mean = prec_chol.solve(st.z[l]);
  Eigen::VectorXd nu = rng.normal_vector(static_cast<int>(mean.size()));
  Eigen::MatrixXd U = prec_chol.matrixU();
  st.alpha[l] = mean + U.triangularView<Eigen::Upper>().solve(nu);
}

bool sample_alpha_vector_block_varyL(FactorState& st, int l, int m, int O,
                                     const Eigen::MatrixXd& cholF,
                                     const Eigen::MatrixXd& cholKappa,
                                     RngStream& rng, int max_attempts) {
  const int mO = m * O;
  std::vector<Bounds> bounds(mO);
  for (int i = 0; i < m; ++i)
    for (int o = 0; o < O; ++o)
      bounds[aidx(i, o, O)] = alpha_bounds_varyL(st, i, o, m, O, l);
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    Eigen::MatrixXd Z(O, m);
    for (int c = 0; c < m; ++c) Z.col(c) = rng.normal_vector(O);
    Eigen::MatrixXd cand = cholKappa * Z * cholF.transpose();  // O x m
    bool ok = true;
    for (int a = 0; a < mO && ok; ++a) {
      double v = cand(a % O, a / O);
      ok = v > bounds[a].lo && v < bounds[a].hi;
    }
    if (ok) {
      st.alpha[l] = Eigen::Map<const Eigen::VectorXd>(cand.data(), mO);
      return true;
    }
  }
  return false;
}

void sample_alpha_vector_sequential_dense(FactorState& st, int l, int m, int O,
                                          const Eigen::MatrixXd& Finv,
                                          const Eigen::MatrixXd& kappa,
                                          RngStream& rng) {
  Eigen::Map<Eigen::MatrixXd> A(st.alpha[l].data(), O, m);
  Eigen::MatrixXd kinv = kappa.llt().solve(Eigen::MatrixXd::Identity(O, O));
  for (int i = 0; i < m; ++i) {
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(O);
    for (int j = 0; j < m; ++j)
      if (j != i) mean -= (Finv(i, j) / Finv(i, i)) * A.col(j);
    Eigen::MatrixXd prec = Finv(i, i) * kinv;
    std::vector<Bounds> bounds(O);
    for (int o = 0; o < O; ++o) bounds[o] = alpha_bounds_varyL(st, i, o, m, O, l);
    Eigen::VectorXd x = A.col(i);
    truncated_mvn_pass(mean, prec, bounds, x, rng);
    A.col(i) = x;
  }
}

void sample_alpha_vector_sequential(FactorState& st, int l,
                                    const nngp::NeighborGraph& graph,
                                    const nngp::LocalFactors& local,
                                    const Eigen::MatrixXd& kappa, bool fixedL,
                                    RngStream& rng) {
  const int m = graph.m();
  const int O = static_cast<int>(kappa.rows());
  Eigen::MatrixXd kinv = kappa.llt().solve(Eigen::MatrixXd::Identity(O, O));
  Eigen::Map<Eigen::MatrixXd> A(st.alpha[l].data(), O, m);
  for (int i = 0; i < m; ++i) {
    // spatial precision contribution and prior pull
    double c = 1.0 / local.f[i];
    Eigen::VectorXd g = Eigen::VectorXd::Zero(O);
    const auto& N = graph.neighbors[i];
    if (!N.empty()) {
      Eigen::VectorXd pull = Eigen::VectorXd::Zero(O);
      for (int a = 0; a < static_cast<int>(N.size()); ++a)
        pull += local.b[i][a] * A.col(N[a]);
      g += pull / local.f[i];
    }
    for (std::size_t ri = 0; ri < graph.reverse[i].size(); ++ri) {
      const int r = graph.reverse[i][ri];
      const int pos = graph.reverse_pos[i][ri];
      const double br = local.b[r][pos];
      c += br * br / local.f[r];
      Eigen::VectorXd resid = A.col(r);
      const auto& Nr = graph.neighbors[r];
      for (int a = 0; a < static_cast<int>(Nr.size()); ++a)
        if (a != pos) resid -= local.b[r][a] * A.col(Nr[a]);
      g += (br / local.f[r]) * resid;
    }
    if (fixedL) {
      Eigen::MatrixXd prec = Eigen::MatrixXd::Identity(O, O) + c * kinv;
      Eigen::VectorXd mu = kinv * g;
      for (int o = 0; o < O; ++o) mu[o] += st.z[l][aidx(i, o, O)];
      Eigen::LLT<Eigen::MatrixXd> llt(prec);
      Eigen::VectorXd mean = llt.solve(mu);
      Eigen::MatrixXd U = llt.matrixU();
      Eigen::VectorXd nu = rng.normal_vector(O);
      A.col(i) = mean + U.triangularView<Eigen::Upper>().solve(nu);
    } else {
      Eigen::VectorXd mean = g / c;
      Eigen::MatrixXd prec = c * kinv;
      std::vector<Bounds> bounds(O);
      for (int o = 0; o < O; ++o) bounds[o] = alpha_bounds_varyL(st, i, o, graph.m(), O, l);
      Eigen::VectorXd x = A.col(i);
      truncated_mvn_pass(mean, prec, bounds, x, rng);
      A.col(i) = x;
    }
  }
}

void sample_alpha_block_fixedL(FactorState& st,
                               const Eigen::LLT<Eigen::MatrixXd>& prec_chol,
                               RngStream& rng, int m, int O) {
  for (int l = 0; l < st.L - 1; ++l)
    sample_alpha_vector_block_fixedL(st, l, prec_chol, rng);
  recompute_weights(st, m, O);
}

int sample_alpha_block_varyL(FactorState& st, int m, int O,
                             const Eigen::MatrixXd& cholF,
                             const Eigen::MatrixXd& cholKappa,
                             const Eigen::MatrixXd& Finv, RngStream& rng,
                             int max_attempts) {
  int fallbacks = 0;
  for (int l = 0; l < st.L - 1; ++l) {
    if (!sample_alpha_vector_block_varyL(st, l, m, O, cholF, cholKappa, rng,
                                         max_attempts)) {
      sample_alpha_vector_sequential_dense(st, l, m, O, Finv, cholKappa * cholKappa.transpose(), rng);
      ++fallbacks;
    }
    recompute_weights(st, m, O);
  }
  return fallbacks;
}

void sample_alpha_sequential(FactorState& st, const nngp::NeighborGraph& graph,
                             const nngp::LocalFactors& local,
                             const Eigen::MatrixXd& kappa, bool fixedL,
                             RngStream& rng, int m, int O) {
  for (int l = 0; l < st.L - 1; ++l) {
    sample_alpha_vector_sequential(st, l, graph, local, kappa, fixedL, rng);
    if (!fixedL) recompute_weights(st, m, O);
  }
  if (fixedL) recompute_weights(st, m, O);
}

}  // namespace spatfactor::psbp
