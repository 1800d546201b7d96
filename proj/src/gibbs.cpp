#include "spatfactor/gibbs.hpp"

#include <cfloat>
#include <chrono>
#include <cmath>

#include "spatfactor/errors.hpp"
#include "spatfactor/spatial.hpp"

namespace spatfactor::gibbs {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Clock = std::chrono::steady_clock;

struct ScopedTimer {
  StepTimers* timers;
  const char* name;
  Clock::time_point t0;
  ScopedTimer(StepTimers* t, const char* n) : timers(t), name(n), t0(Clock::now()) {}
  ~ScopedTimer() {
    if (timers)
      timers->ms[name] +=
          std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
  }
};

MatrixXd kron_dense(const MatrixXd& A, const MatrixXd& B) {
  const int ar = static_cast<int>(A.rows()), ac = static_cast<int>(A.cols());
  const int br = static_cast<int>(B.rows()), bc = static_cast<int>(B.cols());
  MatrixXd K(ar * br, ac * bc);
  for (int i = 0; i < ar; ++i)
    for (int j = 0; j < ac; ++j) K.block(i * br, j * bc, br, bc) = A(i, j) * B;
  return K;
}

MatrixXd xbeta_matrix(const Dataset& data, const VectorXd& beta) {
  const int mO = data.m() * data.O, T = data.T();
  MatrixXd XB = MatrixXd::Zero(mO, T);
  if (data.p() > 0 && beta.size() > 0)
    for (int t = 0; t < T; ++t) XB.col(t) = data.X[t] * beta;
  return XB;
}

// y - X beta - sum_{h != j} lambda_h eta_h'  (j = -1 keeps every factor)
MatrixXd resid_excluding(const ChainState& state, const Dataset& data,
                         const MatrixXd& XB, const MatrixXd& Lambda, int j) {
  MatrixXd R = data.y - XB - Lambda * state.eta.transpose();
  if (j >= 0) R += Lambda.col(j) * state.eta.col(j).transpose();
  return R;
}

temporal::Spec temporal_at(const ModelSpec& spec, double psi) {
  temporal::Spec ts = spec.temporal;
  ts.psi = psi;
  return ts;
}

temporal::Factors temporal_factors_at(const ModelSpec& spec, double psi) {
  temporal::Spec ts = temporal_at(spec, psi);
  return ts.equispaced ? temporal::closed_factors(ts) : temporal::dense_factors(ts);
}

double logdet_spd(const MatrixXd& A) {
  Eigen::LLT<MatrixXd> llt(A);
  if (llt.info() != Eigen::Success) throw NumericError("logdet_spd: matrix not PD");
  return 2.0 * MatrixXd(llt.matrixL()).diagonal().array().log().sum();
}

MatrixXd spd_inverse(const MatrixXd& A) {
  const int n = static_cast<int>(A.rows());
  Eigen::LLT<MatrixXd> llt(A);
  if (llt.info() != Eigen::Success) {
    MatrixXd Aj = A + 1e-10 * MatrixXd::Identity(n, n);
    llt.compute(Aj);
    if (llt.info() != Eigen::Success) throw NumericError("spd_inverse: matrix not PD");
  }
  MatrixXd X = llt.solve(MatrixXd::Identity(n, n));
  return 0.5 * (X + X.transpose()).eval();
}

// draw from N(P^{-1} mu, P^{-1}) given the precision P
VectorXd draw_gaussian_precision(const MatrixXd& P, const VectorXd& mu,
                                 RngStream& rng, const char* who) {
  Eigen::LLT<MatrixXd> llt(P);
  if (llt.info() != Eigen::Success) {
    MatrixXd Pj = P + 1e-10 * MatrixXd::Identity(P.rows(), P.cols());
    llt.compute(Pj);
    if (llt.info() != Eigen::Success)
      throw NumericError(std::string(who) + ": precision not PD");
  }
  VectorXd mean = llt.solve(mu);
  VectorXd nu = rng.normal_vector(static_cast<int>(mu.size()));
  MatrixXd U = llt.matrixU();
  return mean + U.triangularView<Eigen::Upper>().solve(nu);
}

int alpha_count(const ChainState& state) {
  int n = 0;
  for (const auto& f : state.factors) n += f.L - 1;
  return n;
}

// log of the rho-dependent part of prod pi(alpha | kappa, rho) (clustering)
// or prod pi(lambda_j | kappa, rho) (baseline), plus nothing else.
double rho_log_target_parts(const ChainState& state, const ModelSpec& spec,
                            const SpatialCache& sc, const RhoParts& parts,
                            const MatrixXd& kinv) {
  const int m = static_cast<int>(sc.D.rows());
  const int O = static_cast<int>(state.kappa.rows());
  const double logdetF =
      sc.nngp ? parts.local.sum_log_f() : parts.logdetF;
  double lp = 0.0;
  if (variant_is_clustering(spec.variant)) {
    const int nA = alpha_count(state);
    if (nA == 0) return 0.0;
    lp -= 0.5 * nA * O * logdetF;
    for (const auto& f : state.factors)
      for (const auto& av : f.alpha) {
        Eigen::Map<const MatrixXd> A(av.data(), O, m);
        double quad = sc.nngp
                          ? nngp::quad_form(sc.graph, parts.local, kinv, A)
                          : (kinv * (A * parts.Finv * A.transpose())).trace();
        lp -= 0.5 * quad;
      }
  } else {
    lp -= 0.5 * spec.k * O * logdetF;
    for (int j = 0; j < spec.k; ++j) {
      Eigen::Map<const MatrixXd> Aj(state.Lambda0.col(j).data(), m, O);
      if (sc.nngp) {
        MatrixXd At = Aj.transpose();
        lp -= 0.5 * nngp::quad_form(sc.graph, parts.local, kinv, At);
      } else {
        lp -= 0.5 * (kinv * (Aj.transpose() * parts.Finv * Aj)).trace();
      }
    }
  }
  return lp;
}

double psi_log_prior(const ModelSpec& spec, double psi) {
  if (spec.temporal.kind == temporal::Kind::ar1 ||
      spec.temporal.kind == temporal::Kind::sar1)
    return (spec.priors.psi_gamma - 1.0) * std::log1p(psi) +
           (spec.priors.psi_beta - 1.0) * std::log1p(-psi);
  return 0.0;  // uniform
}

double psi_log_target(const ChainState& state, const ModelSpec& spec, double psi,
                      const temporal::Factors& tf, const MatrixXd& upsinv) {
  MatrixXd Phi = state.eta.transpose();  // k x T
  double quad = (upsinv * (Phi * (tf.precision * Phi.transpose()))).trace();
  return -0.5 * (spec.k * tf.logdet + quad) + psi_log_prior(spec, psi);
}

// one prior draw of an mO vector with covariance F ⊗ kappa in alpha-ordering
VectorXd alpha_prior_draw(const SpatialCache& sc, const RhoParts& parts,
                          const MatrixXd& cholKappa, RngStream& rng) {
  const int m = static_cast<int>(sc.D.rows());
  const int O = static_cast<int>(cholKappa.rows());
  MatrixXd A(O, m);
  if (sc.nngp) {
    for (int i = 0; i < m; ++i) {
      VectorXd mean = VectorXd::Zero(O);
      const auto& N = sc.graph.neighbors[i];
      for (int a = 0; a < static_cast<int>(N.size()); ++a)
        mean += parts.local.b[i][a] * A.col(N[a]);
      A.col(i) = mean + std::sqrt(parts.local.f[i]) * (cholKappa * rng.normal_vector(O));
    }
  } else if (sc.independent) {
    for (int i = 0; i < m; ++i) A.col(i) = cholKappa * rng.normal_vector(O);
  } else {
    MatrixXd Z(O, m);
    for (int i = 0; i < m; ++i) Z.col(i) = rng.normal_vector(O);
    A = cholKappa * Z * parts.cholF.transpose();
  }
  return Eigen::Map<VectorXd>(A.data(), m * O);
}

// ---------------------------------------------------------------- steps --

void step_u(ChainState& st, RngStream& rng) {
  for (auto& f : st.factors) psbp::sample_slice(f, rng);
}

psbp::LikContext make_ctx(const ChainState& st, const Dataset& data,
                          const MatrixXd& XB, MatrixXd& scratch, int j,
                          const VectorXd& eta_j, bool prior_only) {
  psbp::LikContext ctx;
  if (prior_only) return ctx;
  MatrixXd Lambda = assemble_lambda(st, data.m(), data.O);
  scratch = resid_excluding(st, data, XB, Lambda, j);
  ctx.resid_excl_j = &scratch;
  ctx.eta_j = &eta_j;
  ctx.sigma2 = &st.sigma2;
  return ctx;
}

void step_L_and_labels(ChainState& st, const Dataset& data, const ModelSpec& spec,
                       const MatrixXd& XB, RngStream& rng, bool prior_only) {
  MatrixXd scratch;
  for (int j = 0; j < spec.k; ++j) {
    psbp::update_Lj(st.factors[j], data.m(), data.O);
    VectorXd eta_j = st.eta.col(j);
    auto ctx = make_ctx(st, data, XB, scratch, j, eta_j, prior_only);
    psbp::sample_labels_varyL(st.factors[j], ctx, rng);
  }
}

void step_labels_fixedL(ChainState& st, const Dataset& data, const ModelSpec& spec,
                        const MatrixXd& XB, RngStream& rng, bool prior_only) {
  MatrixXd scratch;
  for (int j = 0; j < spec.k; ++j) {
    VectorXd eta_j = st.eta.col(j);
    auto ctx = make_ctx(st, data, XB, scratch, j, eta_j, prior_only);
    psbp::sample_labels_fixedL(st.factors[j], ctx, rng);
  }
}

void step_theta(ChainState& st, const Dataset& data, const ModelSpec& spec,
                const MatrixXd& XB, RngStream& rng, bool prior_only) {
  MatrixXd scratch;
  for (int j = 0; j < spec.k; ++j) {
    VectorXd eta_j = st.eta.col(j);
    auto ctx = make_ctx(st, data, XB, scratch, j, eta_j, prior_only);
    psbp::sample_atoms(st.factors[j], st.shrink.tau[j], ctx, rng);
  }
}

void step_z(ChainState& st, const Dataset& data, RngStream& rng) {
  for (auto& f : st.factors) psbp::sample_z(f, data.m(), data.O, rng);
}

void step_alpha(ChainState& st, const Dataset& data, const ModelSpec& spec,
                RngStream& rng) {
  const int m = data.m(), O = data.O;
  const MatrixXd kinv = spd_inverse(st.kappa);
  switch (spec.variant) {
    case Variant::fullGPfixedL:
    case Variant::NNGPblockFixedL: {
      MatrixXd Fin = st.spat.nngp ? MatrixXd(st.spat.parts.Ftilde_inv)
                                  : st.spat.parts.Finv;
      MatrixXd P = kron_dense(Fin, kinv);
      P.diagonal().array() += 1.0;
      Eigen::LLT<MatrixXd> llt(P);
      if (llt.info() != Eigen::Success)
        throw NumericError("step_alpha: block precision not PD");
      for (auto& f : st.factors)
        psbp::sample_alpha_block_fixedL(f, llt, rng, m, O);
      break;
    }
    case Variant::NNGPsequenFixedL:
      for (auto& f : st.factors)
        psbp::sample_alpha_sequential(f, st.spat.graph, st.spat.parts.local,
                                      st.kappa, true, rng, m, O);
      break;
    case Variant::NNGPsequenVaryLj:
      for (auto& f : st.factors)
        psbp::sample_alpha_sequential(f, st.spat.graph, st.spat.parts.local,
                                      st.kappa, false, rng, m, O);
      break;
    case Variant::baselineNoClustering:
      break;
  }
}

void step_lambda_baseline(ChainState& st, const Dataset& data, const ModelSpec& spec,
                          const MatrixXd& XB, RngStream& rng, bool prior_only) {
  const int m = data.m(), O = data.O, mO = m * O;
  const MatrixXd kinv = spd_inverse(st.kappa);
  MatrixXd Fin = st.spat.nngp ? MatrixXd(st.spat.parts.Ftilde_inv)
                              : st.spat.parts.Finv;
  // weight-ordering: precision kappa^{-1} ⊗ F^{-1}
  MatrixXd P0 = kron_dense(kinv, Fin);
  VectorXd xi_inv = st.sigma2.cwiseInverse();
  for (int j = 0; j < spec.k; ++j) {
    MatrixXd P = P0;
    VectorXd mu = VectorXd::Zero(mO);
    if (!prior_only) {
      double cj = st.eta.col(j).squaredNorm();
      P.diagonal() += cj * xi_inv;
      MatrixXd R = resid_excluding(st, data, XB, st.Lambda0, j);
      mu = xi_inv.asDiagonal() * (R * st.eta.col(j));
    }
    st.Lambda0.col(j) = draw_gaussian_precision(P, mu, rng, "step_lambda");
  }
}

void step_kappa(ChainState& st, const Dataset& data, const ModelSpec& spec,
                RngStream& rng) {
  const int m = data.m(), O = data.O;
  double df = spec.priors.nu;
  MatrixXd S = spec.priors.theta_scale;
  if (variant_is_clustering(spec.variant)) {
    for (const auto& f : st.factors) {
      df += static_cast<double>(m) * (f.L - 1);
      for (const auto& av : f.alpha) {
        Eigen::Map<const MatrixXd> A(av.data(), O, m);
        if (st.spat.nngp) {
          for (int i = 0; i < m; ++i) {
            VectorXd r = A.col(i);
            const auto& N = st.spat.graph.neighbors[i];
            for (int a = 0; a < static_cast<int>(N.size()); ++a)
              r -= st.spat.parts.local.b[i][a] * A.col(N[a]);
            S += (r * r.transpose()) / st.spat.parts.local.f[i];
          }
        } else {
          S += A * st.spat.parts.Finv * A.transpose();
        }
      }
    }
  } else {
    df += static_cast<double>(m) * spec.k;
    for (int j = 0; j < spec.k; ++j) {
      Eigen::Map<const MatrixXd> Aj(st.Lambda0.col(j).data(), m, O);
      if (st.spat.nngp) {
        for (int i = 0; i < m; ++i) {
          VectorXd r = Aj.row(i).transpose();
          const auto& N = st.spat.graph.neighbors[i];
          for (int a = 0; a < static_cast<int>(N.size()); ++a)
            r -= st.spat.parts.local.b[i][a] * Aj.row(N[a]).transpose();
          S += (r * r.transpose()) / st.spat.parts.local.f[i];
        }
      } else {
        S += Aj.transpose() * st.spat.parts.Finv * Aj;
      }
    }
  }
  st.kappa = rng.inverse_wishart(df, S);
}

void step_rho(ChainState& st, const ModelSpec& spec, RngStream& rng, bool adapting) {
  if (st.spat.independent) return;
  const double a = spec.priors.a_rho, b = spec.priors.b_rho;
  const MatrixXd kinv = spd_inverse(st.kappa);
  const double d_cur = spatial::interval_logit(st.rho, a, b);
  const double d_prop = rng.normal(d_cur, st.rho_tune.delta);
  const double rho_prop = spatial::interval_logit_inv(d_prop, a, b);
  bool accepted = false;
  if (rho_prop > a && rho_prop < b) {
    RhoParts prop = st.spat.make_rho_parts(rho_prop);
    double lt_cur = rho_log_target_parts(st, spec, st.spat, st.spat.parts, kinv) +
                    spatial::interval_log_jacobian(d_cur);
    double lt_prop = rho_log_target_parts(st, spec, st.spat, prop, kinv) +
                     spatial::interval_log_jacobian(d_prop);
    if (std::log(rng.uniform()) < lt_prop - lt_cur) {
      st.rho = rho_prop;
      st.spat.parts = std::move(prop);
      accepted = true;
    }
  }
  st.rho_tune.record(accepted, adapting, spec.schedule.adapt_window);
}

void step_eta(ChainState& st, const Dataset& data, const ModelSpec& spec,
              RngStream& rng, bool prior_only) {
  const int k = spec.k, T = data.T();
  const bool indep = spec.temporal.kind == temporal::Kind::independent;
  const MatrixXd upsinv = spd_inverse(st.Upsilon);
  MatrixXd G, M = MatrixXd::Zero(k, k), XB;
  if (!prior_only) {
    MatrixXd Lambda = assemble_lambda(st, data.m(), data.O);
    G = Lambda.transpose() * st.sigma2.cwiseInverse().asDiagonal();
    M = G * Lambda;
    XB = xbeta_matrix(data, st.beta);
  }
  temporal::Spec ts = temporal_at(spec, st.psi);
  for (int t = 0; t < T; ++t) {
    temporal::CondCoeffs cc;
    if (!indep) cc = temporal::conditional_coeffs(ts, t);
    MatrixXd P = upsinv / (indep ? 1.0 : cc.hstar);
    VectorXd mu = VectorXd::Zero(k);
    if (!indep && !cc.hplus.empty()) {
      VectorXd e0 = VectorXd::Zero(k);
      for (const auto& [pos, val] : cc.hplus) {
        const int orig = pos < t ? pos : pos + 1;
        e0 += val * st.eta.row(orig).transpose();
      }
      mu += P * e0;
    }
    if (!prior_only) {
      P += M;
      mu += G * (data.y.col(t) - XB.col(t));
    }
    st.eta.row(t) = draw_gaussian_precision(P, mu, rng, "step_eta").transpose();
  }
}

void step_upsilon(ChainState& st, const Dataset& data, const ModelSpec& spec,
                  RngStream& rng) {
  const bool indep = spec.temporal.kind == temporal::Kind::independent;
  MatrixXd Phi = st.eta.transpose();  // k x T
  MatrixXd S = indep ? MatrixXd(Phi * Phi.transpose())
                     : MatrixXd(Phi * (st.tf.precision * Phi.transpose()));
  st.Upsilon = rng.inverse_wishart(data.T() + spec.priors.zeta, S + spec.priors.omega);
}

void step_psi(ChainState& st, const ModelSpec& spec, RngStream& rng, bool adapting) {
  if (spec.temporal.kind == temporal::Kind::independent) return;
  const double a = spec.priors.a_psi, b = spec.priors.b_psi;
  const MatrixXd upsinv = spd_inverse(st.Upsilon);
  const double d_cur = spatial::interval_logit(st.psi, a, b);
  const double d_prop = rng.normal(d_cur, st.psi_tune.delta);
  const double psi_prop = spatial::interval_logit_inv(d_prop, a, b);
  bool accepted = false;
  if (psi_prop > a && psi_prop < b) {
    temporal::Factors tf_prop = temporal_factors_at(spec, psi_prop);
    double lt_cur = psi_log_target(st, spec, st.psi, st.tf, upsinv) +
                    spatial::interval_log_jacobian(d_cur);
    double lt_prop = psi_log_target(st, spec, psi_prop, tf_prop, upsinv) +
                     spatial::interval_log_jacobian(d_prop);
    if (std::log(rng.uniform()) < lt_prop - lt_cur) {
      st.psi = psi_prop;
      st.tf = std::move(tf_prop);
      accepted = true;
    }
  }
  st.psi_tune.record(accepted, adapting, spec.schedule.adapt_window);
}

void step_beta(ChainState& st, const Dataset& data, const ModelSpec& spec,
               RngStream& rng, bool prior_only) {
  if (data.p() == 0) return;
  MatrixXd S0inv = spd_inverse(spec.priors.sigma0_beta);
  MatrixXd P = S0inv;
  VectorXd mu = S0inv * spec.priors.mu0_beta;
  if (!prior_only) {
    MatrixXd Lambda = assemble_lambda(st, data.m(), data.O);
    VectorXd xi_inv = st.sigma2.cwiseInverse();
    for (int t = 0; t < data.T(); ++t) {
      MatrixXd XtW = data.X[t].transpose() * xi_inv.asDiagonal();
      P += XtW * data.X[t];
      mu += XtW * (data.y.col(t) - Lambda * st.eta.row(t).transpose());
    }
  }
  st.beta = draw_gaussian_precision(P, mu, rng, "step_beta");
}

void step_sigma2(ChainState& st, const Dataset& data, const ModelSpec& spec,
                 RngStream& rng, bool prior_only) {
  const int mO = data.m() * data.O;
  if (prior_only) {
    for (int s = 0; s < mO; ++s)
      st.sigma2[s] = rng.inverse_gamma(spec.priors.a, spec.priors.b);
    return;
  }
  MatrixXd Lambda = assemble_lambda(st, data.m(), data.O);
  MatrixXd XB = xbeta_matrix(data, st.beta);
  MatrixXd R = resid_excluding(st, data, XB, Lambda, -1);
  const double shape = spec.priors.a + 0.5 * data.T();
  for (int s = 0; s < mO; ++s) {
    double rate = spec.priors.b + 0.5 * R.row(s).squaredNorm();
    st.sigma2[s] = rng.inverse_gamma(shape, rate);
  }
}

void check_invariants(ChainState& st, const Dataset& data, const ModelSpec& spec) {
  if (!variant_is_clustering(spec.variant)) return;
  const int mO = data.m() * data.O;
  for (int j = 0; j < spec.k; ++j) {
    const auto& f = st.factors[j];
    for (int s = 0; s < mO; ++s) {
      double sum = f.w.row(s).sum();
      if (std::fabs(sum - 1.0) > 1e-12)
        throw NumericError("invariant: weights at site " + std::to_string(s) +
                           " sum to " + std::to_string(sum));
      if (variant_is_varyL(spec.variant)) {
        double wxi = std::max(f.w(s, f.labels[s]), DBL_MIN);
        if (!(f.u[s] < wxi))
          throw NumericError("invariant: slice u >= w at own label, site " +
                             std::to_string(s) + " factor " + std::to_string(j));
      }
    }
    if (f.L > st.L_prev[j])
      throw NumericError("invariant: truncation L_j increased");
  }
  for (int j = 0; j < spec.k; ++j) st.L_prev[j] = st.factors[j].L;
}

}  // namespace

void MetropolisTuning::record(bool accepted, bool adapting, long adapt_window) {
  ++total_prop;
  ++window_prop;
  if (accepted) {
    ++total_acc;
    ++window_acc;
  }
  if (adapting && window_prop >= adapt_window) {
    double rate = static_cast<double>(window_acc) / window_prop;
    if (rate > 0.5) delta *= 1.1;
    else if (rate < 0.25) delta /= 1.1;
    window_prop = window_acc = 0;
  }
}

void SpatialCache::init_geometry(const ModelSpec& spec, const Dataset& data) {
  coords = data.coords;
  D = spatial::distance_matrix(coords);
  nngp = variant_is_nngp(spec.variant);
  independent = spec.spatial.kind == spatial::Kind::independent;
  if (nngp) graph = nngp::build_graph(coords, spec.h);
}

RhoParts SpatialCache::make_rho_parts(double rho) const {
  RhoParts parts;
  const int m = static_cast<int>(D.rows());
  if (independent) {
    parts.F = MatrixXd::Identity(m, m);
    parts.cholF = parts.F;
    parts.Finv = parts.F;
    parts.logdetF = 0.0;
    return parts;
  }
  if (nngp) {
    nngp::ExpKernel kernel{coords, rho};
    parts.local = nngp::local_factors(graph, kernel);
    parts.Ftilde_inv = nngp::sparse_precision(graph, parts.local);
    return parts;
  }
  parts.F = spatial::build_F(spatial::Kind::continuous_exponential, rho, D);
  MatrixXd Fj = parts.F + spatial::kCholJitter * MatrixXd::Identity(m, m);
  Eigen::LLT<MatrixXd> llt(Fj);
  if (llt.info() != Eigen::Success)
    throw NumericError("spatial cache: F not positive definite");
  parts.cholF = llt.matrixL();
  parts.logdetF = 2.0 * parts.cholF.diagonal().array().log().sum();
  parts.Finv = llt.solve(MatrixXd::Identity(m, m));
  parts.Finv = 0.5 * (parts.Finv + parts.Finv.transpose()).eval();
  return parts;
}

Eigen::MatrixXd assemble_lambda(const ChainState& state, int m, int O) {
  if (state.factors.empty()) return state.Lambda0;
  const int k = static_cast<int>(state.factors.size());
  MatrixXd Lambda(m * O, k);
  for (int j = 0; j < k; ++j) {
    const auto& f = state.factors[j];
    for (int s = 0; s < m * O; ++s) Lambda(s, j) = f.theta[f.labels[s]];
  }
  return Lambda;
}

ModelSpec finalize_spec(const ModelSpec& spec0, const Dataset& data) {
  ModelSpec spec = spec0;
  spec.spatial.coords = data.coords;
  Eigen::MatrixXd D = spatial::distance_matrix(data.coords);
  spec.priors.finalize(spec.k, data.O, data.p(), D, spec.temporal.kind);
  if (spec.temporal.kind == temporal::Kind::ar1 ||
      spec.temporal.kind == temporal::Kind::sar1)
    spec.priors.b_psi = std::min(spec.priors.b_psi, 1.0 - 1e-6);
  spec.spatial.a_rho = spec.priors.a_rho;
  spec.spatial.b_rho = spec.priors.b_rho;
  if (!(spec.spatial.rho > spec.spatial.a_rho && spec.spatial.rho < spec.spatial.b_rho))
    spec.spatial.rho = 0.5 * (spec.spatial.a_rho + spec.spatial.b_rho);
  if (spec.temporal.timepoints.empty()) {
    spec.temporal.timepoints.resize(data.T());
    for (int t = 0; t < data.T(); ++t) spec.temporal.timepoints[t] = t + 1.0;
  }
  return spec;
}

ChainState init_state(const ModelSpec& spec, const Dataset& data, ChainRng& rng) {
  const int m = data.m(), O = data.O, mO = m * O, k = spec.k;
  auto& sr = rng.stream("init");
  ChainState st;
  st.eta = MatrixXd::Zero(data.T(), k);
  st.Upsilon = MatrixXd::Identity(k, k);
  st.kappa = MatrixXd::Identity(O, O);
  st.beta = VectorXd::Zero(data.p());
  st.sigma2 = VectorXd::Ones(mO);
  st.psi = spec.temporal.kind == temporal::Kind::independent
               ? 0.0
               : 0.5 * (spec.priors.a_psi + spec.priors.b_psi);
  st.rho = spec.spatial.kind == spatial::Kind::independent
               ? 0.0
               : 0.5 * (spec.priors.a_rho + spec.priors.b_rho);
  st.spat.init_geometry(spec, data);
  st.spat.set_rho(st.rho);
  if (spec.temporal.kind != temporal::Kind::independent)
    st.tf = temporal_factors_at(spec, st.psi);

  st.shrink.a1 = spec.priors.a1;
  st.shrink.a2 = spec.priors.a2;
  st.shrink.use_shrinkage = spec.priors.use_shrinkage;
  st.shrink.delta.resize(k);
  for (int j = 0; j < k; ++j)
    st.shrink.delta[j] = st.shrink.use_shrinkage
                             ? sr.gamma(j == 0 ? spec.priors.a1 : spec.priors.a2, 1.0)
                             : sr.gamma(spec.priors.a1, spec.priors.a2);
  st.shrink.recompute_tau();

  if (variant_is_clustering(spec.variant)) {
    MatrixXd cholKappa = st.kappa.llt().matrixL();
    st.factors.resize(k);
    for (int j = 0; j < k; ++j) {
      auto& f = st.factors[j];
      f.L = spec.L;
      f.theta.resize(f.L);
      const double sd = 1.0 / std::sqrt(st.shrink.tau[j]);
      for (int l = 0; l < f.L; ++l) f.theta[l] = sr.normal(0.0, sd);
      f.alpha.resize(f.L - 1);
      f.z.resize(f.L - 1);
      for (int l = 0; l < f.L - 1; ++l) {
        f.alpha[l] = alpha_prior_draw(st.spat, st.spat.parts, cholKappa, sr);
        f.z[l] = VectorXd::Zero(mO);
      }
      f.labels.resize(mO);
      for (int s = 0; s < mO; ++s) f.labels[s] = sr.uniform_int(f.L);
      psbp::recompute_weights(f, m, O);
      f.u = VectorXd::Zero(mO);
      if (variant_is_varyL(spec.variant)) psbp::sample_slice(f, sr);
    }
  } else {
    st.Lambda0 = MatrixXd::Zero(mO, k);
  }
  st.L_prev.assign(k, spec.L);
  return st;
}

ChainState draw_state_from_prior(const ModelSpec& spec, const Dataset& data,
                                 ChainRng& rng) {
  const int m = data.m(), O = data.O, mO = m * O, k = spec.k;
  auto& sr = rng.stream("prior");
  ChainState st;
  st.sigma2.resize(mO);
  for (int s = 0; s < mO; ++s)
    st.sigma2[s] = sr.inverse_gamma(spec.priors.a, spec.priors.b);
  if (data.p() > 0) {
    Eigen::LLT<MatrixXd> llt(spec.priors.sigma0_beta);
    st.beta = sr.mvn_chol(spec.priors.mu0_beta, MatrixXd(llt.matrixL()));
  } else {
    st.beta = VectorXd(0);
  }
  st.Upsilon = sr.inverse_wishart(spec.priors.zeta, spec.priors.omega);
  st.kappa = sr.inverse_wishart(spec.priors.nu, spec.priors.theta_scale);

  if (spec.temporal.kind == temporal::Kind::independent) {
    st.psi = 0.0;
  } else if (spec.temporal.kind == temporal::Kind::ar1 ||
             spec.temporal.kind == temporal::Kind::sar1) {
    // transformed-Beta prior; uniform when gamma = beta = 1
    if (spec.priors.psi_gamma == 1.0 && spec.priors.psi_beta == 1.0) {
      st.psi = sr.uniform(spec.priors.a_psi, spec.priors.b_psi);
    } else {
      double cap = 0.0;
      for (int g = 0; g <= 64; ++g) {
        double x = spec.priors.a_psi +
                   (spec.priors.b_psi - spec.priors.a_psi) * g / 64.0;
        cap = std::max(cap, psi_log_prior(spec, x));
      }
      for (;;) {
        double x = sr.uniform(spec.priors.a_psi, spec.priors.b_psi);
        if (std::log(sr.uniform()) < psi_log_prior(spec, x) - cap - 1e-12) {
          st.psi = x;
          break;
        }
      }
    }
  } else {
    st.psi = sr.uniform(spec.priors.a_psi, spec.priors.b_psi);
  }
  st.rho = spec.spatial.kind == spatial::Kind::independent
               ? 0.0
               : sr.uniform(spec.priors.a_rho, spec.priors.b_rho);

  st.spat.init_geometry(spec, data);
  st.spat.set_rho(st.rho);
  if (spec.temporal.kind != temporal::Kind::independent)
    st.tf = temporal_factors_at(spec, st.psi);

  st.shrink.a1 = spec.priors.a1;
  st.shrink.a2 = spec.priors.a2;
  st.shrink.use_shrinkage = spec.priors.use_shrinkage;
  st.shrink.delta.resize(k);
  for (int j = 0; j < k; ++j)
    st.shrink.delta[j] = st.shrink.use_shrinkage
                             ? sr.gamma(j == 0 ? spec.priors.a1 : spec.priors.a2, 1.0)
                             : sr.gamma(spec.priors.a1, spec.priors.a2);
  st.shrink.recompute_tau();

  // eta ~ N(0, H ⊗ Upsilon)
  MatrixXd cholH;
  if (spec.temporal.kind == temporal::Kind::independent)
    cholH = MatrixXd::Identity(data.T(), data.T());
  else {
    temporal::Spec ts = temporal_at(spec, st.psi);
    cholH = temporal::build_H(ts).llt().matrixL();
  }
  MatrixXd cholU = st.Upsilon.llt().matrixL();
  MatrixXd Z(data.T(), k);
  for (int t = 0; t < data.T(); ++t) Z.row(t) = sr.normal_vector(k).transpose();
  st.eta = cholH * Z * cholU.transpose();

  MatrixXd cholKappa = st.kappa.llt().matrixL();
  if (variant_is_clustering(spec.variant)) {
    st.factors.resize(k);
    for (int j = 0; j < k; ++j) {
      auto& f = st.factors[j];
      f.L = spec.L;
      f.theta.resize(f.L);
      const double sd = 1.0 / std::sqrt(st.shrink.tau[j]);
      for (int l = 0; l < f.L; ++l) f.theta[l] = sr.normal(0.0, sd);
      f.alpha.resize(f.L - 1);
      for (int l = 0; l < f.L - 1; ++l)
        f.alpha[l] = alpha_prior_draw(st.spat, st.spat.parts, cholKappa, sr);
      psbp::recompute_weights(f, m, O);
      f.labels.resize(mO);
      f.u.resize(mO);
      f.z.resize(f.L - 1);
      for (int l = 0; l < f.L - 1; ++l) f.z[l].resize(mO);
      if (variant_is_varyL(spec.variant)) {
        for (int s = 0; s < mO; ++s) {
          double target = sr.uniform();
          double acc = 0.0;
          int lab = f.L - 1;
          for (int l = 0; l < f.L; ++l) {
            acc += f.w(s, l);
            if (target <= acc) {
              lab = l;
              break;
            }
          }
          f.labels[s] = lab;
        }
        psbp::sample_slice(f, sr);
      } else {
        // z ~ N(alpha, 1); labels follow deterministically from the signs
        for (int i = 0; i < m; ++i)
          for (int o = 0; o < O; ++o) {
            int lab = f.L - 1;
            for (int l = 0; l < f.L - 1; ++l) {
              f.z[l][aidx(i, o, O)] = sr.normal(f.alpha[l][aidx(i, o, O)], 1.0);
              if (lab == f.L - 1 && f.z[l][aidx(i, o, O)] > 0.0) lab = l;
            }
            f.labels[widx(i, o, m)] = lab;
          }
      }
    }
  } else {
    st.Lambda0.resize(mO, k);
    for (int j = 0; j < k; ++j) {
      VectorXd a = alpha_prior_draw(st.spat, st.spat.parts, cholKappa, sr);
      // permute alpha-ordering into weight-ordering
      for (int i = 0; i < m; ++i)
        for (int o = 0; o < O; ++o)
          st.Lambda0(widx(i, o, m), j) = a[aidx(i, o, O)];
    }
  }
  st.L_prev.assign(k, spec.L);
  return st;
}

Eigen::MatrixXd simulate_y_given_state(const ChainState& state, const ModelSpec& spec,
                                       const Dataset& data, RngStream& rng) {
  (void)spec;
  MatrixXd Lambda = assemble_lambda(state, data.m(), data.O);
  MatrixXd Y = xbeta_matrix(data, state.beta) + Lambda * state.eta.transpose();
  for (int s = 0; s < Y.rows(); ++s) {
    const double sd = std::sqrt(state.sigma2[s]);
    for (int t = 0; t < Y.cols(); ++t) Y(s, t) += rng.normal(0.0, sd);
  }
  return Y;
}

void sweep(ChainState& st, const Dataset& data, const ModelSpec& spec,
           ChainRng& rng, bool adapting, StepTimers* timers,
           const SweepOptions& opts) {
  const MatrixXd XB = xbeta_matrix(data, st.beta);
  if (variant_is_clustering(spec.variant)) {
    if (variant_is_varyL(spec.variant)) {
      {
        ScopedTimer t(timers, "u");
        step_u(st, rng.stream("u"));
      }
      {
        ScopedTimer t(timers, "labels");
        step_L_and_labels(st, data, spec, XB, rng.stream("labels"), opts.prior_only);
      }
    } else {
      ScopedTimer t(timers, "labels");
      step_labels_fixedL(st, data, spec, XB, rng.stream("labels"), opts.prior_only);
    }
    {
      ScopedTimer t(timers, "theta");
      step_theta(st, data, spec, XB, rng.stream("theta"), opts.prior_only);
    }
    {
      ScopedTimer t(timers, "delta");
      psbp::sample_delta(st.shrink, st.factors, rng.stream("delta"));
    }
    if (!variant_is_varyL(spec.variant)) {
      ScopedTimer t(timers, "z");
      step_z(st, data, rng.stream("z"));
    }
    {
      ScopedTimer t(timers, "alpha");
      step_alpha(st, data, spec, rng.stream("alpha"));
    }
  } else {
    ScopedTimer t(timers, "lambda");
    step_lambda_baseline(st, data, spec, XB, rng.stream("lambda"), opts.prior_only);
  }
  {
    ScopedTimer t(timers, "kappa");
    step_kappa(st, data, spec, rng.stream("kappa"));
  }
  {
    ScopedTimer t(timers, "rho");
    step_rho(st, spec, rng.stream("rho"), adapting);
  }
  {
    ScopedTimer t(timers, "eta");
    step_eta(st, data, spec, rng.stream("eta"), opts.prior_only);
  }
  {
    ScopedTimer t(timers, "upsilon");
    step_upsilon(st, data, spec, rng.stream("upsilon"));
  }
  {
    ScopedTimer t(timers, "psi");
    step_psi(st, spec, rng.stream("psi"), adapting);
  }
  {
    ScopedTimer t(timers, "beta");
    step_beta(st, data, spec, rng.stream("beta"), opts.prior_only);
  }
  {
    ScopedTimer t(timers, "sigma2");
    step_sigma2(st, data, spec, rng.stream("sigma2"), opts.prior_only);
  }
  ++st.iteration;
  if (opts.check_invariants) check_invariants(st, data, spec);
}

double deviance(const ChainState& st, const Dataset& data) {
  MatrixXd Lambda = assemble_lambda(st, data.m(), data.O);
  MatrixXd XB = xbeta_matrix(data, st.beta);
  MatrixXd R = data.y - XB - Lambda * st.eta.transpose();
  double dev = 0.0;
  const double log2pi = std::log(2.0 * M_PI);
  for (int s = 0; s < R.rows(); ++s) {
    double s2 = st.sigma2[s];
    dev += data.T() * (log2pi + std::log(s2)) + R.row(s).squaredNorm() / s2;
  }
  return dev;
}

void record_sample(PosteriorStore& store, const ChainState& st, const Dataset& data,
                   const ModelSpec& spec) {
  store.eta.push_back(st.eta);
  if (data.p() > 0) store.beta.push_back(st.beta);
  store.sigma2.push_back(st.sigma2);
  store.kappa.push_back(st.kappa);
  store.Upsilon.push_back(st.Upsilon);
  if (spec.temporal.kind != temporal::Kind::independent) store.psi.push_back(st.psi);
  if (spec.spatial.kind != spatial::Kind::independent) store.rho.push_back(st.rho);
  store.deviance.push_back(deviance(st, data));
  if (variant_is_clustering(spec.variant)) {
    std::vector<int> Ls(spec.k);
    std::vector<Eigen::VectorXd> thetas(spec.k);
    std::vector<std::vector<Eigen::VectorXd>> alphas(spec.k);
    std::vector<Eigen::MatrixXd> ws(spec.k);
    Eigen::MatrixXi labs(data.m() * data.O, spec.k);
    for (int j = 0; j < spec.k; ++j) {
      const auto& f = st.factors[j];
      Ls[j] = f.L;
      thetas[j] = f.theta;
      alphas[j] = f.alpha;
      ws[j] = f.w;
      for (int s = 0; s < labs.rows(); ++s) labs(s, j) = f.labels[s];
    }
    store.L.push_back(std::move(Ls));
    store.theta.push_back(std::move(thetas));
    store.alpha.push_back(std::move(alphas));
    store.w.push_back(std::move(ws));
    store.labels.push_back(std::move(labs));
  } else {
    store.lambda.push_back(st.Lambda0);
  }
}

PosteriorStore run_chain(const ModelSpec& spec0, const Dataset& data,
                         StepTimers* timers, const SweepOptions& opts) {
  ModelSpec spec = finalize_spec(spec0, data);
  spec.validate(data);
  ChainRng rng(spec.schedule.seed);
  ChainState st = init_state(spec, data, rng);

  PosteriorStore store;
  store.m = data.m();
  store.O = data.O;
  store.T = data.T();
  store.k = spec.k;
  store.p = data.p();
  store.variant = spec.variant;
  store.L_init = spec.L;
  store.seed = spec.schedule.seed;

  const long total = spec.schedule.burnin + spec.schedule.post_burnin;
  StepTimers local_timers;
  StepTimers* tm = timers ? timers : &local_timers;
  for (long iter = 0; iter < total; ++iter) {
    const bool adapting = iter < spec.schedule.burnin;
    try {
      sweep(st, data, spec, rng, adapting, tm, opts);
    } catch (const NumericError& e) {
      throw NumericError("numerical abort at iteration " + std::to_string(iter) +
                         ": " + e.what());
    }
    if (iter >= spec.schedule.burnin &&
        (iter - spec.schedule.burnin + 1) % spec.schedule.thin == 0)
      record_sample(store, st, data, spec);
  }
  store.step_ms = tm->ms;
  store.psi_accept_rate = st.psi_tune.acceptance_rate();
  store.rho_accept_rate = st.rho_tune.acceptance_rate();
  return store;
}

}  // namespace spatfactor::gibbs
