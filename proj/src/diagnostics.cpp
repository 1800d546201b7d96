#include "spatfactor/diagnostics.hpp"

#include <cmath>
#include <numeric>

#include "spatfactor/errors.hpp"
#include "spatfactor/rng.hpp"

namespace spatfactor::diag {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kLog2Pi = 1.8378770664093454836;

std::vector<int> resolve_iters(const std::vector<int>& req, long W) {
  if (!req.empty()) {
    for (int w : req)
      if (w < 0 || w >= W) throw DataError("diagnostics: iteration out of range");
    return req;
  }
  std::vector<int> all(W);
  std::iota(all.begin(), all.end(), 0);
  return all;
}

MatrixXd lambda_at(const gibbs::PosteriorStore& store, int w) {
  const int mO = store.m * store.O;
  if (!store.clustering()) return store.lambda[w];
  MatrixXd Lambda(mO, store.k);
  for (int j = 0; j < store.k; ++j)
    for (int s = 0; s < mO; ++s)
      Lambda(s, j) = store.theta[w][j][store.labels[w](s, j)];
  return Lambda;
}

MatrixXd xbeta_at(const gibbs::PosteriorStore& store, const Dataset& data, int w) {
  MatrixXd XB = MatrixXd::Zero(store.m * store.O, store.T);
  if (store.p > 0)
    for (int t = 0; t < store.T; ++t) XB.col(t) = data.X[t] * store.beta[w];
  return XB;
}

}  // namespace

Eigen::MatrixXd fitted_mean_at(const gibbs::PosteriorStore& store,
                               const Dataset& data, int w) {
  return xbeta_at(store, data, w) + lambda_at(store, w) * store.eta[w].transpose();
}

double loglik_at(const gibbs::PosteriorStore& store, const Dataset& data, int w) {
  MatrixXd R = data.y - fitted_mean_at(store, data, w);
  double ll = 0.0;
  for (int s = 0; s < R.rows(); ++s) {
    const double s2 = store.sigma2[w][s];
    ll += -0.5 * store.T * (kLog2Pi + std::log(s2)) -
          0.5 * R.row(s).squaredNorm() / s2;
  }
  return ll;
}

std::vector<Eigen::MatrixXd> posterior_predictive_draws(
    const gibbs::PosteriorStore& store, const Dataset& data,
    const std::vector<int>& iters, std::uint64_t seed) {
  const auto idx = resolve_iters(iters, store.W());
  std::vector<MatrixXd> draws;
  draws.reserve(idx.size());
  for (int w : idx) {
    RngStream rng(splitmix64(seed ^ splitmix64(0xd1a6ULL + w)));
    MatrixXd Y = fitted_mean_at(store, data, w);
    for (int s = 0; s < Y.rows(); ++s) {
      const double sd = std::sqrt(store.sigma2[w][s]);
      for (int t = 0; t < Y.cols(); ++t) Y(s, t) += rng.normal(0.0, sd);
    }
    draws.push_back(std::move(Y));
  }
  return draws;
}

void mse_family(const std::vector<Eigen::MatrixXd>& draws,
                const Eigen::MatrixXd& y_obs, double* postMeanMSE,
                double* postMSE, double* postVar) {
  const long W = static_cast<long>(draws.size());
  if (W == 0) throw DataError("mse_family: no draws");
  const long cells = y_obs.size();
  MatrixXd mean = MatrixXd::Zero(y_obs.rows(), y_obs.cols());
  for (const auto& d : draws) mean += d;
  mean /= static_cast<double>(W);
  double mse = 0.0, var = 0.0;
  for (const auto& d : draws) {
    mse += (d - y_obs).squaredNorm();
    var += (d - mean).squaredNorm();
  }
  *postMeanMSE = (mean - y_obs).squaredNorm() / cells;
  *postMSE = mse / (static_cast<double>(W) * cells);
  // unbiased per-cell sample variance, divisor W-1
  *postVar = W > 1 ? var / (static_cast<double>(W - 1) * cells) : 0.0;
}

void dic(const std::vector<double>& loglik_per_iter, double loglik_at_mean,
         double* pD, double* dic_out) {
  if (loglik_per_iter.empty()) throw DataError("dic: no iterations");
  double dbar = 0.0;
  for (double ll : loglik_per_iter) dbar += -2.0 * ll;
  dbar /= static_cast<double>(loglik_per_iter.size());
  const double dhat = -2.0 * loglik_at_mean;
  *pD = dbar - dhat;
  *dic_out = dbar + *pD;
}

void waic(const Eigen::MatrixXd& loglik, double* p_waic_1, double* p_waic_2,
          double* lppd, double* waic_out) {
  const long W = loglik.rows();
  if (W == 0) throw DataError("waic: no iterations");
  double l = 0.0, p1 = 0.0, p2 = 0.0;
  for (long c = 0; c < loglik.cols(); ++c) {
    const auto col = loglik.col(c);
    const double mx = col.maxCoeff();
    // log mean exp via log-sum-exp
    double lme = mx + std::log((col.array() - mx).exp().sum()) -
                 std::log(static_cast<double>(W));
    const double mean_ll = col.mean();
    double v = W > 1 ? (col.array() - mean_ll).square().sum() / (W - 1) : 0.0;
    l += lme;
    p1 += 2.0 * (lme - mean_ll);
    p2 += v;
  }
  *lppd = l;
  *p_waic_1 = p1;
  *p_waic_2 = p2;
  *waic_out = -2.0 * l + 2.0 * p2;
}

FitMetrics compute_all(const gibbs::PosteriorStore& store, const Dataset& data,
                       const std::vector<int>& iters, std::uint64_t seed) {
  const auto idx = resolve_iters(iters, store.W());
  const long W = static_cast<long>(idx.size());
  FitMetrics fm;

  auto draws = posterior_predictive_draws(store, data, idx, seed);
  mse_family(draws, data.y, &fm.postMeanMSE, &fm.postMSE, &fm.postVar);

  // pointwise log-likelihoods
  const long cells = static_cast<long>(data.y.size());
  MatrixXd ll(W, cells);
  std::vector<double> ll_total(W, 0.0);
  for (long wi = 0; wi < W; ++wi) {
    const int w = idx[wi];
    MatrixXd R = data.y - fitted_mean_at(store, data, w);
    long c = 0;
    for (int t = 0; t < store.T; ++t)
      for (int s = 0; s < R.rows(); ++s) {
        const double s2 = store.sigma2[w][s];
        double v = -0.5 * (kLog2Pi + std::log(s2)) - 0.5 * R(s, t) * R(s, t) / s2;
        ll(wi, c++) = v;
        ll_total[wi] += v;
      }
  }
  waic(ll, &fm.p_waic_1, &fm.p_waic_2, &fm.lppd, &fm.waic);

  // plug-in point for DIC: elementwise means, labels at their posterior mode
  gibbs::PosteriorStore mean_store;
  mean_store.m = store.m;
  mean_store.O = store.O;
  mean_store.T = store.T;
  mean_store.k = store.k;
  mean_store.p = store.p;
  mean_store.variant = store.variant;
  const int mO = store.m * store.O;
  MatrixXd eta_bar = MatrixXd::Zero(store.T, store.k);
  VectorXd s2_bar = VectorXd::Zero(mO);
  VectorXd beta_bar = VectorXd::Zero(store.p);
  for (int w : idx) {
    eta_bar += store.eta[w];
    s2_bar += store.sigma2[w];
    if (store.p > 0) beta_bar += store.beta[w];
  }
  eta_bar /= static_cast<double>(W);
  s2_bar /= static_cast<double>(W);
  if (store.p > 0) beta_bar /= static_cast<double>(W);
  mean_store.eta.push_back(eta_bar);
  mean_store.sigma2.push_back(s2_bar);
  if (store.p > 0) mean_store.beta.push_back(beta_bar);

  if (store.clustering()) {
    // per-site modal label, atom averaged over iterations where it exists
    std::vector<Eigen::VectorXd> theta_bar(store.k);
    Eigen::MatrixXi mode_labels(mO, store.k);
    for (int j = 0; j < store.k; ++j) {
      int Lmax = 0;
      for (int w : idx) Lmax = std::max(Lmax, store.L[w][j]);
      VectorXd tsum = VectorXd::Zero(Lmax);
      VectorXd tcnt = VectorXd::Zero(Lmax);
      for (int w : idx)
        for (int l = 0; l < store.L[w][j]; ++l) {
          tsum[l] += store.theta[w][j][l];
          tcnt[l] += 1.0;
        }
      theta_bar[j] = VectorXd::Zero(Lmax);
      for (int l = 0; l < Lmax; ++l)
        if (tcnt[l] > 0) theta_bar[j][l] = tsum[l] / tcnt[l];
      for (int s = 0; s < mO; ++s) {
        std::vector<int> votes(Lmax, 0);
        for (int w : idx) ++votes[store.labels[w](s, j)];
        mode_labels(s, j) = static_cast<int>(
            std::max_element(votes.begin(), votes.end()) - votes.begin());
      }
    }
    mean_store.theta.push_back(theta_bar);
    mean_store.labels.push_back(mode_labels);
    mean_store.L.push_back(std::vector<int>(store.k, 0));
  } else {
    MatrixXd lam_bar = MatrixXd::Zero(mO, store.k);
    for (int w : idx) lam_bar += store.lambda[w];
    mean_store.lambda.push_back(lam_bar / static_cast<double>(W));
  }
  dic(ll_total, loglik_at(mean_store, data, 0), &fm.pD, &fm.dic);
  return fm;
}

}  // namespace spatfactor::diag
