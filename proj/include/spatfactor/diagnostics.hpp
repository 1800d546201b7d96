#pragma once

#include <vector>

#include <Eigen/Dense>

#include "spatfactor/gibbs.hpp"

namespace spatfactor::diag {

struct FitMetrics {
  double postMeanMSE = 0, postMSE = 0, postVar = 0;
  double pD = 0, dic = 0;
  double p_waic_1 = 0, p_waic_2 = 0, lppd = 0, waic = 0;
};

// in-sample posterior predictive draws, one (mO) x T matrix per iteration
std::vector<Eigen::MatrixXd> posterior_predictive_draws(
    const gibbs::PosteriorStore& store, const Dataset& data,
    const std::vector<int>& iters, std::uint64_t seed);

void mse_family(const std::vector<Eigen::MatrixXd>& draws,
                const Eigen::MatrixXd& y_obs, double* postMeanMSE,
                double* postMSE, double* postVar);

void dic(const std::vector<double>& loglik_per_iter, double loglik_at_mean,
         double* pD, double* dic_out);

// pointwise log-likelihood matrix: rows = iterations, cols = data cells
void waic(const Eigen::MatrixXd& loglik, double* p_waic_1, double* p_waic_2,
          double* lppd, double* waic_out);

// all nine metrics over the selected iterations (empty = all)
FitMetrics compute_all(const gibbs::PosteriorStore& store, const Dataset& data,
                       const std::vector<int>& iters, std::uint64_t seed);

// helpers shared with the CLI
Eigen::MatrixXd fitted_mean_at(const gibbs::PosteriorStore& store,
                               const Dataset& data, int w);
double loglik_at(const gibbs::PosteriorStore& store, const Dataset& data, int w);

}  // namespace spatfactor::diag
