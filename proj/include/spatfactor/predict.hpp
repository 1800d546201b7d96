#pragma once

#include <vector>

#include <Eigen/Dense>

#include "spatfactor/gibbs.hpp"
#include "spatfactor/model.hpp"

namespace spatfactor::predict {

// Composition-sampled posterior predictive draws. Iteration w of the output
// depends only on iteration w of the store (plus the request seed), so draws
// stay independent across iterations.

struct TimeRequest {
  int q = 1;                           // horizon: times T+1 .. T+q (unit steps)
  std::vector<Eigen::MatrixXd> X_new;  // per new t: (mO) x p, optional
  std::vector<int> iters;              // store subset; empty = all
};

struct SpaceRequest {
  Eigen::MatrixXd new_coords;          // r x dim
  std::vector<Eigen::MatrixXd> X_new;  // per t: (rO) x p, optional
  std::vector<int> iters;
};

struct Draws {
  // future_time: per iteration (mO) x q; new_location: per iteration (rO) x T
  std::vector<Eigen::MatrixXd> y;
};

Draws predict_future(const gibbs::PosteriorStore& store, const ModelSpec& spec,
                     const Dataset& data, const TimeRequest& req,
                     std::uint64_t seed);

Draws predict_locations(const gibbs::PosteriorStore& store, const ModelSpec& spec,
                        const Dataset& data, const SpaceRequest& req,
                        std::uint64_t seed);

}  // namespace spatfactor::predict
