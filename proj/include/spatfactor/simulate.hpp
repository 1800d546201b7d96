#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "spatfactor/model.hpp"

namespace spatfactor::sim {

// Synthetic data from the separable factor model: eta ~ N(0, H ⊗ Upsilon),
// loadings from one of two cluster designs, y = Lambda eta + noise.
struct Design {
  Eigen::MatrixXd coords;  // explicit, or use grid() below
  int T = 30, k = 2, O = 1;
  temporal::Kind temporal_kind = temporal::Kind::exponential;
  double psi = 2.3;
  int seasonal_period = 1;
  double rho = 0.8;
  double sigma2 = 0.01;
  Eigen::MatrixXd Upsilon;  // default I_k
  Eigen::MatrixXd kappa;    // default I_O (alpha scale, psbp mode)

  enum class Mode { psbp_counts, fixed_groups };
  Mode mode = Mode::psbp_counts;
  // psbp_counts: true cluster count per factor; empty draws Uniform{1..count_upper}
  std::vector<int> cluster_counts;
  int count_upper = 20;
  // fixed_groups: k x G atom matrix; sites assigned to groups uniformly
  Eigen::MatrixXd group_atoms;

  std::uint64_t seed = 1;
};

// side x side unit grid, row-major site order
Eigen::MatrixXd grid_coords(int side);

struct GroundTruth {
  Eigen::MatrixXi labels;   // mO x k (weight-ordering)
  std::vector<Eigen::VectorXd> atoms;
  Eigen::MatrixXd eta;      // T x k
  std::vector<int> group;   // fixed_groups mode: per-location group
  double psi = 0, rho = 0, sigma2 = 0;
};

struct Result {
  Dataset data;
  GroundTruth truth;
};

Result simulate(const Design& design);

}  // namespace spatfactor::sim
