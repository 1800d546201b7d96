#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "spatfactor/gibbs.hpp"

namespace spatfactor::cluster {

// m x (sum over selected iterations and factors of L_j) posterior weight
// matrix for observation type o. posterior_mean averages the per-iteration
// blocks into m x (k * L) instead (fixed-L stores only).
Eigen::MatrixXd assemble_weights(const gibbs::PosteriorStore& store, int o,
                                 const std::vector<int>& iters,
                                 bool posterior_mean = false);

// n equally dispersed indices over [0, W)
std::vector<int> dispersed_indices(long W, int n);

// Lloyd's algorithm, best of `restarts` k-means++ initializations by
// within-cluster sum of squares; deterministic under seed.
std::vector<int> kmeans(const Eigen::MatrixXd& X, int K, int restarts,
                        int max_iters, std::uint64_t seed);

// fraction of pairs on which two partitions agree
double rand_index(const std::vector<int>& a, const std::vector<int>& b);

// best label-matching agreement fraction: exact permutation search for
// K <= 8, Hungarian assignment beyond
double accuracy_ratio(const std::vector<int>& a, const std::vector<int>& truth);

}  // namespace spatfactor::cluster
