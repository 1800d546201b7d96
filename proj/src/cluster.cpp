#include "spatfactor/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "spatfactor/errors.hpp"
#include "spatfactor/rng.hpp"

namespace spatfactor::cluster {

namespace {
using Eigen::MatrixXd;
using Eigen::VectorXd;
}  // namespace

Eigen::MatrixXd assemble_weights(const gibbs::PosteriorStore& store, int o,
                                 const std::vector<int>& iters,
                                 bool posterior_mean) {
  if (!store.clustering())
    throw DataError("assemble_weights: store has no clustering weights");
  if (o < 0 || o >= store.O) throw DataError("assemble_weights: bad type index");
  const int m = store.m;
  std::vector<int> idx = iters;
  if (idx.empty()) {
    idx.resize(store.W());
    std::iota(idx.begin(), idx.end(), 0);
  }
  for (int w : idx)
    if (w < 0 || w >= store.W())
      throw DataError("assemble_weights: iteration index out of range");

  if (posterior_mean) {
    // fixed-L option: average the m x kL blocks over iterations
    const int L = store.L_init;
    for (int w : idx)
      for (int j = 0; j < store.k; ++j)
        if (store.L[w][j] != L)
          throw DataError("assemble_weights: posterior mean needs fixed L");
    MatrixXd M = MatrixXd::Zero(m, store.k * L);
    for (int w : idx)
      for (int j = 0; j < store.k; ++j)
        for (int i = 0; i < m; ++i)
          M.block(i, j * L, 1, L) += store.w[w][j].row(widx(i, o, m));
    return M / static_cast<double>(idx.size());
  }

  int cols = 0;
  for (int w : idx)
    for (int j = 0; j < store.k; ++j) cols += store.L[w][j];
  MatrixXd M(m, cols);
  int c = 0;
  for (int w : idx)
    for (int j = 0; j < store.k; ++j) {
      const int Lj = store.L[w][j];
      for (int i = 0; i < m; ++i)
        M.block(i, c, 1, Lj) = store.w[w][j].row(widx(i, o, m)).head(Lj);
      c += Lj;
    }
  return M;
}

std::vector<int> dispersed_indices(long W, int n) {
  std::vector<int> idx;
  if (n <= 0 || W <= 0) return idx;
  n = std::min<long>(n, W);
  idx.reserve(n);
  for (int i = 0; i < n; ++i)
    idx.push_back(static_cast<int>((static_cast<long>(i) * W) / n + W / (2 * n)));
  for (int& v : idx) v = std::min<int>(v, static_cast<int>(W - 1));
  return idx;
}

namespace {

double lloyd(const MatrixXd& X, int K, int max_iters, RngStream& rng,
             std::vector<int>& labels) {
  const int n = static_cast<int>(X.rows());
  MatrixXd centers(K, X.cols());
  // k-means++ seeding
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  int first = rng.uniform_int(n);
  centers.row(0) = X.row(first);
  for (int c = 1; c < K; ++c) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      double d = (X.row(i) - centers.row(c - 1)).squaredNorm();
      d2[i] = std::min(d2[i], d);
      total += d2[i];
    }
    int pick = n - 1;
    if (total > 0.0) {
      double target = rng.uniform() * total, acc = 0.0;
      for (int i = 0; i < n; ++i) {
        acc += d2[i];
        if (target <= acc) {
          pick = i;
          break;
        }
      }
    } else {
      pick = rng.uniform_int(n);
    }
    centers.row(c) = X.row(pick);
  }

  labels.assign(n, 0);
  double wcss_prev = std::numeric_limits<double>::infinity();
  double wcss = wcss_prev;
  for (int it = 0; it < max_iters; ++it) {
    wcss = 0.0;
    for (int i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (int c = 0; c < K; ++c) {
        double d = (X.row(i) - centers.row(c)).squaredNorm();
        if (d < best) {
          best = d;
          labels[i] = c;
        }
      }
      wcss += best;
    }
    if (wcss > wcss_prev + 1e-9)
      throw NumericError("kmeans: WCSS increased across Lloyd iterations");
    if (wcss_prev - wcss < 1e-12 && it > 0) break;
    wcss_prev = wcss;
    MatrixXd sums = MatrixXd::Zero(K, X.cols());
    std::vector<int> counts(K, 0);
    for (int i = 0; i < n; ++i) {
      sums.row(labels[i]) += X.row(i);
      ++counts[labels[i]];
    }
    for (int c = 0; c < K; ++c)
      if (counts[c] > 0) centers.row(c) = sums.row(c) / counts[c];
      else centers.row(c) = X.row(rng.uniform_int(n));  // re-seed empty cluster
  }
  return wcss;
}

}  // namespace

std::vector<int> kmeans(const MatrixXd& X, int K, int restarts, int max_iters,
                        std::uint64_t seed) {
  const int n = static_cast<int>(X.rows());
  if (K < 1 || K > n) throw DataError("kmeans: need 1 <= K <= #rows");
  std::vector<int> best_labels;
  double best_wcss = std::numeric_limits<double>::infinity();
  for (int r = 0; r < std::max(restarts, 1); ++r) {
    RngStream rng(splitmix64(seed ^ splitmix64(0x6b6d0000ULL + r)));
    std::vector<int> labels;
    double wcss = lloyd(X, K, max_iters, rng, labels);
    if (wcss < best_wcss) {
      best_wcss = wcss;
      best_labels = labels;
    }
  }
  return best_labels;
}

double rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  const int n = static_cast<int>(a.size());
  if (b.size() != a.size()) throw DataError("rand_index: length mismatch");
  if (n < 2) return 1.0;
  long agree = 0, total = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      bool sa = a[i] == a[j], sb = b[i] == b[j];
      agree += (sa == sb);
      ++total;
    }
  return static_cast<double>(agree) / total;
}

namespace {

// maximum-trace assignment on an n x n count matrix (Hungarian, O(n^3))
long hungarian_max(const MatrixXd& C) {
  const int n = static_cast<int>(C.rows());
  const double big = C.maxCoeff();
  // convert to min-cost
  std::vector<std::vector<double>> a(n + 1, std::vector<double>(n + 1, 0.0));
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n; ++j) a[i][j] = big - C(i - 1, j - 1);
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, std::numeric_limits<double>::infinity());
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      int i0 = p[j0], j1 = 0;
      double delta = std::numeric_limits<double>::infinity();
      for (int j = 1; j <= n; ++j)
        if (!used[j]) {
          double cur = a[i0][j] - u[i0] - v[j];
          if (cur < minv[j]) {
            minv[j] = cur;
            way[j] = j0;
          }
          if (minv[j] < delta) {
            delta = minv[j];
            j1 = j;
          }
        }
      for (int j = 0; j <= n; ++j)
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  double sum = 0.0;
  for (int j = 1; j <= n; ++j) sum += C(p[j] - 1, j - 1);
  return static_cast<long>(std::llround(sum));
}

}  // namespace

double accuracy_ratio(const std::vector<int>& a, const std::vector<int>& truth) {
  const int n = static_cast<int>(a.size());
  if (truth.size() != a.size()) throw DataError("accuracy_ratio: length mismatch");
  int K = 0;
  for (int i = 0; i < n; ++i) K = std::max({K, a[i] + 1, truth[i] + 1});
  MatrixXd C = MatrixXd::Zero(K, K);
  for (int i = 0; i < n; ++i) C(a[i], truth[i]) += 1.0;
  long best = 0;
  if (K <= 8) {
    std::vector<int> perm(K);
    std::iota(perm.begin(), perm.end(), 0);
    do {
      long match = 0;
      for (int c = 0; c < K; ++c) match += static_cast<long>(C(c, perm[c]));
      best = std::max(best, match);
    } while (std::next_permutation(perm.begin(), perm.end()));
  } else {
    best = hungarian_max(C);
  }
  return static_cast<double>(best) / n;
}

}  // namespace spatfactor::cluster
