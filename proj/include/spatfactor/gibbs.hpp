#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "spatfactor/model.hpp"
#include "spatfactor/nngp.hpp"
#include "spatfactor/psbp.hpp"
#include "spatfactor/rng.hpp"
#include "spatfactor/temporal.hpp"

namespace spatfactor::gibbs {

struct MetropolisTuning {
  double delta = 1.0;
  long window_prop = 0, window_acc = 0;
  long total_prop = 0, total_acc = 0;
  void record(bool accepted, bool adapting, long adapt_window);
  double acceptance_rate() const {
    return total_prop ? static_cast<double>(total_acc) / total_prop : 0.0;
  }
};

// Everything that depends on the current rho, separated from the fixed
// geometry so Metropolis proposals can be evaluated without copying D.
struct RhoParts {
  Eigen::MatrixXd F, cholF, Finv;  // full-GP / independent path
  double logdetF = 0.0;
  nngp::LocalFactors local;        // NNGP path
  Eigen::SparseMatrix<double> Ftilde_inv;
};

struct SpatialCache {
  bool nngp = false;
  bool independent = false;
  Eigen::MatrixXd coords;
  Eigen::MatrixXd D;
  nngp::NeighborGraph graph;
  RhoParts parts;

  void init_geometry(const ModelSpec& spec, const Dataset& data);
  RhoParts make_rho_parts(double rho) const;
  void set_rho(double rho) { parts = make_rho_parts(rho); }
};

struct ChainState {
  Eigen::MatrixXd eta;      // T x k
  Eigen::MatrixXd Upsilon;  // k x k
  double psi = 0.0, rho = 0.0;
  Eigen::VectorXd beta;     // p
  Eigen::VectorXd sigma2;   // mO
  Eigen::MatrixXd kappa;    // O x O
  std::vector<psbp::FactorState> factors;  // clustering variants
  psbp::ShrinkageState shrink;
  Eigen::MatrixXd Lambda0;  // baseline loadings, mO x k
  MetropolisTuning psi_tune, rho_tune;
  long iteration = 0;
  long block_fallbacks = 0;
  SpatialCache spat;
  temporal::Factors tf;     // factors of H(psi) at the current psi
  std::vector<int> L_prev;  // truncation monotonicity guard
};

struct StepTimers {
  std::map<std::string, double> ms;
};

struct SweepOptions {
  bool prior_only = false;       // drop all y-likelihood terms (test harness)
  bool check_invariants = true;  // verify slice/weight/truncation invariants
  int block_max_attempts = 10000;
};

// mO x k loadings in weight-ordering: atoms at labels, or baseline columns
Eigen::MatrixXd assemble_lambda(const ChainState& state, int m, int O);

// Inject data-dependent defaults (coords, prior bounds) into a spec copy.
ModelSpec finalize_spec(const ModelSpec& spec, const Dataset& data);

ChainState init_state(const ModelSpec& spec, const Dataset& data, ChainRng& rng);

// Full draw of every parameter from the joint prior (Geweke harness and
// overdispersed restarts).
ChainState draw_state_from_prior(const ModelSpec& spec, const Dataset& data,
                                 ChainRng& rng);

// y | state under the model likelihood; dims from `data`, X reused from it.
Eigen::MatrixXd simulate_y_given_state(const ChainState& state, const ModelSpec& spec,
                                       const Dataset& data, RngStream& rng);

// One full Gibbs scan in the fixed per-variant step order.
void sweep(ChainState& state, const Dataset& data, const ModelSpec& spec,
           ChainRng& rng, bool adapting, StepTimers* timers = nullptr,
           const SweepOptions& opts = {});

double deviance(const ChainState& state, const Dataset& data);

struct PosteriorStore {
  int m = 0, O = 0, T = 0, k = 0, p = 0;
  Variant variant = Variant::NNGPsequenVaryLj;
  int L_init = 0;
  std::uint64_t seed = 0;

  std::vector<Eigen::MatrixXd> eta;       // T x k
  std::vector<Eigen::VectorXd> beta;      // p (empty when p == 0)
  std::vector<Eigen::VectorXd> sigma2;    // mO
  std::vector<Eigen::MatrixXd> kappa;     // O x O
  std::vector<Eigen::MatrixXd> Upsilon;   // k x k
  std::vector<double> psi, rho, deviance;

  std::vector<std::vector<int>> L;                               // [w][j]
  std::vector<std::vector<Eigen::VectorXd>> theta;               // [w][j], size L_j
  std::vector<Eigen::MatrixXi> labels;                           // [w] mO x k
  std::vector<std::vector<std::vector<Eigen::VectorXd>>> alpha;  // [w][j][l] mO
  std::vector<std::vector<Eigen::MatrixXd>> w;                   // [w][j] mO x L_j
  std::vector<Eigen::MatrixXd> lambda;                           // baseline, mO x k

  std::map<std::string, double> step_ms;
  double psi_accept_rate = 0.0, rho_accept_rate = 0.0;

  long W() const { return static_cast<long>(eta.size()); }
  bool clustering() const { return variant_is_clustering(variant); }
};

void record_sample(PosteriorStore& store, const ChainState& state,
                   const Dataset& data, const ModelSpec& spec);

PosteriorStore run_chain(const ModelSpec& spec, const Dataset& data,
                         StepTimers* timers = nullptr,
                         const SweepOptions& opts = {});

}  // namespace spatfactor::gibbs
