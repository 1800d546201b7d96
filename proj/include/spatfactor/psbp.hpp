#pragma once

#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "spatfactor/model.hpp"
#include "spatfactor/nngp.hpp"
#include "spatfactor/rng.hpp"

namespace spatfactor::psbp {

// Probit stick-breaking state for one factor j. alpha and z are in
// alpha-ordering (aidx), w / labels / u in weight-ordering (widx).
// L is the current truncation L_j; fixed-L variants keep it constant.
struct FactorState {
  int L = 1;
  Eigen::VectorXd theta;               // L atoms
  std::vector<Eigen::VectorXd> alpha;  // L-1 vectors of length mO
  Eigen::MatrixXd w;                   // mO x L
  std::vector<int> labels;             // mO, values in [0, L)
  Eigen::VectorXd u;                   // mO slice variables (varying-L)
  std::vector<Eigen::VectorXd> z;      // L-1 latent normals (fixed-L)
};

struct ShrinkageState {
  double a1 = 2.0, a2 = 3.0;
  Eigen::VectorXd delta;  // k
  Eigen::VectorXd tau;    // k
  bool use_shrinkage = true;
  void recompute_tau();
};

// w_l = Phi(a_l) prod_{r<l} [1 - Phi(a_r)], last weight = tail product
Eigen::VectorXd weights_from_alpha(const Eigen::VectorXd& alpha_site, int L);
// refresh every row of st.w from st.alpha
void recompute_weights(FactorState& st, int m, int O);

void sample_slice(FactorState& st, RngStream& rng);

// Per-site L_j^{io} rule, truncation of alpha/theta, weight refresh.
// Returns the new L_j (never larger than the old one).
int update_Lj(FactorState& st, int m, int O);

// residuals with factor j's own contribution removed; null resid marks the
// prior-only harness (likelihood switched off)
struct LikContext {
  const Eigen::MatrixXd* resid_excl_j = nullptr;  // mO x T, weight-ordering
  const Eigen::VectorXd* eta_j = nullptr;         // T
  const Eigen::VectorXd* sigma2 = nullptr;        // mO, weight-ordering
};

void sample_labels_varyL(FactorState& st, const LikContext& ctx, RngStream& rng);
void sample_labels_fixedL(FactorState& st, const LikContext& ctx, RngStream& rng);
void sample_atoms(FactorState& st, double tau_j, const LikContext& ctx, RngStream& rng);
void sample_delta(ShrinkageState& sh, const std::vector<FactorState>& factors,
                  RngStream& rng);
void sample_z(FactorState& st, int m, int O, RngStream& rng);

struct Bounds {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
};
// truncation interval for alpha_{j,l}(s_{i,o}) given slice/label state; uses
// the stored weight at the site's own label and the current alpha value
Bounds alpha_bounds_varyL(const FactorState& st, int i, int o, int m, int O, int l);

// --- block kernels ------------------------------------------------------
// Fixed-L conjugate block draw of alpha vector l from
// N(P^{-1} z_l, P^{-1}), with prec_chol the Cholesky of P = I + F^{-1} (x) kappa^{-1}.
void sample_alpha_vector_block_fixedL(FactorState& st, int l,
                                      const Eigen::LLT<Eigen::MatrixXd>& prec_chol,
                                      RngStream& rng);

// Varying-L rejection draw of alpha vector l from the truncated
// N(0, F (x) kappa). Returns false if max_attempts rejections were exhausted
// (caller falls back to a per-site kernel). chol factors are lower.
bool sample_alpha_vector_block_varyL(FactorState& st, int l, int m, int O,
                                     const Eigen::MatrixXd& cholF,
                                     const Eigen::MatrixXd& cholKappa,
                                     RngStream& rng, int max_attempts);

// Dense per-site sweep used as the varying-L fallback and for the
// independent / full-GP sequential paths in tests.
void sample_alpha_vector_sequential_dense(FactorState& st, int l, int m, int O,
                                          const Eigen::MatrixXd& Finv,
                                          const Eigen::MatrixXd& kappa,
                                          RngStream& rng);

// --- NNGP sequential kernels (site-by-site, Eq-level Kronecker exploit) --
// fixedL = true adds the z shift and the I_O observation precision; false
// applies the per-coordinate varying-L truncation.
void sample_alpha_vector_sequential(FactorState& st, int l,
                                    const nngp::NeighborGraph& graph,
                                    const nngp::LocalFactors& local,
                                    const Eigen::MatrixXd& kappa, bool fixedL,
                                    RngStream& rng);

// Convenience wrappers over all l (used by tests and the Geweke harness).
void sample_alpha_block_fixedL(FactorState& st,
                               const Eigen::LLT<Eigen::MatrixXd>& prec_chol,
                               RngStream& rng, int m, int O);
int sample_alpha_block_varyL(FactorState& st, int m, int O,
                             const Eigen::MatrixXd& cholF,
                             const Eigen::MatrixXd& cholKappa,
                             const Eigen::MatrixXd& Finv, RngStream& rng,
                             int max_attempts);  // returns # fallbacks
void sample_alpha_sequential(FactorState& st, const nngp::NeighborGraph& graph,
                             const nngp::LocalFactors& local,
                             const Eigen::MatrixXd& kappa, bool fixedL,
                             RngStream& rng, int m, int O);

// slice floor: keeps the support-nonempty invariant machine-checkable
inline constexpr double kWeightFloor = 1e-300;

}  // namespace spatfactor::psbp
