#include "spatfactor/model.hpp"

#include <cmath>

#include "spatfactor/errors.hpp"

namespace spatfactor {

void Dataset::validate() const {
  const int mO = m() * O;
  if (m() < 1 || O < 1) throw DataError("dataset: need m >= 1 and O >= 1");
  if (y.rows() != mO) throw DataError("dataset: y rows must equal m*O");
  if (static_cast<int>(timepoints.size()) != T())
    throw DataError("dataset: timepoints size must equal T");
  for (const auto& Xt : X)
    if (Xt.rows() != mO) throw DataError("dataset: covariate rows must equal m*O");
  if (!X.empty() && static_cast<int>(X.size()) != T())
    throw DataError("dataset: need one covariate matrix per time point");
  if (!y.allFinite()) throw DataError("dataset: non-finite outcome value");
}

Variant variant_from_string(const std::string& s) {
  if (s == "baselineNoClustering") return Variant::baselineNoClustering;
  if (s == "fullGPfixedL") return Variant::fullGPfixedL;
  if (s == "NNGPblockFixedL") return Variant::NNGPblockFixedL;
  if (s == "NNGPsequenFixedL") return Variant::NNGPsequenFixedL;
  if (s == "NNGPsequenVaryLj") return Variant::NNGPsequenVaryLj;
  throw ConfigError("unknown model variant: " + s);
}

std::string variant_to_string(Variant v) {
  switch (v) {
    case Variant::baselineNoClustering: return "baselineNoClustering";
    case Variant::fullGPfixedL: return "fullGPfixedL";
    case Variant::NNGPblockFixedL: return "NNGPblockFixedL";
    case Variant::NNGPsequenFixedL: return "NNGPsequenFixedL";
    case Variant::NNGPsequenVaryLj: return "NNGPsequenVaryLj";
  }
  return "?";
}

void PriorSet::finalize(int k, int O, int p, const Eigen::MatrixXd& D,
                        temporal::Kind temporal_kind) {
  if (mu0_beta.size() == 0) mu0_beta = Eigen::VectorXd::Zero(p);
  if (sigma0_beta.size() == 0)
    sigma0_beta = 1000.0 * Eigen::MatrixXd::Identity(p, p);
  if (zeta <= 0.0) zeta = k + 2;
  if (omega.size() == 0) omega = Eigen::MatrixXd::Identity(k, k);
  if (nu <= 0.0) nu = O + 2;
  if (theta_scale.size() == 0) theta_scale = Eigen::MatrixXd::Identity(O, O);
  if (a_rho <= 0.0) a_rho = 1e-3;
  if (b_rho <= 0.0) b_rho = spatial::default_rho_upper(D);
  if (a_psi <= 0.0) a_psi = 1e-3;
  if (b_psi <= 0.0) {
    // ar1/sar1 parameterize the lag-one correlation directly, so psi lives
    // in (0,1); the exponential kinds use the same floor-at-0.01 rule on the
    // unit temporal spacing
    if (temporal_kind == temporal::Kind::ar1 || temporal_kind == temporal::Kind::sar1)
      b_psi = 1.0 - 1e-3;
    else
      b_psi = -std::log(0.01);
  }
}

void Schedule::validate() const {
  if (burnin < 0 || post_burnin < 0) throw ConfigError("schedule: negative length");
  if (thin < 1) throw ConfigError("schedule: thin must be >= 1");
  if (post_burnin % thin != 0)
    throw ConfigError("schedule: thin must divide post_burnin");
  if (adapt_window < 1) throw ConfigError("schedule: adapt_window must be >= 1");
}

void ModelSpec::validate(const Dataset& data) const {
  data.validate();
  schedule.validate();
  if (k < 1) throw ConfigError("model: k must be >= 1");
  if (variant_is_clustering(variant) && L < 1)
    throw ConfigError("model: L must be >= 1");
  if (variant_is_nngp(variant) &&
      spatial.kind != spatial::Kind::continuous_exponential)
    throw ConfigError("model: NNGP variants require a continuous spatial structure");
  if (variant_is_nngp(variant) && h < 1)
    throw ConfigError("model: h must be >= 1");
  temporal.validate();
  if (static_cast<int>(temporal.timepoints.size()) != data.T())
    throw ConfigError("model: temporal spec does not match data T");
  if (spatial.kind == spatial::Kind::continuous_exponential)
    spatial.validate();
}

}  // namespace spatfactor
