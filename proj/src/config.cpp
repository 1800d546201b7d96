#include "spatfactor/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "spatfactor/errors.hpp"

namespace spatfactor::config {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = {
      "data.file",
      "model.variant",
      "model.k",
      "model.L",
      "model.h",
      "model.temporal",
      "model.seasonal_period",
      "model.spatial",
      "priors.a",
      "priors.b",
      "priors.mu0_beta",
      "priors.sigma0_beta",
      "priors.zeta",
      "priors.omega",
      "priors.nu",
      "priors.kappa_scale",
      "priors.a_psi",
      "priors.b_psi",
      "priors.a_rho",
      "priors.b_rho",
      "priors.a1",
      "priors.a2",
      "priors.use_shrinkage",
      "priors.psi_gamma",
      "priors.psi_beta",
      "schedule.burnin",
      "schedule.post_burnin",
      "schedule.thin",
      "schedule.seed",
      "schedule.adapt_window",
      "predict.horizon",
      "cluster.K",
      "cluster.restarts",
      "cluster.iterations",
      "sim.grid_side",
      "sim.T",
      "sim.k",
      "sim.O",
      "sim.temporal",
      "sim.seasonal_period",
      "sim.psi",
      "sim.rho",
      "sim.sigma2",
      "sim.mode",
      "sim.count_upper",
      "sim.cluster_counts",
      "sim.group_atoms",
  };
  return keys;
}

Config Config::parse_string(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) +
                                       ": empty key");
    cfg.kv_[key] = value;
  }
  return cfg;
}

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_string(ss.str());
}

void Config::set(const std::string& key, const std::string& value) {
  kv_[key] = value;
}

bool Config::has(const std::string& key) const { return kv_.count(key) > 0; }

std::string Config::get_string(const std::string& key, const std::string& def) const {
  auto it = kv_.find(key);
  return it == kv_.end() ? def : it->second;
}

double Config::get_double(const std::string& key, double def) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return def;
  try {
    std::size_t pos = 0;
    double v = std::stod(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + ": not a number: " + it->second);
  }
}

long Config::get_long(const std::string& key, long def) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return def;
  try {
    std::size_t pos = 0;
    long v = std::stol(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + ": not an integer: " + it->second);
  }
}

bool Config::get_bool(const std::string& key, bool def) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return def;
  if (it->second == "true" || it->second == "1") return true;
  if (it->second == "false" || it->second == "0") return false;
  throw ConfigError("config key " + key + ": not a boolean: " + it->second);
}

std::string Config::serialize() const {
  std::ostringstream out;
  for (const auto& [k, v] : kv_) out << k << " = " << v << "\n";
  return out.str();
}

void Config::validate_keys() const {
  const auto& known = known_keys();
  for (const auto& [k, v] : kv_) {
    (void)v;
    if (std::find(known.begin(), known.end(), k) == known.end())
      throw ConfigError("unknown config key: " + k);
  }
}

ModelSpec spec_from_config(const Config& cfg, const Dataset& data) {
  cfg.validate_keys();
  ModelSpec spec;
  spec.variant = variant_from_string(cfg.get_string("model.variant", "NNGPsequenVaryLj"));
  spec.k = static_cast<int>(cfg.get_long("model.k", 1));
  spec.L = static_cast<int>(cfg.get_long("model.L", 10));
  spec.h = static_cast<int>(cfg.get_long("model.h", 15));

  spec.temporal.kind = temporal::kind_from_string(cfg.get_string("model.temporal", "exponential"));
  spec.temporal.seasonal_period =
      static_cast<int>(cfg.get_long("model.seasonal_period",
                                    spec.temporal.seasonal() ? 2 : 1));
  spec.temporal.timepoints = data.timepoints;
  spec.temporal.equispaced = data.equispaced;

  spec.spatial.kind = spatial::kind_from_string(cfg.get_string("model.spatial", "continuous"));

  auto& pr = spec.priors;
  pr.a = cfg.get_double("priors.a", pr.a);
  pr.b = cfg.get_double("priors.b", pr.b);
  pr.zeta = cfg.get_double("priors.zeta", 0.0);
  pr.nu = cfg.get_double("priors.nu", 0.0);
  pr.a_psi = cfg.get_double("priors.a_psi", 0.0);
  pr.b_psi = cfg.get_double("priors.b_psi", 0.0);
  pr.a_rho = cfg.get_double("priors.a_rho", 0.0);
  pr.b_rho = cfg.get_double("priors.b_rho", 0.0);
  pr.a1 = cfg.get_double("priors.a1", pr.a1);
  pr.a2 = cfg.get_double("priors.a2", pr.a2);
  pr.use_shrinkage = cfg.get_bool("priors.use_shrinkage", pr.use_shrinkage);
  pr.psi_gamma = cfg.get_double("priors.psi_gamma", 1.0);
  pr.psi_beta = cfg.get_double("priors.psi_beta", 1.0);
  if (cfg.has("priors.mu0_beta") && data.p() > 0)
    pr.mu0_beta = Eigen::VectorXd::Constant(data.p(), cfg.get_double("priors.mu0_beta", 0.0));
  if (cfg.has("priors.sigma0_beta") && data.p() > 0)
    pr.sigma0_beta = cfg.get_double("priors.sigma0_beta", 1000.0) *
                     Eigen::MatrixXd::Identity(data.p(), data.p());
  if (cfg.has("priors.omega"))
    pr.omega = cfg.get_double("priors.omega", 1.0) *
               Eigen::MatrixXd::Identity(spec.k, spec.k);
  if (cfg.has("priors.kappa_scale"))
    pr.theta_scale = cfg.get_double("priors.kappa_scale", 1.0) *
                     Eigen::MatrixXd::Identity(data.O, data.O);

  auto& sch = spec.schedule;
  sch.burnin = cfg.get_long("schedule.burnin", 1000);
  sch.post_burnin = cfg.get_long("schedule.post_burnin", 1000);
  sch.thin = cfg.get_long("schedule.thin", 1);
  sch.seed = static_cast<std::uint64_t>(cfg.get_long("schedule.seed", 1));
  sch.adapt_window = cfg.get_long("schedule.adapt_window", 100);
  return spec;
}

}  // namespace spatfactor::config
