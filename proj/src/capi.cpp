#include "spatfactor.h"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "spatfactor/cluster.hpp"
#include "spatfactor/config.hpp"
#include "spatfactor/diagnostics.hpp"
#include "spatfactor/errors.hpp"
#include "spatfactor/gibbs.hpp"
#include "spatfactor/io.hpp"
#include "spatfactor/predict.hpp"
#include "spatfactor/simulate.hpp"

namespace fs = std::filesystem;
using namespace spatfactor;

extern "C" {
struct sf_config {
  config::Config cfg;
};
}

namespace {

thread_local std::string g_last_error;

sf_status fail(sf_status code, const std::string& msg) {
  g_last_error = msg;
  return code;
}

template <typename Fn>
sf_status guarded(Fn&& fn) {
  try {
    fn();
    return SF_OK;
  } catch (const ConfigError& e) {
    return fail(SF_ERR_CONFIG, e.what());
  } catch (const DataError& e) {
    return fail(SF_ERR_DATA, e.what());
  } catch (const NumericError& e) {
    return fail(SF_ERR_NUMERIC, e.what());
  } catch (const IoError& e) {
    return fail(SF_ERR_IO, e.what());
  } catch (const std::exception& e) {
    return fail(SF_ERR_NUMERIC, std::string("unexpected error: ") + e.what());
  }
}

std::vector<double> parse_list(const std::string& s, char sep) {
  std::vector<double> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      out.push_back(std::stod(cur));
      cur.clear();
    }
  };
  for (char c : s) {
    if (c == sep) flush();
    else cur += c;
  }
  flush();
  return out;
}

sim::Design design_from_config(const config::Config& cfg, const char* preset,
                               std::uint64_t seed) {
  sim::Design dz;
  const long side = cfg.get_long("sim.grid_side", 10);
  dz.coords = sim::grid_coords(static_cast<int>(side));
  dz.T = static_cast<int>(cfg.get_long("sim.T", 30));
  dz.k = static_cast<int>(cfg.get_long("sim.k", 2));
  dz.O = static_cast<int>(cfg.get_long("sim.O", 1));
  dz.temporal_kind =
      temporal::kind_from_string(cfg.get_string("sim.temporal", "exponential"));
  dz.seasonal_period = static_cast<int>(cfg.get_long("sim.seasonal_period", 1));
  dz.psi = cfg.get_double("sim.psi", 2.3);
  dz.rho = cfg.get_double("sim.rho", 0.8);
  dz.sigma2 = cfg.get_double("sim.sigma2", 0.01);
  dz.seed = seed;
  std::string mode = preset && std::strlen(preset) > 0
                         ? std::string(preset)
                         : cfg.get_string("sim.mode", "groups");
  if (mode == "groups" || mode == "two-groups") {
    dz.mode = sim::Design::Mode::fixed_groups;
    std::string atoms = cfg.get_string("sim.group_atoms", "5,10|5,-10");
    std::vector<std::vector<double>> groups;
    std::string cur;
    for (char c : atoms + "|") {
      if (c == '|') {
        if (!cur.empty()) groups.push_back(parse_list(cur, ','));
        cur.clear();
      } else {
        cur += c;
      }
    }
    if (groups.empty()) throw ConfigError("sim.group_atoms: no groups given");
    dz.group_atoms.resize(dz.k, groups.size());
    for (std::size_t g = 0; g < groups.size(); ++g) {
      if (static_cast<int>(groups[g].size()) != dz.k)
        throw ConfigError("sim.group_atoms: each group needs sim.k atoms");
      for (int j = 0; j < dz.k; ++j) dz.group_atoms(j, g) = groups[g][j];
    }
  } else if (mode == "psbp") {
    dz.mode = sim::Design::Mode::psbp_counts;
    dz.count_upper = static_cast<int>(cfg.get_long("sim.count_upper", 20));
    if (cfg.has("sim.cluster_counts")) {
      for (double v : parse_list(cfg.get_string("sim.cluster_counts", ""), ','))
        dz.cluster_counts.push_back(static_cast<int>(v));
      if (static_cast<int>(dz.cluster_counts.size()) != dz.k)
        throw ConfigError("sim.cluster_counts: need one count per factor");
    }
  } else {
    throw ConfigError("unknown simulation mode: " + mode);
  }
  return dz;
}

// fit directory helpers -----------------------------------------------------

config::Config read_fit_config(const std::string& fit_dir) {
  return config::Config::parse_file(fit_dir + "/config_used.txt");
}

ModelSpec spec_for_fit_dir(const config::Config& cfg, const io::StoreBundle& b) {
  Dataset shape;
  shape.coords = b.coords;
  shape.O = b.store.O;
  shape.y = Eigen::MatrixXd::Zero(b.store.m * b.store.O, b.store.T);
  if (b.store.p > 0)
    shape.X.assign(b.store.T, Eigen::MatrixXd::Zero(b.store.m * b.store.O, b.store.p));
  shape.timepoints = b.timepoints;
  shape.equispaced = b.equispaced;
  ModelSpec spec = config::spec_from_config(cfg, shape);
  spec = gibbs::finalize_spec(spec, shape);
  return spec;
}

std::vector<Eigen::MatrixXd> read_covariates(const std::string& path, int rows,
                                             int blocks, int p) {
  // one row per output cell, blocks of `rows` rows; returns per-block matrices
  std::ifstream in(path);
  if (!in) throw DataError("cannot open covariates file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError("covariates file is empty");
  std::vector<Eigen::MatrixXd> X(blocks, Eigen::MatrixXd::Zero(rows, p));
  int r = 0, lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> vals = parse_list(line, ',');
    if (static_cast<int>(vals.size()) != p)
      throw DataError("covariates line " + std::to_string(lineno) + ": expected " +
                      std::to_string(p) + " values");
    if (r >= rows * blocks) throw DataError("covariates file has too many rows");
    X[r % blocks](r / blocks, Eigen::all) =
        Eigen::Map<Eigen::RowVectorXd>(vals.data(), p);
    ++r;
  }
  if (r != rows * blocks) throw DataError("covariates file has too few rows");
  return X;
}

std::string manifest_text(const config::Config& cfg, const ModelSpec& spec,
                          const gibbs::PosteriorStore& store,
                          const std::map<std::string, double>& step_ms,
                          const std::string& data_path, bool rescaled) {
  std::ostringstream out;
  out << "spatfactor run manifest\n";
  out << "version = " << sf_version() << "\n";
  out << "variant = " << variant_to_string(spec.variant) << "\n";
  out << "seed = " << spec.schedule.seed << "\n";
  out << "kept_iterations = " << store.W() << "\n";
  out << "timepoints_rescaled = " << (rescaled ? "true" : "false") << "\n";
  out << "psi_accept_rate = " << io::fmt(store.psi_accept_rate) << "\n";
  out << "rho_accept_rate = " << io::fmt(store.rho_accept_rate) << "\n";
  out << "[config]\n" << cfg.serialize();
  out << "[timings_ms]\n";
  for (const auto& [name, ms] : step_ms)
    out << "step." << name << " = " << io::fmt(ms) << "\n";
  out << "[inputs]\n";
  if (!data_path.empty()) {
    char digest[32];
    std::snprintf(digest, sizeof(digest), "%016llx",
                  static_cast<unsigned long long>(io::fnv64_file(data_path)));
    out << "data.file = " << data_path << "\n";
    out << "data.fnv64 = " << digest << "\n";
  }
  return out.str();
}

Eigen::MatrixXd read_locations_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open locations file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError("locations file is empty");
  std::vector<std::array<double, 2>> pts;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto vals = parse_list(line, ',');
    if (vals.size() < 3)
      throw DataError("locations line " + std::to_string(lineno) +
                      ": expected location_id,x,y");
    pts.push_back({vals[1], vals[2]});
  }
  if (pts.empty()) throw DataError("locations file has no rows");
  Eigen::MatrixXd out(pts.size(), 2);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    out(i, 0) = pts[i][0];
    out(i, 1) = pts[i][1];
  }
  return out;
}

}  // namespace

extern "C" {

const char* sf_version(void) { return "0.1.0"; }

const char* sf_last_error(void) { return g_last_error.c_str(); }

sf_status sf_config_create(sf_config** out) {
  if (!out) return fail(SF_ERR_USAGE, "sf_config_create: null output pointer");
  *out = new sf_config();
  return SF_OK;
}

sf_status sf_config_load(const char* path, sf_config** out) {
  if (!out || !path) return fail(SF_ERR_USAGE, "sf_config_load: null argument");
  *out = nullptr;
  auto* cfg = new sf_config();
  sf_status st = guarded([&] {
    cfg->cfg = config::Config::parse_file(path);
    cfg->cfg.validate_keys();
  });
  if (st != SF_OK) {
    delete cfg;
    return st;
  }
  *out = cfg;
  return SF_OK;
}

sf_status sf_config_set(sf_config* cfg, const char* key, const char* value) {
  if (!cfg || !key || !value) return fail(SF_ERR_USAGE, "sf_config_set: null argument");
  return guarded([&] {
    cfg->cfg.set(key, value);
    cfg->cfg.validate_keys();
  });
}

void sf_config_free(sf_config* cfg) { delete cfg; }

sf_status sf_simulate(const sf_config* cfg, const char* preset, uint64_t seed,
                      const char* out_dir) {
  if (!cfg || !out_dir) return fail(SF_ERR_USAGE, "sf_simulate: null argument");
  return guarded([&] {
    sim::Design dz = design_from_config(cfg->cfg, preset, seed);
    sim::Result res = sim::simulate(dz);
    fs::create_directories(out_dir);
    io::write_dataset_csv(std::string(out_dir) + "/dataset.csv", res.data);
    io::write_truth_csv(std::string(out_dir) + "/truth.csv", res.truth,
                        res.data.coords, res.data.O);
  });
}

sf_status sf_fit(const sf_config* cfg, const char* out_dir) {
  if (!cfg || !out_dir) return fail(SF_ERR_USAGE, "sf_fit: null argument");
  return guarded([&] {
    cfg->cfg.validate_keys();
    const std::string data_path = cfg->cfg.get_string("data.file");
    if (data_path.empty()) throw ConfigError("config is missing data.file");
    io::LoadedDataset loaded = io::read_dataset_csv(data_path);
    ModelSpec spec = config::spec_from_config(cfg->cfg, loaded.data);
    gibbs::StepTimers timers;
    gibbs::PosteriorStore store = gibbs::run_chain(spec, loaded.data, &timers);
    fs::create_directories(out_dir);
    io::write_store(out_dir, store, loaded.data);
    io::write_text_atomic(std::string(out_dir) + "/config_used.txt",
                          cfg->cfg.serialize());
    ModelSpec finalized = gibbs::finalize_spec(spec, loaded.data);
    io::write_text_atomic(
        std::string(out_dir) + "/run_manifest.txt",
        manifest_text(cfg->cfg, finalized, store, timers.ms, data_path,
                      loaded.rescaled_timepoints));
  });
}

sf_status sf_predict_time(const char* fit_dir, int horizon,
                          const char* covariates_csv, uint64_t seed,
                          const char* out_csv) {
  if (!fit_dir || !out_csv) return fail(SF_ERR_USAGE, "sf_predict_time: null argument");
  return guarded([&] {
    io::StoreBundle b = io::load_store(fit_dir);
    config::Config cfg = read_fit_config(fit_dir);
    ModelSpec spec = spec_for_fit_dir(cfg, b);
    Dataset shape;
    shape.coords = b.coords;
    shape.O = b.store.O;
    shape.y = Eigen::MatrixXd::Zero(b.store.m * b.store.O, b.store.T);
    shape.timepoints = b.timepoints;
    shape.equispaced = b.equispaced;
    predict::TimeRequest req;
    req.q = horizon;
    if (b.store.p > 0) {
      if (!covariates_csv)
        throw DataError("model has covariates; predictions need a covariates file");
      req.X_new = read_covariates(covariates_csv, b.store.m * b.store.O, horizon,
                                  b.store.p);
    }
    auto draws = predict::predict_future(b.store, spec, shape, req, seed);
    io::write_prediction_csv(out_csv, draws.y, b.store.m, b.store.O, horizon, "t");
  });
}

sf_status sf_predict_space(const char* fit_dir, const char* locations_csv,
                           const char* covariates_csv, uint64_t seed,
                           const char* out_csv) {
  if (!fit_dir || !locations_csv || !out_csv)
    return fail(SF_ERR_USAGE, "sf_predict_space: null argument");
  return guarded([&] {
    io::StoreBundle b = io::load_store(fit_dir);
    config::Config cfg = read_fit_config(fit_dir);
    ModelSpec spec = spec_for_fit_dir(cfg, b);
    Dataset shape;
    shape.coords = b.coords;
    shape.O = b.store.O;
    shape.y = Eigen::MatrixXd::Zero(b.store.m * b.store.O, b.store.T);
    shape.timepoints = b.timepoints;
    shape.equispaced = b.equispaced;
    predict::SpaceRequest req;
    req.new_coords = read_locations_csv(locations_csv);
    const int r = static_cast<int>(req.new_coords.rows());
    if (b.store.p > 0) {
      if (!covariates_csv)
        throw DataError("model has covariates; predictions need a covariates file");
      req.X_new = read_covariates(covariates_csv, r * b.store.O, b.store.T,
                                  b.store.p);
    }
    auto draws = predict::predict_locations(b.store, spec, shape, req, seed);
    io::write_prediction_csv(out_csv, draws.y, r, b.store.O, b.store.T, "t");
  });
}

sf_status sf_cluster(const char* fit_dir, int K, int n_iters, int obs_type,
                     uint64_t seed, const char* out_csv) {
  if (!fit_dir || !out_csv) return fail(SF_ERR_USAGE, "sf_cluster: null argument");
  return guarded([&] {
    io::StoreBundle b = io::load_store(fit_dir);
    config::Config cfg = read_fit_config(fit_dir);
    const int restarts = static_cast<int>(cfg.get_long("cluster.restarts", 10));
    std::vector<int> iters;
    if (n_iters > 0) iters = cluster::dispersed_indices(b.store.W(), n_iters);
    Eigen::MatrixXd Wmat = cluster::assemble_weights(b.store, obs_type - 1, iters);
    std::vector<int> labels = cluster::kmeans(Wmat, K, restarts, 100, seed);
    io::write_labels_csv(out_csv, b.coords, labels);
  });
}

sf_status sf_diagnose(const char* fit_dir, const char* data_csv,
                      const char* out_dir) {
  if (!fit_dir || !out_dir) return fail(SF_ERR_USAGE, "sf_diagnose: null argument");
  return guarded([&] {
    io::StoreBundle b = io::load_store(fit_dir);
    config::Config cfg = read_fit_config(fit_dir);
    std::string path = data_csv ? data_csv : cfg.get_string("data.file");
    if (path.empty()) throw ConfigError("diagnose: no dataset path available");
    io::LoadedDataset loaded = io::read_dataset_csv(path);
    diag::FitMetrics fm =
        diag::compute_all(b.store, loaded.data, {}, b.store.seed);
    fs::create_directories(out_dir);
    std::ostringstream txt;
    txt << "postMeanMSE = " << io::fmt(fm.postMeanMSE) << "\n"
        << "postMSE = " << io::fmt(fm.postMSE) << "\n"
        << "postVar = " << io::fmt(fm.postVar) << "\n"
        << "pD = " << io::fmt(fm.pD) << "\n"
        << "dic = " << io::fmt(fm.dic) << "\n"
        << "p_waic_1 = " << io::fmt(fm.p_waic_1) << "\n"
        << "p_waic_2 = " << io::fmt(fm.p_waic_2) << "\n"
        << "lppd = " << io::fmt(fm.lppd) << "\n"
        << "waic = " << io::fmt(fm.waic) << "\n";
    io::write_text_atomic(std::string(out_dir) + "/metrics.txt", txt.str());
    std::ostringstream csv;
    csv << "postMeanMSE,postMSE,postVar,pD,dic,p_waic_1,p_waic_2,lppd,waic\n"
        << io::fmt(fm.postMeanMSE) << ',' << io::fmt(fm.postMSE) << ','
        << io::fmt(fm.postVar) << ',' << io::fmt(fm.pD) << ',' << io::fmt(fm.dic)
        << ',' << io::fmt(fm.p_waic_1) << ',' << io::fmt(fm.p_waic_2) << ','
        << io::fmt(fm.lppd) << ',' << io::fmt(fm.waic) << "\n";
    io::write_text_atomic(std::string(out_dir) + "/metrics.csv", csv.str());
    std::ostringstream dev;
    dev << "iter,deviance\n";
    for (long w = 0; w < b.store.W(); ++w)
      dev << (w + 1) << ',' << io::fmt(b.store.deviance[w]) << "\n";
    io::write_text_atomic(std::string(out_dir) + "/deviance_trace.csv", dev.str());
  });
}

}  // extern "C"
