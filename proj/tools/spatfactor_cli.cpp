// spatfactor command-line front end. Talks to the engine exclusively through
// the C API in spatfactor.h; every subcommand maps onto one engine call and
// the sf_status codes double as process exit codes.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "spatfactor.h"

namespace {

int report(sf_status st) {
  if (st != SF_OK) std::fprintf(stderr, "error: %s\n", sf_last_error());
  return static_cast<int>(st);
}

struct ConfigHandle {
  sf_config* cfg = nullptr;
  ~ConfigHandle() { sf_config_free(cfg); }
};

int load_config(const std::string& path, ConfigHandle& h) {
  return report(path.empty() ? sf_config_create(&h.cfg)
                             : sf_config_load(path.c_str(), &h.cfg));
}

int apply_override(ConfigHandle& h, const std::string& key, const std::string& value) {
  return report(sf_config_set(h.cfg, key.c_str(), value.c_str()));
}

int max_workers() {
  if (const char* env = std::getenv("SPATFACTOR_THREADS")) {
    int n = std::atoi(env);
    if (n >= 1) return n;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spatfactor — Bayesian spatiotemporal factor analysis"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(sf_version()));

  std::string config_path, out_path, variant, locations, covariates, data_path;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int chains = 1, K = 2, horizon = 1, h_neighbors = 0, n_iters = 0, obs_type = 1;

  auto add_common = [&](CLI::App* cmd, bool with_config) {
    if (with_config) cmd->add_option("--config", config_path, "configuration file");
    cmd->add_option("--seed", seed, "seed override")->each([&](const std::string&) {
      seed_given = true;
    });
  };

  auto* sim = app.add_subcommand("simulate", "generate a synthetic dataset");
  add_common(sim, true);
  sim->add_option("--out", out_path, "output directory")->required();
  std::string sim_mode;
  sim->add_option("--mode", sim_mode, "design: groups | psbp");

  auto* fit = app.add_subcommand("fit", "run the posterior sampler");
  add_common(fit, true);
  fit->get_option("--config")->required();
  fit->add_option("--out", out_path, "output directory")->required();
  fit->add_option("--chains", chains, "independent chains with derived seeds");
  fit->add_option("--variant", variant, "model variant override");
  fit->add_option("--h", h_neighbors, "NNGP neighbor count override");
  fit->add_option("--data", data_path, "dataset CSV override");

  auto* pt = app.add_subcommand("predict-time", "predict at future time points");
  add_common(pt, false);
  pt->add_option("--fit", config_path, "fit directory")->required();
  pt->add_option("--horizon", horizon, "number of future time points");
  pt->add_option("--covariates", covariates, "covariates CSV for the targets");
  pt->add_option("--out", out_path, "output CSV path")->required();

  auto* ps = app.add_subcommand("predict-space", "predict at new locations");
  add_common(ps, false);
  ps->add_option("--fit", config_path, "fit directory")->required();
  ps->add_option("--locations", locations, "CSV with location_id,x,y")->required();
  ps->add_option("--covariates", covariates, "covariates CSV for the targets");
  ps->add_option("--out", out_path, "output CSV path")->required();

  auto* cl = app.add_subcommand("cluster", "cluster locations by temporal trend");
  add_common(cl, false);
  cl->add_option("--fit", config_path, "fit directory")->required();
  cl->add_option("--K", K, "number of clusters");
  cl->add_option("--iters", n_iters, "equally dispersed kept iterations to use (0 = all)");
  cl->add_option("--type", obs_type, "observation type (1-based)");
  cl->add_option("--out", out_path, "output CSV path")->required();

  auto* dg = app.add_subcommand("diagnose", "compute the nine fit metrics");
  add_common(dg, false);
  dg->add_option("--fit", config_path, "fit directory")->required();
  dg->add_option("--data", data_path, "dataset CSV (default: from the fit config)");
  dg->add_option("--out", out_path, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  if (sim->parsed()) {
    ConfigHandle h;
    if (int rc = load_config(config_path, h)) return rc;
    return report(sf_simulate(h.cfg, sim_mode.c_str(), seed_given ? seed : 1,
                              out_path.c_str()));
  }

  if (fit->parsed()) {
    ConfigHandle h;
    if (int rc = load_config(config_path, h)) return rc;
    if (!variant.empty())
      if (int rc = apply_override(h, "model.variant", variant)) return rc;
    if (h_neighbors > 0)
      if (int rc = apply_override(h, "model.h", std::to_string(h_neighbors))) return rc;
    if (!data_path.empty())
      if (int rc = apply_override(h, "data.file", data_path)) return rc;
    if (seed_given)
      if (int rc = apply_override(h, "schedule.seed", std::to_string(seed))) return rc;
    if (chains <= 1) return report(sf_fit(h.cfg, out_path.c_str()));

    // one chain per subdirectory, derived seeds, bounded worker pool
    std::vector<sf_status> status(chains, SF_OK);
    std::vector<std::string> msgs(chains);
    const int workers = std::min(chains, max_workers());
    std::vector<std::thread> pool;
    std::vector<int> next(1, 0);
    for (int wk = 0; wk < workers; ++wk) {
      pool.emplace_back([&, wk] {
        for (int c = wk; c < chains; c += workers) {
          ConfigHandle hc;
          if (sf_status st = config_path.empty()
                                 ? sf_config_create(&hc.cfg)
                                 : sf_config_load(config_path.c_str(), &hc.cfg);
              st != SF_OK) {
            status[c] = st;
            msgs[c] = sf_last_error();
            continue;
          }
          auto setc = [&](const char* key, const std::string& v) {
            return sf_config_set(hc.cfg, key, v.c_str());
          };
          if (!variant.empty()) setc("model.variant", variant);
          if (h_neighbors > 0) setc("model.h", std::to_string(h_neighbors));
          if (!data_path.empty()) setc("data.file", data_path);
          std::uint64_t base = seed_given ? seed : 1;
          setc("schedule.seed", std::to_string(base + 1000003ULL * c));
          std::string dir = out_path + "/chain" + std::to_string(c);
          status[c] = sf_fit(hc.cfg, dir.c_str());
          if (status[c] != SF_OK) msgs[c] = sf_last_error();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (int c = 0; c < chains; ++c)
      if (status[c] != SF_OK) {
        std::fprintf(stderr, "error (chain %d): %s\n", c, msgs[c].c_str());
        return static_cast<int>(status[c]);
      }
    return 0;
  }

  if (pt->parsed())
    return report(sf_predict_time(config_path.c_str(), horizon,
                                  covariates.empty() ? nullptr : covariates.c_str(),
                                  seed_given ? seed : 1, out_path.c_str()));

  if (ps->parsed())
    return report(sf_predict_space(config_path.c_str(), locations.c_str(),
                                   covariates.empty() ? nullptr : covariates.c_str(),
                                   seed_given ? seed : 1, out_path.c_str()));

  if (cl->parsed())
    return report(sf_cluster(config_path.c_str(), K, n_iters, obs_type,
                             seed_given ? seed : 1, out_path.c_str()));

  if (dg->parsed())
    return report(sf_diagnose(config_path.c_str(),
                              data_path.empty() ? nullptr : data_path.c_str(),
                              out_path.c_str()));

  return static_cast<int>(SF_ERR_USAGE);
}
