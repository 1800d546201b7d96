/* spatfactor — scalable Bayesian spatiotemporal factor analysis.
 *
 * C interface over the C++ core: opaque handles, integer status codes, and
 * a per-thread error message. Every command writes its outputs as CSV files
 * under a caller-supplied directory and is deterministic for a fixed
 * configuration and seed.
 */
#ifndef SPATFACTOR_H
#define SPATFACTOR_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sf_status {
  SF_OK = 0,
  SF_ERR_CONFIG = 2,  /* bad configuration file or value */
  SF_ERR_DATA = 3,    /* malformed or inconsistent dataset */
  SF_ERR_NUMERIC = 4, /* numerical abort inside the sampler */
  SF_ERR_IO = 5,      /* filesystem failure */
  SF_ERR_USAGE = 6    /* bad handle or argument */
} sf_status;

const char* sf_version(void);

/* message for the most recent failing call on this thread */
const char* sf_last_error(void);

/* ---- configuration ----------------------------------------------------- */
typedef struct sf_config sf_config;

sf_status sf_config_create(sf_config** out);
sf_status sf_config_load(const char* path, sf_config** out);
sf_status sf_config_set(sf_config* cfg, const char* key, const char* value);
void sf_config_free(sf_config* cfg);

/* ---- commands ----------------------------------------------------------
 * Each mirrors one CLI subcommand. `out_dir` is created when missing.
 */

/* synthetic dataset + ground truth (dataset.csv, truth.csv) */
sf_status sf_simulate(const sf_config* cfg, const char* preset, uint64_t seed,
                      const char* out_dir);

/* posterior sampling; writes per-parameter CSVs, deviance trace,
 * config_used.txt and run_manifest.txt */
sf_status sf_fit(const sf_config* cfg, const char* out_dir);

/* Composition-sampled predictions at future time points. covariates_csv may
 * be NULL; when the model has covariates it must hold one row per output
 * cell (loc outer, type, then time) with columns cov1..covP. */
sf_status sf_predict_time(const char* fit_dir, int horizon,
                          const char* covariates_csv, uint64_t seed,
                          const char* out_csv);

/* composition-sampled predictions at new locations given as a CSV with
 * header location_id,x,y */
sf_status sf_predict_space(const char* fit_dir, const char* locations_csv,
                           const char* covariates_csv, uint64_t seed,
                           const char* out_csv);

/* k-means clustering of posterior weight matrices; writes a labels CSV
 * keyed by location index and coordinates. n_iters <= 0 uses every kept
 * iteration; otherwise that many equally dispersed ones. */
sf_status sf_cluster(const char* fit_dir, int K, int n_iters, int obs_type,
                     uint64_t seed, const char* out_csv);

/* nine fit metrics + deviance trace (metrics.txt, metrics.csv) */
sf_status sf_diagnose(const char* fit_dir, const char* data_csv,
                      const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif /* SPATFACTOR_H */
