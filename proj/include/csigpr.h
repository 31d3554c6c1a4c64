/* C interface to the csigpr channel reconstruction library.
 *
 * All functions are synchronous. Functions returning int use the CSI_*
 * codes below; on failure csi_last_error() describes what went wrong
 * for the calling thread.
 */
#ifndef CSIGPR_H
#define CSIGPR_H

#ifdef __cplusplus
extern "C" {
#endif

#define CSI_OK 0
#define CSI_EINVAL 1
#define CSI_ERUNTIME 2

typedef struct csi_config csi_config;

/* Desk-scale defaults: 16x16 arrays, 100 trials. */
csi_config* csi_config_create(void);

/* Paper-scale defaults: 36x36 arrays, 200 trials. */
csi_config* csi_config_create_paper_scale(void);

void csi_config_destroy(csi_config* config);

/* Apply one key=value setting. Keys: n_rx, n_tx, size, model, richness,
 * schemes, kernels, snr_db, trials, seed, spacing, mean_angle,
 * angle_spread, restarts, max_iters, grad_tol, threads, output_dir. */
int csi_config_set(csi_config* config, const char* key, const char* value);

/* Load a flat key=value file; '#' starts a comment. */
int csi_config_load_file(csi_config* config, const char* path);

/* Run the full sweep. If output_dir is non-NULL it overrides the
 * configured one; the run writes results.csv, table2.csv, the figure
 * CSVs and a run manifest there. */
int csi_run_experiment(const csi_config* config, const char* output_dir);

/* Message for the last failing call on this thread; empty string if none. */
const char* csi_last_error(void);

const char* csi_version(void);

#ifdef __cplusplus
}
#endif

#endif /* CSIGPR_H */
