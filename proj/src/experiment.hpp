#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "channel.hpp"
#include "kernels.hpp"
#include "metrics.hpp"
#include "probing.hpp"

namespace csigpr {

struct OptimizerConfig {
    int restarts = 4;
    int max_iters = 200;
    double grad_tol = 1e-6;
};

/// Full sweep description. Defaults mirror the paper-scale setup
/// (36x36, 200 trials); desk_profile() is the quick 16x16 variant.
struct ExperimentConfig {
    int n_rx = 36;
    int n_tx = 36;
    std::vector<ModelKind> models{ModelKind::Kronecker, ModelKind::Weichselberger};
    double richness = 0.5;
    std::vector<ProbeCase> schemes{ProbeCase::CaseI, ProbeCase::CaseII, ProbeCase::CaseIII};
    std::vector<KernelFamily> kernels{KernelFamily::RBF, KernelFamily::Matern,
                                      KernelFamily::RQ};
    std::vector<double> snr_grid_db{-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0};
    int trials = 200;
    std::uint64_t seed = 1;
    OptimizerConfig optimizer;
    std::string output_dir; // empty: run in memory only, write nothing
    double spacing_wavelengths = 0.5;
    double mean_angle = 0.0;
    double angle_spread = M_PI / 6.0;
    int threads = 0; // 0 = hardware concurrency; CSI_GPR_THREADS caps either way

    static ExperimentConfig desk_profile();

    /// Apply one "key = value" setting; throws std::invalid_argument on
    /// unknown keys or unparseable values. Keys: n_rx, n_tx, size, model,
    /// richness, schemes, kernels, snr_db, trials, seed, spacing,
    /// mean_angle, angle_spread, restarts, max_iters, grad_tol, threads,
    /// output_dir.
    void set(const std::string& key, const std::string& value);

    /// Flat key = value file; '#' starts a comment.
    void load_file(const std::string& path);

    std::vector<std::pair<std::string, std::string>> items() const;
};

struct ResultRow {
    std::string model;
    std::string scheme;    // "-" for baselines and truth
    std::string kernel;    // "-" for baselines and truth
    std::string estimator; // truth | ls | mmse | gpr
    double snr_db = 0.0;
    int trial = 0;
    std::string metric_name;
    double value = 0.0;
};

struct CloudSummary {
    ErrorCloud cloud;
    double area = 0.0;
};

struct CoverageSummary {
    double empirical = 0.0;
    double empirical_re = 0.0;
    double empirical_im = 0.0;
    long long count = 0;
};

/// Aggregate keys are "model|scheme|kernel"; MI keys add
/// "|estimator|snr" (see agg_key / mi_key).
struct ExperimentResults {
    std::vector<ResultRow> rows;
    double fig_snr_db = 0.0;
    std::map<std::string, CloudSummary> clouds;       // pooled, at fig_snr_db
    std::map<std::string, CoverageSummary> coverages; // pooled, at fig_snr_db
    std::map<std::string, double> mean_mi;            // trial-averaged MI
    std::vector<std::string> files_written;
};

std::string agg_key(const std::string& model, const std::string& scheme,
                    const std::string& kernel);
std::string mi_key(const std::string& model, const std::string& series,
                   const std::string& kernel, double snr_db);

/// Seeded Monte Carlo sweep over models x schemes x kernels x SNR.
/// Writes results.csv, table2.csv, fig2_*/fig3/fig4/fig5 CSVs, and a run
/// manifest when output_dir is set. A failing trial aborts the whole run.
ExperimentResults run_experiment(const ExperimentConfig& config);

const char* library_version();

const char* model_name(ModelKind kind);

} // namespace csigpr
