#include "experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "baselines.hpp"
#include "gpr.hpp"
#include "rng.hpp"
#include "spatial.hpp"
#include "version.hpp"

namespace csigpr {

namespace {

std::string format_g9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

std::string format_f2(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos)
        return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty())
            out.push_back(item);
    }
    return out;
}

int parse_int(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const int v = std::stoi(value, &pos);
        if (pos != value.size())
            throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw std::invalid_argument("config: bad integer for " + key + ": " + value);
    }
}

double parse_real(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size())
            throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw std::invalid_argument("config: bad number for " + key + ": " + value);
    }
}

ModelKind parse_model(const std::string& name) {
    if (name == "kron" || name == "kronecker")
        return ModelKind::Kronecker;
    if (name == "weich" || name == "weichselberger")
        return ModelKind::Weichselberger;
    throw std::invalid_argument("config: unknown model: " + name);
}

ProbeCase parse_scheme(const std::string& name) {
    if (name == "case1")
        return ProbeCase::CaseI;
    if (name == "case2")
        return ProbeCase::CaseII;
    if (name == "case3")
        return ProbeCase::CaseIII;
    throw std::invalid_argument("config: unknown scheme: " + name);
}

KernelFamily parse_kernel(const std::string& name) {
    if (name == "rbf")
        return KernelFamily::RBF;
    if (name == "matern15" || name == "matern")
        return KernelFamily::Matern;
    if (name == "rq")
        return KernelFamily::RQ;
    throw std::invalid_argument("config: unknown kernel: " + name);
}

} // namespace

const char* model_name(ModelKind kind) {
    return kind == ModelKind::Kronecker ? "kron" : "weich";
}

const char* library_version() {
    return kVersion;
}

std::string agg_key(const std::string& model, const std::string& scheme,
                    const std::string& kernel) {
    return model + "|" + scheme + "|" + kernel;
}

std::string mi_key(const std::string& model, const std::string& series,
                   const std::string& kernel, double snr_db) {
    return model + "|" + series + "|" + kernel + "|" + format_g9(snr_db);
}

ExperimentConfig ExperimentConfig::desk_profile() {
    ExperimentConfig config;
    config.n_rx = 16;
    config.n_tx = 16;
    config.trials = 100;
    return config;
}

void ExperimentConfig::set(const std::string& raw_key, const std::string& raw_value) {
    const std::string key = trim(raw_key);
    const std::string value = trim(raw_value);
    if (key == "n_rx") {
        n_rx = parse_int(key, value);
    } else if (key == "n_tx") {
        n_tx = parse_int(key, value);
    } else if (key == "size") {
        const auto x = value.find('x');
        if (x == std::string::npos) {
            n_rx = n_tx = parse_int(key, value);
        } else {
            n_rx = parse_int(key, value.substr(0, x));
            n_tx = parse_int(key, value.substr(x + 1));
        }
    } else if (key == "model") {
        models.clear();
        if (value == "both") {
            models = {ModelKind::Kronecker, ModelKind::Weichselberger};
        } else {
            for (const auto& name : split_list(value))
                models.push_back(parse_model(name));
        }
    } else if (key == "richness") {
        richness = parse_real(key, value);
    } else if (key == "schemes" || key == "scheme") {
        schemes.clear();
        if (value == "all") {
            schemes = {ProbeCase::CaseI, ProbeCase::CaseII, ProbeCase::CaseIII};
        } else {
            for (const auto& name : split_list(value))
                schemes.push_back(parse_scheme(name));
        }
    } else if (key == "kernels" || key == "kernel") {
        kernels.clear();
        if (value == "all") {
            kernels = {KernelFamily::RBF, KernelFamily::Matern, KernelFamily::RQ};
        } else {
            for (const auto& name : split_list(value))
                kernels.push_back(parse_kernel(name));
        }
    } else if (key == "snr_db" || key == "snr") {
        snr_grid_db.clear();
        for (const auto& s : split_list(value))
            snr_grid_db.push_back(parse_real(key, s));
    } else if (key == "trials") {
        trials = parse_int(key, value);
    } else if (key == "seed") {
        seed = static_cast<std::uint64_t>(std::stoull(value));
    } else if (key == "spacing") {
        spacing_wavelengths = parse_real(key, value);
    } else if (key == "mean_angle") {
        mean_angle = parse_real(key, value);
    } else if (key == "angle_spread") {
        angle_spread = parse_real(key, value);
    } else if (key == "restarts") {
        optimizer.restarts = parse_int(key, value);
    } else if (key == "max_iters") {
        optimizer.max_iters = parse_int(key, value);
    } else if (key == "grad_tol") {
        optimizer.grad_tol = parse_real(key, value);
    } else if (key == "threads") {
        threads = parse_int(key, value);
    } else if (key == "output_dir") {
        output_dir = value;
    } else {
        throw std::invalid_argument("config: unknown key: " + key);
    }
}

void ExperimentConfig::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("config: cannot open " + path);
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: malformed line: " + line);
        set(line.substr(0, eq), line.substr(eq + 1));
    }
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::items() const {
    std::vector<std::pair<std::string, std::string>> out;
    out.emplace_back("n_rx", std::to_string(n_rx));
    out.emplace_back("n_tx", std::to_string(n_tx));
    std::string model_list;
    for (const auto& m : models)
        model_list += std::string(model_list.empty() ? "" : ",") + model_name(m);
    out.emplace_back("model", model_list);
    out.emplace_back("richness", format_g9(richness));
    std::string scheme_list;
    for (const auto& s : schemes)
        scheme_list += std::string(scheme_list.empty() ? "" : ",") + probe_case_name(s);
    out.emplace_back("schemes", scheme_list);
    std::string kernel_list;
    for (const auto& k : kernels)
        kernel_list += std::string(kernel_list.empty() ? "" : ",") + kernel_name(k);
    out.emplace_back("kernels", kernel_list);
    std::string snr_list;
    for (double s : snr_grid_db)
        snr_list += std::string(snr_list.empty() ? "" : ",") + format_g9(s);
    out.emplace_back("snr_db", snr_list);
    out.emplace_back("trials", std::to_string(trials));
    out.emplace_back("seed", std::to_string(seed));
    out.emplace_back("spacing", format_g9(spacing_wavelengths));
    out.emplace_back("mean_angle", format_g9(mean_angle));
    out.emplace_back("angle_spread", format_g9(angle_spread));
    out.emplace_back("restarts", std::to_string(optimizer.restarts));
    out.emplace_back("max_iters", std::to_string(optimizer.max_iters));
    out.emplace_back("grad_tol", format_g9(optimizer.grad_tol));
    out.emplace_back("threads", std::to_string(threads));
    out.emplace_back("output_dir", output_dir);
    return out;
}

namespace {

// Everything one trial produces; merged across workers in trial order so
// scheduling never changes the output.
struct TrialOutput {
    std::vector<ResultRow> rows;
    std::map<std::string, std::vector<Eigen::Vector2d>> fig_samples;
    std::map<std::string, std::array<long long, 4>> cov_counts; // and, re, im, total
};

struct SweepContext {
    const ExperimentConfig* config;
    std::vector<ChannelModel> channel_models;      // per config->models entry
    std::vector<ProbingScheme> probing_schemes;    // per config->schemes entry
    std::vector<std::vector<std::pair<int, int>>> scheme_tests;
    std::vector<Eigen::MatrixX2d> scheme_test_pts;
    Eigen::MatrixXcd full_pilots;
    std::vector<std::vector<MmseFilter>> mmse;     // [model][snr]
    double fig_snr_db = 0.0;
};

double snr_to_noise(double snr_db) {
    return std::pow(10.0, -snr_db / 10.0);
}

void run_trial(const SweepContext& ctx, int trial, TrialOutput& out) {
    const ExperimentConfig& config = *ctx.config;
    const int n_rx = config.n_rx, n_tx = config.n_tx;
    const double denom = static_cast<double>(n_rx) * n_tx;

    for (std::size_t mi = 0; mi < config.models.size(); ++mi) {
        const std::string model = model_name(config.models[mi]);
        const auto model_idx = static_cast<std::uint64_t>(mi);
        const auto trial_idx = static_cast<std::uint64_t>(trial);

        const Eigen::MatrixXcd h = sample_channel(
            ctx.channel_models[mi], mix_seed(config.seed, {model_idx, trial_idx, 0}));

        const std::uint64_t full_noise_seed = mix_seed(config.seed, {model_idx, trial_idx, 1});

        for (std::size_t si = 0; si < config.snr_grid_db.size(); ++si) {
            const double snr_db = config.snr_grid_db[si];
            const double snr_linear = std::pow(10.0, snr_db / 10.0);
            const double noise_var = snr_to_noise(snr_db);

            const double truth_mi = mutual_information(h, snr_linear);
            out.rows.push_back({model, "-", "-", "truth", snr_db, trial, "mi_bits", truth_mi});

            // Full-pilot baselines share one noise draw, scaled per SNR.
            Eigen::MatrixXcd y_full = h * ctx.full_pilots;
            {
                Rng rng(full_noise_seed);
                for (int c = 0; c < y_full.cols(); ++c)
                    for (int r = 0; r < y_full.rows(); ++r)
                        y_full(r, c) += rng.complex_normal(noise_var);
            }

            const Eigen::MatrixXcd ls = estimate_ls({y_full, ctx.full_pilots, noise_var});
            out.rows.push_back({model, "-", "-", "ls", snr_db, trial, "mi_bits",
                                mutual_information(ls, snr_linear)});
            out.rows.push_back({model, "-", "-", "ls", snr_db, trial, "mse",
                                (ls - h).squaredNorm() / denom});

            const Eigen::MatrixXcd mmse = ctx.mmse[mi][si].apply(y_full);
            out.rows.push_back({model, "-", "-", "mmse", snr_db, trial, "mi_bits",
                                mutual_information(mmse, snr_linear)});
            out.rows.push_back({model, "-", "-", "mmse", snr_db, trial, "mse",
                                (mmse - h).squaredNorm() / denom});

            for (std::size_t pi = 0; pi < config.schemes.size(); ++pi) {
                const ProbingScheme& scheme = ctx.probing_schemes[pi];
                const std::string scheme_str = probe_case_name(scheme.probe_case);
                const PilotObservation obs =
                    observe(h, scheme, noise_var,
                            mix_seed(config.seed, {model_idx, trial_idx, 2,
                                                   static_cast<std::uint64_t>(pi)}));
                const auto [z, values] = extract_training_set(obs);
                const Eigen::VectorXd h_re = values.real();
                const Eigen::VectorXd h_im = values.imag();

                for (const KernelFamily family : config.kernels) {
                    const std::string kern = kernel_name(family);
                    // Complex noise CN(0, sigma^2) splits into sigma^2 / 2
                    // per real component, which is what each part's GP sees.
                    const GprModel gp = fit(default_kernel(family), noise_var / 2.0, z,
                                            h_re, h_im, config.optimizer.restarts,
                                            config.optimizer.max_iters,
                                            config.optimizer.grad_tol);
                    const GprPosterior post = predict(gp, ctx.scheme_test_pts[pi]);
                    const Eigen::MatrixXcd rec = reconstruct(gp, post, scheme, n_rx, n_tx);

                    out.rows.push_back({model, scheme_str, kern, "gpr", snr_db, trial,
                                        "mi_bits", mutual_information(rec, snr_linear)});
                    out.rows.push_back({model, scheme_str, kern, "gpr", snr_db, trial, "mse",
                                        (rec - h).squaredNorm() / denom});

                    const CoverageReport cov = coverage(h, post, ctx.scheme_tests[pi]);
                    out.rows.push_back({model, scheme_str, kern, "gpr", snr_db, trial,
                                        "coverage_and", cov.empirical});
                    out.rows.push_back({model, scheme_str, kern, "gpr", snr_db, trial,
                                        "coverage_re", cov.empirical_re});
                    out.rows.push_back({model, scheme_str, kern, "gpr", snr_db, trial,
                                        "coverage_im", cov.empirical_im});

                    if (snr_db == ctx.fig_snr_db) {
                        const std::string key = agg_key(model, scheme_str, kern);
                        auto& samples = out.fig_samples[key];
                        for (const auto& [r, t] : ctx.scheme_tests[pi]) {
                            const std::complex<double> eps =
                                h(r - 1, t - 1) - rec(r - 1, t - 1);
                            samples.emplace_back(eps.real(), eps.imag());
                        }
                        auto& counts = out.cov_counts[key];
                        counts[0] += std::llround(cov.empirical * cov.count);
                        counts[1] += std::llround(cov.empirical_re * cov.count);
                        counts[2] += std::llround(cov.empirical_im * cov.count);
                        counts[3] += cov.count;
                    }
                }
            }
        }
    }
}

void write_file(const std::filesystem::path& path, const std::string& content,
                std::vector<std::string>& files) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << content;
    files.push_back(path.filename().string());
}

void emit_outputs(const ExperimentConfig& config, ExperimentResults& results) {
    namespace fs = std::filesystem;
    const fs::path dir(config.output_dir);
    fs::create_directories(dir);

    // results.csv, sorted by (trial, scheme, kernel, snr) with the
    // remaining fields as deterministic tie-breakers.
    std::vector<const ResultRow*> sorted;
    sorted.reserve(results.rows.size());
    for (const auto& row : results.rows)
        sorted.push_back(&row);
    std::stable_sort(sorted.begin(), sorted.end(), [](const ResultRow* a, const ResultRow* b) {
        if (a->trial != b->trial) return a->trial < b->trial;
        if (a->scheme != b->scheme) return a->scheme < b->scheme;
        if (a->kernel != b->kernel) return a->kernel < b->kernel;
        if (a->snr_db != b->snr_db) return a->snr_db < b->snr_db;
        if (a->model != b->model) return a->model < b->model;
        if (a->estimator != b->estimator) return a->estimator < b->estimator;
        return a->metric_name < b->metric_name;
    });
    std::string csv = "model,scheme,kernel,estimator,snr_db,trial,metric_name,value\n";
    for (const ResultRow* row : sorted) {
        csv += row->model + "," + row->scheme + "," + row->kernel + "," + row->estimator +
               "," + format_g9(row->snr_db) + "," + std::to_string(row->trial) + "," +
               row->metric_name + "," + format_g9(row->value) + "\n";
    }
    write_file(dir / "results.csv", csv, results.files_written);

    // table2.csv: the Weichselberger model and RQ kernel when present,
    // otherwise the first of each in the config.
    std::string t2_model = model_name(config.models.front());
    for (const auto m : config.models)
        if (m == ModelKind::Weichselberger)
            t2_model = model_name(m);
    std::string t2_kernel = kernel_name(config.kernels.front());
    for (const auto k : config.kernels)
        if (k == KernelFamily::RQ)
            t2_kernel = kernel_name(k);

    const double truth_mean = results.mean_mi.at(mi_key(t2_model, "truth", "-", results.fig_snr_db));
    std::string table2 = "estimator,pilot_length,pilot_saving_pct,relative_mi_pct\n";
    const auto add_t2_row = [&](const std::string& estimator, int pilot_length,
                                const std::string& series, const std::string& kern) {
        const double saving =
            100.0 * (config.n_tx - pilot_length) / static_cast<double>(config.n_tx);
        const auto it = results.mean_mi.find(mi_key(t2_model, series, kern, results.fig_snr_db));
        const double rel = it == results.mean_mi.end()
                               ? 0.0
                               : relative_mi(it->second, truth_mean);
        table2 += estimator + "," + std::to_string(pilot_length) + "," + format_f2(saving) +
                  "," + format_f2(rel) + "\n";
    };
    for (const auto& scheme : config.schemes) {
        const ProbingScheme s = make_scheme(scheme, config.n_rx, config.n_tx);
        const std::string name = probe_case_name(scheme);
        add_t2_row(name, static_cast<int>(s.active_set.size()), name, t2_kernel);
    }
    add_t2_row("ls", config.n_tx, "ls", "-");
    add_t2_row("mmse", config.n_tx, "mmse", "-");
    write_file(dir / "table2.csv", table2, results.files_written);

    // fig2: pooled error samples per model, plus one ellipse table.
    for (const auto kind : config.models) {
        const std::string model = model_name(kind);
        std::string samples_csv = "scheme,kernel,re,im\n";
        for (const auto& [key, summary] : results.clouds) {
            if (key.rfind(model + "|", 0) != 0)
                continue;
            const auto bar = key.find('|');
            const auto bar2 = key.find('|', bar + 1);
            const std::string scheme = key.substr(bar + 1, bar2 - bar - 1);
            const std::string kern = key.substr(bar2 + 1);
            for (Eigen::Index i = 0; i < summary.cloud.samples.rows(); ++i)
                samples_csv += scheme + "," + kern + "," +
                               format_g9(summary.cloud.samples(i, 0)) + "," +
                               format_g9(summary.cloud.samples(i, 1)) + "\n";
        }
        write_file(dir / ("fig2_samples_" + model + ".csv"), samples_csv,
                   results.files_written);
    }
    std::string ellipses =
        "model,scheme,kernel,center_re,center_im,cov_re_re,cov_re_im,cov_im_im,area,confidence\n";
    for (const auto& [key, summary] : results.clouds) {
        const auto bar = key.find('|');
        const auto bar2 = key.find('|', bar + 1);
        ellipses += key.substr(0, bar) + "," + key.substr(bar + 1, bar2 - bar - 1) + "," +
                    key.substr(bar2 + 1) + "," + format_g9(summary.cloud.center(0)) + "," +
                    format_g9(summary.cloud.center(1)) + "," +
                    format_g9(summary.cloud.covariance(0, 0)) + "," +
                    format_g9(summary.cloud.covariance(0, 1)) + "," +
                    format_g9(summary.cloud.covariance(1, 1)) + "," +
                    format_g9(summary.area) + "," + format_g9(summary.cloud.confidence) + "\n";
    }
    write_file(dir / "fig2_ellipses.csv", ellipses, results.files_written);

    // fig3: MI vs SNR for truth, baselines and the GPR cases.
    std::string fig3 = "model,series,kernel,snr_db,mi_bits,relative_mi_pct\n";
    for (const auto kind : config.models) {
        const std::string model = model_name(kind);
        for (double snr : config.snr_grid_db) {
            const double truth = results.mean_mi.at(mi_key(model, "truth", "-", snr));
            const auto emit = [&](const std::string& series, const std::string& kern) {
                const auto it = results.mean_mi.find(mi_key(model, series, kern, snr));
                if (it == results.mean_mi.end())
                    return;
                fig3 += model + "," + series + "," + kern + "," + format_g9(snr) + "," +
                        format_g9(it->second) + "," +
                        format_f2(relative_mi(it->second, truth)) + "\n";
            };
            emit("truth", "-");
            emit("ls", "-");
            emit("mmse", "-");
            for (const auto& scheme : config.schemes)
                for (const auto family : config.kernels)
                    emit(probe_case_name(scheme), kernel_name(family));
        }
    }
    write_file(dir / "fig3.csv", fig3, results.files_written);

    // fig4: the kernel comparison view of the same sweep.
    std::string fig4 = "model,kernel,scheme,snr_db,mi_bits\n";
    for (const auto kind : config.models) {
        const std::string model = model_name(kind);
        for (const auto family : config.kernels)
            for (const auto& scheme : config.schemes)
                for (double snr : config.snr_grid_db) {
                    const auto it = results.mean_mi.find(
                        mi_key(model, probe_case_name(scheme), kernel_name(family), snr));
                    if (it == results.mean_mi.end())
                        continue;
                    fig4 += model + "," + std::string(kernel_name(family)) + "," +
                            probe_case_name(scheme) + "," + format_g9(snr) + "," +
                            format_g9(it->second) + "\n";
                }
    }
    write_file(dir / "fig4.csv", fig4, results.files_written);

    // fig5: pooled coverage at the figure SNR.
    std::string fig5 = "model,scheme,kernel,nominal,coverage,coverage_re,coverage_im,count\n";
    for (const auto& [key, cov] : results.coverages) {
        const auto bar = key.find('|');
        const auto bar2 = key.find('|', bar + 1);
        fig5 += key.substr(0, bar) + "," + key.substr(bar + 1, bar2 - bar - 1) + "," +
                key.substr(bar2 + 1) + ",0.95," + format_g9(cov.empirical) + "," +
                format_g9(cov.empirical_re) + "," + format_g9(cov.empirical_im) + "," +
                std::to_string(cov.count) + "\n";
    }
    write_file(dir / "fig5.csv", fig5, results.files_written);

    std::string manifest = std::string("library_version=") + kVersion + "\n";
    for (const auto& [key, value] : config.items())
        manifest += key + "=" + value + "\n";
    manifest += "fig_snr_db=" + format_g9(results.fig_snr_db) + "\n";
    write_file(dir / "run_manifest.txt", manifest, results.files_written);
}

} // namespace

ExperimentResults run_experiment(const ExperimentConfig& config) {
    if (config.trials < 1)
        throw std::invalid_argument("run_experiment: trials must be >= 1");
    if (config.snr_grid_db.empty())
        throw std::invalid_argument("run_experiment: SNR grid must be nonempty");
    if (config.n_rx < 1 || config.n_tx < 1)
        throw std::invalid_argument("run_experiment: array sizes must be >= 1");
    if (config.models.empty() || config.schemes.empty() || config.kernels.empty())
        throw std::invalid_argument("run_experiment: models, schemes and kernels must be nonempty");

    SweepContext ctx;
    ctx.config = &config;

    const ArrayGeometry tx_geom{config.n_tx, config.spacing_wavelengths, config.mean_angle,
                                config.angle_spread};
    const ArrayGeometry rx_geom{config.n_rx, config.spacing_wavelengths, config.mean_angle,
                                config.angle_spread};
    const Eigen::MatrixXcd r_tx = build_covariance(tx_geom);
    const Eigen::MatrixXcd r_rx = build_covariance(rx_geom);

    for (std::size_t mi = 0; mi < config.models.size(); ++mi) {
        if (config.models[mi] == ModelKind::Kronecker) {
            ctx.channel_models.push_back(make_kronecker(r_tx, r_rx));
        } else {
            const Eigen::MatrixXd coupling = default_coupling(
                r_tx, r_rx, config.richness,
                mix_seed(config.seed, {static_cast<std::uint64_t>(mi), 0xC0FFEEULL}));
            ctx.channel_models.push_back(make_weichselberger(r_tx, r_rx, coupling));
        }
    }

    ctx.full_pilots = build_pilot_matrix(config.n_tx, config.n_tx);
    for (const auto& model : ctx.channel_models) {
        const Eigen::MatrixXcd r_h = vectorized_covariance(model);
        std::vector<MmseFilter> filters;
        filters.reserve(config.snr_grid_db.size());
        for (double snr_db : config.snr_grid_db)
            filters.emplace_back(ctx.full_pilots, r_h, snr_to_noise(snr_db), config.n_rx);
        ctx.mmse.push_back(std::move(filters));
    }

    for (const auto probe_case : config.schemes) {
        const ProbingScheme scheme = make_scheme(probe_case, config.n_rx, config.n_tx);
        const auto tests = test_indices(scheme);
        Eigen::MatrixX2d pts(static_cast<Eigen::Index>(tests.size()), 2);
        for (std::size_t k = 0; k < tests.size(); ++k) {
            pts(static_cast<Eigen::Index>(k), 0) = tests[k].first;
            pts(static_cast<Eigen::Index>(k), 1) = tests[k].second;
        }
        ctx.probing_schemes.push_back(scheme);
        ctx.scheme_tests.push_back(tests);
        ctx.scheme_test_pts.push_back(std::move(pts));
    }

    ctx.fig_snr_db = config.snr_grid_db.front();
    for (double snr : config.snr_grid_db)
        if (std::abs(snr) < std::abs(ctx.fig_snr_db))
            ctx.fig_snr_db = snr;

    // Trials are the unit of parallel work; outputs land in per-trial
    // slots so scheduling cannot affect the merged result.
    int workers = config.threads > 0
                      ? config.threads
                      : static_cast<int>(std::thread::hardware_concurrency());
    if (const char* cap = std::getenv("CSI_GPR_THREADS")) {
        try {
            workers = std::min(workers, std::max(1, std::stoi(cap)));
        } catch (...) {
            throw std::invalid_argument("CSI_GPR_THREADS is not an integer");
        }
    }
    workers = std::max(1, std::min(workers, config.trials));

    std::vector<TrialOutput> outputs(static_cast<std::size_t>(config.trials));
    std::vector<std::string> errors(static_cast<std::size_t>(config.trials));
    std::atomic<bool> failed{false};
    std::atomic<int> next_trial{1};

    const auto worker_loop = [&] {
        while (!failed.load()) {
            const int trial = next_trial.fetch_add(1);
            if (trial > config.trials)
                return;
            try {
                run_trial(ctx, trial, outputs[static_cast<std::size_t>(trial - 1)]);
            } catch (const std::exception& e) {
                errors[static_cast<std::size_t>(trial - 1)] =
                    "trial " + std::to_string(trial) + ": " + e.what();
                failed.store(true);
                return;
            }
        }
    };

    if (workers == 1) {
        worker_loop();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w)
            pool.emplace_back(worker_loop);
        for (auto& t : pool)
            t.join();
    }
    if (failed.load()) {
        for (const auto& msg : errors)
            if (!msg.empty())
                throw std::runtime_error("run_experiment aborted: " + msg);
        throw std::runtime_error("run_experiment aborted");
    }

    ExperimentResults results;
    results.fig_snr_db = ctx.fig_snr_db;

    std::map<std::string, std::vector<Eigen::Vector2d>> pooled_samples;
    std::map<std::string, std::array<long long, 4>> pooled_counts;
    std::map<std::string, std::pair<double, long long>> mi_accum;

    for (auto& out : outputs) {
        for (auto& row : out.rows) {
            const std::string series = row.estimator == "gpr" ? row.scheme : row.estimator;
            if (row.metric_name == "mi_bits") {
                auto& [sum, n] = mi_accum[mi_key(row.model, series, row.kernel, row.snr_db)];
                sum += row.value;
                ++n;
            }
            results.rows.push_back(std::move(row));
        }
        for (auto& [key, samples] : out.fig_samples) {
            auto& pooled = pooled_samples[key];
            pooled.insert(pooled.end(), samples.begin(), samples.end());
        }
        for (const auto& [key, counts] : out.cov_counts) {
            auto& pooled = pooled_counts[key];
            for (int i = 0; i < 4; ++i)
                pooled[static_cast<std::size_t>(i)] += counts[static_cast<std::size_t>(i)];
        }
    }

    for (const auto& [key, accum] : mi_accum)
        results.mean_mi[key] = accum.first / static_cast<double>(accum.second);

    for (const auto& [key, samples] : pooled_samples) {
        Eigen::MatrixX2d m(static_cast<Eigen::Index>(samples.size()), 2);
        for (std::size_t i = 0; i < samples.size(); ++i)
            m.row(static_cast<Eigen::Index>(i)) = samples[i].transpose();
        CloudSummary summary;
        summary.cloud = error_cloud_from_samples(m);
        summary.area = ellipse_area(summary.cloud);
        results.clouds.emplace(key, std::move(summary));
    }

    for (const auto& [key, counts] : pooled_counts) {
        CoverageSummary cov;
        cov.count = counts[3];
        if (cov.count > 0) {
            cov.empirical = static_cast<double>(counts[0]) / cov.count;
            cov.empirical_re = static_cast<double>(counts[1]) / cov.count;
            cov.empirical_im = static_cast<double>(counts[2]) / cov.count;
        }
        results.coverages.emplace(key, cov);
    }

    if (!config.output_dir.empty())
        emit_outputs(config, results);
    return results;
}

} // namespace csigpr
