#include <cstdio>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "csigpr.h"

namespace {

struct ConfigDeleter {
    void operator()(csi_config* c) const { csi_config_destroy(c); }
};

int die(const char* stage) {
    std::fprintf(stderr, "csi_experiment: %s: %s\n", stage, csi_last_error());
    return 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Channel matrix reconstruction sweep"};
    app.set_version_flag("--version", csi_version());

    bool paper_scale = false;
    std::string config_path, out_dir, snr, scheme, kernel, model, size;
    std::string seed, trials, richness;

    app.add_flag("--paper-scale", paper_scale, "36x36 arrays, 200 trials");
    app.add_option("--config", config_path, "key=value config file");
    app.add_option("--out", out_dir, "output directory for CSVs")->required();
    app.add_option("--seed", seed, "RNG seed");
    app.add_option("--trials", trials, "Monte Carlo trials");
    app.add_option("--snr", snr, "SNR grid in dB, comma separated");
    app.add_option("--scheme", scheme, "probing schemes: case1,case2,case3 or all");
    app.add_option("--kernel", kernel, "kernels: rbf,matern15,rq or all");
    app.add_option("--model", model, "channel models: kron,weich or both");
    app.add_option("--size", size, "array size, N or NRxNT");
    app.add_option("--richness", richness, "scattering richness in [0,1]");

    CLI11_PARSE(app, argc, argv);

    std::unique_ptr<csi_config, ConfigDeleter> config(
        paper_scale ? csi_config_create_paper_scale() : csi_config_create());
    if (!config) {
        std::fprintf(stderr, "csi_experiment: out of memory\n");
        return 1;
    }

    if (!config_path.empty() &&
        csi_config_load_file(config.get(), config_path.c_str()) != CSI_OK)
        return die("config");

    const std::pair<const char*, const std::string*> overrides[] = {
        {"seed", &seed},       {"trials", &trials},  {"snr", &snr},
        {"scheme", &scheme},   {"kernel", &kernel},  {"model", &model},
        {"size", &size},       {"richness", &richness},
    };
    for (const auto& [key, value] : overrides) {
        if (!value->empty() && csi_config_set(config.get(), key, value->c_str()) != CSI_OK)
            return die(key);
    }

    if (csi_run_experiment(config.get(), out_dir.c_str()) != CSI_OK)
        return die("run");

    std::printf("wrote results to %s\n", out_dir.c_str());
    return 0;
}
