#include "csigpr.h"

#include <stdexcept>
#include <string>

#include "experiment.hpp"

namespace {

thread_local std::string g_last_error;

int fail(int code, const char* what) {
    g_last_error = what;
    return code;
}

} // namespace

extern "C" {

struct csi_config {
    csigpr::ExperimentConfig impl;
};

csi_config* csi_config_create(void) {
    return new (std::nothrow) csi_config{csigpr::ExperimentConfig::desk_profile()};
}

csi_config* csi_config_create_paper_scale(void) {
    return new (std::nothrow) csi_config{csigpr::ExperimentConfig{}};
}

void csi_config_destroy(csi_config* config) {
    delete config;
}

int csi_config_set(csi_config* config, const char* key, const char* value) {
    if (config == nullptr || key == nullptr || value == nullptr)
        return fail(CSI_EINVAL, "csi_config_set: null argument");
    try {
        config->impl.set(key, value);
        return CSI_OK;
    } catch (const std::invalid_argument& e) {
        return fail(CSI_EINVAL, e.what());
    } catch (const std::exception& e) {
        return fail(CSI_ERUNTIME, e.what());
    }
}

int csi_config_load_file(csi_config* config, const char* path) {
    if (config == nullptr || path == nullptr)
        return fail(CSI_EINVAL, "csi_config_load_file: null argument");
    try {
        config->impl.load_file(path);
        return CSI_OK;
    } catch (const std::invalid_argument& e) {
        return fail(CSI_EINVAL, e.what());
    } catch (const std::exception& e) {
        return fail(CSI_ERUNTIME, e.what());
    }
}

int csi_run_experiment(const csi_config* config, const char* output_dir) {
    if (config == nullptr)
        return fail(CSI_EINVAL, "csi_run_experiment: null config");
    try {
        csigpr::ExperimentConfig run = config->impl;
        if (output_dir != nullptr)
            run.output_dir = output_dir;
        csigpr::run_experiment(run);
        return CSI_OK;
    } catch (const std::invalid_argument& e) {
        return fail(CSI_EINVAL, e.what());
    } catch (const std::exception& e) {
        return fail(CSI_ERUNTIME, e.what());
    }
}

const char* csi_last_error(void) {
    return g_last_error.c_str();
}

const char* csi_version(void) {
    return csigpr::library_version();
}

} // extern "C"
