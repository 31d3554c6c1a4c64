#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

namespace csigpr {

enum class ProbeCase { CaseI, CaseII, CaseIII };

const char* probe_case_name(ProbeCase probe_case);

/// Active transmit antennas and the grid entries they expose.
/// Indices are 1-based (r, t) pairs, matching the antenna numbering
/// used throughout.
struct ProbingScheme {
    ProbeCase probe_case = ProbeCase::CaseI;
    int n_rx = 0;
    int n_tx = 0;
    std::vector<int> active_set;
    std::vector<std::pair<int, int>> observed_indices;
};

/// Decorrelated observation Y S^H restricted to the active columns.
struct PilotObservation {
    Eigen::MatrixXcd decorrelated; // n_rx x |active_set|
    double noise_variance = 0.0;
    ProbingScheme scheme;
};

/// CaseI: first column. CaseII: n_t = ceil(N_t/2) equispaced antennas
/// A = {1 + floor((m-1)(N_t-1)/(n_t-1))}, duplicates removed. CaseIII:
/// diagonal entries (i, i) up to min(N_r, N_t).
ProbingScheme make_scheme(ProbeCase probe_case, int n_rx, int n_tx);

/// Row-orthonormal pilots: first n_active rows of the pilot_length-point
/// unitary DFT matrix. Deterministic; the seed parameter is reserved for
/// alternative randomized constructions and is unused here.
Eigen::MatrixXcd build_pilot_matrix(int n_active, int pilot_length, std::uint64_t rng_seed = 0);

/// Transmit over T = |active_set| symbols (X = F S), add CN(0, sigma_n^2)
/// noise and decorrelate: Ytilde = Y S^H. Per-entry noise variance in
/// Ytilde equals sigma_n^2. Calling with equal seeds at different noise
/// levels reuses the same underlying unit-variance draws (the noise
/// scales with sigma_n), which the harness exploits for common random
/// numbers across an SNR grid.
PilotObservation observe(const Eigen::MatrixXcd& channel, const ProbingScheme& scheme,
                         double noise_variance, std::uint64_t rng_seed);

/// Training set for the GP: Z rows are observed (r, t) pairs, h their
/// decorrelated values. CaseIII keeps only the diagonal samples.
std::pair<Eigen::MatrixX2d, Eigen::VectorXcd> extract_training_set(const PilotObservation& obs);

/// Grid complement of observed_indices in column-major order.
std::vector<std::pair<int, int>> test_indices(const ProbingScheme& scheme);

} // namespace csigpr
