#include "probing.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <set>
#include <stdexcept>

#include "rng.hpp"

namespace csigpr {

const char* probe_case_name(ProbeCase probe_case) {
    switch (probe_case) {
        case ProbeCase::CaseI: return "case1";
        case ProbeCase::CaseII: return "case2";
        case ProbeCase::CaseIII: return "case3";
    }
    return "?";
}

ProbingScheme make_scheme(ProbeCase probe_case, int n_rx, int n_tx) {
    if (n_rx < 1 || n_tx < 1)
        throw std::invalid_argument("make_scheme: array sizes must be >= 1");

    ProbingScheme scheme;
    scheme.probe_case = probe_case;
    scheme.n_rx = n_rx;
    scheme.n_tx = n_tx;

    switch (probe_case) {
        case ProbeCase::CaseI:
            scheme.active_set = {1};
            break;
        case ProbeCase::CaseII: {
            if (n_tx < 2)
                throw std::invalid_argument("make_scheme: CaseII needs n_tx >= 2");
            const int nt = (n_tx + 1) / 2;
            std::set<int> seen;
            for (int m = 1; m <= nt; ++m) {
                const int idx = 1 + static_cast<int>((static_cast<long long>(m - 1) * (n_tx - 1)) /
                                                     (nt - 1 > 0 ? nt - 1 : 1));
                if (seen.insert(idx).second)
                    scheme.active_set.push_back(idx);
            }
            break;
        }
        case ProbeCase::CaseIII: {
            const int n = std::min(n_rx, n_tx);
            for (int i = 1; i <= n; ++i)
                scheme.active_set.push_back(i);
            break;
        }
    }

    if (probe_case == ProbeCase::CaseIII) {
        const int n = std::min(n_rx, n_tx);
        for (int i = 1; i <= n; ++i)
            scheme.observed_indices.emplace_back(i, i);
    } else {
        for (int t : scheme.active_set)
            for (int i = 1; i <= n_rx; ++i)
                scheme.observed_indices.emplace_back(i, t);
    }
    return scheme;
}

Eigen::MatrixXcd build_pilot_matrix(int n_active, int pilot_length, std::uint64_t) {
    if (n_active < 1)
        throw std::invalid_argument("build_pilot_matrix: need at least one active antenna");
    if (pilot_length < n_active)
        throw std::invalid_argument("build_pilot_matrix: pilot_length < n_active");

    Eigen::MatrixXcd s(n_active, pilot_length);
    const double scale = 1.0 / std::sqrt(static_cast<double>(pilot_length));
    for (int r = 0; r < n_active; ++r)
        for (int c = 0; c < pilot_length; ++c)
            s(r, c) = std::polar(scale, -2.0 * M_PI * r * c / pilot_length);
    return s;
}

PilotObservation observe(const Eigen::MatrixXcd& channel, const ProbingScheme& scheme,
                         double noise_variance, std::uint64_t rng_seed) {
    if (noise_variance < 0.0)
        throw std::invalid_argument("observe: negative noise variance");
    if (channel.rows() != scheme.n_rx || channel.cols() != scheme.n_tx)
        throw std::invalid_argument("observe: channel/scheme dimension mismatch");

    const int nt = static_cast<int>(scheme.active_set.size());
    const int nr = scheme.n_rx;
    const Eigen::MatrixXcd s = build_pilot_matrix(nt, nt);

    Eigen::MatrixXcd h_active(nr, nt);
    for (int c = 0; c < nt; ++c)
        h_active.col(c) = channel.col(scheme.active_set[c] - 1);

    Eigen::MatrixXcd y = h_active * s;
    Rng rng(rng_seed);
    for (int c = 0; c < nt; ++c)
        for (int r = 0; r < nr; ++r)
            y(r, c) += rng.complex_normal(noise_variance);

    PilotObservation obs;
    obs.decorrelated = y * s.adjoint();
    obs.noise_variance = noise_variance;
    obs.scheme = scheme;
    return obs;
}

std::pair<Eigen::MatrixX2d, Eigen::VectorXcd> extract_training_set(const PilotObservation& obs) {
    const auto& scheme = obs.scheme;
    const auto n = static_cast<Eigen::Index>(scheme.observed_indices.size());
    Eigen::MatrixX2d z(n, 2);
    Eigen::VectorXcd h(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const auto [r, t] = scheme.observed_indices[static_cast<std::size_t>(k)];
        z(k, 0) = r;
        z(k, 1) = t;
        const auto pos = std::find(scheme.active_set.begin(), scheme.active_set.end(), t);
        h(k) = obs.decorrelated(r - 1, pos - scheme.active_set.begin());
    }
    return {z, h};
}

std::vector<std::pair<int, int>> test_indices(const ProbingScheme& scheme) {
    std::set<std::pair<int, int>> observed(scheme.observed_indices.begin(),
                                           scheme.observed_indices.end());
    std::vector<std::pair<int, int>> out;
    for (int t = 1; t <= scheme.n_tx; ++t)
        for (int r = 1; r <= scheme.n_rx; ++r)
            if (!observed.count({r, t}))
                out.emplace_back(r, t);
    return out;
}

} // namespace csigpr
