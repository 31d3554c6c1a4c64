#pragma once

#include <complex>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace csigpr {

/// One splitmix64 scramble step; the project-wide seed-mixing primitive.
std::uint64_t splitmix64(std::uint64_t x);

/// Derive a sub-stream seed from a base seed and a path of indices
/// (trial number, scheme index, ...). Distinct paths give independent
/// streams; the mixing is fixed so results are reproducible.
std::uint64_t mix_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path);

/// Deterministic random source. All transforms (uniform mapping,
/// Box-Muller normals) are implemented here rather than via std::
/// distributions, whose output is implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    /// Uniform on [0, 1) with 53-bit resolution.
    double uniform();

    /// Uniform on [lo, hi).
    double uniform(double lo, double hi);

    /// Standard normal via Box-Muller; generates pairs, caches the spare.
    double normal();

    /// Circularly symmetric complex Gaussian CN(0, variance):
    /// real and imaginary parts independent N(0, variance / 2).
    std::complex<double> complex_normal(double variance);

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace csigpr
