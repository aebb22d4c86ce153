#pragma once

// Seeded random streams and random-matrix families.
//
// Draws are built from the raw 64-bit output of std::mt19937_64 (whose
// sequence is fixed by the standard) with our own uniform and Box-Muller
// transforms, so a seed produces the same numbers on every standard library.

#include "orthopred/linalg.hpp"

#include <cstdint>
#include <random>

namespace orthopred {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Uniform on [0, 1).
    double uniform();
    double normal();
    double normal(double mean, double stddev) { return mean + stddev * normal(); }
    bool bernoulli(double p) { return uniform() < p; }

    // Derived stream for an independent purpose (e.g. per-step substreams).
    Rng split(std::uint64_t salt);
    // Stream determined by (seed, salt) alone, without touching any generator.
    static Rng derive(std::uint64_t seed, std::uint64_t salt);

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

Matrix gaussian_matrix(std::size_t rows, std::size_t cols, Rng& rng, double stddev = 1.0);
Vector gaussian_vector(std::size_t n, Rng& rng, double stddev = 1.0);

// n × k with orthonormal columns (k ≤ n), Haar-distributed up to the sign
// convention of the Gram-Schmidt pass.
Matrix random_orthonormal(std::size_t n, std::size_t k, Rng& rng);
Matrix random_orthogonal(std::size_t n, Rng& rng);

// Q diag(eigenvalues) Qᵀ for a random orthogonal Q.
Matrix random_spd_with_spectrum(std::span<const double> eigenvalues, Rng& rng);

// n values log-spaced from hi down to lo (hi first).
Vector log_spaced(double hi, double lo, std::size_t n);

} // namespace orthopred
