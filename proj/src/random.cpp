#include "orthopred/random.hpp"

#include "orthopred/errors.hpp"

#include <cmath>
#include <numbers>

namespace orthopred {

double Rng::uniform() {
    // Top 53 bits -> [0, 1).
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

namespace {

// splitmix64 finaliser over (word, salt).
std::uint64_t mix(std::uint64_t word, std::uint64_t salt) {
    std::uint64_t z = word ^ (salt + 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

} // namespace

Rng Rng::split(std::uint64_t salt) { return Rng(mix(engine_(), salt)); }

Rng Rng::derive(std::uint64_t seed, std::uint64_t salt) { return Rng(mix(mix(seed, 0x6A09E667F3BCC908ULL), salt)); }

Matrix gaussian_matrix(std::size_t rows, std::size_t cols, Rng& rng, double stddev) {
    Matrix m(rows, cols);
    for (double& x : m.data()) x = stddev * rng.normal();
    return m;
}

Vector gaussian_vector(std::size_t n, Rng& rng, double stddev) {
    Vector v(n);
    for (double& x : v) x = stddev * rng.normal();
    return v;
}

Matrix random_orthonormal(std::size_t n, std::size_t k, Rng& rng) {
    if (k > n) throw DimensionError("random_orthonormal: k > n");
    Matrix q = gaussian_matrix(n, k, rng);
    for (std::size_t j = 0; j < k; ++j) {
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t p = 0; p < j; ++p) {
                double proj = 0.0;
                for (std::size_t i = 0; i < n; ++i) proj += q(i, p) * q(i, j);
                for (std::size_t i = 0; i < n; ++i) q(i, j) -= proj * q(i, p);
            }
        }
        double nrm = 0.0;
        for (std::size_t i = 0; i < n; ++i) nrm += q(i, j) * q(i, j);
        nrm = std::sqrt(nrm);
        for (std::size_t i = 0; i < n; ++i) q(i, j) /= nrm;
    }
    return q;
}

Matrix random_orthogonal(std::size_t n, Rng& rng) { return random_orthonormal(n, n, rng); }

Matrix random_spd_with_spectrum(std::span<const double> eigenvalues, Rng& rng) {
    const std::size_t n = eigenvalues.size();
    const Matrix q = random_orthogonal(n, rng);
    Matrix qd = q;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) qd(i, j) *= eigenvalues[j];
    return symmetrize(matmul_transpose(qd, q));
}

Vector log_spaced(double hi, double lo, std::size_t n) {
    if (n == 0) return {};
    if (n == 1) return {hi};
    Vector out(n);
    const double a = std::log(hi);
    const double b = std::log(lo);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
    return out;
}

} // namespace orthopred
