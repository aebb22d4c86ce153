#pragma once

#include "orthopred/linalg.hpp"
#include "orthopred/random.hpp"

#include <cmath>
#include <vector>

namespace testsupport {

using orthopred::Matrix;

inline double rel_fro(const Matrix& a, const Matrix& b) {
    return orthopred::frobenius_norm(a - b) / orthopred::frobenius_norm(b);
}

inline double orth_defect(const Matrix& q) {
    return orthopred::frobenius_norm(
        orthopred::add_identity(orthopred::gram(q), -1.0));
}

// Naive triple loop, independent of the library kernels.
inline Matrix naive_matmul(const Matrix& a, const Matrix& b) {
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            long double s = 0;
            for (std::size_t k = 0; k < a.cols(); ++k) s += (long double)a(i, k) * b(k, j);
            c(i, j) = static_cast<double>(s);
        }
    return c;
}

// SPD with eigenvalues log-spaced from 1 down to 1/cond.
inline Matrix log_spd(std::size_t f, double cond, orthopred::Rng& rng) {
    const auto ev = orthopred::log_spaced(1.0, 1.0 / cond, f);
    return orthopred::random_spd_with_spectrum(ev, rng);
}

// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double mx = 0, my = 0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += std::log(x[i]) / n;
        my += std::log(y[i]) / n;
    }
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

} // namespace testsupport
