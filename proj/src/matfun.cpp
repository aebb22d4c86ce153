#include "orthopred/matfun.hpp"

#include "orthopred/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <string>

namespace orthopred {

namespace {

void require_square(const Matrix& m, const char* op) {
    if (!m.is_square())
        throw DimensionError(std::string(op) + ": expected a square matrix, got " +
                             std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
}

void require_symmetric(const Matrix& m, const char* op) {
    const double asym = relative_asymmetry(m);
    if (asym > 1e-9)
        throw DomainError(std::string(op) + ": input is not symmetric (relative asymmetry " +
                          std::to_string(asym) + ")");
}

// Eigen-decomposition with the PSD clamp shared by sqrt_eig and spectral_power.
SymEigResult clamped_eig(const Matrix& sigma, const char* op) {
    require_square(sigma, op);
    require_symmetric(sigma, op);
    SymEigResult eig = sym_eig(sigma);
    const double lmax = eig.eigenvalues.empty() ? 0.0 : std::max(eig.eigenvalues.front(), 0.0);
    for (double& l : eig.eigenvalues) {
        if (l >= 0.0) continue;
        if (l < -1e-10 * lmax || lmax == 0.0)
            throw DomainError(std::string(op) + ": matrix is not positive semidefinite (eigenvalue " +
                              std::to_string(l) + ")");
        l = 0.0;
    }
    return eig;
}

Matrix reassemble(const SymEigResult& eig, auto&& fn) {
    const std::size_t n = eig.eigenvalues.size();
    Matrix vd = eig.eigenvectors;
    for (std::size_t j = 0; j < n; ++j) {
        const double fj = fn(eig.eigenvalues[j]);
        for (std::size_t i = 0; i < n; ++i) vd(i, j) *= fj;
    }
    return symmetrize(matmul_transpose(vd, eig.eigenvectors));
}

} // namespace

void SqrtIterConfig::validate() const {
    if (n_iters < 1) throw ConfigError("SqrtIterConfig: n_iters must be at least 1");
    if (!(visser_eta > 0.0) || !std::isfinite(visser_eta))
        throw ConfigError("SqrtIterConfig: visser_eta must be positive");
}

Matrix NsPair::sqrt_estimate() const { return a * std::sqrt(fro_scale); }

Matrix NsPair::inv_sqrt_estimate() const { return b / std::sqrt(fro_scale); }

// ---------------------------------------------------------------------------
// Visser
// ---------------------------------------------------------------------------

bool visser_step_admissible(const Matrix& sigma, double eta) {
    return eta * operator_norm(sigma) < 1.0;
}

Matrix visser_sqrt(const Matrix& sigma, const SqrtIterConfig& cfg, ResidualTrace* trace) {
    cfg.validate();
    require_square(sigma, "visser_sqrt");
    require_symmetric(sigma, "visser_sqrt");
    const double eta = cfg.visser_eta;
    if (!visser_step_admissible(sigma, eta))
        std::clog << "warning: visser_sqrt step size " << eta
                  << " violates eta*|||Sigma||| < 1; the iteration may diverge\n";

    const std::size_t f = sigma.rows();
    const double floor = 1e-8 * frobenius_norm(sigma);
    Matrix p = Matrix::identity(f) / (2.0 * eta);
    double last = std::numeric_limits<double>::infinity();
    int growth = 0;

    for (std::size_t k = 0; k < cfg.n_iters; ++k) {
        Matrix delta = sigma - matmul(p, p);  // Σ − P_k²
        const double residual = frobenius_norm(delta);
        if (trace) trace->push(k, residual);
        if (!std::isfinite(residual))
            throw DivergenceError("visser_sqrt: residual is not finite", k, residual);
        growth = residual > last ? growth + 1 : 0;
        if (k > 10 && growth >= 3 && residual > floor)
            throw DivergenceError("visser_sqrt: residual grew three consecutive steps", k, residual);
        last = residual;
        delta *= eta;
        p += delta;
    }
    if (trace) {
        const double residual = frobenius_norm(sigma - matmul(p, p));
        trace->push(cfg.n_iters, residual);
        if (!std::isfinite(residual))
            throw DivergenceError("visser_sqrt: residual is not finite", cfg.n_iters, residual);
    } else if (!p.all_finite()) {
        throw DivergenceError("visser_sqrt: iterate is not finite", cfg.n_iters,
                              std::numeric_limits<double>::infinity());
    }
    return p;
}

// ---------------------------------------------------------------------------
// Newton-Schulz
// ---------------------------------------------------------------------------

NsPair newton_schulz_sqrt(const Matrix& sigma, std::size_t n, ResidualTrace* trace) {
    require_square(sigma, "newton_schulz_sqrt");
    const double fro = frobenius_norm(sigma);
    if (fro == 0.0) throw DomainError("newton_schulz_sqrt: zero matrix has no normalisation");
    if (!std::isfinite(fro)) throw NumericError("newton_schulz_sqrt: non-finite input", 0);

    const std::size_t f = sigma.rows();
    const Matrix three = Matrix::identity(f) * 3.0;
    NsPair out{sigma / fro, Matrix::identity(f), fro};

    for (std::size_t k = 0; k < n; ++k) {
        Matrix t = three - matmul(out.b, out.a);  // 3I − B_k A_k
        if (trace) trace->push(k, frobenius_norm(add_identity(three - t, -1.0)));
        out.a = matmul(out.a, t) * 0.5;
        out.b = matmul(t, out.b) * 0.5;
        if (!out.a.all_finite() || !out.b.all_finite())
            throw NumericError("newton_schulz_sqrt: non-finite iterate", k + 1);
    }
    if (trace) trace->push(n, frobenius_norm(add_identity(matmul(out.b, out.a), -1.0)));
    return out;
}

Matrix ns_squared_sqrt(const Matrix& sigma, std::size_t n_each) {
    const Matrix root = newton_schulz_sqrt(sigma, n_each).sqrt_estimate();
    return newton_schulz_sqrt(root, n_each).sqrt_estimate();
}

Matrix neumann_inverse(const Matrix& m) {
    require_square(m, "neumann_inverse");
    return add_identity(-m, 2.0);
}

// ---------------------------------------------------------------------------
// Stiefel projection and polar decomposition
// ---------------------------------------------------------------------------

StiefelProjection stiefel_project(const Matrix& sigma, std::size_t n) {
    require_square(sigma, "stiefel_project");
    const Matrix g = gram(sigma);  // ΣᵀΣ
    const Vector lambda = sym_eig(g).eigenvalues;
    if (lambda.empty() || lambda.front() <= 0.0)
        throw DomainError("stiefel_project: Sigma^T Sigma is zero");
    if (lambda.back() < 1e-12 * lambda.front())
        throw DomainError("stiefel_project: Sigma^T Sigma is ill-conditioned (min/max eigenvalue " +
                          std::to_string(lambda.back() / lambda.front()) + ")");

    const NsPair ns = newton_schulz_sqrt(g, n);
    const Matrix b_sigma_t = matmul_transpose(ns.b, sigma);  // B_n Σᵀ
    return StiefelProjection{b_sigma_t / frobenius_norm(ns.b),
                             b_sigma_t / std::sqrt(ns.fro_scale)};
}

PolarDecomposition polar_decompose(const Matrix& p, std::size_t n) {
    if (p.rows() < p.cols())
        throw DimensionError("polar_decompose: expected rows >= cols");
    const Vector s = singular_values(p);
    if (s.empty() || s.front() == 0.0 || s.back() < 1e-10 * s.front())
        throw DomainError("polar_decompose: matrix is rank deficient");

    const NsPair ns = newton_schulz_sqrt(gram(p), n);
    PolarDecomposition out;
    out.u = matmul(p, ns.inv_sqrt_estimate());
    out.h = transpose_matmul(out.u, p);
    return out;
}

Matrix polar_factor_svd(const Matrix& p) {
    const SvdResult d = svd(p);
    return matmul_transpose(d.u, d.v);
}

Matrix sqrt_eig(const Matrix& sigma) {
    return reassemble(clamped_eig(sigma, "sqrt_eig"), [](double l) { return std::sqrt(l); });
}

Matrix spectral_power(const Matrix& sigma, double exponent) {
    return reassemble(clamped_eig(sigma, "spectral_power"),
                      [exponent](double l) { return l > 0.0 ? std::pow(l, exponent) : 0.0; });
}

} // namespace orthopred
