#pragma once

// Inverse-free matrix-function iterations: Visser and coupled Newton-Schulz
// square roots, chained Newton-Schulz (fourth root), the first-order Neumann
// inverse, Stiefel projection and polar decomposition. sqrt_eig is the exact
// eigendecomposition route, used both as the DirectPred formula and as the
// oracle for the iterative routes.

#include "orthopred/linalg.hpp"

#include <cstddef>
#include <vector>

namespace orthopred {

inline constexpr std::size_t kDefaultNsIters = 9;
inline constexpr std::size_t kDefaultNs2Iters = 7;
inline constexpr std::size_t kDefaultStiefelIters = 9;
inline constexpr double kDefaultVisserEta = 0.001;

struct SqrtIterConfig {
    std::size_t n_iters = kDefaultNsIters;
    double visser_eta = kDefaultVisserEta;
    bool residual_track = false;

    // Throws ConfigError when n_iters == 0 or visser_eta <= 0.
    void validate() const;
};

// (iteration, residual) pairs; iteration 0 is the initial iterate.
struct ResidualTrace {
    std::vector<std::size_t> iteration;
    std::vector<double> residual;

    void push(std::size_t k, double r) {
        iteration.push_back(k);
        residual.push_back(r);
    }
    std::size_t size() const noexcept { return residual.size(); }
};

// Result of the coupled Newton-Schulz iteration on Σ.
//   a ≈ (Σ/‖Σ‖_F)^{1/2},  b ≈ (Σ/‖Σ‖_F)^{-1/2},  b·a → I.
struct NsPair {
    Matrix a;
    Matrix b;
    double fro_scale = 0.0;  // ‖Σ‖_F

    // A_n √‖Σ‖_F ≈ Σ^{1/2}: the NS predictor.
    Matrix sqrt_estimate() const;
    // B_n / √‖Σ‖_F ≈ Σ^{-1/2}.
    Matrix inv_sqrt_estimate() const;
};

// True when η·|||Σ||| < 1, the regime where the scalar recursion is stable.
bool visser_step_admissible(const Matrix& sigma, double eta);

// P₀ = I/(2η), P_{k+1} = P_k + η(Σ − P_k²), n_iters times. Writes a warning
// to std::clog when the step size is outside the admissible regime. When a
// trace is supplied (or cfg.residual_track is set and a trace is given) it
// receives ‖P_k² − Σ‖_F per iteration.
//
// Throws DomainError for non-square or asymmetric Σ and DivergenceError when
// the residual turns non-finite, or grows three steps in a row after step 10
// while above the round-off floor 1e-8 ‖Σ‖_F.
Matrix visser_sqrt(const Matrix& sigma, const SqrtIterConfig& cfg, ResidualTrace* trace = nullptr);

// A₀ = Σ/‖Σ‖_F, B₀ = I;
//   A_{k+1} = ½ A_k (3I − B_k A_k),  B_{k+1} = ½ (3I − B_k A_k) B_k.
// The optional trace records ‖B_k A_k − I‖_F. Throws DomainError for a zero
// or non-square Σ and NumericError if a non-finite value appears.
NsPair newton_schulz_sqrt(const Matrix& sigma, std::size_t n, ResidualTrace* trace = nullptr);

// Two chained Newton-Schulz square roots: approximately Σ^{1/4}.
Matrix ns_squared_sqrt(const Matrix& sigma, std::size_t n_each = kDefaultNs2Iters);

// 2I − M, the first-order Neumann approximation of M⁻¹ around I.
Matrix neumann_inverse(const Matrix& m);

struct StiefelProjection {
    // B_n Σᵀ / ‖B_n‖_F, the Stiefel predictor.
    Matrix predictor;
    // B_n Σᵀ / √‖ΣᵀΣ‖_F ≈ (ΣᵀΣ)^{-1/2} Σᵀ, whose singular values approach 1.
    Matrix scaled_projection;
};

// Newton-Schulz on ΣᵀΣ, then B_n Σᵀ. Throws DomainError when the smallest
// eigenvalue of ΣᵀΣ is below 1e-12 times the largest.
StiefelProjection stiefel_project(const Matrix& sigma, std::size_t n = kDefaultStiefelIters);

struct PolarDecomposition {
    Matrix u;  // orthonormal columns
    Matrix h;  // symmetric positive semidefinite
};

// P = UH with U = P (PᵀP)^{-1/2} from the Newton-Schulz B-sequence on PᵀP
// and H = UᵀP. Accepts tall (rows ≥ cols) inputs; throws DomainError when
// the smallest singular value is below 1e-10 times the largest.
PolarDecomposition polar_decompose(const Matrix& p, std::size_t n);

// Polar factor from the SVD, U = Ũ Ṽᵀ. Works for rank-deficient input.
Matrix polar_factor_svd(const Matrix& p);

// V diag(√λ) Vᵀ. Eigenvalues in [−1e−10 λ_max, 0) are clamped to zero; more
// negative ones, or asymmetric input, throw DomainError.
Matrix sqrt_eig(const Matrix& sigma);

// V diag(f(λ)) Vᵀ on the clamped spectrum; used for oracle roots.
Matrix spectral_power(const Matrix& sigma, double exponent);

} // namespace orthopred
