#pragma once

// Streaming PCA: Oja, Krasulina, matrix Krasulina, the closed-form rank-1
// BYOL gradient, and a brute-force k-PCA check.

#include "orthopred/linalg.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace orthopred {

struct Rank1State {
    Vector p;
    double eta = 0.0;
    std::size_t step = 0;
};

struct FrameState {
    Matrix p;  // f×k
    double eta = 0.0;
    std::size_t step = 0;
};

enum class Orthonormalization { Polar, Exact };

// p ← p + η xᵀ(x·p), then p ← p/‖p‖. Throws NumericError on a zero result.
Rank1State oja_step(Rank1State state, std::span<const double> x, double eta);
// Batch form: p ← p + η XᵀX p, then normalise.
Rank1State oja_step(Rank1State state, const Matrix& x_batch, double eta);

// p ← p + η(xᵀ(x·p) − p (x·p/‖p‖)²), no renormalisation.
// Throws NumericError when ‖p‖ < 1e-300.
Rank1State krasulina_step(Rank1State state, std::span<const double> x, double eta);
// Batch form: p ← p + η(XᵀXp − p ‖Xp‖²/‖p‖²).
Rank1State krasulina_step(Rank1State state, const Matrix& x_batch, double eta);

// The bracket XᵀXp − p ‖Xp‖²/‖p‖² of the Krasulina update.
Vector krasulina_direction(const Matrix& x_batch, std::span<const double> p);

// ∇_p ‖Z − Z ppᵀ/‖p‖²‖²_F, Z held constant. For any p ≠ 0 the descent
// direction −∇ equals (2/‖p‖²)·krasulina_direction(Z, p).
Vector byol_rank1_grad(const Matrix& z, std::span<const double> p);
// The loss itself, for finite-difference checks.
double byol_rank1_loss(const Matrix& z, std::span<const double> p);

// P ← P + η XᵀX P, then orthonormalise. Throws DomainError on rank collapse.
FrameState matrix_krasulina_step(FrameState state, const Matrix& x_batch, double eta,
                                 Orthonormalization ortho = Orthonormalization::Polar);

// Q (QᵀQ)^{-1/2} through the eigendecomposition of QᵀQ.
Matrix orthonormalize_exact(const Matrix& q);

// |⟨u, v⟩| / (‖u‖‖v‖).
double alignment(std::span<const double> u, std::span<const double> v);
// Principal angles (radians, ascending) between the column spans of two
// f×k frames.
Vector principal_angles(const Matrix& a, const Matrix& b);

struct KpcaReport {
    double optimal_objective = 0.0;  // tr((I − Π*)Σ) for the top-k eigenprojector
    double best_random_objective = 0.0;
    std::size_t trials = 0;
    std::size_t wins = 0;            // trials with optimal ≤ random + 1e-10
    bool passed() const noexcept { return wins == trials; }
};

// tr((I − Π)Σ) for Π = QQᵀ, Q with orthonormal columns.
double kpca_objective(const Matrix& sigma, const Matrix& q);

// Compares the top-k eigenprojector against `trials` random rank-k
// orthogonal projections.
KpcaReport kpca_bruteforce_check(const Matrix& sigma, std::size_t k, std::size_t trials, std::uint64_t seed);

struct PcaStreamConfig {
    Vector spectrum{4, 1, 1, 1, 1, 1, 1, 1};  // population eigenvalues, axis-aligned
    std::size_t k = 2;
    double eta = 0.01;
    double frame_eta = 5e-3;
    std::size_t steps = 20000;
    std::size_t batch = 1;
    std::size_t log_interval = 100;
    std::uint64_t seed = 0;
};

struct PcaRecord {
    std::size_t step = 0;
    double oja_alignment = 0.0;
    double krasulina_alignment = 0.0;
    double principal_angle_topk = 0.0;  // largest angle, matrix Krasulina frame
    double objective = 0.0;             // tr(PᵀΣP) of the frame
};

struct PcaTrace {
    std::vector<PcaRecord> records;
    // First step at which each method reached the threshold, or steps + 1
    // when it never did.
    std::size_t oja_hit = 0;
    std::size_t krasulina_hit = 0;
};

// Runs the three methods on one shared Gaussian stream x ~ N(0, diag(spectrum)).
// Records are taken every log_interval steps and at the last step.
PcaTrace run_streaming_pca(const PcaStreamConfig& cfg, double hit_threshold = 0.99);

} // namespace orthopred
