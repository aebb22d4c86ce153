#pragma once

// Stiefel-manifold tools: Riemannian gradient, quasi-orthogonality defects
// and the polar retraction.

#include "orthopred/linalg.hpp"

#include <cstddef>

namespace orthopred {

struct QuasiOrthoReport {
    double eps_proj = 0.0;  // |||P² − P|||
    double eps_sym = 0.0;   // |||Pᵀ − P|||
    double eps_orth = 0.0;  // |||PPᵀ − P|||
    double op_norm = 0.0;   // |||P|||
};

// G − P Gᵀ P. P may be a tall frame (f×k with G of the same shape).
Matrix riemannian_grad(const Matrix& euclid_grad, const Matrix& p);

QuasiOrthoReport quasi_orthogonality(const Matrix& p);

inline constexpr std::size_t kDefaultRetractIters = 40;

// Polar factor of p via Newton-Schulz; throws DomainError if rank deficient.
Matrix retract_to_stiefel(const Matrix& p, std::size_t n = kDefaultRetractIters);

// retract(p − η·Grad), Grad = riemannian_grad(euclid_grad, p).
Matrix riemannian_sgd_step(const Matrix& p, const Matrix& euclid_grad, double eta,
                           std::size_t n_retract = kDefaultRetractIters);

} // namespace orthopred
