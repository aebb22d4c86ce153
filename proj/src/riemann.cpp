#include "orthopred/riemann.hpp"

#include "orthopred/errors.hpp"
#include "orthopred/matfun.hpp"

namespace orthopred {

Matrix riemannian_grad(const Matrix& euclid_grad, const Matrix& p) {
    if (euclid_grad.rows() != p.rows() || euclid_grad.cols() != p.cols())
        throw DimensionError("riemannian_grad: gradient and point differ in shape");
    // P Gᵀ P: (f×k)(k×f)(f×k).
    return euclid_grad - matmul(matmul_transpose(p, euclid_grad), p);
}

QuasiOrthoReport quasi_orthogonality(const Matrix& p) {
    if (!p.is_square()) throw DimensionError("quasi_orthogonality: expected a square matrix");
    QuasiOrthoReport r;
    r.eps_proj = operator_norm(matmul(p, p) - p);
    r.eps_sym = operator_norm(p.transpose() - p);
    r.eps_orth = operator_norm(matmul_transpose(p, p) - p);
    r.op_norm = operator_norm(p);
    return r;
}

Matrix retract_to_stiefel(const Matrix& p, std::size_t n) {
    return polar_decompose(p, n).u;
}

Matrix riemannian_sgd_step(const Matrix& p, const Matrix& euclid_grad, double eta, std::size_t n_retract) {
    return retract_to_stiefel(p - riemannian_grad(euclid_grad, p) * eta, n_retract);
}

} // namespace orthopred
