#include "doctest.h"
#include "support.hpp"

#include "orthopred/errors.hpp"
#include "orthopred/predictors.hpp"
#include "orthopred/random.hpp"

#include <cmath>

using namespace orthopred;
using testsupport::rel_fro;

namespace {

// b×f latents with ZᵀZ = Q diag(s²) Qᵀ-free form: Z = U diag(s), U orthonormal.
Matrix latents_with_singular_values(std::size_t b, const Vector& s, Rng& rng) {
    Matrix z = random_orthonormal(b, s.size(), rng);
    for (std::size_t i = 0; i < b; ++i)
        for (std::size_t j = 0; j < s.size(); ++j) z(i, j) *= s[j];
    return z;
}

} // namespace

TEST_CASE("names") {
    for (PredictorKind k : kAllPredictorKinds) CHECK(parse_predictor_kind(predictor_name(k)) == k);
    CHECK_THROWS_AS(parse_predictor_kind("ns"), ConfigError);
    CHECK(PredictorParams::defaults_for(PredictorKind::LRP).ema_rho == 0.8);
    CHECK(PredictorParams::defaults_for(PredictorKind::NE).ema_rho == 0.99);
    CHECK(PredictorParams::defaults_for(PredictorKind::Visser).ema_rho == 0.99);
    CHECK(PredictorParams::defaults_for(PredictorKind::NS).ema_rho == 0.99);
    CHECK(PredictorParams::defaults_for(PredictorKind::NS2).ema_rho == 0.99);
    CHECK(PredictorParams::defaults_for(PredictorKind::Stiefel).ema_rho == 0.999);
    CHECK(PredictorParams::defaults_for(PredictorKind::NS).sqrt_cfg.n_iters == 9);
    CHECK(PredictorParams::defaults_for(PredictorKind::NS2).sqrt_cfg.n_iters == 7);
    CHECK(PredictorParams::defaults_for(PredictorKind::Stiefel).sqrt_cfg.n_iters == 9);
    CHECK(PredictorParams::defaults_for(PredictorKind::Visser).sqrt_cfg.visser_eta == 0.001);
}

TEST_CASE("lrp") {
    Rng rng(1);
    const Matrix z = gaussian_matrix(20, 6, rng);
    CHECK(max_abs_diff(lrp_predictor(z, z), Matrix::identity(6)) <= 1e-10);

    const Matrix p = lrp_predictor(Matrix::identity(2), Matrix::diagonal({2, 3}));
    CHECK(max_abs_diff(p, Matrix::diagonal({2, 3})) <= 1e-14);

    Matrix dup(6, 3);
    const Vector row = gaussian_vector(3, rng);
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 3; ++j) dup(i, j) = row[j] * (1.0 + static_cast<double>(i));
    CHECK(numerical_rank(lrp_predictor(dup, gaussian_matrix(6, 3, rng))) <= 1);

    const Matrix zt = gaussian_matrix(20, 6, rng);
    const Matrix p1 = lrp_predictor(z, zt);
    for (double c : {1e-3, 7.0, 1e4})
        CHECK(max_abs_diff(lrp_predictor(z * c, zt * c), p1) <= 1e-10);

    CHECK_THROWS_AS(lrp_predictor(z, gaussian_matrix(20, 5, rng)), DimensionError);
}

TEST_CASE("lrp residual is orthogonal to the online range") {
    Rng rng(2);
    for (int t = 0; t < 20; ++t) {
        const Matrix z = gaussian_matrix(32, 16, rng);
        const Matrix zt = matmul(z, gaussian_matrix(16, 16, rng));
        const Matrix p = lrp_predictor(z, zt);
        CHECK(frobenius_norm(transpose_matmul(z, matmul(z, p) - zt)) <= 1e-8);
    }
}

TEST_CASE("lrp deviation from identity is linear in the noise") {
    Rng rng(3);
    const Matrix z = gaussian_matrix(32, 8, rng);
    Matrix g = gaussian_matrix(32, 8, rng);
    g /= operator_norm(g);
    const double bound = operator_norm(pseudo_inverse(z)) * std::sqrt(8.0) * 2.0;
    double lo = 1e300, hi = 0;
    for (double sigma : {1e-1, 1e-2, 1e-3, 1e-4}) {
        const double r = frobenius_norm(add_identity(lrp_predictor(z, z + g * sigma), -1.0)) / sigma;
        CHECK(r <= bound);
        lo = std::min(lo, r);
        hi = std::max(hi, r);
    }
    CHECK(hi / lo <= 1.0 + 1e-6);
}

TEST_CASE("ne") {
    const Matrix d = Matrix::diagonal({1, 0.5});
    CHECK(max_abs_diff(ne_formula(d, d), Matrix::diagonal({1, 0.4375})) <= 1e-15);
    CHECK(max_abs_diff(ne_predictor(d, d), Matrix::diagonal({1, 0.4375})) <= 1e-12);
    PredictorParams params;
    CHECK(max_abs_diff(compute_predictor(PredictorKind::NE, d, d, params), Matrix::diagonal({1, 0.4375})) <= 1e-12);
    CHECK_THROWS_AS(compute_predictor(PredictorKind::NE, d, Matrix{}, params), DomainError);
    CHECK_THROWS_AS(compute_predictor(PredictorKind::LRP, d, Matrix{}, params), DomainError);
}

TEST_CASE("ne approximates lrp near the identity") {
    Rng rng(4);
    for (double h : {1e-1, 3e-2, 1e-2, 1e-3}) {
        // ZᵀZ = I + E with |||E||| = h.
        Vector s(8);
        for (std::size_t i = 0; i < 8; ++i) s[i] = std::sqrt(1.0 + h * (2.0 * rng.uniform() - 1.0));
        s[0] = std::sqrt(1.0 + h);
        const Matrix z = matmul(latents_with_singular_values(40, s, rng), random_orthogonal(8, rng));
        const Matrix zt = z + gaussian_matrix(40, 8, rng) * 0.1;
        const double e = operator_norm(add_identity(gram(z), -1.0));
        CHECK(e <= h * (1 + 1e-9));
        const double gap = frobenius_norm(ne_formula(z, zt) - lrp_predictor(z, zt));
        CHECK(gap <= 2.0 * e * e * operator_norm(zt) * operator_norm(z));
    }
}

TEST_CASE("direct predictors") {
    Rng rng(5);
    const Matrix q = random_orthogonal(6, rng);
    PredictorParams params;
    CHECK(max_abs_diff(compute_predictor(PredictorKind::DirectCopy, q, Matrix{}, params), Matrix::identity(6)) <= 1e-12);
    CHECK(max_abs_diff(compute_predictor(PredictorKind::DirectPred, q, Matrix{}, params), Matrix::identity(6)) <= 1e-12);

    const Matrix z = gaussian_matrix(10, 4, rng);
    params.direct_batch_scaled = true;
    CHECK(max_abs_diff(compute_predictor(PredictorKind::DirectCopy, z, Matrix{}, params), gram(z) / 10.0) <= 1e-14);
}

TEST_CASE("ns predictor uses the 1/b covariance") {
    Rng rng(6);
    const std::size_t b = 12;
    const double sb = std::sqrt(static_cast<double>(b));
    const Matrix z = latents_with_singular_values(b, {2 * sb, sb}, rng);
    PredictorParams params = PredictorParams::defaults_for(PredictorKind::NS);
    params.sqrt_cfg.n_iters = 25;
    CHECK(max_abs_diff(compute_predictor(PredictorKind::NS, z, Matrix{}, params), Matrix::diagonal({2, 1})) <= 1e-8);
    CHECK(covariance_scale(PredictorKind::NS, b, params) == 1.0 / 12.0);
    CHECK(covariance_scale(PredictorKind::Stiefel, b, params) == 1.0);
    CHECK(covariance_scale(PredictorKind::DirectCopy, b, params) == 1.0);

    params.sqrt_cfg.n_iters = 25;
    const Matrix q = compute_predictor(PredictorKind::NS2, z, Matrix{}, params);
    CHECK(max_abs_diff(q, Matrix::diagonal({std::sqrt(2.0), 1.0})) <= 1e-8);
}

TEST_CASE("square-root predictors agree") {
    Rng rng(7);
    const Matrix z = matmul(gaussian_matrix(64, 8, rng), Matrix::diagonal({1, 1, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4}));
    PredictorParams params;
    params.direct_batch_scaled = true;
    const Matrix direct = compute_predictor(PredictorKind::DirectPred, z, Matrix{}, params);
    params.sqrt_cfg.n_iters = 25;
    const Matrix ns = compute_predictor(PredictorKind::NS, z, Matrix{}, params);
    params.sqrt_cfg.n_iters = 5000;
    params.sqrt_cfg.visser_eta = 0.2;
    const Matrix vis = compute_predictor(PredictorKind::Visser, z, Matrix{}, params);
    CHECK(frobenius_norm(ns - direct) <= 1e-4);
    CHECK(frobenius_norm(vis - direct) <= 1e-4);
}

TEST_CASE("stiefel predictor") {
    Rng rng(8);
    const Matrix z = gaussian_matrix(64, 8, rng);
    PredictorParams params = PredictorParams::defaults_for(PredictorKind::Stiefel);
    const Matrix p = compute_predictor(PredictorKind::Stiefel, z, Matrix{}, params);
    // B_n is a polynomial in Σ², so B_nΣ is symmetric.
    CHECK(relative_asymmetry(p) <= 1e-10);
    CHECK(p.all_finite());
}

TEST_CASE("spectral normalisation") {
    Rng rng(9);
    const Matrix z = gaussian_matrix(30, 5, rng);
    PredictorParams params;
    params.spectral_normalize = true;
    for (PredictorKind k : kAllPredictorKinds) {
        PredictorParams pk = PredictorParams::defaults_for(k);
        pk.spectral_normalize = true;
        const Matrix p = compute_predictor(k, z, z + gaussian_matrix(30, 5, rng) * 0.1, pk);
        CHECK(std::abs(operator_norm(p) - 1.0) <= 1e-9);
    }
    CHECK(spectral_normalize(Matrix(3, 3)) == Matrix(3, 3));
}

TEST_CASE("ridge") {
    const Matrix p{{1, 2}, {2, -1}};
    CHECK(apply_ridge(p, 0.0) == p);
    CHECK(max_abs_diff(apply_ridge(Matrix(3, 3), 0.3), Matrix::identity(3) * 0.3) == 0.0);
    Rng rng(10);
    const Matrix s = symmetrize(gaussian_matrix(7, 7, rng));
    const Vector before = sym_eig(s).eigenvalues;
    const Vector after = sym_eig(apply_ridge(s, 0.45)).eigenvalues;
    for (std::size_t i = 0; i < 7; ++i) CHECK(std::abs(after[i] - before[i] - 0.45) <= 1e-12);
    CHECK_THROWS_AS(apply_ridge(Matrix(2, 3), 0.1), DimensionError);
}

TEST_CASE("ema") {
    Rng rng(11);
    const Matrix p0 = gaussian_matrix(4, 4, rng);
    const Matrix c = gaussian_matrix(4, 4, rng);

    PredictorState s{p0, PredictorKind::NS, {}, 0};
    s.params.ema_rho = 0.0;
    CHECK(ema_update(s, c).p == c);
    s.params.ema_rho = 1.0;
    CHECK(ema_update(s, c).p == p0);

    s.params.ema_rho = 0.99;
    for (int k = 0; k < 10; ++k) s = ema_update(s, c);
    CHECK(s.step == 10);
    const Matrix closed = c + (p0 - c) * std::pow(0.99, 10);
    CHECK(max_abs_diff(s.p, closed) <= 1e-13);
    CHECK_THROWS_AS(ema_update(s, Matrix(3, 3)), DimensionError);
}
