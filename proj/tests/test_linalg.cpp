#include "doctest.h"
#include "support.hpp"

#include "orthopred/errors.hpp"
#include "orthopred/linalg.hpp"
#include "orthopred/random.hpp"

#include <cmath>

using namespace orthopred;
using testsupport::naive_matmul;
using testsupport::orth_defect;

TEST_CASE("matmul") {
    const Matrix m{{1, 2}, {3, 4}};
    CHECK(matmul(Matrix::identity(2), m) == m);
    CHECK(matmul(m, Matrix{{0, 1}, {1, 0}}) == Matrix{{2, 1}, {4, 3}});

    Rng rng(11);
    const Matrix a = gaussian_matrix(5, 7, rng);
    const Matrix b = gaussian_matrix(7, 3, rng);
    CHECK(max_abs_diff(matmul(a, b), naive_matmul(a, b)) <= 1e-12);
    CHECK(max_abs_diff(transpose_matmul(a.transpose(), b), naive_matmul(a, b)) <= 1e-12);
    CHECK(max_abs_diff(matmul_transpose(a, b.transpose()), naive_matmul(a, b)) <= 1e-12);

    CHECK_THROWS_AS(matmul(a, a), DimensionError);
}

TEST_CASE("frobenius norm") {
    CHECK(frobenius_norm(Matrix::identity(3)) == doctest::Approx(std::sqrt(3.0)).epsilon(1e-15));
    CHECK(frobenius_norm(Matrix(4, 2)) == 0.0);
    CHECK(frobenius_norm(Matrix{{3, 4}}) == doctest::Approx(5.0).epsilon(1e-15));
}

TEST_CASE("operator norm") {
    CHECK(operator_norm(Matrix::diagonal({3, 1})) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(operator_norm(Matrix{{0, 1}, {0, 0}}) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(operator_norm(Matrix(3, 3)) == 0.0);

    Rng rng(5);
    for (int t = 0; t < 20; ++t) {
        const Matrix m = gaussian_matrix(8, 8, rng);
        const double s1 = singular_values(m).front();
        CHECK(std::abs(operator_norm(m) - s1) <= 1e-9 * s1);
    }
    // Near-degenerate top pair.
    const Matrix d = Matrix::diagonal({1.0, 1.0 - 1e-9, 0.3});
    CHECK(std::abs(operator_norm(d) - 1.0) <= 1e-9);
}

TEST_CASE("norm sandwich") {
    Rng rng(17);
    for (int t = 0; t < 50; ++t) {
        const std::size_t r = 2 + t % 7, c = 2 + (t * 3) % 5;
        const Matrix m = gaussian_matrix(r, c, rng);
        const double op = operator_norm(m), fro = frobenius_norm(m);
        const double rank = static_cast<double>(numerical_rank(m));
        CHECK(op <= fro * (1 + 1e-12));
        CHECK(fro <= std::sqrt(rank) * op * (1 + 1e-12));
    }
}

TEST_CASE("sym_eig") {
    auto e = sym_eig(Matrix::diagonal({2, 1}));
    CHECK(e.eigenvalues[0] == doctest::Approx(2));
    CHECK(e.eigenvalues[1] == doctest::Approx(1));
    CHECK(std::abs(std::abs(e.eigenvectors(0, 0)) - 1.0) < 1e-14);

    e = sym_eig(Matrix{{2, 1}, {1, 2}});
    CHECK(std::abs(e.eigenvalues[0] - 3.0) < 1e-14);
    CHECK(std::abs(e.eigenvalues[1] - 1.0) < 1e-14);

    CHECK_THROWS_AS(sym_eig(Matrix(2, 3)), DimensionError);
    CHECK_THROWS_AS(sym_eig(Matrix{{1, 2}, {0, 1}}), DomainError);

    Rng rng(3);
    for (std::size_t f : {16u, 64u, 256u}) {
        const Matrix g = gaussian_matrix(f, f, rng);
        const Matrix s = symmetrize(gram(g));
        const auto r = sym_eig(s);
        Matrix vd = r.eigenvectors;
        for (std::size_t j = 0; j < f; ++j)
            for (std::size_t i = 0; i < f; ++i) vd(i, j) *= r.eigenvalues[j];
        CHECK(testsupport::rel_fro(matmul_transpose(vd, r.eigenvectors), s) <= 1e-10);
        CHECK(orth_defect(r.eigenvectors) <= 1e-10);
        for (std::size_t j = 1; j < f; ++j) CHECK(r.eigenvalues[j - 1] >= r.eigenvalues[j]);
    }
}

TEST_CASE("svd") {
    auto d = svd(Matrix::diagonal({2, -1}));
    CHECK(d.s[0] == doctest::Approx(2));
    CHECK(d.s[1] == doctest::Approx(1));

    Rng rng(7);
    Vector u = gaussian_vector(5, rng), v = gaussian_vector(4, rng);
    const double nu = norm2(u), nv = norm2(v);
    Matrix outer(5, 4);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 4; ++j) outer(i, j) = u[i] / nu * v[j] / nv;
    d = svd(outer);
    CHECK(std::abs(d.s[0] - 1.0) < 1e-12);
    for (std::size_t k = 1; k < d.s.size(); ++k) CHECK(d.s[k] < 1e-14);
    CHECK(orth_defect(d.u) < 1e-12);
    CHECK(orth_defect(d.v) < 1e-12);

    for (auto [r, c] : {std::pair{6, 4}, {4, 6}, {9, 9}}) {
        const Matrix m = gaussian_matrix(r, c, rng);
        d = svd(m);
        Matrix us = d.u;
        for (std::size_t j = 0; j < d.s.size(); ++j)
            for (std::size_t i = 0; i < us.rows(); ++i) us(i, j) *= d.s[j];
        CHECK(testsupport::rel_fro(matmul_transpose(us, d.v), m) <= 1e-9);
        for (std::size_t j = 1; j < d.s.size(); ++j) CHECK(d.s[j - 1] >= d.s[j]);
    }

    // Agreement with sym_eig on PSD input.
    const Matrix g = gaussian_matrix(12, 12, rng);
    const Matrix s = symmetrize(gram(g));
    const Vector sv = singular_values(s);
    const Vector ev = sym_eig(s).eigenvalues;
    for (std::size_t i = 0; i < 12; ++i) CHECK(std::abs(sv[i] - ev[i]) <= 1e-9);
}

TEST_CASE("pseudo inverse") {
    CHECK(max_abs_diff(pseudo_inverse(Matrix::identity(4)), Matrix::identity(4)) < 1e-15);
    CHECK(max_abs_diff(pseudo_inverse(Matrix::diagonal({2, 0})), Matrix::diagonal({0.5, 0})) < 1e-15);

    Rng rng(23);
    const Matrix m = gaussian_matrix(5, 5, rng);
    CHECK(max_abs_diff(matmul(m, pseudo_inverse(m)), Matrix::identity(5)) <= 1e-8);

    for (std::size_t f : {3u, 16u, 64u}) {
        const Matrix a = gaussian_matrix(f + 4, f, rng);
        const Matrix p = pseudo_inverse(a);
        CHECK(max_abs_diff(a * p * a, a) <= 1e-8);
        CHECK(max_abs_diff(p * a * p, p) <= 1e-8);
        const Matrix ap = a * p, pa = p * a;
        CHECK(max_abs_diff(ap, ap.transpose()) <= 1e-8);
        CHECK(max_abs_diff(pa, pa.transpose()) <= 1e-8);
    }
}
