#include "orthopred/linalg.hpp"

#include "orthopred/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace orthopred {

namespace {

std::string shape(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw DimensionError(std::string(op) + ": shape mismatch " + shape(a) + " vs " + shape(b));
}

} // namespace

// ---------------------------------------------------------------------------
// Matrix
// ---------------------------------------------------------------------------

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows * cols)
        throw DimensionError("Matrix: data length " + std::to_string(data_.size()) +
                             " does not match " + std::to_string(rows) + "x" + std::to_string(cols));
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) throw DimensionError("Matrix: ragged row literal");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::diagonal(std::span<const double> values) {
    Matrix m(values.size(), values.size());
    for (std::size_t i = 0; i < values.size(); ++i) m(i, i) = values[i];
    return m;
}

Matrix Matrix::diagonal(std::initializer_list<double> values) {
    return diagonal(std::span<const double>(values.begin(), values.size()));
}

Vector Matrix::column(std::size_t j) const {
    Vector out(rows_);
    for (std::size_t i = 0; i < rows_; ++i) out[i] = (*this)(i, j);
    return out;
}

void Matrix::set_column(std::size_t j, std::span<const double> values) {
    if (values.size() != rows_) throw DimensionError("set_column: length mismatch");
    for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = values[i];
}

Matrix Matrix::transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

bool Matrix::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

Matrix& Matrix::operator+=(const Matrix& other) {
    require_same_shape(*this, other, "operator+=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
    require_same_shape(*this, other, "operator-=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
    return *this;
}

Matrix& Matrix::operator*=(double s) noexcept {
    for (double& x : data_) x *= s;
    return *this;
}

Matrix& Matrix::operator/=(double s) noexcept {
    for (double& x : data_) x /= s;
    return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator-(Matrix a) { return a *= -1.0; }
Matrix operator*(Matrix a, double s) { return a *= s; }
Matrix operator*(double s, Matrix a) { return a *= s; }
Matrix operator/(Matrix a, double s) { return a /= s; }
Matrix operator*(const Matrix& a, const Matrix& b) { return matmul(a, b); }

// ---------------------------------------------------------------------------
// Products
// ---------------------------------------------------------------------------

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        throw DimensionError("matmul: inner dimensions differ, " + shape(a) + " * " + shape(b));
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto ci = c.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            auto bk = b.row(k);
            for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aik * bk[j];
        }
    }
    return c;
}

Matrix transpose_matmul(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows())
        throw DimensionError("transpose_matmul: row counts differ, " + shape(a) + " vs " + shape(b));
    Matrix c(a.cols(), b.cols());
    for (std::size_t k = 0; k < a.rows(); ++k) {
        auto ak = a.row(k);
        auto bk = b.row(k);
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const double aki = ak[i];
            if (aki == 0.0) continue;
            auto ci = c.row(i);
            for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aki * bk[j];
        }
    }
    return c;
}

Matrix matmul_transpose(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols())
        throw DimensionError("matmul_transpose: column counts differ, " + shape(a) + " vs " + shape(b));
    Matrix c(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.rows(); ++j) c(i, j) = dot(a.row(i), b.row(j));
    return c;
}

Matrix gram(const Matrix& a) { return transpose_matmul(a, a); }

Vector matvec(const Matrix& a, std::span<const double> x) {
    if (a.cols() != x.size()) throw DimensionError("matvec: length mismatch");
    Vector y(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) y[i] = dot(a.row(i), x);
    return y;
}

Vector transpose_matvec(const Matrix& a, std::span<const double> x) {
    if (a.rows() != x.size()) throw DimensionError("transpose_matvec: length mismatch");
    Vector y(a.cols(), 0.0);
    for (std::size_t k = 0; k < a.rows(); ++k) {
        auto ak = a.row(k);
        for (std::size_t j = 0; j < a.cols(); ++j) y[j] += x[k] * ak[j];
    }
    return y;
}

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DimensionError("dot: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(std::span<const double> v) {
    // Scaled accumulation so that tiny or huge entries do not under/overflow.
    double scale = 0.0;
    for (double x : v) scale = std::max(scale, std::abs(x));
    if (scale == 0.0 || !std::isfinite(scale)) return scale;
    double s = 0.0;
    for (double x : v) {
        const double y = x / scale;
        s += y * y;
    }
    return scale * std::sqrt(s);
}

// ---------------------------------------------------------------------------
// Norms and small helpers
// ---------------------------------------------------------------------------

double frobenius_norm(const Matrix& m) { return norm2(m.data()); }

double trace(const Matrix& m) {
    if (!m.is_square()) throw DimensionError("trace: non-square " + shape(m));
    double t = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) t += m(i, i);
    return t;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "max_abs_diff");
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a.data()[i] - b.data()[i]));
    return d;
}

Matrix symmetrize(const Matrix& m) {
    if (!m.is_square()) throw DimensionError("symmetrize: non-square " + shape(m));
    Matrix s(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) s(i, j) = 0.5 * (m(i, j) + m(j, i));
    return s;
}

double relative_asymmetry(const Matrix& m) {
    if (!m.is_square()) throw DimensionError("relative_asymmetry: non-square " + shape(m));
    const double nrm = frobenius_norm(m);
    if (nrm == 0.0) return 0.0;
    return frobenius_norm(m - m.transpose()) / nrm;
}

Matrix add_identity(Matrix m, double alpha) {
    if (!m.is_square()) throw DimensionError("add_identity: non-square " + shape(m));
    for (std::size_t i = 0; i < m.rows(); ++i) m(i, i) += alpha;
    return m;
}

double operator_norm(const Matrix& m) {
    if (m.empty()) return 0.0;
    const Matrix g = m.rows() < m.cols() ? matmul_transpose(m, m) : gram(m);
    const double gnorm = frobenius_norm(g);
    if (gnorm == 0.0) return 0.0;

    Matrix h = g / gnorm;
    for (int s = 0; s < 4; ++s) {
        h = matmul(h, h);
        const double hn = frobenius_norm(h);
        if (hn == 0.0) break;
        h /= hn;
    }

    // Start from the column of H with the largest norm: H ~ v₁v₁ᵀ, so this
    // column has a component of at least 1/√n along v₁.
    const std::size_t n = g.rows();
    std::size_t best = 0;
    double best_norm = -1.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double cn = norm2(h.column(j));
        if (cn > best_norm) {
            best_norm = cn;
            best = j;
        }
    }
    Vector v = best_norm > 0.0 ? h.column(best) : Vector(n, 1.0);

    double lambda = 0.0;
    constexpr int kMaxIter = 500;
    for (int it = 0; it < kMaxIter; ++it) {
        const double vn = norm2(v);
        if (vn == 0.0) break;
        for (double& x : v) x /= vn;
        const double next = dot(v, matvec(g, v));
        const bool done = it > 0 && std::abs(next - lambda) <= 1e-12 * std::abs(next);
        lambda = next;
        if (done) break;
        v = matvec(h, v);
    }
    return std::sqrt(std::max(lambda, 0.0));
}

// ---------------------------------------------------------------------------
// Symmetric eigendecomposition: cyclic Jacobi
// ---------------------------------------------------------------------------

SymEigResult sym_eig(const Matrix& m) {
    if (!m.is_square()) throw DimensionError("sym_eig: non-square " + shape(m));
    const double asym = relative_asymmetry(m);
    if (asym > 1e-9)
        throw DomainError("sym_eig: input is not symmetric (relative asymmetry " +
                          std::to_string(asym) + ")");

    const std::size_t n = m.rows();
    Matrix a = symmetrize(m);
    Matrix v = Matrix::identity(n);
    const double tol = 1e-13 * frobenius_norm(a);

    auto off_diagonal = [&] {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (i != j) s += a(i, j) * a(i, j);
        return std::sqrt(s);
    };

    constexpr int kMaxSweeps = 100;
    for (int sweep = 0; sweep < kMaxSweeps && off_diagonal() > tol; ++sweep) {
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::hypot(1.0, tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;

                for (std::size_t k = 0; k < n; ++k) {
                    if (k == p || k == q) continue;
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = a(p, k) = c * akp - s * akq;
                    a(k, q) = a(q, k) = s * akp + c * akq;
                }
                a(p, p) -= t * apq;
                a(q, q) += t * apq;
                a(p, q) = a(q, p) = 0.0;

                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

    SymEigResult out{Vector(n), Matrix(n, n)};
    for (std::size_t k = 0; k < n; ++k) {
        out.eigenvalues[k] = a(order[k], order[k]);
        for (std::size_t i = 0; i < n; ++i) out.eigenvectors(i, k) = v(i, order[k]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// SVD: one-sided Jacobi
// ---------------------------------------------------------------------------

void complete_orthonormal_columns(Matrix& basis, std::size_t first_missing) {
    const std::size_t n = basis.rows();
    std::size_t candidate = 0;
    for (std::size_t j = first_missing; j < basis.cols(); ++j) {
        bool placed = false;
        while (!placed && candidate < n) {
            Vector e(n, 0.0);
            e[candidate++] = 1.0;
            // Two passes of modified Gram-Schmidt for numerical orthogonality.
            for (int pass = 0; pass < 2; ++pass) {
                for (std::size_t k = 0; k < j; ++k) {
                    double proj = 0.0;
                    for (std::size_t i = 0; i < n; ++i) proj += basis(i, k) * e[i];
                    for (std::size_t i = 0; i < n; ++i) e[i] -= proj * basis(i, k);
                }
            }
            const double en = norm2(e);
            if (en > 1e-8) {
                for (std::size_t i = 0; i < n; ++i) basis(i, j) = e[i] / en;
                placed = true;
            }
        }
        if (!placed) throw DomainError("complete_orthonormal_columns: more columns than dimensions");
    }
}

namespace {

// One-sided Jacobi on the rows of `w` (k × n, k ≤ n): rotates rows until
// they are mutually orthogonal, accumulating the rotations into `vt` (k × k).
void hestenes(Matrix& w, Matrix& vt) {
    const std::size_t k = w.rows();
    constexpr double kTol = 1e-15;
    constexpr int kMaxSweeps = 80;
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        bool rotated = false;
        for (std::size_t i = 0; i + 1 < k; ++i) {
            for (std::size_t j = i + 1; j < k; ++j) {
                auto wi = w.row(i);
                auto wj = w.row(j);
                const double alpha = dot(wi, wi);
                const double beta = dot(wj, wj);
                const double gamma = dot(wi, wj);
                if (gamma == 0.0 || std::abs(gamma) <= kTol * std::sqrt(alpha * beta)) continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::hypot(1.0, zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t x = 0; x < wi.size(); ++x) {
                    const double a = wi[x];
                    const double b = wj[x];
                    wi[x] = c * a - s * b;
                    wj[x] = s * a + c * b;
                }
                auto vi = vt.row(i);
                auto vj = vt.row(j);
                for (std::size_t x = 0; x < vi.size(); ++x) {
                    const double a = vi[x];
                    const double b = vj[x];
                    vi[x] = c * a - s * b;
                    vj[x] = s * a + c * b;
                }
            }
        }
        if (!rotated) break;
    }
}

// SVD of a matrix with rows ≥ cols.
SvdResult svd_tall(const Matrix& m) {
    const std::size_t r = m.rows();
    const std::size_t c = m.cols();
    Matrix w = m.transpose();       // rows of w are columns of m
    Matrix vt = Matrix::identity(c);  // rows of vt are columns of V
    hestenes(w, vt);

    Vector norms(c);
    for (std::size_t j = 0; j < c; ++j) norms[j] = norm2(w.row(j));
    std::vector<std::size_t> order(c);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return norms[a] > norms[b]; });

    SvdResult out{Matrix(r, c), Vector(c), Matrix(c, c)};
    const double smax = c > 0 ? norms[order[0]] : 0.0;
    std::size_t first_null = c;
    for (std::size_t k = 0; k < c; ++k) {
        const std::size_t src = order[k];
        out.s[k] = norms[src];
        for (std::size_t i = 0; i < c; ++i) out.v(i, k) = vt(src, i);
        const bool null = norms[src] == 0.0 || norms[src] <= 1e-300 ||
                          (smax > 0.0 && norms[src] <= 1e-14 * smax);
        if (null && first_null == c) first_null = k;
        if (first_null == c) {
            for (std::size_t i = 0; i < r; ++i) out.u(i, k) = w(src, i) / norms[src];
        }
    }
    if (first_null < c) complete_orthonormal_columns(out.u, first_null);
    return out;
}

} // namespace

SvdResult svd(const Matrix& m) {
    if (m.rows() >= m.cols()) return svd_tall(m);
    SvdResult t = svd_tall(m.transpose());
    return SvdResult{std::move(t.v), std::move(t.s), std::move(t.u)};
}

Vector singular_values(const Matrix& m) { return svd(m).s; }

Matrix pseudo_inverse(const Matrix& m, double rel_cutoff) {
    if (!(rel_cutoff > 0.0)) throw DomainError("pseudo_inverse: rel_cutoff must be positive");
    const SvdResult d = svd(m);
    Matrix out(m.cols(), m.rows());
    if (d.s.empty() || d.s[0] == 0.0) return out;
    const double cutoff = rel_cutoff * d.s[0];
    for (std::size_t k = 0; k < d.s.size(); ++k) {
        if (d.s[k] <= cutoff) continue;
        const double inv = 1.0 / d.s[k];
        for (std::size_t i = 0; i < m.cols(); ++i) {
            const double vik = d.v(i, k) * inv;
            if (vik == 0.0) continue;
            for (std::size_t j = 0; j < m.rows(); ++j) out(i, j) += vik * d.u(j, k);
        }
    }
    return out;
}

std::size_t numerical_rank(const Matrix& m, double rel_cutoff) {
    const Vector s = singular_values(m);
    if (s.empty() || s[0] == 0.0) return 0;
    return static_cast<std::size_t>(
        std::count_if(s.begin(), s.end(), [&](double x) { return x > rel_cutoff * s[0]; }));
}

} // namespace orthopred
