#pragma once

// Dense row-major matrices and the spectral kernels every other module
// builds on: products, norms, a cyclic Jacobi symmetric eigensolver, a
// one-sided Jacobi SVD and the Moore-Penrose pseudo-inverse.
//
// Everything here is a pure function of its arguments; nothing caches or
// mutates shared state, so concurrent calls are safe.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace orthopred {

using Vector = std::vector<double>;

class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    // Throws DimensionError when data.size() != rows * cols.
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
    // Row-list literal: Matrix{{1, 2}, {3, 4}}. Ragged rows throw.
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix identity(std::size_t n);
    static Matrix diagonal(std::span<const double> values);
    static Matrix diagonal(std::initializer_list<double> values);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }
    bool is_square() const noexcept { return rows_ == cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
    Vector column(std::size_t j) const;
    void set_column(std::size_t j, std::span<const double> values);

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }

    Matrix transpose() const;
    bool all_finite() const noexcept;

    Matrix& operator+=(const Matrix& other);
    Matrix& operator-=(const Matrix& other);
    Matrix& operator*=(double s) noexcept;
    Matrix& operator/=(double s) noexcept;

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator-(Matrix a);
Matrix operator*(Matrix a, double s);
Matrix operator*(double s, Matrix a);
Matrix operator/(Matrix a, double s);
Matrix operator*(const Matrix& a, const Matrix& b);  // matmul

// a * b; throws DimensionError unless a.cols() == b.rows().
Matrix matmul(const Matrix& a, const Matrix& b);
// aᵀ * b without materialising the transpose.
Matrix transpose_matmul(const Matrix& a, const Matrix& b);
// a * bᵀ without materialising the transpose.
Matrix matmul_transpose(const Matrix& a, const Matrix& b);
// aᵀ a.
Matrix gram(const Matrix& a);
Vector matvec(const Matrix& a, std::span<const double> x);
Vector transpose_matvec(const Matrix& a, std::span<const double> x);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> v);

double frobenius_norm(const Matrix& m);
double trace(const Matrix& m);
double max_abs_diff(const Matrix& a, const Matrix& b);
// (m + mᵀ) / 2.
Matrix symmetrize(const Matrix& m);
// ‖m − mᵀ‖_F / ‖m‖_F, 0 for the zero matrix.
double relative_asymmetry(const Matrix& m);
Matrix add_identity(Matrix m, double alpha);

// Largest singular value. Power iteration on the smaller Gram matrix,
// preconditioned by repeated squaring (the iterate runs on (MᵀM)^16), with the
// Rayleigh quotient of MᵀM converged to 1e-12 relative.
double operator_norm(const Matrix& m);

struct SymEigResult {
    Vector eigenvalues;   // descending
    Matrix eigenvectors;  // columns, orthonormal
};

// Cyclic Jacobi rotations until the off-diagonal Frobenius mass is at most
// 1e-13 ‖M‖_F. Inputs are symmetrised first; asymmetry above 1e-9 relative is
// rejected with DomainError, non-square input with DimensionError.
SymEigResult sym_eig(const Matrix& m);

struct SvdResult {
    Matrix u;  // rows × k, orthonormal columns
    Vector s;  // k = min(rows, cols), descending, nonnegative
    Matrix v;  // cols × k, orthonormal columns
};

// Thin SVD by one-sided (Hestenes) Jacobi, i.e. Jacobi on MᵀM applied
// implicitly to the columns of M. Columns of U belonging to zero singular
// values are completed by Gram-Schmidt.
SvdResult svd(const Matrix& m);
Vector singular_values(const Matrix& m);

inline constexpr double kDefaultPinvCutoff = 1e-10;

// Moore-Penrose inverse; singular values below rel_cutoff * s_max are dropped.
Matrix pseudo_inverse(const Matrix& m, double rel_cutoff = kDefaultPinvCutoff);

// Rank from the SVD with cutoff rel_cutoff * s_max.
std::size_t numerical_rank(const Matrix& m, double rel_cutoff = 1e-10);

// Overwrite columns [first_missing, cols) of `basis` so that all columns are
// orthonormal, assuming the leading ones already are. Candidates are the
// standard basis vectors, orthogonalised by modified Gram-Schmidt.
void complete_orthonormal_columns(Matrix& basis, std::size_t first_missing);

} // namespace orthopred
