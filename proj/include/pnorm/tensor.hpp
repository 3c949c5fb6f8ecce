#pragma once

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pnorm {

using Scalar = std::complex<double>;

/// Scalar field a tensor (or model) lives over. Real-field data is stored in
/// the same complex layout with every imaginary part exactly zero.
enum class Field { Real, Complex };

std::string to_string(Field f);
Field field_from_string(const std::string& s);

/// Raised when a Jacobi sweep budget is exhausted before convergence.
class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class Vector {
public:
    Vector() = default;
    Vector(std::size_t dim, Field field);
    Vector(std::vector<Scalar> entries, Field field);
    Vector(std::initializer_list<double> entries);

    std::size_t dim() const { return entries_.size(); }
    Field field() const { return field_; }
    std::span<const Scalar> entries() const { return entries_; }
    std::span<Scalar> entries() { return entries_; }
    const Scalar& operator[](std::size_t i) const { return entries_[i]; }
    Scalar& operator[](std::size_t i) { return entries_[i]; }

    double norm() const;

private:
    std::vector<Scalar> entries_;
    Field field_ = Field::Real;
};

class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols);
    Matrix(std::size_t rows, std::size_t cols, std::vector<Scalar> entries);

    static Matrix identity(std::size_t n);
    static Matrix diagonal(std::span<const double> diag);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::span<const Scalar> entries() const { return entries_; }
    const Scalar& operator()(std::size_t r, std::size_t c) const { return entries_[r * cols_ + c]; }
    Scalar& operator()(std::size_t r, std::size_t c) { return entries_[r * cols_ + c]; }

    /// Conjugate transpose.
    Matrix adjoint() const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<Scalar> entries_;
};

/// Dense tensor, row-major with the last index fastest.
class Tensor {
public:
    Tensor() = default;
    Tensor(std::vector<std::size_t> shape, Field field);
    Tensor(std::vector<std::size_t> shape, std::vector<Scalar> entries, Field field);

    std::size_t order() const { return shape_.size(); }
    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t dim(std::size_t mode) const { return shape_.at(mode); }
    std::size_t size() const { return entries_.size(); }
    Field field() const { return field_; }

    std::span<const Scalar> entries() const { return entries_; }
    std::span<Scalar> entries() { return entries_; }
    const Scalar& operator[](std::size_t flat) const { return entries_[flat]; }
    Scalar& operator[](std::size_t flat) { return entries_[flat]; }

    const Scalar& at(std::span<const std::size_t> index) const { return entries_[flat_index(index)]; }
    Scalar& at(std::span<const std::size_t> index) { return entries_[flat_index(index)]; }
    const Scalar& at(std::initializer_list<std::size_t> index) const;
    Scalar& at(std::initializer_list<std::size_t> index);

    std::size_t flat_index(std::span<const std::size_t> index) const;
    /// Inverse of flat_index.
    std::vector<std::size_t> multi_index(std::size_t flat) const;

    /// Same data under another field tag; retagging as real requires every
    /// imaginary part to be zero.
    Tensor with_field(Field field) const;

    Tensor& operator+=(const Tensor& other);
    Tensor& operator-=(const Tensor& other);
    Tensor& operator*=(Scalar s);

private:
    std::vector<std::size_t> shape_;
    std::vector<Scalar> entries_;
    Field field_ = Field::Real;
};

Tensor operator+(Tensor a, const Tensor& b);
Tensor operator-(Tensor a, const Tensor& b);
Tensor operator*(Scalar s, Tensor t);

/// Rank-one tensor whose entry at (i_1..i_m) is prod_k factors[k][i_k].
Tensor outer_product(std::span<const Vector> factors);

double frobenius_norm(const Tensor& t);

/// prod_k ||factors[k]||, without materializing the outer product.
double rank_one_frobenius(std::span<const Vector> factors);

/// Reshape to a matrix whose rows enumerate `row_modes` (in the given order)
/// and whose columns enumerate the remaining modes in ascending order.
/// Mode indices are zero-based.
Matrix matricize(const Tensor& t, std::span<const std::size_t> row_modes);

/// Inverse of matricize for a target of the given shape.
Tensor unmatricize(const Matrix& m, const std::vector<std::size_t>& shape,
                   std::span<const std::size_t> row_modes, Field field);

/// Singular values in descending order (one-sided Jacobi).
std::vector<double> singular_values(const Matrix& m);

/// Sum of singular values.
double svd_nuclear_norm(const Matrix& m);

/// Eigenvalues of a Hermitian matrix in ascending order (cyclic Jacobi on the
/// real symmetric embedding).
std::vector<double> hermitian_eigenvalues(const Matrix& h);

/// Average of t over all permutations of its modes.
Tensor symmetrize(const Tensor& t);

/// Largest entrywise deviation of t from symmetrize(t).
double symmetry_defect(const Tensor& t);

/// Tensor with modes reordered: result mode k is input mode perm[k].
Tensor permute_modes(const Tensor& t, std::span<const std::size_t> perm);

/// Largest entrywise magnitude of a - b. Shapes must match.
double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace pnorm
