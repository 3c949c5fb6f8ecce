#include "pnorm/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace pnorm {

namespace {

constexpr int kSweepBudget = 60;
constexpr double kRotationThreshold = 1e-12;

void require_real_consistent(std::span<const Scalar> entries, Field field, const char* what) {
    if (field != Field::Real) return;
    for (const auto& z : entries) {
        if (z.imag() != 0.0) {
            throw std::invalid_argument(std::string(what) + ": real-field data has a nonzero imaginary part");
        }
    }
}

std::size_t product(const std::vector<std::size_t>& dims) {
    return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

}  // namespace

std::string to_string(Field f) { return f == Field::Real ? "real" : "complex"; }

Field field_from_string(const std::string& s) {
    if (s == "real") return Field::Real;
    if (s == "complex") return Field::Complex;
    throw std::invalid_argument("unknown field '" + s + "' (expected real|complex)");
}

// ---------------------------------------------------------------- Vector

Vector::Vector(std::size_t dim, Field field) : entries_(dim), field_(field) {
    if (dim == 0) throw std::invalid_argument("Vector: dimension must be positive");
}

Vector::Vector(std::vector<Scalar> entries, Field field) : entries_(std::move(entries)), field_(field) {
    if (entries_.empty()) throw std::invalid_argument("Vector: dimension must be positive");
    require_real_consistent(entries_, field_, "Vector");
}

Vector::Vector(std::initializer_list<double> entries) : entries_(entries.begin(), entries.end()), field_(Field::Real) {
    if (entries_.empty()) throw std::invalid_argument("Vector: dimension must be positive");
}

double Vector::norm() const {
    double s = 0.0;
    for (const auto& z : entries_) s += std::norm(z);
    return std::sqrt(s);
}

// ---------------------------------------------------------------- Matrix

Matrix::Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), entries_(rows * cols) {
    if (rows == 0 || cols == 0) throw std::invalid_argument("Matrix: dimensions must be positive");
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<Scalar> entries)
    : rows_(rows), cols_(cols), entries_(std::move(entries)) {
    if (rows == 0 || cols == 0) throw std::invalid_argument("Matrix: dimensions must be positive");
    if (entries_.size() != rows * cols) throw std::invalid_argument("Matrix: entry count does not match rows*cols");
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::diagonal(std::span<const double> diag) {
    Matrix m(diag.size(), diag.size());
    for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
    return m;
}

Matrix Matrix::adjoint() const {
    Matrix out(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c) out(c, r) = std::conj((*this)(r, c));
    return out;
}

// ---------------------------------------------------------------- Tensor

Tensor::Tensor(std::vector<std::size_t> shape, Field field) : shape_(std::move(shape)), field_(field) {
    if (shape_.empty()) throw std::invalid_argument("Tensor: order must be at least 1");
    for (auto d : shape_)
        if (d == 0) throw std::invalid_argument("Tensor: every mode dimension must be positive");
    entries_.assign(product(shape_), Scalar{});
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<Scalar> entries, Field field)
    : shape_(std::move(shape)), entries_(std::move(entries)), field_(field) {
    if (shape_.empty()) throw std::invalid_argument("Tensor: order must be at least 1");
    for (auto d : shape_)
        if (d == 0) throw std::invalid_argument("Tensor: every mode dimension must be positive");
    if (entries_.size() != product(shape_)) {
        throw std::invalid_argument("Tensor: entry count " + std::to_string(entries_.size()) +
                                    " does not match the shape product " + std::to_string(product(shape_)));
    }
    require_real_consistent(entries_, field_, "Tensor");
}

const Scalar& Tensor::at(std::initializer_list<std::size_t> index) const {
    return at(std::span<const std::size_t>(index.begin(), index.size()));
}

Scalar& Tensor::at(std::initializer_list<std::size_t> index) {
    return at(std::span<const std::size_t>(index.begin(), index.size()));
}

std::size_t Tensor::flat_index(std::span<const std::size_t> index) const {
    if (index.size() != shape_.size()) throw std::invalid_argument("Tensor: index arity does not match order");
    std::size_t flat = 0;
    for (std::size_t k = 0; k < shape_.size(); ++k) {
        if (index[k] >= shape_[k]) throw std::out_of_range("Tensor: index out of range");
        flat = flat * shape_[k] + index[k];
    }
    return flat;
}

std::vector<std::size_t> Tensor::multi_index(std::size_t flat) const {
    std::vector<std::size_t> idx(shape_.size());
    for (std::size_t k = shape_.size(); k-- > 0;) {
        idx[k] = flat % shape_[k];
        flat /= shape_[k];
    }
    return idx;
}

Tensor Tensor::with_field(Field field) const {
    require_real_consistent(entries_, field, "Tensor::with_field");
    Tensor out = *this;
    out.field_ = field;
    return out;
}

Tensor& Tensor::operator+=(const Tensor& other) {
    if (shape_ != other.shape_) throw std::invalid_argument("Tensor: shape mismatch in +=");
    for (std::size_t i = 0; i < entries_.size(); ++i) entries_[i] += other.entries_[i];
    if (other.field_ == Field::Complex) field_ = Field::Complex;
    return *this;
}

Tensor& Tensor::operator-=(const Tensor& other) {
    if (shape_ != other.shape_) throw std::invalid_argument("Tensor: shape mismatch in -=");
    for (std::size_t i = 0; i < entries_.size(); ++i) entries_[i] -= other.entries_[i];
    if (other.field_ == Field::Complex) field_ = Field::Complex;
    return *this;
}

Tensor& Tensor::operator*=(Scalar s) {
    for (auto& z : entries_) z *= s;
    if (s.imag() != 0.0) field_ = Field::Complex;
    return *this;
}

Tensor operator+(Tensor a, const Tensor& b) { return a += b; }
Tensor operator-(Tensor a, const Tensor& b) { return a -= b; }
Tensor operator*(Scalar s, Tensor t) { return t *= s; }

// ---------------------------------------------------------------- norms and products

Tensor outer_product(std::span<const Vector> factors) {
    if (factors.empty()) throw std::invalid_argument("outer_product: empty factor list");
    const Field field = factors.front().field();
    std::vector<std::size_t> shape;
    for (const auto& f : factors) {
        if (f.field() != field) throw std::invalid_argument("outer_product: mixed field tags");
        shape.push_back(f.dim());
    }
    Tensor out(shape, field);
    // Grow the product one mode at a time; the running block stays row-major.
    std::vector<Scalar> acc{Scalar{1.0}};
    for (const auto& f : factors) {
        std::vector<Scalar> next;
        next.reserve(acc.size() * f.dim());
        for (const auto& a : acc)
            for (const auto& x : f.entries()) next.push_back(a * x);
        acc = std::move(next);
    }
    std::copy(acc.begin(), acc.end(), out.entries().begin());
    return out;
}

double frobenius_norm(const Tensor& t) {
    double s = 0.0;
    for (const auto& z : t.entries()) s += std::norm(z);
    return std::sqrt(s);
}

double rank_one_frobenius(std::span<const Vector> factors) {
    if (factors.empty()) throw std::invalid_argument("rank_one_frobenius: empty factor list");
    double p = 1.0;
    for (const auto& f : factors) p *= f.norm();
    return p;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) throw std::invalid_argument("max_abs_diff: shape mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

// ---------------------------------------------------------------- reshapes

namespace {

struct Split {
    std::vector<std::size_t> rows;
    std::vector<std::size_t> cols;
};

Split split_modes(std::size_t order, std::span<const std::size_t> row_modes) {
    if (row_modes.empty() || row_modes.size() >= order) {
        throw std::invalid_argument("matricize: row modes must be a nonempty strict subset of the modes");
    }
    std::vector<bool> used(order, false);
    Split s;
    for (auto m : row_modes) {
        if (m >= order) throw std::invalid_argument("matricize: mode index out of range");
        if (used[m]) throw std::invalid_argument("matricize: duplicate mode index");
        used[m] = true;
        s.rows.push_back(m);
    }
    for (std::size_t m = 0; m < order; ++m)
        if (!used[m]) s.cols.push_back(m);
    return s;
}

std::size_t sub_flat(const std::vector<std::size_t>& idx, const std::vector<std::size_t>& modes,
                     const std::vector<std::size_t>& shape) {
    std::size_t f = 0;
    for (auto m : modes) f = f * shape[m] + idx[m];
    return f;
}

std::size_t sub_size(const std::vector<std::size_t>& modes, const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (auto m : modes) n *= shape[m];
    return n;
}

}  // namespace

Matrix matricize(const Tensor& t, std::span<const std::size_t> row_modes) {
    const auto split = split_modes(t.order(), row_modes);
    Matrix out(sub_size(split.rows, t.shape()), sub_size(split.cols, t.shape()));
    for (std::size_t flat = 0; flat < t.size(); ++flat) {
        const auto idx = t.multi_index(flat);
        out(sub_flat(idx, split.rows, t.shape()), sub_flat(idx, split.cols, t.shape())) = t[flat];
    }
    return out;
}

Tensor unmatricize(const Matrix& m, const std::vector<std::size_t>& shape, std::span<const std::size_t> row_modes,
                   Field field) {
    Tensor out(shape, field);
    const auto split = split_modes(out.order(), row_modes);
    if (m.rows() != sub_size(split.rows, shape) || m.cols() != sub_size(split.cols, shape)) {
        throw std::invalid_argument("unmatricize: matrix size does not match shape");
    }
    for (std::size_t flat = 0; flat < out.size(); ++flat) {
        const auto idx = out.multi_index(flat);
        out[flat] = m(sub_flat(idx, split.rows, shape), sub_flat(idx, split.cols, shape));
    }
    return out;
}

// ---------------------------------------------------------------- Jacobi engines

std::vector<double> singular_values(const Matrix& input) {
    // One-sided (Hestenes) Jacobi orthogonalizes columns; work on the side
    // with fewer columns.
    const Matrix a0 = input.cols() > input.rows() ? input.adjoint() : input;
    const std::size_t n_rows = a0.rows();
    const std::size_t n_cols = a0.cols();
    std::vector<std::vector<Scalar>> col(n_cols, std::vector<Scalar>(n_rows));
    for (std::size_t c = 0; c < n_cols; ++c)
        for (std::size_t r = 0; r < n_rows; ++r) col[c][r] = a0(r, c);

    bool converged = n_cols == 1;
    for (int sweep = 0; sweep < kSweepBudget && !converged; ++sweep) {
        converged = true;
        for (std::size_t p = 0; p + 1 < n_cols; ++p) {
            for (std::size_t q = p + 1; q < n_cols; ++q) {
                double alpha = 0.0, beta = 0.0;
                Scalar gamma{};
                for (std::size_t r = 0; r < n_rows; ++r) {
                    alpha += std::norm(col[p][r]);
                    beta += std::norm(col[q][r]);
                    gamma += std::conj(col[p][r]) * col[q][r];
                }
                const double g = std::abs(gamma);
                if (alpha == 0.0 || beta == 0.0 || g <= kRotationThreshold * std::sqrt(alpha * beta)) continue;
                converged = false;
                const Scalar phase = std::conj(gamma) / g;  // makes p^H (q*phase) real positive
                const double zeta = (beta - alpha) / (2.0 * g);
                const double t = (zeta >= 0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t r = 0; r < n_rows; ++r) {
                    const Scalar ap = col[p][r];
                    const Scalar aq = col[q][r] * phase;
                    col[p][r] = c * ap - s * aq;
                    col[q][r] = s * ap + c * aq;
                }
            }
        }
    }
    if (!converged) throw ConvergenceError("singular_values: Jacobi sweep budget exhausted");

    std::vector<double> sv(n_cols);
    for (std::size_t c = 0; c < n_cols; ++c) {
        double s = 0.0;
        for (const auto& z : col[c]) s += std::norm(z);
        sv[c] = std::sqrt(s);
    }
    std::sort(sv.begin(), sv.end(), std::greater<>());
    return sv;
}

double svd_nuclear_norm(const Matrix& m) {
    const auto sv = singular_values(m);
    return std::accumulate(sv.begin(), sv.end(), 0.0);
}

std::vector<double> hermitian_eigenvalues(const Matrix& h) {
    if (h.rows() != h.cols()) throw std::invalid_argument("hermitian_eigenvalues: matrix must be square");
    const std::size_t n = h.rows();
    // H = A + iB is Hermitian iff [[A, -B], [B, A]] is symmetric; the embedding
    // carries every eigenvalue of H twice.
    const std::size_t N = 2 * n;
    std::vector<double> s(N * N);
    auto S = [&](std::size_t r, std::size_t c) -> double& { return s[r * N + c]; };
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < n; ++c) {
            const Scalar z = 0.5 * (h(r, c) + std::conj(h(c, r)));
            S(r, c) = z.real();
            S(r + n, c + n) = z.real();
            S(r, c + n) = -z.imag();
            S(r + n, c) = z.imag();
        }
    }

    double scale = 0.0;
    for (double x : s) scale += x * x;
    const double floor = 1e-15 * std::sqrt(scale);

    bool converged = false;
    for (int sweep = 0; sweep < kSweepBudget && !converged; ++sweep) {
        converged = true;
        for (std::size_t p = 0; p + 1 < N; ++p) {
            for (std::size_t q = p + 1; q < N; ++q) {
                const double apq = S(p, q);
                const double app = S(p, p);
                const double aqq = S(q, q);
                if (std::abs(apq) <= floor || std::abs(apq) <= kRotationThreshold * std::sqrt(std::abs(app * aqq))) continue;
                converged = false;
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(1.0 + theta * theta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double sn = c * t;
                for (std::size_t k = 0; k < N; ++k) {
                    const double skp = S(k, p);
                    const double skq = S(k, q);
                    S(k, p) = c * skp - sn * skq;
                    S(k, q) = sn * skp + c * skq;
                }
                for (std::size_t k = 0; k < N; ++k) {
                    const double spk = S(p, k);
                    const double sqk = S(q, k);
                    S(p, k) = c * spk - sn * sqk;
                    S(q, k) = sn * spk + c * sqk;
                }
            }
        }
    }
    if (!converged) throw ConvergenceError("hermitian_eigenvalues: Jacobi sweep budget exhausted");

    std::vector<double> all(N);
    for (std::size_t i = 0; i < N; ++i) all[i] = S(i, i);
    std::sort(all.begin(), all.end());
    std::vector<double> eig(n);
    for (std::size_t i = 0; i < n; ++i) eig[i] = 0.5 * (all[2 * i] + all[2 * i + 1]);
    return eig;
}

// ---------------------------------------------------------------- symmetry

Tensor permute_modes(const Tensor& t, std::span<const std::size_t> perm) {
    const std::size_t m = t.order();
    if (perm.size() != m) throw std::invalid_argument("permute_modes: permutation arity does not match order");
    std::vector<bool> seen(m, false);
    std::vector<std::size_t> shape(m);
    for (std::size_t k = 0; k < m; ++k) {
        if (perm[k] >= m || seen[perm[k]]) throw std::invalid_argument("permute_modes: not a permutation");
        seen[perm[k]] = true;
        shape[k] = t.dim(perm[k]);
    }
    Tensor out(shape, t.field());
    std::vector<std::size_t> src(m);
    for (std::size_t flat = 0; flat < out.size(); ++flat) {
        const auto idx = out.multi_index(flat);
        for (std::size_t k = 0; k < m; ++k) src[perm[k]] = idx[k];
        out[flat] = t.at(src);
    }
    return out;
}

Tensor symmetrize(const Tensor& t) {
    const std::size_t m = t.order();
    for (std::size_t k = 1; k < m; ++k)
        if (t.dim(k) != t.dim(0)) throw std::invalid_argument("symmetrize: mode dimensions must all be equal");
    std::vector<std::size_t> perm(m);
    std::iota(perm.begin(), perm.end(), 0);
    Tensor acc(t.shape(), t.field());
    std::size_t count = 0;
    do {
        acc += permute_modes(t, perm);
        ++count;
    } while (std::next_permutation(perm.begin(), perm.end()));
    acc *= 1.0 / static_cast<double>(count);
    return acc;
}

double symmetry_defect(const Tensor& t) { return max_abs_diff(t, symmetrize(t)); }

}  // namespace pnorm
