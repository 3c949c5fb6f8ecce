#include "pnorm/states.hpp"

#include <cmath>
#include <numeric>

#include "pnorm/rng.hpp"

namespace pnorm {

namespace {

Tensor qubit_tensor(std::size_t n, Field field) {
    if (n < 2) throw std::invalid_argument("state: at least two qubits required");
    return Tensor(std::vector<std::size_t>(n, 2), field);
}

Tensor normalized(Tensor t) {
    const double n = frobenius_norm(t);
    if (n == 0.0) throw std::invalid_argument("state: cannot normalize a zero tensor");
    t *= 1.0 / n;
    return t;
}

std::size_t popcount(std::size_t x) {
    std::size_t c = 0;
    for (; x; x >>= 1) c += x & 1U;
    return c;
}

/// m += weight * |ket><ket|.
void add_projector(Matrix& m, std::span<const Scalar> ket, Scalar weight) {
    for (std::size_t r = 0; r < ket.size(); ++r)
        for (std::size_t c = 0; c < ket.size(); ++c) m(r, c) += weight * ket[r] * std::conj(ket[c]);
}

double param(const StateSpec& spec, const std::string& key, double fallback) {
    auto it = spec.params.find(key);
    return it == spec.params.end() ? fallback : it->second;
}

std::size_t int_param(const StateSpec& spec, const std::string& key, std::size_t fallback) {
    const double v = param(spec, key, static_cast<double>(fallback));
    if (v < 0 || v != std::floor(v)) throw std::invalid_argument("state parameter '" + key + "' must be a nonnegative integer");
    return static_cast<std::size_t>(v);
}

}  // namespace

Tensor bell(Field field) { return ghz(2, field); }

Tensor ghz(std::size_t n, Field field) {
    Tensor t = qubit_tensor(n, field);
    const double a = 1.0 / std::sqrt(2.0);
    t[0] = a;
    t[t.size() - 1] = a;
    return t;
}

Tensor w_state(std::size_t n, Field field) {
    Tensor t = qubit_tensor(n, field);
    const double a = 1.0 / std::sqrt(static_cast<double>(n));
    for (std::size_t flat = 0; flat < t.size(); ++flat)
        if (popcount(flat) == 1) t[flat] = a;
    return t;
}

Tensor psi_b(Field field) {
    Tensor t = qubit_tensor(3, field);
    t.at({0, 0, 1}) = 0.5;
    t.at({0, 1, 0}) = 0.5;
    t.at({1, 0, 0}) = 0.5;
    t.at({1, 1, 1}) = -0.5;
    return t;
}

Tensor product_state(std::span<const Vector> factors) { return normalized(outer_product(factors)); }

Tensor random_state(const std::vector<std::size_t>& dims, Field field, std::uint64_t seed) {
    Rng rng(seed);
    Tensor t(dims, field);
    for (auto& z : t.entries()) z = rng.normal();
    if (field == Field::Complex)
        for (auto& z : t.entries()) z += Scalar(0.0, rng.normal());
    return normalized(std::move(t));
}

Tensor random_symmetric_state(std::size_t d, std::size_t m, Field field, std::uint64_t seed) {
    return normalized(symmetrize(random_state(std::vector<std::size_t>(m, d), field, seed)));
}

// ---------------------------------------------------------------- operators

Tensor operator_tensor(const Matrix& m, const std::vector<std::size_t>& dims, Field field) {
    std::vector<std::size_t> shape = dims;
    shape.insert(shape.end(), dims.begin(), dims.end());
    const auto entries = m.entries();
    return Tensor(shape, std::vector<Scalar>(entries.begin(), entries.end()), field);
}

Matrix operator_matrix(const Tensor& rho) {
    const auto dims = operator_party_dims(rho);
    const std::size_t D = std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
    const auto e = rho.entries();
    return Matrix(D, D, std::vector<Scalar>(e.begin(), e.end()));
}

Tensor density_from_pure(const Tensor& psi) {
    if (std::abs(frobenius_norm(psi) - 1.0) > 1e-10) throw std::invalid_argument("density_from_pure: state must have unit norm");
    Matrix m(psi.size(), psi.size());
    add_projector(m, psi.entries(), 1.0);
    return operator_tensor(m, psi.shape(), psi.field());
}

Tensor dps_3x3(double alpha) {
    if (alpha < 0.0 || alpha > 5.0) throw std::invalid_argument("dps_3x3: alpha must lie in [0, 5]");
    Matrix m(9, 9);
    std::vector<Scalar> psi_plus(9);
    for (std::size_t i = 0; i < 3; ++i) psi_plus[3 * i + i] = 1.0 / std::sqrt(3.0);
    add_projector(m, psi_plus, 2.0 / 7.0);
    // sigma+ = (|01><01| + |12><12| + |20><20|)/3; V sigma+ V swaps the parties.
    for (std::size_t i = 0; i < 3; ++i) {
        const std::size_t j = (i + 1) % 3;
        m(3 * i + j, 3 * i + j) += alpha / 21.0;
        m(3 * j + i, 3 * j + i) += (5.0 - alpha) / 21.0;
    }
    return operator_tensor(m, {3, 3}, Field::Complex);
}

Tensor dps_4x4(double alpha) {
    if (alpha < 0.0) throw std::invalid_argument("dps_4x4: alpha must be nonnegative");
    Matrix m(16, 16);
    const double r2 = std::sqrt(2.0);
    std::vector<Scalar> psi1(16), psi2(16);
    psi1[0 * 4 + 0] = 0.5;
    psi1[1 * 4 + 1] = 0.5;
    psi1[2 * 4 + 2] = r2 / 2.0;
    psi2[0 * 4 + 1] = 0.5;
    psi2[1 * 4 + 0] = 0.5;
    psi2[3 * 4 + 3] = r2 / 2.0;
    const double norm = 1.0 / (2.0 + alpha);
    add_projector(m, psi1, norm);
    add_projector(m, psi2, norm);
    const std::pair<std::size_t, std::size_t> sigma[] = {{0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 0}, {2, 1}, {3, 0}, {3, 1}};
    for (auto [i, j] : sigma) m(4 * i + j, 4 * i + j) += norm * alpha / 8.0;
    return operator_tensor(m, {4, 4}, Field::Complex);
}

Tensor zzzg(double a) {
    if (!(a > 0.0 && a < 1.0)) throw std::invalid_argument("zzzg: a must lie in (0, 1)");
    Matrix m(9, 9);
    for (std::size_t i = 0; i < 9; ++i) m(i, i) = a;
    for (std::size_t r : {0, 4, 8})
        for (std::size_t c : {0, 4, 8})
            if (r != c) m(r, c) = a;
    const double b = std::sqrt(1.0 - a * a) / 2.0;
    m(6, 6) = (1.0 + a) / 2.0;
    m(8, 8) = (1.0 + a) / 2.0;
    m(6, 8) = b;
    m(8, 6) = b;
    const double s = 1.0 / (8.0 * a + 1.0);
    for (std::size_t r = 0; r < 9; ++r)
        for (std::size_t c = 0; c < 9; ++c) m(r, c) *= s;
    return operator_tensor(m, {3, 3}, Field::Complex);
}

Tensor mix_white_noise(const Tensor& rho, double p) {
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("mix_white_noise: p must lie in [0, 1]");
    const auto dims = operator_party_dims(rho);
    Matrix m = operator_matrix(rho);
    const std::size_t D = m.rows();
    for (std::size_t r = 0; r < D; ++r)
        for (std::size_t c = 0; c < D; ++c) m(r, c) = p * m(r, c) + (r == c ? (1.0 - p) / static_cast<double>(D) : 0.0);
    return operator_tensor(m, dims, rho.field());
}

double trace(const Tensor& rho) {
    const Matrix m = operator_matrix(rho);
    Scalar t{};
    for (std::size_t i = 0; i < m.rows(); ++i) t += m(i, i);
    return t.real();
}

double hermitian_defect(const Tensor& rho) {
    const Matrix m = operator_matrix(rho);
    double d = 0.0;
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) d = std::max(d, std::abs(m(r, c) - std::conj(m(c, r))));
    return d;
}

double min_eigenvalue(const Tensor& rho) { return hermitian_eigenvalues(operator_matrix(rho)).front(); }

// ---------------------------------------------------------------- verdict

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::Separable: return "separable";
        case Verdict::Entangled: return "entangled";
        case Verdict::Inconclusive: break;
    }
    return "inconclusive";
}

Verdict separability_verdict(const FitResult& result, double tol, double target_frobenius) {
    if (!result.converged) return Verdict::Inconclusive;
    if (result.norm_estimate <= 1.0 + tol) return Verdict::Separable;
    if (result.norm_estimate - 1.0 > tol + result.recon_error / target_frobenius) return Verdict::Entangled;
    return Verdict::Inconclusive;
}

// ---------------------------------------------------------------- registry

bool is_density_state(const std::string& name) {
    return name == "dps3" || name == "dps4" || name == "zzzg" || name.rfind("density-", 0) == 0;
}

Tensor make_state(const StateSpec& spec) {
    const auto& n = spec.name;
    if (n.rfind("density-", 0) == 0) {
        StateSpec inner = spec;
        inner.name = n.substr(8);
        if (is_density_state(inner.name)) throw std::invalid_argument("make_state: nested density state");
        return density_from_pure(make_state(inner));
    }
    if (n == "bell") return bell(spec.field);
    if (n == "ghz") return ghz(int_param(spec, "n", 3), spec.field);
    if (n == "w") return w_state(int_param(spec, "n", 3), spec.field);
    if (n == "psib") return psi_b(spec.field);
    if (n == "product") {
        const std::size_t m = int_param(spec, "m", 2);
        const std::size_t d = int_param(spec, "d", 2);
        Rng rng(int_param(spec, "seed", 0));
        std::vector<Vector> factors;
        for (std::size_t k = 0; k < m; ++k) {
            Vector v(d, spec.field);
            for (std::size_t p = 0; p < d; ++p) {
                v[p] = rng.normal();
                if (spec.field == Field::Complex) v[p] += Scalar(0.0, rng.normal());
            }
            factors.push_back(std::move(v));
        }
        return product_state(factors);
    }
    if (n == "random") {
        const std::size_t m = int_param(spec, "m", 3);
        const std::size_t d = int_param(spec, "d", 2);
        return random_state(std::vector<std::size_t>(m, d), spec.field, int_param(spec, "seed", 0));
    }
    if (n == "random-symmetric") {
        return random_symmetric_state(int_param(spec, "d", 2), int_param(spec, "m", 3), spec.field,
                                      int_param(spec, "seed", 0));
    }
    if (n == "dps3") return dps_3x3(param(spec, "alpha", 2.5)).with_field(spec.field);
    if (n == "dps4") return dps_4x4(param(spec, "alpha", 1.0)).with_field(spec.field);
    if (n == "zzzg") return mix_white_noise(zzzg(param(spec, "a", 0.5)), param(spec, "p", 1.0)).with_field(spec.field);
    throw std::invalid_argument("unknown state '" + n + "'");
}

}  // namespace pnorm
