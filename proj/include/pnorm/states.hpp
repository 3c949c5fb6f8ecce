#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pnorm/optimizer.hpp"
#include "pnorm/tensor.hpp"

namespace pnorm {

// Vector-form states. Entries are real; `field` only sets the tag, which
// decides the field the fit optimizes over.

/// (|00> + |11>)/sqrt(2).
Tensor bell(Field field = Field::Complex);
/// (|0...0> + |1...1>)/sqrt(2) on n qubits.
Tensor ghz(std::size_t n, Field field = Field::Complex);
/// Uniform superposition of the n weight-one basis states.
Tensor w_state(std::size_t n, Field field = Field::Complex);
/// (|001> + |010> + |100> - |111>)/2.
Tensor psi_b(Field field = Field::Complex);

/// Normalized outer product of the factors.
Tensor product_state(std::span<const Vector> factors);
/// Gaussian entries, normalized to unit Frobenius norm.
Tensor random_state(const std::vector<std::size_t>& dims, Field field, std::uint64_t seed);
/// Symmetrized Gaussian tensor, normalized.
Tensor random_symmetric_state(std::size_t d, std::size_t m, Field field, std::uint64_t seed);

// Operator-form states have shape [d_1..d_m, d_1..d_m], ket modes first; the
// row-major layout coincides with the D x D matrix, D = prod d_i.

/// |psi><psi| for a unit-norm vector-form psi.
Tensor density_from_pure(const Tensor& psi);
Tensor operator_tensor(const Matrix& m, const std::vector<std::size_t>& dims, Field field);
Matrix operator_matrix(const Tensor& rho);

/// 3x3 family (2/7)|psi+><psi+| + (alpha/7) sigma+ + ((5-alpha)/7) V sigma+ V,
/// 0 <= alpha <= 5; separable exactly on [2, 3].
Tensor dps_3x3(double alpha);
/// 4x4 family (|psi1><psi1| + |psi2><psi2| + alpha sigma)/(2 + alpha), alpha >= 0.
Tensor dps_4x4(double alpha);
/// 3x3 bound-entangled family with parameter 0 < a < 1.
Tensor zzzg(double a);
/// p * rho + (1 - p) * I/D.
Tensor mix_white_noise(const Tensor& rho, double p);

double trace(const Tensor& rho);
/// Largest |rho_ij - conj(rho_ji)|.
double hermitian_defect(const Tensor& rho);
double min_eigenvalue(const Tensor& rho);

enum class Verdict { Separable, Entangled, Inconclusive };
std::string to_string(Verdict v);

/// Separable when converged with norm <= 1 + tol; entangled when converged and
/// norm - 1 exceeds tol + recon_error / ||rho||_F; otherwise inconclusive.
Verdict separability_verdict(const FitResult& result, double tol, double target_frobenius = 1.0);

/// Named-state registry used by the CLI: name plus key=value parameters.
struct StateSpec {
    std::string name;
    std::map<std::string, double> params;
    Field field = Field::Complex;
};

/// Builds the named state. Vector-form names: bell, ghz, w, psib, product,
/// random, random-symmetric. Operator-form names: dps3, dps4, zzzg, and
/// density-<vector name> for |psi><psi|.
Tensor make_state(const StateSpec& spec);
bool is_density_state(const std::string& name);

}  // namespace pnorm
