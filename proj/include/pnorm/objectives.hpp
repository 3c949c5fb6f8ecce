#pragma once

#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "pnorm/tensor.hpp"

namespace pnorm {

/// Core norms below this value make the phi normalization ill-defined.
inline constexpr double kDegeneracyFloor = 1e-12;

/// Below this residual norm the reconstruction term is treated as
/// nondifferentiable and contributes zero gradient.
inline constexpr double kResidualFloor = 1e-14;

/// A core of term `term` fell below kDegeneracyFloor.
class DegenerateCoreError : public std::runtime_error {
public:
    explicit DegenerateCoreError(std::size_t term)
        : std::runtime_error("degenerate core in term " + std::to_string(term)), term_(term) {}
    std::size_t term() const { return term_; }

private:
    std::size_t term_;
};

/// Sum of R weighted rank-one terms C_j * phi_j, each phi_j the unit-Frobenius
/// outer product of its cores. In symmetric mode a term stores a single core
/// that fills every slot.
struct CpModel {
    std::vector<std::size_t> dims;
    Field field = Field::Real;
    bool symmetric = false;
    std::vector<std::vector<Vector>> cores;  // [term][slot]; one slot when symmetric
    std::vector<Scalar> coeffs;

    std::size_t rank() const { return coeffs.size(); }
    std::size_t order() const { return dims.size(); }
    const Vector& core(std::size_t term, std::size_t slot) const {
        return symmetric ? cores[term].front() : cores[term][slot];
    }
    /// Throws std::invalid_argument when a structural invariant is broken.
    void validate() const;
};

/// Sum of R weighted product operators C_j * (x)_i |a_j^i><b_j^i|, each
/// normalized to unit trace norm. Operator tensors have shape [dims..., dims...]
/// with ket modes first.
struct DensityCpModel {
    std::vector<std::size_t> dims;
    Field field = Field::Real;
    std::vector<std::vector<Vector>> kets;  // [term][party]
    std::vector<std::vector<Vector>> bras;  // [term][party]
    std::vector<Scalar> coeffs;

    std::size_t rank() const { return coeffs.size(); }
    std::size_t parties() const { return dims.size(); }
    std::vector<std::size_t> operator_shape() const;
    void validate() const;
};

struct LossWeights {
    double k1 = 100.0;
    double k2 = 1.0;
    double k3 = 1.0;
    double epsilon = 1e-3;

    void validate() const;
};

struct LossBreakdown {
    double recon = 0.0;  // raw ||target - reconstruction||_F
    int rank_count = 0;  // #{j : |C_j| > epsilon}
    double norm_sum = 0.0;
    double total = 0.0;
};

struct CpGradients {
    std::vector<std::vector<std::vector<Scalar>>> cores;  // mirrors CpModel::cores
    std::vector<Scalar> coeffs;
};

struct DensityGradients {
    std::vector<std::vector<std::vector<Scalar>>> kets;
    std::vector<std::vector<std::vector<Scalar>>> bras;
    std::vector<Scalar> coeffs;
};

/// Which objective the gradient differentiates: the adaptive-rank loss has no
/// coefficient-magnitude term.
enum class Objective { AdaptiveRank, NuclearRank };

Tensor build_phi(const CpModel& model, std::size_t term);
Tensor reconstruct(const CpModel& model);

Tensor build_phi_density(const DensityCpModel& model, std::size_t term);
Tensor reconstruct(const DensityCpModel& model);

LossBreakdown loss_arcpd(const Tensor& target, const CpModel& model, const LossWeights& w);
LossBreakdown loss_nrcpd(const Tensor& target, const CpModel& model, const LossWeights& w);
LossBreakdown loss_density(const Tensor& target, const DensityCpModel& model, const LossWeights& w);

/// Descent gradient of k1*||T - T'||_F (+ k3*sum|C_j| for the nuclear-rank
/// objective). Complex parameters get d/dRe + i*d/dIm per coordinate; the
/// indicator term is piecewise constant and contributes nothing.
CpGradients gradients(const Tensor& target, const CpModel& model, const LossWeights& w,
                      Objective objective = Objective::NuclearRank);
DensityGradients gradients(const Tensor& target, const DensityCpModel& model, const LossWeights& w);

namespace detail {
class RankOneEngine;
}

/// Loss and gradient of one target evaluated together with reusable buffers.
/// The fit loops hold one of these; `loss_*` and `gradients` are one-shot
/// wrappers around it.
class CpEvaluator {
public:
    CpEvaluator(const Tensor& target, const LossWeights& w, Objective objective);
    ~CpEvaluator();
    CpEvaluator(CpEvaluator&&) noexcept;
    CpEvaluator& operator=(CpEvaluator&&) noexcept;

    /// Fills `grads` when non-null.
    LossBreakdown evaluate(const CpModel& model, CpGradients* grads);

private:
    std::unique_ptr<detail::RankOneEngine> engine_;
    LossWeights weights_;
    Objective objective_;
};

class DensityEvaluator {
public:
    DensityEvaluator(const Tensor& target, const LossWeights& w);
    ~DensityEvaluator();
    DensityEvaluator(DensityEvaluator&&) noexcept;
    DensityEvaluator& operator=(DensityEvaluator&&) noexcept;

    LossBreakdown evaluate(const DensityCpModel& model, DensityGradients* grads);

private:
    std::unique_ptr<detail::RankOneEngine> engine_;
    LossWeights weights_;
};

/// Number of coefficients with magnitude strictly above `tolerance`.
int effective_rank(std::span<const Scalar> coeffs, double tolerance);

/// sum_j |C_j|.
double norm_estimate(std::span<const Scalar> coeffs);

}  // namespace pnorm
