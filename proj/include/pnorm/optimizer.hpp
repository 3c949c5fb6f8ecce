#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "pnorm/objectives.hpp"
#include "pnorm/rng.hpp"
#include "pnorm/tensor.hpp"

namespace pnorm {

struct FitConfig {
    LossWeights weights;
    double step_size = 0.01;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    int max_epochs = 20000;
    /// The last polish_epochs of the budget decay the step size
    /// geometrically from step_size to step_size * polish_ratio. Constant-step
    /// Adam hovers around a residual of ~1e-3, far above the acceptance gate.
    int polish_epochs = 5000;
    double polish_ratio = 1e-3;
    double prune_tolerance = 1e-2;
    int prune_period = 500;
    bool pruning = true;
    int restarts = 8;
    std::uint64_t seed = 0;
    /// Acceptance gate on the final residual; unset means 1e-4 * ||target||_F.
    std::optional<double> recon_tol;
    /// Replaces the default candidate rank R.
    std::optional<std::size_t> rank_override;
    /// Consecutive quiet epochs (residual and parameter moves below 1e-10)
    /// before the loop stops early.
    int stagnation_epochs = 200;
    /// Objective for the general (non-symmetric, non-density) fit.
    Objective objective = Objective::NuclearRank;
    /// After a converged fit, fold terms whose rank-one directions overlap
    /// by more than 0.99 into one term, re-polish for a short extra run with
    /// the emptied slots frozen, and keep the outcome only when it is still
    /// converged and its norm sum is no larger. Extra epochs count toward
    /// wall_epochs and appear in the trace.
    bool merge_parallel = true;
    /// Called after every parameter update with the epoch just completed and
    /// the current coefficients. Must not retain the span.
    std::function<void(int epoch, std::span<const Scalar> coeffs)> observer;

    void validate() const;
    double recon_tolerance_for(const Tensor& target) const;
};

struct AdamState {
    std::vector<double> first;
    std::vector<double> second;
    long step = 0;
};

struct TraceRow {
    int epoch = 0;
    double total_loss = 0.0;
    double recon_error = 0.0;
    int rank_count = 0;
    double norm_sum = 0.0;
};

struct FitResult {
    double norm_estimate = 0.0;
    int nuclear_rank = 0;
    double recon_error = 0.0;
    bool converged = false;
    std::vector<Scalar> coeffs;  // all R slots; pruned slots hold exact zeros
    std::vector<TraceRow> trace;
    int restart_index = 0;
    int wall_epochs = 0;
    std::size_t candidate_rank = 0;
};

enum class FitKind { General, Symmetric, Density };

/// prod d_i / max d_i.
std::size_t rank_upper_bound(const std::vector<std::size_t>& dims);
/// d^(m-1).
std::size_t rank_upper_bound_symmetric(std::size_t d, std::size_t m);
/// rank_upper_bound(dims)^2.
std::size_t rank_upper_bound_density(const std::vector<std::size_t>& dims);

/// Cores ~ N(0, 1/d_i) and coefficients ~ N(0, 1) per real component; the
/// complex field adds an independent imaginary draw.
CpModel init_model(const std::vector<std::size_t>& dims, Field field, std::size_t rank, std::uint64_t seed);
CpModel init_symmetric_model(std::size_t d, std::size_t m, Field field, std::size_t rank, std::uint64_t seed);
DensityCpModel init_density_model(const std::vector<std::size_t>& dims, Field field, std::size_t rank,
                                  std::uint64_t seed);

/// Bias-corrected Adam update on every real coordinate (complex parameters are
/// two coordinates; real-field imaginary parts stay zero).
void adam_step(CpModel& model, const CpGradients& grads, AdamState& state, const FitConfig& config);
void adam_step(DensityCpModel& model, const DensityGradients& grads, AdamState& state, const FitConfig& config);

FitResult fit(const Tensor& target, const FitConfig& config);
FitResult fit_symmetric(const Tensor& target, const FitConfig& config);
FitResult fit_density(const Tensor& target, const FitConfig& config);

/// Dispatches to the fit routine for `kind`.
FitResult fit_any(const Tensor& target, const FitConfig& config, FitKind kind);

/// Runs config.restarts fits with seeds seed, seed+1, ...; returns the
/// converged run with the smallest norm (ties to the lower index), or the
/// smallest-residual run when none converged.
FitResult multi_restart(const Tensor& target, const FitConfig& config, FitKind kind = FitKind::General);

/// Every restart result, in restart order.
std::vector<FitResult> run_restarts(const Tensor& target, const FitConfig& config, FitKind kind);

/// The selection rule of multi_restart applied to an existing set of runs.
const FitResult& select_best(const std::vector<FitResult>& runs);

/// Party dimensions of an operator-shaped tensor [d..., d...]; throws when
/// the shape is not of that form.
std::vector<std::size_t> operator_party_dims(const Tensor& rho);

}  // namespace pnorm
