#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pnorm/optimizer.hpp"
#include "pnorm/tensor.hpp"

namespace pnorm {

struct CheckReport {
    enum class Comparison {
        Within,   // |measured - reference| <= tolerance
        AtLeast,  // measured >= reference - tolerance
        AtMost,   // measured <= reference + tolerance
    };

    std::string name;
    bool pass = false;
    double measured = 0.0;
    double reference = 0.0;
    double tolerance = 0.0;
    Comparison comparison = Comparison::Within;
    std::string details;

    /// The pass flag implied by the numeric fields.
    bool recompute() const;
};

CheckReport make_report(std::string name, double measured, double reference, double tolerance,
                        CheckReport::Comparison comparison = CheckReport::Comparison::Within, std::string details = {});

/// multi_restart norm of an order-2 target against the sum of its singular
/// values, relative tolerance 1e-2.
CheckReport check_order2(const Tensor& target, const FitConfig& config);

enum class LossKind { AdaptiveRank, NuclearRank, SymmetricNuclearRank, Density };

std::string to_string(LossKind kind);

/// Central finite differences (h = 1e-4) on every real coordinate of a
/// seeded random instance, compared with the analytic gradient. Passes at
/// relative error (2-norm over all coordinates) <= 1e-5. Instances keep
/// every |C_j| >= 0.2 and every core norm in [0.75, 1.25] so the indicator
/// term and the normalization stay smooth under the perturbation.
CheckReport check_gradient(LossKind kind, Field field, std::uint64_t seed);

/// Fits psi as a vector and psi psi* as a density; passes when the density
/// norm lies within 0.03 of the square of the vector norm.
CheckReport check_pure_density_consistency(const Tensor& psi, const FitConfig& config);

/// norm_estimate >= ||target||_F - recon_error - 1e-10.
CheckReport check_frobenius_lower_bound(const FitResult& result, const Tensor& target);

struct OracleResult {
    double norm = 0.0;
    int rank = 0;
    int best_start = 0;
    int converged_starts = 0;
    int n_starts = 0;
};

/// Minimum converged norm over n_starts fits seeded config.seed,
/// config.seed + 1, ... with twice the configured epoch budget. Reference
/// constants are locked with n_starts >= 64. Throws std::runtime_error when
/// no start converges.
OracleResult multi_start_oracle(const Tensor& target, int n_starts, const FitConfig& config,
                                FitKind kind = FitKind::General);

/// Random complex matrix with i.i.d. normal entries, rows x cols.
Tensor random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed);

}  // namespace pnorm
