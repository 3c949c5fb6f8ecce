#include <gtest/gtest.h>

#include <cmath>

#include "pnorm/optimizer.hpp"
#include "pnorm/states.hpp"

using namespace pnorm;

TEST(RankBounds, KnownValues) {
    EXPECT_EQ(rank_upper_bound({2, 2}), 2u);
    EXPECT_EQ(rank_upper_bound({2, 2, 2}), 4u);
    EXPECT_EQ(rank_upper_bound({2, 3, 4}), 6u);
    EXPECT_EQ(rank_upper_bound_symmetric(2, 3), 4u);
    EXPECT_EQ(rank_upper_bound_symmetric(3, 2), 3u);
    EXPECT_EQ(rank_upper_bound_density({2, 2}), 4u);
    EXPECT_EQ(rank_upper_bound_density({3, 3}), 9u);
    EXPECT_THROW(rank_upper_bound({}), std::invalid_argument);
    EXPECT_THROW(rank_upper_bound({2, 0}), std::invalid_argument);
}

TEST(Init, ShapesFieldsAndDeterminism) {
    const CpModel a = init_model({2, 3}, Field::Real, 4, 11);
    const CpModel b = init_model({2, 3}, Field::Real, 4, 11);
    const CpModel c = init_model({2, 3}, Field::Real, 4, 12);
    ASSERT_EQ(a.rank(), 4u);
    for (std::size_t j = 0; j < 4; ++j) {
        EXPECT_EQ(a.coeffs[j], b.coeffs[j]);
        EXPECT_EQ(a.coeffs[j].imag(), 0.0);
        EXPECT_EQ(a.cores[j][1].dim(), 3u);
    }
    EXPECT_NE(a.coeffs[0], c.coeffs[0]);
    const DensityCpModel d = init_density_model({2, 3}, Field::Complex, 5, 1);
    EXPECT_EQ(d.operator_shape(), (std::vector<std::size_t>{2, 3, 2, 3}));
    EXPECT_NE(d.coeffs[0].imag(), 0.0);
    EXPECT_THROW(init_model({2, 2}, Field::Real, 0, 1), std::invalid_argument);
}

TEST(Init, CoreVarianceIsOneOverDimension) {
    double sq = 0.0;
    std::size_t n = 0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const CpModel m = init_model({4, 4}, Field::Real, 8, seed);
        for (const auto& term : m.cores)
            for (const auto& v : term)
                for (auto z : v.entries()) {
                    sq += std::norm(z);
                    ++n;
                }
    }
    EXPECT_NEAR(sq / static_cast<double>(n), 0.25, 0.01);
}

TEST(Adam, FirstStepMovesByStepSizeAgainstGradient) {
    CpModel m = init_model({2, 2}, Field::Complex, 1, 3);
    const CpModel before = m;
    CpGradients g;
    g.coeffs = {Scalar(2.0, -0.5)};
    g.cores = {{{Scalar(1.0, 0.0), Scalar(0.0, 0.0)}, {Scalar(-3.0, 1.0), Scalar(0.0, 4.0)}}};
    AdamState state;
    FitConfig cfg;
    adam_step(m, g, state, cfg);
    // Bias-corrected moments equal g and g^2 after one step.
    const double a = cfg.step_size;
    EXPECT_NEAR(m.coeffs[0].real() - before.coeffs[0].real(), -a * 2.0 / (2.0 + cfg.adam_eps), 1e-15);
    EXPECT_NEAR(m.coeffs[0].imag() - before.coeffs[0].imag(), a * 0.5 / (0.5 + cfg.adam_eps), 1e-15);
    EXPECT_NEAR(m.cores[0][1][1].imag() - before.cores[0][1][1].imag(), -a, 1e-9);
    EXPECT_EQ(m.cores[0][0][1], before.cores[0][0][1]);
    EXPECT_EQ(state.step, 1);
}

TEST(Adam, RealFieldKeepsImaginaryPartsZero) {
    CpModel m = init_model({2, 2}, Field::Real, 2, 3);
    CpGradients g;
    g.coeffs = {Scalar(1.0, 5.0), Scalar(-1.0, 5.0)};
    g.cores = {{{1.0, 1.0}, {1.0, 1.0}}, {{1.0, 1.0}, {1.0, 1.0}}};
    AdamState state;
    adam_step(m, g, state, FitConfig{});
    for (auto c : m.coeffs) EXPECT_EQ(c.imag(), 0.0);
    EXPECT_NO_THROW(m.validate());
}

TEST(Config, ValidateRejectsNonsense) {
    FitConfig c;
    EXPECT_NO_THROW(c.validate());
    c.step_size = 0.0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = FitConfig{};
    c.polish_epochs = c.max_epochs + 1;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = FitConfig{};
    c.restarts = 0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = FitConfig{};
    c.adam_beta1 = 0.9999;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    EXPECT_NEAR(FitConfig{}.recon_tolerance_for(bell(Field::Real)), 1e-4, 1e-16);
}

TEST(Fit, BellReachesSqrtTwoWithRankTwo) {
    for (Field f : {Field::Real, Field::Complex}) {
        const FitResult r = fit(bell(f), FitConfig{});
        EXPECT_TRUE(r.converged);
        EXPECT_NEAR(r.norm_estimate, std::sqrt(2.0), 1e-2);
        EXPECT_EQ(r.nuclear_rank, 2);
        EXPECT_EQ(r.candidate_rank, 2u);
    }
}

TEST(Fit, TraceIsConsistentWithResult) {
    const FitResult r = fit(ghz(3, Field::Complex), FitConfig{});
    ASSERT_EQ(r.trace.size(), static_cast<std::size_t>(r.wall_epochs) + 1);
    EXPECT_EQ(r.trace.front().epoch, 0);
    EXPECT_EQ(r.trace.back().epoch, r.wall_epochs);
    EXPECT_NEAR(r.trace.back().recon_error, r.recon_error, 1e-12);
    EXPECT_NEAR(r.trace.back().norm_sum, r.norm_estimate, 1e-12);
    EXPECT_EQ(r.coeffs.size(), r.candidate_rank);
}

TEST(Fit, IsBitDeterministic) {
    FitConfig c;
    c.seed = 17;
    const FitResult a = fit(random_state({2, 3, 2}, Field::Complex, 1), c);
    const FitResult b = fit(random_state({2, 3, 2}, Field::Complex, 1), c);
    ASSERT_EQ(a.trace.size(), b.trace.size());
    for (std::size_t i = 0; i < a.trace.size(); ++i) {
        EXPECT_EQ(a.trace[i].total_loss, b.trace[i].total_loss);
        EXPECT_EQ(a.trace[i].recon_error, b.trace[i].recon_error);
    }
    EXPECT_EQ(a.norm_estimate, b.norm_estimate);
}

TEST(Fit, PrunedSlotsStayZeroThroughFreezeWindow) {
    FitConfig c;
    c.max_epochs = 3000;
    c.polish_epochs = 1000;
    c.weights.epsilon = 0.3;  // large enough that pruning actually fires
    c.rank_override = 6;
    std::vector<int> frozen_since(6, -1);
    int violations = 0, prunes = 0;
    c.observer = [&](int epoch, std::span<const Scalar> coeffs) {
        for (std::size_t j = 0; j < coeffs.size(); ++j) {
            const bool zero = coeffs[j] == Scalar{};
            if (zero && frozen_since[j] < 0 && epoch % c.prune_period == 0) {
                frozen_since[j] = epoch;
                ++prunes;
            }
            if (frozen_since[j] >= 0 && epoch < frozen_since[j] + c.prune_period && !zero) ++violations;
            if (frozen_since[j] >= 0 && epoch >= frozen_since[j] + c.prune_period) frozen_since[j] = -1;
        }
    };
    fit(product_state(std::vector<Vector>{Vector{1.0, 2.0}, Vector{0.5, -1.0}}), c);
    EXPECT_GT(prunes, 0);
    EXPECT_EQ(violations, 0);
}

TEST(Fit, ErrorsOnBadTargets) {
    EXPECT_THROW(fit(Tensor({2, 2}, Field::Real), FitConfig{}), std::invalid_argument);
    EXPECT_THROW(fit_symmetric(random_state({2, 2, 2}, Field::Real, 3), FitConfig{}), std::invalid_argument);
    EXPECT_THROW(fit_symmetric(random_state({2, 3}, Field::Real, 3), FitConfig{}), std::invalid_argument);
    EXPECT_THROW(fit_density(random_state({2, 3}, Field::Real, 3), FitConfig{}), std::invalid_argument);
    EXPECT_THROW(fit_density(random_state({2, 2, 2}, Field::Real, 3), FitConfig{}), std::invalid_argument);
}

TEST(Fit, SymmetricProductStateHasNormOne) {
    const Vector x{0.6, 0.8};
    const FitResult r = fit_symmetric(product_state(std::vector<Vector>{x, x, x}), FitConfig{});
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.norm_estimate, 1.0, 1e-2);
    EXPECT_EQ(r.nuclear_rank, 1);
}

TEST(Fit, PureProductDensityHasNormOne) {
    Tensor psi({2, 2, 2}, Field::Real);
    psi[0] = 1.0;
    const FitResult r = fit_density(density_from_pure(psi), FitConfig{});
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.norm_estimate, 1.0, 2e-2);
    EXPECT_EQ(r.nuclear_rank, 1);
}

TEST(Restarts, SingleRestartEqualsFit) {
    FitConfig c;
    c.restarts = 1;
    c.seed = 4;
    const Tensor t = ghz(3, Field::Real);
    const FitResult a = multi_restart(t, c);
    const FitResult b = fit(t, c);
    EXPECT_EQ(a.norm_estimate, b.norm_estimate);
    EXPECT_EQ(a.restart_index, 0);
}

TEST(Restarts, SelectionIsMinimumOverConvergedRuns) {
    FitConfig c;
    c.restarts = 4;
    const auto runs = run_restarts(bell(Field::Complex), c, FitKind::General);
    const FitResult& best = select_best(runs);
    for (const auto& r : runs) {
        EXPECT_EQ(r.restart_index, &r - runs.data());
        if (r.converged) {
            EXPECT_LE(best.norm_estimate, r.norm_estimate + 1e-10);
        }
    }
    const FitResult one = multi_restart(bell(Field::Complex), c);
    EXPECT_EQ(one.norm_estimate, best.norm_estimate);
}

TEST(Restarts, SelectBestRules) {
    const double norms[] = {1.5, 1.6, 1.6 + 1e-12};
    const double recons[] = {1e-3, 1e-6, 1e-7};
    std::vector<FitResult> runs(3);
    for (int i = 0; i < 3; ++i) {
        runs[i].norm_estimate = norms[i];
        runs[i].nuclear_rank = 2;
        runs[i].recon_error = recons[i];
        runs[i].converged = i > 0;
        runs[i].restart_index = i;
    }
    EXPECT_EQ(select_best(runs).restart_index, 1);  // tie within 1e-10 goes to the lower index
    runs[1].converged = runs[2].converged = false;
    EXPECT_EQ(select_best(runs).restart_index, 2);  // none converged: smallest residual
    EXPECT_THROW(select_best({}), std::invalid_argument);
}

TEST(Restarts, PartyDims) {
    EXPECT_EQ(operator_party_dims(Tensor({2, 3, 2, 3}, Field::Real)), (std::vector<std::size_t>{2, 3}));
    EXPECT_THROW(operator_party_dims(Tensor({2, 3, 3, 2}, Field::Real)), std::invalid_argument);
}

TEST(Fit, MergingSplitTermsRestoresRankOne) {
    const Tensor t = make_state(StateSpec{"product", {{"m", 4}, {"d", 2}, {"seed", 0}}, Field::Complex});
    FitConfig c;
    c.merge_parallel = false;
    const FitResult split = fit(t, c);
    c.merge_parallel = true;
    const FitResult merged = fit(t, c);
    EXPECT_TRUE(split.converged);
    EXPECT_TRUE(merged.converged);
    EXPECT_GT(split.nuclear_rank, 1);  // the raw descent leaves the direction split
    EXPECT_EQ(merged.nuclear_rank, 1);
    EXPECT_LE(merged.norm_estimate, split.norm_estimate + 1e-9);
    EXPECT_EQ(merged.trace.size(), static_cast<std::size_t>(merged.wall_epochs) + 1);
}
