#include <gtest/gtest.h>

#include <cmath>

#include "pnorm/objectives.hpp"
#include "pnorm/optimizer.hpp"
#include "pnorm/states.hpp"
#include "pnorm/verify.hpp"

using namespace pnorm;

namespace {

// Independent reconstruction: normalize each core by hand and sum outer
// products through the tensor-core routines.
Tensor reference_reconstruction(const CpModel& m) {
    Tensor out(m.dims, m.field);
    for (std::size_t j = 0; j < m.rank(); ++j) {
        std::vector<Vector> units;
        for (std::size_t k = 0; k < m.order(); ++k) {
            Vector v = m.core(j, k);
            const double n = v.norm();
            for (auto& z : v.entries()) z /= n;
            units.push_back(v);
        }
        out += m.coeffs[j] * outer_product(units);
    }
    return out;
}

CpModel exact_rank_one(Field field) {
    CpModel m;
    m.dims = {2, 3};
    m.field = field;
    m.cores = {{Vector({1.0, 1.0}, field), Vector({0.0, 2.0, 0.0}, field)}};
    m.coeffs = {0.7};
    return m;
}

}  // namespace

TEST(Phi, HasUnitFrobeniusNorm) {
    const CpModel m = init_model({2, 3, 2}, Field::Complex, 3, 1);
    for (std::size_t j = 0; j < m.rank(); ++j) EXPECT_NEAR(frobenius_norm(build_phi(m, j)), 1.0, 1e-14);
}

TEST(Reconstruct, MatchesIndependentSum) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const CpModel m = init_model({3, 2, 2}, Field::Complex, 4, seed);
        EXPECT_LT(max_abs_diff(reconstruct(m), reference_reconstruction(m)), 1e-14);
    }
}

TEST(Reconstruct, SymmetricRepeatsTheCore) {
    const CpModel s = init_symmetric_model(3, 3, Field::Complex, 2, 4);
    CpModel g = s;
    g.symmetric = false;
    for (auto& term : g.cores) term.assign(3, term.front());
    EXPECT_LT(max_abs_diff(reconstruct(s), reconstruct(g)), 1e-15);
    EXPECT_LT(symmetry_defect(reconstruct(s)), 1e-15);
}

TEST(Reconstruct, DensityEntriesUseConjugatedBras) {
    DensityCpModel m;
    m.dims = {2};
    m.field = Field::Complex;
    m.kets = {{Vector(std::vector<Scalar>{1.0, Scalar(0, 1)}, Field::Complex)}};
    m.bras = {{Vector(std::vector<Scalar>{Scalar(0, 2), 0.0}, Field::Complex)}};
    m.coeffs = {1.0};
    const Tensor t = reconstruct(m);
    // |a><b| / (|a||b|): entry (1,0) = (i/sqrt2) * conj(2i)/2.
    EXPECT_NEAR(std::abs(t.at({1, 0}) - Scalar(1.0 / std::sqrt(2.0), 0.0)), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(t.at({0, 0}) - Scalar(0.0, -1.0 / std::sqrt(2.0))), 0.0, 1e-15);
    EXPECT_NEAR(frobenius_norm(build_phi_density(m, 0)), 1.0, 1e-15);
}

TEST(Loss, BreakdownOfExactModel) {
    const CpModel m = exact_rank_one(Field::Real);
    const Tensor target = reconstruct(m);
    LossWeights w;
    const auto n = loss_nrcpd(target, m, w);
    EXPECT_LT(n.recon, 1e-15);
    EXPECT_EQ(n.rank_count, 1);
    EXPECT_DOUBLE_EQ(n.norm_sum, 0.7);
    EXPECT_NEAR(n.total, w.k1 * n.recon + w.k2 * 1 + w.k3 * 0.7, 1e-12);
    const auto a = loss_arcpd(target, m, w);
    EXPECT_NEAR(a.total, w.k1 * a.recon + w.k2 * 1, 1e-12);
}

TEST(Loss, RankCountUsesStrictMagnitude) {
    CpModel m = init_model({2, 2}, Field::Complex, 3, 0);
    LossWeights w;
    m.coeffs = {Scalar(0.0, w.epsilon), Scalar(0.0, 2.0 * w.epsilon), 0.0};
    const Tensor target = bell(Field::Complex);
    EXPECT_EQ(loss_nrcpd(target, m, w).rank_count, 1);
}

TEST(Loss, ReconIsFrobeniusResidual) {
    const CpModel m = init_model({2, 2, 2}, Field::Complex, 4, 9);
    const Tensor target = ghz(3, Field::Complex);
    EXPECT_NEAR(loss_nrcpd(target, m, LossWeights{}).recon, frobenius_norm(target - reconstruct(m)), 1e-13);
}

TEST(Loss, RejectsMismatchedShapesAndDegenerateCores) {
    CpModel m = init_model({2, 2}, Field::Real, 2, 1);
    EXPECT_THROW(loss_nrcpd(ghz(3, Field::Real), m, LossWeights{}), std::invalid_argument);
    m.cores[1][0] = Vector{0.0, 0.0};
    try {
        loss_nrcpd(bell(Field::Real), m, LossWeights{});
        FAIL() << "expected DegenerateCoreError";
    } catch (const DegenerateCoreError& e) {
        EXPECT_EQ(e.term(), 1u);
    }
}

TEST(Model, ValidateCatchesStructuralErrors) {
    CpModel m = init_model({2, 3}, Field::Real, 2, 1);
    m.coeffs[0] = Scalar(1.0, 1.0);
    EXPECT_THROW(m.validate(), std::invalid_argument);
    m = init_model({2, 3}, Field::Real, 2, 1);
    m.cores[0].pop_back();
    EXPECT_THROW(m.validate(), std::invalid_argument);
    m = init_model({2, 3}, Field::Real, 2, 1);
    m.coeffs.push_back(1.0);
    EXPECT_THROW(m.validate(), std::invalid_argument);
    LossWeights w;
    w.k1 = 0.0;
    EXPECT_THROW(w.validate(), std::invalid_argument);
}

TEST(Gradient, VanishesExceptNormTermAtExactReconstruction) {
    const CpModel m = exact_rank_one(Field::Complex);
    const Tensor target = reconstruct(m);
    LossWeights w;
    const auto g = gradients(target, m, w, Objective::NuclearRank);
    EXPECT_NEAR(std::abs(g.coeffs[0] - Scalar(w.k3)), 0.0, 1e-15);
    for (const auto& v : g.cores[0])
        for (const auto& z : v) EXPECT_EQ(z, Scalar{});
    const auto a = gradients(target, m, w, Objective::AdaptiveRank);
    EXPECT_EQ(a.coeffs[0], Scalar{});
}

TEST(Gradient, IndependentOfIndicatorWeight) {
    const CpModel m = init_model({2, 3}, Field::Complex, 3, 2);
    const Tensor target = random_state({2, 3}, Field::Complex, 8);
    LossWeights a, b;
    b.k2 = 1000.0;
    const auto ga = gradients(target, m, a);
    const auto gb = gradients(target, m, b);
    for (std::size_t j = 0; j < m.rank(); ++j) EXPECT_EQ(ga.coeffs[j], gb.coeffs[j]);
}

TEST(Gradient, RealFieldGradientsAreReal) {
    const CpModel m = init_model({2, 2, 3}, Field::Real, 3, 5);
    const auto g = gradients(random_state({2, 2, 3}, Field::Real, 1), m, LossWeights{});
    for (const auto& c : g.coeffs) EXPECT_EQ(c.imag(), 0.0);
    for (const auto& term : g.cores)
        for (const auto& v : term)
            for (const auto& z : v) EXPECT_EQ(z.imag(), 0.0);
}

TEST(Gradient, ScaleInvarianceMakesCoreGradientOrthogonal) {
    // phi depends on a core only through its direction, so Re<g, a> = 0.
    const CpModel m = init_model({3, 3}, Field::Complex, 2, 3);
    const auto g = gradients(random_state({3, 3}, Field::Complex, 2), m, LossWeights{});
    for (std::size_t j = 0; j < m.rank(); ++j) {
        for (std::size_t k = 0; k < 2; ++k) {
            Scalar dot{};
            for (std::size_t p = 0; p < 3; ++p) dot += std::conj(g.cores[j][k][p]) * m.cores[j][k][p];
            EXPECT_NEAR(dot.real(), 0.0, 1e-12);
        }
    }
}

class FiniteDifference : public ::testing::TestWithParam<std::tuple<LossKind, Field>> {};

TEST_P(FiniteDifference, AnalyticGradientMatches) {
    const auto [kind, field] = GetParam();
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        const auto r = check_gradient(kind, field, seed);
        EXPECT_TRUE(r.pass) << r.name << ": " << r.measured << " (" << r.details << ")";
    }
}

INSTANTIATE_TEST_SUITE_P(AllLosses, FiniteDifference,
                         ::testing::Combine(::testing::Values(LossKind::AdaptiveRank, LossKind::NuclearRank,
                                                              LossKind::SymmetricNuclearRank, LossKind::Density),
                                            ::testing::Values(Field::Real, Field::Complex)),
                         [](const auto& info) {
                             return to_string(std::get<0>(info.param)) +
                                    (std::get<1>(info.param) == Field::Real ? "_real" : "_complex");
                         });

TEST(Evaluator, ReuseMatchesOneShot) {
    const Tensor target = random_state({2, 2, 2}, Field::Complex, 4);
    CpEvaluator ev(target, LossWeights{}, Objective::NuclearRank);
    for (std::size_t rank : {3u, 5u, 3u}) {
        const CpModel m = init_model({2, 2, 2}, Field::Complex, rank, rank);
        CpGradients g;
        const auto b = ev.evaluate(m, &g);
        const auto ref = gradients(target, m, LossWeights{});
        EXPECT_EQ(b.total, loss_nrcpd(target, m, LossWeights{}).total);
        ASSERT_EQ(g.coeffs.size(), rank);
        for (std::size_t j = 0; j < rank; ++j) EXPECT_EQ(g.coeffs[j], ref.coeffs[j]);
    }
}

TEST(Summaries, EffectiveRankAndNorm) {
    const std::vector<Scalar> c = {Scalar(0.3, 0.4), 0.0, -0.01, 0.02};
    EXPECT_EQ(effective_rank(c, 1e-2), 2);
    EXPECT_NEAR(norm_estimate(c), 0.5 + 0.01 + 0.02, 1e-15);
}
