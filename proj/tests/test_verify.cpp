#include <gtest/gtest.h>

#include <cmath>

#include "pnorm/states.hpp"
#include "pnorm/verify.hpp"

using namespace pnorm;

TEST(Report, PassFlagIsRecomputable) {
    const auto a = make_report("x", 1.0, 1.005, 0.01);
    EXPECT_TRUE(a.pass);
    EXPECT_EQ(a.pass, a.recompute());
    const auto b = make_report("x", 1.0, 1.5, 0.01, CheckReport::Comparison::AtLeast);
    EXPECT_FALSE(b.pass);
    const auto c = make_report("x", 1e-7, 0.0, 1e-5, CheckReport::Comparison::AtMost);
    EXPECT_TRUE(c.pass);
}

TEST(Order2, DiagonalReferenceIsSevenFifths) {
    Tensor t({2, 2}, Field::Real);
    t.at({0, 0}) = 3.0 / 5.0;
    t.at({1, 1}) = 4.0 / 5.0;
    const auto r = check_order2(t, FitConfig{});
    EXPECT_NEAR(r.reference, 7.0 / 5.0, 1e-14);
    EXPECT_TRUE(r.pass) << r.measured << " " << r.details;
}

TEST(Order2, BellAndRandomMatrices) {
    EXPECT_TRUE(check_order2(bell(Field::Complex), FitConfig{}).pass);
    int passed = 0;
    for (std::uint64_t seed = 0; seed < 4; ++seed) passed += check_order2(random_matrix(3, 4, seed), FitConfig{}).pass;
    EXPECT_GE(passed, 4);
    EXPECT_THROW(check_order2(ghz(3, Field::Real), FitConfig{}), std::invalid_argument);
}

TEST(PureDensity, ProductStateBothOne) {
    const auto r = check_pure_density_consistency(product_state(std::vector<Vector>{Vector{1.0, 1.0}, Vector{1.0, 0.0}}),
                                                  FitConfig{});
    EXPECT_TRUE(r.pass) << r.details;
    EXPECT_NEAR(r.reference, 1.0, 1e-2);
}

TEST(FrobeniusBound, HoldsForFit) {
    const Tensor t = random_state({2, 2, 2}, Field::Complex, 3);
    const FitResult r = fit(t, FitConfig{});
    const auto rep = check_frobenius_lower_bound(r, t);
    EXPECT_TRUE(rep.pass);
    FitResult fake = r;
    fake.norm_estimate = 0.5;
    EXPECT_FALSE(check_frobenius_lower_bound(fake, t).pass);
}

TEST(Oracle, BellAndNestedMonotonicity) {
    const auto eight = multi_start_oracle(bell(Field::Real), 8, FitConfig{});
    EXPECT_NEAR(eight.norm, std::sqrt(2.0), 5e-3);
    EXPECT_EQ(eight.n_starts, 8);
    const auto four = multi_start_oracle(bell(Field::Real), 4, FitConfig{});
    EXPECT_GE(four.norm, eight.norm);
    EXPECT_THROW(multi_start_oracle(bell(Field::Real), 0, FitConfig{}), std::invalid_argument);
}

TEST(Oracle, Order2MatchesSvd) {
    const Tensor m = random_matrix(3, 3, 77);
    const std::size_t rows[] = {0};
    EXPECT_NEAR(multi_start_oracle(m, 8, FitConfig{}).norm, svd_nuclear_norm(matricize(m, rows)), 1e-2);
}
