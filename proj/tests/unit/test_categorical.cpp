#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "specdec/categorical.hpp"
#include "specdec/errors.hpp"
#include "specdec/rng.hpp"

using namespace specdec;

TEST(Categorical, ConstructionValidates) {
    EXPECT_NO_THROW(Categorical({0.5, 0.5}));
    EXPECT_THROW(Categorical({0.5, 0.6}), InvalidDistribution);
    EXPECT_THROW(Categorical({-0.1, 1.1}), InvalidDistribution);
    EXPECT_THROW(Categorical({0.5, std::nan("")}), InvalidDistribution);
}

TEST(Normalize, ScalesWeightsToUnitSum) {
    std::vector<double> w{0.3, 0.1, 0.2};
    Categorical c = normalize(w);
    EXPECT_NEAR(c[0], 0.5, 1e-15);
    EXPECT_NEAR(c[1], 1.0 / 6.0, 1e-15);
    EXPECT_NEAR(c[2], 1.0 / 3.0, 1e-15);
}

TEST(Normalize, RejectsAllZeroAndNegative) {
    std::vector<double> zeros{0.0, 0.0};
    EXPECT_THROW(normalize(zeros), AllZeroWeights);
    std::vector<double> neg{1.0, -0.5};
    EXPECT_THROW(normalize(neg), InvalidDistribution);
}

TEST(TemperatureScale, UnitTemperatureIsIdentity) {
    Categorical c({0.8, 0.2});
    Categorical s = temperature_scale(c, 1.0);
    EXPECT_EQ(s.probs(), c.probs());
}

TEST(TemperatureScale, FlattensAtHighTemperature) {
    // p^(1/2) renormalized: sqrt(0.8)/(sqrt(0.8)+sqrt(0.2)) = 2/3.
    Categorical s = temperature_scale(Categorical({0.8, 0.2}), 2.0);
    EXPECT_NEAR(s[0], 2.0 / 3.0, 1e-12);
    EXPECT_NEAR(s[1], 1.0 / 3.0, 1e-12);
}

TEST(TemperatureScale, SharpensAtLowTemperature) {
    // p^2 renormalized: 0.64/0.68 and 0.04/0.68.
    Categorical s = temperature_scale(Categorical({0.8, 0.2}), 0.5);
    EXPECT_NEAR(s[0], 16.0 / 17.0, 1e-12);
    EXPECT_NEAR(s[1], 1.0 / 17.0, 1e-12);
}

TEST(TemperatureScale, ZeroEntriesStayZero) {
    Categorical s = temperature_scale(Categorical({0.0, 0.3, 0.7}), 3.0);
    EXPECT_EQ(s[0], 0.0);
    EXPECT_NEAR(s[1] + s[2], 1.0, 1e-12);
}

TEST(TemperatureScale, SurvivesTinyTemperature) {
    Categorical s = temperature_scale(Categorical({0.6, 0.4}), 1e-3);
    EXPECT_NEAR(s[0], 1.0, 1e-9);
    EXPECT_TRUE(std::isfinite(s[1]));
}

TEST(TemperatureScale, RejectsNonPositiveTemperature) {
    Categorical c({1.0});
    EXPECT_THROW(temperature_scale(c, 0.0), NonPositiveTemperature);
    EXPECT_THROW(temperature_scale(c, -1.0), NonPositiveTemperature);
}

TEST(Sample, WalksTheCdf) {
    Categorical c({0.2, 0.0, 0.5, 0.3});
    EXPECT_EQ(sample(c, 0.0), 0);
    EXPECT_EQ(sample(c, 0.19), 0);
    EXPECT_EQ(sample(c, 0.21), 2);  // skips the zero-probability slot
    EXPECT_EQ(sample(c, 0.69), 2);
    EXPECT_EQ(sample(c, 0.71), 3);
    EXPECT_EQ(sample(c, 0.999999), 3);
}

TEST(Sample, RoundingOvershootFallsBackToLastPositive) {
    Categorical c({0.7, 0.3, 0.0});
    EXPECT_EQ(sample(c, 1.0), 1);
}

TEST(Sample, MatchesProbabilitiesEmpirically) {
    Categorical c({0.2, 0.3, 0.5});
    SeededRng rng(101);
    const int n = 100000;
    std::vector<int> hits(3, 0);
    for (int i = 0; i < n; ++i) hits[static_cast<size_t>(sample(c, rng))] += 1;
    for (int k = 0; k < 3; ++k) {
        double p = c[k];
        double se = std::sqrt(p * (1 - p) / n);
        EXPECT_NEAR(static_cast<double>(hits[static_cast<size_t>(k)]) / n, p, 4.0 * se);
    }
}

TEST(Residual, MatchesHandComputedFixture) {
    // max(0, p-q) = [0, 0.4] -> [0, 1].
    Categorical r = residual_distribution(Categorical({0.5, 0.5}), Categorical({0.9, 0.1}));
    EXPECT_EQ(r[0], 0.0);
    EXPECT_NEAR(r[1], 1.0, 1e-15);
}

TEST(Residual, EqualDistributionsFallBackToTarget) {
    Categorical p({0.4, 0.6});
    Categorical r = residual_distribution(p, p);
    EXPECT_EQ(r.probs(), p.probs());
}

TEST(Residual, SizeMismatchThrows) {
    EXPECT_THROW(residual_distribution(Categorical({1.0}), Categorical({0.5, 0.5})),
                 InvalidDistribution);
}

TEST(Overlap, MatchesHandComputedFixture) {
    EXPECT_NEAR(overlap(Categorical({0.5, 0.5}), Categorical({0.9, 0.1})), 0.6, 1e-15);
    Categorical p({0.25, 0.75});
    EXPECT_NEAR(overlap(p, p), 1.0, 1e-15);
}

TEST(Overlap, AcceptRejectDecompositionRecoversTarget) {
    // For every token: min(p,q) + (1 - overlap) * residual == p. This is the
    // identity that makes the accept/reject rule lossless per position.
    SeededRng rng(55);
    for (int trial = 0; trial < 200; ++trial) {
        const int v = 2 + static_cast<int>(rng.uniform_index(5));
        std::vector<double> wp(static_cast<size_t>(v)), wq(static_cast<size_t>(v));
        for (auto& x : wp) x = rng.uniform() + 1e-3;
        for (auto& x : wq) x = rng.uniform() + 1e-3;
        Categorical p = normalize(wp), q = normalize(wq);
        const double reject = 1.0 - overlap(p, q);
        Categorical r = residual_distribution(p, q);
        for (int c = 0; c < v; ++c) {
            EXPECT_NEAR(std::min(p[c], q[c]) + reject * r[c], p[c], 1e-12);
        }
    }
}
