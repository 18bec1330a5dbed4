#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "microres/chain_ladder.hpp"
#include "microres/ibnr_counts.hpp"
#include "microres/stats.hpp"

using namespace microres;

namespace {

RunoffTriangle make(std::vector<std::vector<double>> rows) {
    RunoffTriangle t(rows.size(), rows.size(), 2010);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) t.at(i, j) = rows[i][j];
    return t;
}

}  // namespace

TEST(ChainLadder, TwoByTwo) {
    const auto t = make({{100, 20}, {200}});
    const auto p = cl_project(t);
    ASSERT_EQ(p.factors.size(), 1u);
    EXPECT_DOUBLE_EQ(p.factors[0], 1.2);
    EXPECT_NEAR(p.total, 40.0, 1e-12);
    EXPECT_NEAR(p.completed.at(1, 1), 40.0, 1e-12);

    const auto pi = estimate_reporting_probs(t);
    EXPECT_NEAR(pi[0], 0.833333333333, 1e-10);
    EXPECT_NEAR(pi[1], 0.166666666667, 1e-10);
    EXPECT_NEAR(expected_ibnr(fit_ibnr_counts(t)).total, 40.0, 1e-9);
}

TEST(IbnrCounts, ProportionalTriangleRecoversDelays) {
    const auto t = make({{50, 30, 20}, {100, 60}, {150}});
    const auto pi = estimate_reporting_probs(t);
    EXPECT_NEAR(pi[0], 0.5, 1e-12);
    EXPECT_NEAR(pi[1], 0.3, 1e-12);
    EXPECT_NEAR(pi[2], 0.2, 1e-12);
    const auto m = fit_ibnr_counts(t);
    EXPECT_NEAR(m.p[1], 0.8, 1e-12);
    EXPECT_EQ(m.first_unobserved[2], 1u);
    const auto e = expected_ibnr(m);
    EXPECT_NEAR(e.per_year[0], 0.0, 1e-12);
    EXPECT_NEAR(e.per_year[1], 40.0, 1e-9);
    EXPECT_NEAR(e.per_year[2], 150.0, 1e-9);
}

TEST(IbnrCounts, StandardizedTail) {
    const auto s = standardize_tail({0.5, 0.3, 0.2}, 1);
    ASSERT_EQ(s.size(), 2u);
    EXPECT_NEAR(s[0], 0.6, 1e-15);
    EXPECT_NEAR(s[1], 0.4, 1e-15);
    EXPECT_THROW(standardize_tail({1.0, 0.0, 0.0}, 1), ModelError);
    EXPECT_THROW(standardize_tail({0.5, 0.5}, 2), ModelError);
}

TEST(IbnrCounts, ExpectedCountFormula) {
    EXPECT_DOUBLE_EQ(expected_ibnr(100, 0.8), 25.0);
    EXPECT_THROW(expected_ibnr(100, 0.0), ModelError);
}

TEST(IbnrCounts, MatchesChainLadderOnRandomTriangles) {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> dim(2, 10);
    std::uniform_real_distribution<double> u(1.0, 100.0);
    for (int rep = 0; rep < 20; ++rep) {
        const auto n = static_cast<std::size_t>(dim(rng));
        RunoffTriangle t(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; i + j < n; ++j) t.at(i, j) = std::round(u(rng));
        const double cl = cl_project(t).total;
        const double ib = expected_ibnr(fit_ibnr_counts(t)).total;
        EXPECT_NEAR(ib, cl, 1e-9 * std::max(1.0, cl));
    }
}

TEST(IbnrCounts, DrawsAllocateToUnobservedCells) {
    const auto m = fit_ibnr_counts(make({{50, 30, 20}, {100, 60}, {150}}));
    Rng rng(1);
    for (int k = 0; k < 200; ++k) {
        const auto d = draw_ibnr(m, rng);
        EXPECT_EQ(d.per_year[0], 0);
        EXPECT_EQ(d.at(1, 0) + d.at(1, 1), 0);
        EXPECT_EQ(d.at(2, 1) + d.at(2, 2), d.per_year[2]);
        EXPECT_EQ(d.total, d.per_year[1] + d.per_year[2]);
    }
}

TEST(IbnrCounts, SamplesIndependentOfWorkers) {
    const auto m = fit_ibnr_counts(make({{50, 30, 20}, {100, 60}, {150}}));
    const auto a = sample_ibnr(m, 64, 9, 1), b = sample_ibnr(m, 64, 9, 4);
    for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(a[k].cells, b[k].cells);
}

TEST(ChainLadder, FlaggedZeroColumn) {
    const auto t = make({{0, 5, 1}, {10, 2}, {8}});
    std::vector<bool> fl;
    const auto f = development_factors(t, &fl);
    EXPECT_FALSE(fl[0]);
    const auto z = make({{0, 0, 1}, {0, 0}, {8}});
    const auto fz = development_factors(z, &fl);
    EXPECT_TRUE(fl[0]);
    EXPECT_EQ(fz[0], 1.0);
}

TEST(ChainLadder, OdpBootstrapCentredOnChainLadder) {
    // Poisson-level counts: the reprojection bias of the bootstrap is second order here.
    const auto t = make({{3879, 2944, 1512, 758, 513, 201},
                         {4479, 3229, 1635, 840, 563},
                         {5042, 3600, 1815, 993},
                         {4543, 3443, 1727},
                         {5249, 3915},
                         {4825}});
    const auto b = odp_bootstrap(t, 10000, 1);
    const double mean = stats::mean(b.totals);
    const double se = std::sqrt(stats::variance(b.totals) / static_cast<double>(b.totals.size()));
    EXPECT_GT(b.phi, 0.0);
    EXPECT_NEAR(mean, b.cl_total, 3 * se);
    EXPECT_EQ(odp_bootstrap(t, 100, 5, 1).totals, odp_bootstrap(t, 100, 5, 3).totals);
}

TEST(ChainLadder, TriangleTextRoundTrip) {
    const auto t = make({{357, 766, 610}, {352, 884}, {290}});
    std::ostringstream out;
    write_triangle(out, t);
    std::istringstream in(out.str());
    const auto back = read_triangle(in);
    ASSERT_EQ(back.accident_years(), 3u);
    EXPECT_EQ(back.first_year(), 2010);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; i + j < 3; ++j) EXPECT_EQ(back.at(i, j), t.at(i, j));
}
