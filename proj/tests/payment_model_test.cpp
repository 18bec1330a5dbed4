#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/distributions/normal.hpp>
#include <random>

#include "microres/payment_model.hpp"
#include "test_support.hpp"

using namespace microres;
using microres::testing::constant_weights;

namespace {

std::vector<double> gpd_sample(double scale, double shape, std::size_t n, std::uint64_t seed) {
    GpdFit g;
    g.scale = scale;
    g.shape = shape;
    Rng rng(seed);
    std::vector<double> z(n);
    for (auto& v : z) v = g.quantile(uniform_open(rng));
    return z;
}

// Independent integral of the spliced density over the real line.
double integrate_density(const SplicedPaymentModel& m, const CovariateVector& x) {
    using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
    const auto f = [&](double y) { return payment_density(m, x, y); };
    const double inf = std::numeric_limits<double>::infinity();
    double total = GK::integrate(f, -inf, m.split_points.front(), 15, 1e-13);
    for (std::size_t k = 0; k + 1 < m.split_points.size(); ++k)
        total += GK::integrate(f, m.split_points[k], m.split_points[k + 1], 15, 1e-13);
    total += GK::integrate(f, m.split_points.back(), inf, 15, 1e-13);
    return total;
}

}  // namespace

TEST(PaymentModel, GpdRecovery) {
    const auto fit = fit_gpd(gpd_sample(2.0, 0.3, 20000, 1));
    EXPECT_FALSE(fit.exponential_fallback);
    EXPECT_NEAR(fit.shape, 0.3, 0.05);
    EXPECT_NEAR(fit.scale, 2.0, 0.1);
    EXPECT_NEAR(fit.mean_excess, fit.scale / (1 - fit.shape), 1e-12);
}

TEST(PaymentModel, GpdNegativeShapeRecovery) {
    const auto fit = fit_gpd(gpd_sample(5.0, -0.2, 20000, 2));
    EXPECT_NEAR(fit.shape, -0.2, 0.05);
    EXPECT_NEAR(fit.scale, 5.0, 0.25);
}

TEST(PaymentModel, GpdFallsBackToExponential) {
    const auto few = fit_gpd({1.0, 2.0, 3.0});
    EXPECT_TRUE(few.exponential_fallback);
    EXPECT_EQ(few.shape, 0.0);
    EXPECT_DOUBLE_EQ(few.mean_excess, 2.0);
    const auto flat = fit_gpd(std::vector<double>(50, 4.0));
    EXPECT_TRUE(flat.exponential_fallback);
}

TEST(PaymentModel, TruncatedNormalRecovery) {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n(600, 400);
    std::vector<double> s;
    while (s.size() < 20000) {
        const double y = n(rng);
        if (y >= 0 && y < 1000) s.push_back(y);
    }
    const auto fit = fit_truncated_normal(s, 0, 1000);
    EXPECT_FALSE(fit.fallback);
    EXPECT_NEAR(fit.mu, 600, 30);
    EXPECT_NEAR(fit.sigma, 400, 30);
    double mean = 0;
    for (double v : s) mean += v;
    mean /= static_cast<double>(s.size());
    EXPECT_NEAR(fit.mean, mean, 3.0);
}

TEST(PaymentModel, TruncatedMeanIdentity) {
    // Symmetric truncation around mu leaves the mean at mu.
    EXPECT_NEAR(TruncNormFit::truncated_mean(5, 2, 1, 9), 5.0, 1e-12);
    // One-sided: mu + sigma phi(a) / (1 - Phi(a)).
    const boost::math::normal N;
    EXPECT_NEAR(TruncNormFit::truncated_mean(0, 2, 1, 1e9), 2.0 * boost::math::pdf(N, 0.5) / boost::math::cdf(boost::math::complement(N, 0.5)), 1e-9);
}

TEST(PaymentModel, FewPointsGiveBinMean) {
    const auto fit = fit_truncated_normal({1.0, 2.0, 6.0}, 0, 10);
    EXPECT_TRUE(fit.fallback);
    EXPECT_DOUBLE_EQ(fit.mean, 3.0);
}

TEST(PaymentModel, StateZeroDotProduct) {
    const double e = expected_payment({0.003, 0.004, 0.762, 0.231}, {-6043, -475, 1404, 7230});
    EXPECT_NEAR(e, 2719.949, 1e-9);
    EXPECT_THROW(expected_payment({0.5, 0.5}, {1.0}), ModelError);
}

TEST(PaymentModel, SplitPointSelection) {
    ModelConfig c;
    std::vector<double> pays;
    for (int i = -100; i <= 900; ++i) pays.push_back(i * 10.0);
    const auto s = select_split_points(pays, c, 0);
    ASSERT_EQ(s.points.size(), 3u);
    EXPECT_NEAR(s.points[0], -500, 1e-9);
    EXPECT_EQ(s.points[1], 0.0);
    EXPECT_NEAR(s.points[2], 8500, 1e-9);
    c.splitPoints[0] = {-100, 0, 5000};
    EXPECT_EQ(select_split_points(pays, c, 3).points, (std::vector<double>{-100, 0, 5000}));
    // All-positive payments: the left split is moved below zero.
    std::vector<double> pos{300, 400, 500, 600};
    ModelConfig d;
    const auto p = select_split_points(pos, d, 0);
    EXPECT_LT(p.points[0], p.points[1]);
    EXPECT_EQ(p.points[1], 0.0);
    EXPECT_TRUE(p.left_degenerate);
}

TEST(PaymentModel, DensityIntegratesToOne) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    const CovariateVector x;
    for (int rep = 0; rep < 5; ++rep) {
        SplicedPaymentModel m;
        m.split_points = {-200.0 * u(rng), 0.0, 500 + 2000 * u(rng)};
        m.left.scale = 100 * u(rng);
        m.left.shape = 0.5 * u(rng) - 0.2;
        m.right.scale = 1000 * u(rng);
        m.right.shape = 0.6 * u(rng);
        for (int b = 0; b < 2; ++b) {
            TruncNormFit t;
            t.lower = m.split_points[static_cast<std::size_t>(b)];
            t.upper = m.split_points[static_cast<std::size_t>(b + 1)];
            t.mu = t.lower + (t.upper - t.lower) * u(rng);
            t.sigma = (t.upper - t.lower) * u(rng);
            t.mean = TruncNormFit::truncated_mean(t.mu, t.sigma, t.lower, t.upper);
            m.body.push_back(t);
        }
        std::vector<double> w{u(rng), u(rng), u(rng), u(rng)};
        double s = 0;
        for (double v : w) s += v;
        for (auto& v : w) v /= s;
        m.weights = constant_weights(w);
        EXPECT_NEAR(integrate_density(m, x), 1.0, 1e-6);
        for (double mass : component_masses(m)) EXPECT_NEAR(mass, 1.0, 1e-9);
    }
}

TEST(PaymentModel, SamplingMatchesExpectation) {
    SplicedPaymentModel m;
    m.split_points = {0.0, 1000.0, 5000.0};
    m.left.scale = 300;
    m.left.shape = 0.1;
    m.right.scale = 2000;
    m.right.shape = 0.2;
    for (auto [lo, hi, mu, sd] : {std::array<double, 4>{0, 1000, 600, 400}, {1000, 5000, 2500, 1500}}) {
        TruncNormFit t;
        t.lower = lo, t.upper = hi, t.mu = mu, t.sigma = sd;
        t.mean = TruncNormFit::truncated_mean(mu, sd, lo, hi);
        m.body.push_back(t);
    }
    m.means = {-300 / 0.9, m.body[0].mean, m.body[1].mean, 5000 + 2000 / 0.8};
    m.weights = constant_weights({0.05, 0.45, 0.35, 0.15});
    const CovariateVector x;
    Rng rng(9);
    const int n = 200000;
    double s = 0;
    std::vector<int> per_bin(4, 0);
    for (int i = 0; i < n; ++i) {
        const double y = sample_payment(m, x, rng);
        per_bin[static_cast<std::size_t>(m.bin(y))]++;
        s += y;
    }
    EXPECT_NEAR(s / n, expected_payment(m, x), 30.0);
    EXPECT_NEAR(per_bin[3] / double(n), 0.15, 0.005);
}

TEST(PaymentModel, FitOnSyntheticPayments) {
    auto spec = microres::testing::toy_spec();
    spec.n_claims = 3000;
    spec.eval_date = Date::from_ymd(2060, 1, 1);
    ModelConfig cfg = spec.config();
    cfg.maxMod = 2;
    cfg.binBootstraps = 1;
    cfg.binSampleSize = 3000;
    cfg.splitPoints[0] = {0, 1000, 5000};
    const auto pf = synth::generate_portfolio(spec, 17);
    const auto rows = discretize_portfolio(pf.observed_claims(spec.eval_date), spec.eval_date, cfg);
    const auto sets = build_state_datasets(rows, cfg);
    const auto tm = fit_time_models(rows, sets, cfg);
    const auto pm = fit_payment_models(rows, sets, tm, cfg);
    ASSERT_EQ(pm.size(), 2u);
    EXPECT_EQ(pm[0].split_points, (std::vector<double>{0, 1000, 5000}));
    EXPECT_NEAR(pm[0].right.shape, 0.3, 0.15);
    for (const auto& r : rows)
        if (r.payment) {
            const auto p = pm[static_cast<std::size_t>(model_index(r.state, cfg))].bin_probs(r.x);
            double s = 0;
            for (double v : p) s += v;
            ASSERT_NEAR(s, 1.0, 1e-12);
        }
    nlohmann::json j = pm[0];
    const auto back = j.get<SplicedPaymentModel>();
    EXPECT_EQ(back.means, pm[0].means);
    EXPECT_EQ(back.bin_probs(rows[0].x), pm[0].bin_probs(rows[0].x));
}
