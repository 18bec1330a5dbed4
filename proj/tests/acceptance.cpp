// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <fmt/format.h>

#include "microres/microres.hpp"
#include "test_support.hpp"

using namespace microres;
using microres::testing::constant_weights;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            if (pass) detail.clear();
            pass = false;
            detail += (detail.empty() ? "" : "; ") + what;
        }
    }
};

// ---------------------------------------------------------------------------
// 1. Golden discretization

Outcome golden_discretization() {
    Outcome o;
    const auto cfg = microres::testing::dmy_config();
    const auto p = microres::testing::load_log("golden_log.csv", cfg);
    o.require(p.claims.size() == 1 && p.anomalies.empty(), "fixture did not parse into one claim");
    if (!o.pass) return o;
    const auto rows = discretize_claim(p.claims[0], Date::from_ymd(2013, 1, 1), cfg);
    std::ifstream in(microres::testing::data_path("golden_periods.csv"));
    const auto expected = csv::Table::read(in, ',');
    o.require(rows.size() == expected.size(), fmt::format("{} rows, expected {}", rows.size(), expected.size()));
    if (!o.pass) return o;
    auto opt = [](const std::string& s) { return s == "NA" ? std::optional<Money>{} : parse_money(s); };
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& e = expected.row(i);
        const auto& r = rows[i];
        const bool same = r.policy_id == e[0] && r.cum_pay == *parse_money(e[1]) &&
                          format_date(r.ref_date, DateFormat::DayMonthYear) == e[2] && to_string(r.transition) == e[3] &&
                          std::to_string(r.x.deltRep) == e[4] && (r.x.fastRep ? "1" : "0") == e[5] &&
                          std::to_string(r.x.inProcTime) == e[6] && r.x.delt1Pay == opt(e[7]) &&
                          r.x.cumDelt1Pay == opt(e[8]) && std::to_string(r.x.inStateTime) == e[9] &&
                          "S" + std::to_string(r.state) == e[10];
        o.require(same, fmt::format("row {} differs", i + 1));
    }
    o.require(rows[0].payment && rows[0].payment->cents() == 412711, "first payment is not 4127.11");
    o.require(rows[1].payment && rows[1].payment->cents() == -382999, "second payment is not -3829.99");
    if (o.pass) o.detail = "8 rows bit-exact";
    return o;
}

// ---------------------------------------------------------------------------
// 2. Chain-ladder consistency

Outcome chain_ladder_consistency() {
    Outcome o;
    std::mt19937_64 rng(2024);
    double worst = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t I = 2 + rng() % 9;
        const std::size_t J = 2 + rng() % (I - 1);
        RunoffTriangle t(I, J, 2000);
        std::uniform_real_distribution<double> level(20, 500), share(0.05, 1.0);
        std::vector<double> dev(J);
        for (auto& d : dev) d = share(rng);
        for (std::size_t i = 0; i < I; ++i) {
            const double a = level(rng);
            for (std::size_t j = 0; j < J && t.observed(i, j); ++j)
                t.at(i, j) = 1.0 + static_cast<double>(std::poisson_distribution<long>(a * dev[j])(rng));
        }
        const double cl = cl_project(t).total;
        const double nb = expected_ibnr(fit_ibnr_counts(t)).total;
        worst = std::max(worst, std::abs(cl - nb) / std::max(1.0, std::abs(cl)));
    }
    o.require(worst <= 1e-9, fmt::format("max relative difference {:.3e}", worst));
    if (o.pass) o.detail = fmt::format("50 triangles, max relative difference {:.1e}", worst);
    return o;
}

// ---------------------------------------------------------------------------
// 3. Negative-binomial moments

Outcome negative_binomial_moments() {
    Outcome o;
    std::string summary;
    for (auto [r, p] : {std::pair{10.0, 0.5}, {100.0, 0.8}, {283.0, 0.95}}) {
        IbnrCountModel m;
        m.pi = {0.5, 0.5};
        m.flagged = {false, false};
        m.r = {r};
        m.p = {p};
        m.first_unobserved = {1};
        const std::size_t n = 100000;
        const auto draws = sample_ibnr(m, n, 77);
        std::vector<double> x(n);
        for (std::size_t k = 0; k < n; ++k) x[k] = static_cast<double>(draws[k].total);
        const double mean = stats::mean(x);
        double m2 = 0.0, m4 = 0.0;
        for (double v : x) {
            const double d = v - mean;
            m2 += d * d;
            m4 += d * d * d * d;
        }
        const double var = m2 / static_cast<double>(n - 1);
        m4 /= static_cast<double>(n);
        const double mu = r * (1 - p) / p, sigma2 = r * (1 - p) / (p * p);
        const double se_mean = std::sqrt(var / static_cast<double>(n));
        const double se_var = std::sqrt((m4 - var * var) / static_cast<double>(n));
        const double zm = (mean - mu) / se_mean, zv = (var - sigma2) / se_var;
        o.require(std::abs(zm) <= 3 && std::abs(zv) <= 3,
                  fmt::format("(r={}, p={}): mean z {:.2f}, variance z {:.2f}", r, p, zm, zv));
        summary += fmt::format("{}(r={},p={}): z {:.2f}/{:.2f}", summary.empty() ? "" : ", ", r, p, zm, zv);
    }
    if (o.pass) o.detail = summary;
    return o;
}

// ---------------------------------------------------------------------------
// 4. MLE correctness

glm::DesignMatrix random_design(std::mt19937_64& rng, int n, int p, int K) {
    std::normal_distribution<double> z;
    Eigen::MatrixXd X(n, p);
    Eigen::MatrixXd beta(K - 1, p);
    for (int k = 0; k < K - 1; ++k)
        for (int j = 0; j < p; ++j) beta(k, j) = 0.5 * z(rng);
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        X(i, 0) = 1.0;
        for (int j = 1; j < p; ++j) X(i, j) = z(rng);
        std::vector<double> w(static_cast<std::size_t>(K), 1.0);
        for (int k = 1; k < K; ++k) w[static_cast<std::size_t>(k)] = std::exp(beta.row(k - 1).dot(X.row(i)));
        std::discrete_distribution<int> pick(w.begin(), w.end());
        labels[static_cast<std::size_t>(i)] = pick(rng);
    }
    for (int k = 0; k < K; ++k) labels[static_cast<std::size_t>(k)] = k;
    std::vector<std::string> names;
    for (int k = 0; k < K; ++k) names.push_back("c" + std::to_string(k));
    return glm::DesignMatrix::from_labels(X, labels, names);
}

Outcome mle_correctness() {
    Outcome o;
    glm::FitOptions exact;
    exact.ridge = 0.0;
    exact.tol = 1e-12;
    std::mt19937_64 rng(4);
    double grad_dev = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        const int K = 2 + static_cast<int>(rng() % 3), p = 1 + static_cast<int>(rng() % 4);
        const auto d = random_design(rng, 60 + static_cast<int>(rng() % 200), p, K);
        Eigen::MatrixXd coef = Eigen::MatrixXd::Random(K - 1, p) * 0.7;
        grad_dev = std::max(grad_dev, glm::check_gradient(d, coef));
    }
    o.require(grad_dev <= 1e-6, fmt::format("gradient deviation {:.2e}", grad_dev));

    double freq_dev = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        const int K = 2 + static_cast<int>(rng() % 3), n = 50 + static_cast<int>(rng() % 500);
        Eigen::MatrixXd X = Eigen::MatrixXd::Ones(n, 1);
        std::vector<int> labels(static_cast<std::size_t>(n));
        std::vector<double> w(static_cast<std::size_t>(K));
        for (auto& v : w) v = 0.1 + std::uniform_real_distribution<double>(0, 1)(rng);
        std::discrete_distribution<int> pick(w.begin(), w.end());
        for (auto& l : labels) l = pick(rng);
        for (int k = 0; k < K; ++k) labels[static_cast<std::size_t>(k)] = k;
        std::vector<std::string> names;
        for (int k = 0; k < K; ++k) names.push_back("c" + std::to_string(k));
        const auto fit = glm::fit_multinomial(glm::DesignMatrix::from_labels(X, labels, names), exact);
        const auto probs = glm::predict_probs(fit, Eigen::RowVectorXd::Ones(1));
        for (int k = 0; k < K; ++k) {
            const double f = static_cast<double>(std::count(labels.begin(), labels.end(), k)) / n;
            freq_dev = std::max(freq_dev, std::abs(probs(k) - f));
        }
    }
    o.require(freq_dev <= 1e-10, fmt::format("intercept-only deviation {:.2e}", freq_dev));

    double grid_gain = -1e300;
    for (int rep = 0; rep < 20; ++rep) {
        const auto d = random_design(rng, 200, 2, 2);
        const auto fit = glm::fit_binomial(d, exact);
        const double a0 = fit.coefficients(0, 0), b0 = fit.coefficients(0, 1);
        for (double a = a0 - 1; a <= a0 + 1; a += 0.02)
            for (double b = b0 - 1; b <= b0 + 1; b += 0.02) {
                Eigen::MatrixXd c(1, 2);
                c << a, b;
                grid_gain = std::max(grid_gain, glm::detail::log_likelihood(d, c) - fit.log_likelihood);
            }
    }
    o.require(grid_gain <= 1e-6, fmt::format("grid search beats fit by {:.2e}", grid_gain));
    if (o.pass)
        o.detail = fmt::format("gradient {:.1e}, frequencies {:.1e}, grid gain {:.1e}", grad_dev, freq_dev, grid_gain);
    return o;
}

// ---------------------------------------------------------------------------
// 5. Hazard normalization and forcing

Outcome hazard_normalization() {
    Outcome o;
    std::mt19937_64 rng(5);
    std::normal_distribution<double> z(0, 2);
    std::uniform_real_distribution<double> u(0, 1);

    // A hazard model over one categorical covariate; coefficients redrawn per case.
    std::vector<std::string> seen{"A", "B", "C"};
    for (int i = 0; i < 60; ++i) seen.push_back(i % 3 == 0 ? "A" : i % 3 == 1 ? "B" : "C");
    FeatureEncoder enc({make_categorical("cover", FeatureSource::Base, "cover", seen, 1)});
    const auto covA = std::make_shared<const StaticCovariates>(StaticCovariates{{"cover", std::string("A")}});
    const auto covC = std::make_shared<const StaticCovariates>(StaticCovariates{{"cover", std::string("C")}});

    double worst = 0.0;
    bool zeros = true;
    for (int rep = 0; rep < 10000; ++rep) {
        HazardModel hm;
        hm.model.outcomes = {0, 1, 2, 3};
        hm.model.encoder = enc;
        hm.model.fit.coefficients.resize(3, static_cast<Eigen::Index>(enc.width()));
        for (Eigen::Index i = 0; i < hm.model.fit.coefficients.size(); ++i) hm.model.fit.coefficients(i) = z(rng);
        hm.model.rebuild_table();
        CovariateVector x;
        x.base = rep % 2 ? covA : covC;
        const auto h = hazards_for(hm, x);

        // Raw random vectors too, some with an impossible TN.
        Hazards r{u(rng), u(rng), rep % 7 == 0 ? 0.0 : u(rng), u(rng)};
        const double s = r[0] + r[1] + r[2] + r[3];
        for (auto& v : r) v /= s;

        for (const auto& v : {h, force_state_exit(h), force_terminal_only(h), force_state_exit(r), force_terminal_only(r)}) {
            double t = 0;
            for (double p : v) t += p;
            worst = std::max(worst, std::abs(t - 1.0));
        }
        zeros = zeros && force_state_exit(h)[0] == 0.0 && force_terminal_only(h)[1] == 0.0 &&
                force_state_exit(r)[0] == 0.0 && force_terminal_only(r)[1] == 0.0;
    }
    o.require(worst <= 1e-12, fmt::format("sum deviates by {:.2e}", worst));
    o.require(zeros, "forced probability not exactly zero");
    if (o.pass) o.detail = fmt::format("10000 cases, max |sum - 1| {:.1e}", worst);
    return o;
}

// ---------------------------------------------------------------------------
// 6. Spliced density normalization

Outcome spliced_density() {
    Outcome o;
    using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
    const double inf = std::numeric_limits<double>::infinity();
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    double worst_int = 0.0, worst_dot = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
        SplicedPaymentModel m;
        const int L = 3 + rep % 3;  // 3..5 bins
        double b = -300.0 * u(rng);
        m.split_points.push_back(b);
        for (int k = 1; k < L - 1; ++k) m.split_points.push_back(b += 200 + 3000 * u(rng));
        m.left.scale = 200 * u(rng);
        m.left.shape = 0.6 * u(rng) - 0.3;
        m.left.mean_excess = m.left.scale / (1 - m.left.shape);
        m.right.scale = 2000 * u(rng);
        m.right.shape = 0.7 * u(rng) - 0.2;
        m.right.mean_excess = m.right.scale / (1 - m.right.shape);
        m.means.push_back(m.split_points.front() - m.left.mean_excess);
        for (int l = 0; l + 2 < L; ++l) {
            TruncNormFit t;
            t.lower = m.split_points[static_cast<std::size_t>(l)];
            t.upper = m.split_points[static_cast<std::size_t>(l + 1)];
            t.mu = t.lower + (t.upper - t.lower) * (1.6 * u(rng) - 0.3);
            t.sigma = (t.upper - t.lower) * u(rng);
            t.mean = TruncNormFit::truncated_mean(t.mu, t.sigma, t.lower, t.upper);
            m.means.push_back(t.mean);
            m.body.push_back(t);
        }
        m.means.push_back(m.split_points.back() + m.right.mean_excess);
        std::vector<double> w(static_cast<std::size_t>(L));
        double s = 0;
        for (auto& v : w) s += v = u(rng);
        for (auto& v : w) v /= s;
        m.weights = constant_weights(w);

        const CovariateVector x;
        const auto f = [&](double y) { return payment_density(m, x, y); };
        double total = GK::integrate(f, -inf, m.split_points.front(), 15, 1e-13);
        for (std::size_t k = 0; k + 1 < m.split_points.size(); ++k)
            total += GK::integrate(f, m.split_points[k], m.split_points[k + 1], 15, 1e-13);
        total += GK::integrate(f, m.split_points.back(), inf, 15, 1e-13);
        worst_int = std::max(worst_int, std::abs(total - 1.0));

        double dot = 0;
        for (std::size_t l = 0; l < w.size(); ++l) dot += w[l] * m.means[l];
        worst_dot = std::max(worst_dot, std::abs(expected_payment(m, x) - dot) / std::max(1.0, std::abs(dot)));
    }
    o.require(worst_int <= 1e-6, fmt::format("density integrates to 1 +- {:.2e}", worst_int));
    o.require(worst_dot <= 1e-10, fmt::format("expected payment off by {:.2e}", worst_dot));
    const double s0 = expected_payment({0.003, 0.004, 0.762, 0.231}, {-6043, -475, 1404, 7230});
    o.require(std::abs(s0 - 2720) < 1.0, fmt::format("S0 example gives {:.3f}", s0));
    if (o.pass)
        o.detail = fmt::format("integral error {:.1e}, dot product {:.1e}, S0 example {:.3f}", worst_int, worst_dot, s0);
    return o;
}

// ---------------------------------------------------------------------------
// 7. Parameter recovery

synth::Spec recovery_spec(std::size_t n_claims) {
    return synth::spec_from_json(nlohmann::json::parse(fmt::format(R"({{
      "n_claims": {},
      "accident_start": "2016-01-01", "accident_end": "2019-12-31", "eval_date": "2080-01-01",
      "perLen": 30, "minPayVal": 200,
      "reporting": {{"fast_share": 0.05, "probability": 0.6}},
      "covariates": [{{"name": "cover", "levels": ["A", "B"], "probs": [0.6, 0.4]}}],
      "states": [
        {{"hazards": {{"N": 0.62, "P": 0.35, "TN": 0.0, "TP": 0.03}}}},
        {{"hazards": {{"N": 0.60, "P": 0.20, "TN": 0.10, "TP": 0.10}}}},
        {{"hazards": {{"N": 0.70, "P": 0.10, "TN": 0.15, "TP": 0.05}}}},
        {{"hazards": {{"N": 0.75, "P": 0.05, "TN": 0.15, "TP": 0.05}}}}
      ],
      "payments": [{{
        "split_points": [0, 1000, 5000],
        "left": {{"scale": 300, "shape": 0.1}},
        "right": {{"scale": 2000, "shape": 0.3}},
        "body": [{{"mu": 600, "sigma": 400}}, {{"mu": 2500, "sigma": 1500}}],
        "weights": [0.05, 0.45, 0.35, 0.15],
        "effects": {{"cover=B": [0, 0, 0.2, 0.4]}},
        "terminal_effect": [0, 0.5, 0, 0]
      }}]
    }})", n_claims)));
}

Outcome parameter_recovery() {
    Outcome o;
    const auto spec = recovery_spec(50000);
    ModelConfig cfg = spec.config();
    cfg.maxMod = 4;
    cfg.nMinModT = 100'000'000;  // intercept-only hazards
    for (int s = 0; s < 4; ++s) cfg.splitPoints[s] = spec.payments[0].split_points;
    const Date tau = spec.eval_date;
    const auto pf = synth::generate_portfolio(spec, 7);
    const auto claims = pf.observed_claims(tau);
    const auto rows = discretize_portfolio(claims, tau, cfg);
    const auto sets = build_state_datasets(rows, cfg);
    const auto tm = fit_time_models(rows, sets, cfg);
    const auto pm = fit_payment_models(rows, sets, tm, cfg);

    double worst_h = 0.0;
    for (int s = 0; s < 4; ++s) {
        const auto h = tm[static_cast<std::size_t>(s)].hazards(CovariateVector{});
        for (std::size_t k = 0; k < 4; ++k) worst_h = std::max(worst_h, std::abs(h[k] - spec.states[static_cast<std::size_t>(s)].base[k]));
    }
    o.require(worst_h <= 0.02, fmt::format("hazard error {:.4f}", worst_h));

    // Right tail of S0 payments, in thousands of currency units.
    const double iota = pm[0].right.scale / 1000.0, phi = pm[0].right.shape;
    o.require(std::abs(iota - 2.0) <= 0.05, fmt::format("GPD scale {:.4f} (thousands)", iota));
    o.require(std::abs(phi - 0.3) <= 0.05, fmt::format("GPD shape {:.4f}", phi));

    // cover=B effect on bin 4 relative to bin 2 (true log-odds 0.4 - 0).
    const auto& fit = pm[0].weights.fit;
    const auto names = pm[0].weights.encoder.column_names();
    const auto col = std::find(names.begin(), names.end(), "cover=B") - names.begin();
    double coef = std::nan("");
    if (col < static_cast<std::ptrdiff_t>(names.size()) && pm[0].weights.outcomes == std::vector<int>{0, 1, 2, 3})
        coef = fit.coefficients(2, col) - fit.coefficients(0, col);
    o.require(std::abs(coef - 0.4) <= 0.05, fmt::format("mixture coefficient {:.4f}", coef));
    if (o.pass)
        o.detail = fmt::format("hazard error {:.4f}, GPD ({:.3f}, {:.3f}), coefficient {:.3f}", worst_h, iota, phi, coef);
    return o;
}

// ---------------------------------------------------------------------------
// 8. End-to-end unbiasedness

Outcome end_to_end() {
    Outcome o;
    auto spec = microres::testing::toy_spec();
    spec.n_claims = 40000;
    const Date tau = spec.eval_date;
    int covered = 0;
    std::vector<double> abs_pe;
    std::string per;
    for (int j = 0; j < 20; ++j) {
        ModelConfig cfg = spec.config();
        cfg.samplePayments = true;
        cfg.binBootstraps = 3;
        const auto pf = synth::generate_portfolio(spec, 1000 + static_cast<std::uint64_t>(j));
        const auto claims = pf.observed_claims(tau);
        const auto models = fit_models(claims, tau, cfg);
        auto open = open_claims(claims, tau, cfg);
        if (open.size() < 5000) {
            o.require(false, fmt::format("portfolio {} has only {} open claims", j, open.size()));
            return o;
        }
        open.resize(5000);
        std::map<std::string, double> truth;
        for (const auto& t : pf.truth(tau)) truth[t.policy_id] = t.reserve().units();
        double true_total = 0.0;
        for (const auto& s : open) true_total += truth.at(s.policy_id);

        SimulationOptions so;
        so.n_sims = 200;
        so.seed = 42 + static_cast<std::uint64_t>(j);
        so.include_ibnr = false;
        const auto d = simulate_portfolio(open, models, cfg, so);
        auto totals = to_units(d.totals);
        const double be = stats::mean(totals);
        std::sort(totals.begin(), totals.end());
        const double lo = stats::quantile_sorted(totals, 0.05), hi = stats::quantile_sorted(totals, 0.95);
        const bool in = true_total >= lo && true_total <= hi;
        covered += in;
        const double pe = 100.0 * (be - true_total) / true_total;
        abs_pe.push_back(std::abs(pe));
        std::cerr << fmt::format("  portfolio {:2d}: true {:.0f}, best estimate {:.0f} [{:.0f}, {:.0f}], PE {:+.2f}%{}\n", j,
                                 true_total, be, lo, hi, pe, in ? "" : " (outside)");
    }
    std::sort(abs_pe.begin(), abs_pe.end());
    const double med = stats::quantile_sorted(abs_pe, 0.5);
    o.require(covered >= 16, fmt::format("true reserve inside the central 90% in {}/20", covered));
    o.require(med <= 5.0, fmt::format("median |PE| {:.2f}%", med));
    if (o.pass) o.detail = fmt::format("covered {}/20, median |PE| {:.2f}%", covered, med);
    return o;
}

// ---------------------------------------------------------------------------
// 9. Scoring

Outcome scoring() {
    Outcome o;
    o.require(eval::crps(std::vector<double>{0.0, 2.0}, 1.0) == 0.5, "CRPS({0,2},1) != 0.5");
    o.require(eval::crps(std::vector<double>{1234.5}, 1234.5) == 0.0, "CRPS({R},R) != 0");
    Rng rng(9);
    std::vector<double> draws(10000);
    for (auto& v : draws) v = uniform01(rng);
    const auto s = eval::interval_score_and_picp({draws}, {0.5}, 0.95);
    o.require(std::abs(s.interval_score - 0.90) <= 0.02 && s.picp == 1.0,
              fmt::format("uniform oracle IS {:.4f}, PICP {:.2f}", s.interval_score, s.picp));
    const auto m = eval::pointwise_metrics({300.0}, {100.0});
    o.require(m.smape == 100.0, fmt::format("sMAPE(100, 300) = {}", m.smape));
    if (o.pass) o.detail = fmt::format("IS {:.4f}, PICP {:.0f}", s.interval_score, s.picp);
    return o;
}

// ---------------------------------------------------------------------------
// 10. Reproducibility

std::string pipeline_reports(unsigned workers) {
    auto spec = microres::testing::toy_spec();
    spec.n_claims = 2500;
    ModelConfig cfg = spec.config();
    cfg.binBootstraps = 2;
    const Date tau = spec.eval_date;
    std::ostringstream out;
    const auto pf = synth::generate_portfolio(spec, 11, workers);
    synth::write_transactions(out, pf.observed_log(tau), pf.covariate_names, cfg);
    synth::write_truth(out, pf.truth(tau));
    const auto claims = pf.observed_claims(tau);
    write_period_dataset(out, discretize_portfolio(claims, tau, cfg), claims, cfg);
    const auto models = fit_models(claims, tau, cfg);
    out << to_json(models).dump(1);
    SimulationOptions so;
    so.n_sims = 40;
    so.seed = 3;
    so.workers = workers;
    const auto d = simulate_portfolio(open_claims(claims, tau, cfg), models, cfg, so);
    write_claim_table(out, d);
    write_portfolio_draws(out, d);
    write_portfolio_summary(out, d);
    write_histogram(out, histogram(to_units(d.totals)));
    write_draw_matrix(out, d);
    const auto boot = odp_bootstrap(models.triangle, 500, 5, workers);
    for (double t : boot.totals) out << fmt::format("{:.6f}\n", t);
    return out.str();
}

Outcome reproducibility() {
    Outcome o;
    const auto a = pipeline_reports(1), b = pipeline_reports(1), c = pipeline_reports(4);
    o.require(a == b, "repeated run differs");
    o.require(a == c, "run with 4 workers differs");
    if (o.pass) o.detail = fmt::format("{} bytes identical across reruns and 1/4 workers", a.size());
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"discretization golden test", golden_discretization},
        {"chain-ladder consistency", chain_ladder_consistency},
        {"negative-binomial moments", negative_binomial_moments},
        {"MLE correctness", mle_correctness},
        {"hazard normalization and forcing", hazard_normalization},
        {"spliced density normalization", spliced_density},
        {"parameter recovery", parameter_recovery},
        {"end-to-end unbiasedness", end_to_end},
        {"scoring correctness", scoring},
        {"reproducibility", reproducibility},
    };
    // Optional argument: run a single criterion by number.
    const int only = argc > 1 ? std::atoi(argv[1]) : 0;
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        if (only && static_cast<int>(i) + 1 != only) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome res;
        try {
            res = criteria[i].second();
        } catch (const std::exception& e) {
            res.pass = false;
            res.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::cout << fmt::format("criterion {:2d} {}: {} ({}; {:.1f} s)", i + 1, res.pass ? "PASS" : "FAIL",
                                 criteria[i].first, res.detail, secs)
                  << std::endl;
        failed += !res.pass;
    }
    return failed == 0 ? 0 : 1;
}
