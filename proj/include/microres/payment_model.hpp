#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>
#include <nlohmann/json.hpp>

#include "microres/claims_data.hpp"
#include "microres/config.hpp"
#include "microres/features.hpp"
#include "microres/rng.hpp"
#include "microres/stats.hpp"
#include "microres/time_model.hpp"

namespace microres {

// ---------------------------------------------------------------------------
// Generalized Pareto tails

/// GPD on excesses z >= 0: F(z) = 1 - (1 + shape z / scale)^(-1/shape).
struct GpdFit {
    double scale = 1.0;
    double shape = 0.0;
    std::size_t n = 0;
    double mean_excess = 1.0;          // mean of the component; finite by construction
    bool exponential_fallback = false;  // too few points or a degenerate sample
    bool shape_capped = false;          // shape hit the upper bound; mean is empirical

    double quantile(double u) const noexcept {
        if (std::abs(shape) < 1e-12) return -scale * std::log1p(-u);
        return scale / shape * (std::pow(1.0 - u, -shape) - 1.0);
    }
    double density(double z) const noexcept {
        if (z < 0) return 0.0;
        if (std::abs(shape) < 1e-12) return std::exp(-z / scale) / scale;
        const double t = 1.0 + shape * z / scale;
        if (t <= 0) return 0.0;
        return std::pow(t, -1.0 / shape - 1.0) / scale;
    }
};

inline constexpr double kGpdShapeMin = -0.5;
inline constexpr double kGpdShapeMax = 0.95;
inline constexpr std::size_t kMinComponentPoints = 30;

namespace detail {

inline double gpd_loglik(const std::vector<double>& z, double scale, double shape) {
    const double n = static_cast<double>(z.size());
    if (std::abs(shape) < 1e-9) {
        double s = 0.0;
        for (double v : z) s += v;
        return -n * std::log(scale) - s / scale;
    }
    double s = 0.0;
    for (double v : z) {
        const double t = 1.0 + shape * v / scale;
        if (t <= 0) return -std::numeric_limits<double>::infinity();
        s += std::log(t);
    }
    return -n * std::log(scale) - (1.0 + 1.0 / shape) * s;
}

/// Maximises the log-likelihood over the scale for a fixed shape.
inline std::pair<double, double> gpd_profile(const std::vector<double>& z, double shape, double zmax, double zmean) {
    double lo = std::log(zmean * 1e-4);
    if (shape < 0) lo = std::max(lo, std::log(-shape * zmax * (1.0 + 1e-9)));
    const double hi = std::log(zmean * 1e3);
    if (lo >= hi) return {std::exp(hi), gpd_loglik(z, std::exp(hi), shape)};
    auto r = boost::math::tools::brent_find_minima(
        [&](double ls) { return -gpd_loglik(z, std::exp(ls), shape); }, lo, hi, 40);
    return {std::exp(r.first), -r.second};
}

}  // namespace detail

/// Maximum likelihood GPD fit by profiling the scale over a shape grid in
/// (-0.5, 0.95), refined with Brent's method. Fewer than 30 points or a constant
/// sample gives an exponential fit (shape 0) with a flag.
inline GpdFit fit_gpd(const std::vector<double>& excesses) {
    GpdFit g;
    g.n = excesses.size();
    for (double v : excesses)
        if (!(v >= 0) || !std::isfinite(v)) throw ModelError("GPD excesses must be finite and nonnegative");
    const double mean = stats::mean(excesses);
    const double zmax = excesses.empty() ? 0.0 : *std::max_element(excesses.begin(), excesses.end());
    const bool constant = excesses.empty() ||
                          std::all_of(excesses.begin(), excesses.end(), [&](double v) { return v == excesses.front(); });
    if (excesses.size() < kMinComponentPoints || constant || !(mean > 0)) {
        g.exponential_fallback = true;
        g.scale = mean > 0 ? mean : 1e-9;
        g.shape = 0.0;
        g.mean_excess = std::max(mean, 0.0);
        return g;
    }
    double best_shape = 0.0, best_scale = mean, best_ll = -std::numeric_limits<double>::infinity();
    const double step = 0.01;
    for (double s = kGpdShapeMin + step; s < kGpdShapeMax - 1e-12; s += step) {
        auto [sc, ll] = detail::gpd_profile(excesses, s, zmax, mean);
        if (ll > best_ll) best_ll = ll, best_shape = s, best_scale = sc;
    }
    {
        const double lo = std::max(kGpdShapeMin + 1e-6, best_shape - step);
        const double hi = std::min(kGpdShapeMax - 1e-6, best_shape + step);
        auto r = boost::math::tools::brent_find_minima(
            [&](double s) { return -detail::gpd_profile(excesses, s, zmax, mean).second; }, lo, hi, 40);
        if (-r.second > best_ll) {
            best_shape = r.first;
            best_scale = detail::gpd_profile(excesses, best_shape, zmax, mean).first;
        }
    }
    g.shape = best_shape;
    g.scale = best_scale;
    g.shape_capped = best_shape >= kGpdShapeMax - 2e-3;
    g.mean_excess = g.shape_capped ? mean : g.scale / (1.0 - g.shape);
    return g;
}

// ---------------------------------------------------------------------------
// Truncated normal body bins

struct TruncNormFit {
    double lower = 0.0, upper = 1.0;
    double mu = 0.5, sigma = 1.0;
    double mean = 0.5;  // mean of the truncated distribution
    std::size_t n = 0;
    bool fallback = false;  // too few points: mean is the empirical bin mean

    /// Truncated normal mean from the standard identity mu + sigma (phi(a) - phi(b)) / Z.
    static double truncated_mean(double mu, double sigma, double lo, double hi) {
        const boost::math::normal N;
        const double a = (lo - mu) / sigma, b = (hi - mu) / sigma;
        double Z;
        if (a > 0) Z = boost::math::cdf(boost::math::complement(N, a)) - boost::math::cdf(boost::math::complement(N, b));
        else Z = boost::math::cdf(N, b) - boost::math::cdf(N, a);
        if (!(Z > 1e-300)) return std::clamp(mu, lo, hi);
        const double m = mu + sigma * (boost::math::pdf(N, a) - boost::math::pdf(N, b)) / Z;
        return std::clamp(m, lo, hi);
    }

    double density(double y) const {
        if (y < lower || y >= upper) return 0.0;
        if (fallback) return 0.0;
        const boost::math::normal N;
        const double a = (lower - mu) / sigma, b = (upper - mu) / sigma;
        const double Z = a > 0 ? boost::math::cdf(boost::math::complement(N, a)) - boost::math::cdf(boost::math::complement(N, b))
                               : boost::math::cdf(N, b) - boost::math::cdf(N, a);
        return boost::math::pdf(N, (y - mu) / sigma) / (sigma * Z);
    }

    /// Inverse-CDF draw; a fallback bin is a point mass at its empirical mean.
    double sample(double u) const {
        if (fallback) return mean;
        const boost::math::normal N;
        const double a = (lower - mu) / sigma, b = (upper - mu) / sigma;
        double z;
        if (a > 0) {
            const double qa = boost::math::cdf(boost::math::complement(N, a));
            const double qb = boost::math::cdf(boost::math::complement(N, b));
            const double q = qa - u * (qa - qb);
            z = q > 0 ? boost::math::quantile(boost::math::complement(N, q)) : a;
        } else {
            const double pa = boost::math::cdf(N, a), pb = boost::math::cdf(N, b);
            const double p = pa + u * (pb - pa);
            z = p > 0 && p < 1 ? boost::math::quantile(N, p) : (p <= 0 ? a : b);
        }
        const double y = mu + sigma * z;
        return std::clamp(y, lower, std::nextafter(upper, lower));
    }
};

namespace detail {

/// Nelder-Mead minimisation in two dimensions.
template <class F>
std::array<double, 2> nelder_mead2(F f, std::array<double, 2> x0, std::array<double, 2> step, int max_iter = 500,
                                   double tol = 1e-10) {
    std::array<std::array<double, 2>, 3> p{x0, x0, x0};
    p[1][0] += step[0];
    p[2][1] += step[1];
    std::array<double, 3> v{f(p[0]), f(p[1]), f(p[2])};
    for (int it = 0; it < max_iter; ++it) {
        std::array<int, 3> o{0, 1, 2};
        std::sort(o.begin(), o.end(), [&](int a, int b) { return v[a] < v[b]; });
        const auto best = p[o[0]], mid = p[o[1]], worst = p[o[2]];
        const double fb = v[o[0]], fm = v[o[1]], fw = v[o[2]];
        if (std::abs(fw - fb) <= tol * (std::abs(fb) + tol)) break;
        const std::array<double, 2> c{(best[0] + mid[0]) / 2, (best[1] + mid[1]) / 2};
        auto along = [&](double t) { return std::array<double, 2>{c[0] + t * (worst[0] - c[0]), c[1] + t * (worst[1] - c[1])}; };
        const auto r = along(-1.0);
        const double fr = f(r);
        auto replace = [&](const std::array<double, 2>& q, double fq) { p[o[2]] = q, v[o[2]] = fq; };
        if (fr < fb) {
            const auto e = along(-2.0);
            const double fe = f(e);
            fe < fr ? replace(e, fe) : replace(r, fr);
        } else if (fr < fm) {
            replace(r, fr);
        } else {
            const auto k = fr < fw ? along(-0.5) : along(0.5);
            const double fk = f(k);
            if (fk < std::min(fr, fw)) {
                replace(k, fk);
            } else {
                for (int j : {o[1], o[2]}) {
                    p[j] = {(p[j][0] + best[0]) / 2, (p[j][1] + best[1]) / 2};
                    v[j] = f(p[j]);
                }
            }
        }
    }
    return p[static_cast<std::size_t>(std::min_element(v.begin(), v.end()) - v.begin())];
}

}  // namespace detail

/// Maximum likelihood normal truncated to [lower, upper). With fewer than 30 points
/// the empirical mean is used and the fit is flagged.
inline TruncNormFit fit_truncated_normal(const std::vector<double>& sample, double lower, double upper) {
    if (!(lower < upper)) throw ModelError("truncation interval must be nonempty");
    TruncNormFit t;
    t.lower = lower;
    t.upper = upper;
    t.n = sample.size();
    const double w = upper - lower;
    const double m = sample.empty() ? (lower + upper) / 2 : stats::mean(sample);
    if (sample.size() < kMinComponentPoints) {
        t.fallback = true;
        t.mean = std::clamp(m, lower, upper);
        t.mu = t.mean;
        t.sigma = w;
        return t;
    }
    // Work on the standardized scale u = (y - lower) / w.
    std::vector<double> u(sample.size());
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = (sample[i] - lower) / w;
    const double su = std::max(std::sqrt(stats::variance(u)), 1e-3);
    const boost::math::normal N;
    auto nll = [&](const std::array<double, 2>& th) {
        const double mu = th[0], sd = std::exp(th[1]);
        if (std::abs(mu) > 50 || sd < 1e-4 || sd > 100) return std::numeric_limits<double>::infinity();
        const double a = -mu / sd, b = (1.0 - mu) / sd;
        const double Z = a > 0 ? boost::math::cdf(boost::math::complement(N, a)) - boost::math::cdf(boost::math::complement(N, b))
                               : boost::math::cdf(N, b) - boost::math::cdf(N, a);
        if (!(Z > 1e-300)) return std::numeric_limits<double>::infinity();
        double s = 0.0;
        for (double v : u) {
            const double z = (v - mu) / sd;
            s += 0.5 * z * z;
        }
        return s + static_cast<double>(u.size()) * (std::log(sd) + std::log(Z));
    };
    auto th = detail::nelder_mead2(nll, {stats::mean(u), std::log(su)}, {0.1, 0.2});
    th = detail::nelder_mead2(nll, th, {0.02, 0.05});
    t.mu = lower + w * th[0];
    t.sigma = w * std::exp(th[1]);
    t.mean = TruncNormFit::truncated_mean(t.mu, t.sigma, lower, upper);
    return t;
}

// ---------------------------------------------------------------------------
// Split points and the mean-excess diagnostic

struct MeanExcessRow {
    std::string side;  // "right" for y - u, "left" for u - y
    double threshold = 0.0;
    double mean_excess = 0.0;
    std::size_t count = 0;
};

inline std::vector<MeanExcessRow> mean_excess_table(const std::vector<double>& payments) {
    std::vector<MeanExcessRow> out;
    std::vector<double> pos, neg;
    for (double y : payments) (y > 0 ? pos : neg).push_back(y > 0 ? y : -y);
    for (auto* side : {&pos, &neg}) {
        if (side->size() < 2) continue;
        std::sort(side->begin(), side->end());
        for (int k = 10; k <= 19; ++k) {
            const double u = stats::quantile_sorted(*side, k == 19 ? 0.99 : 0.05 * k);
            double s = 0.0;
            std::size_t c = 0;
            for (double v : *side)
                if (v > u) s += v - u, ++c;
            out.push_back({side == &pos ? "right" : "left", side == &pos ? u : -u, c ? s / static_cast<double>(c) : 0.0, c});
        }
    }
    return out;
}

struct SplitSelection {
    std::vector<double> points;
    bool left_degenerate = false;   // no payments below b_1
    bool right_degenerate = false;  // no payments at or above b_{L-1}
};

/// b_1 and b_{L-1} at the configured tail quantiles, 0 among the inner points,
/// unless split points for the state are set in the config.
inline SplitSelection select_split_points(const std::vector<double>& payments, const ModelConfig& config, int state) {
    SplitSelection s;
    const int L = config.nBins;
    if (auto o = config.split_points_for(state)) {
        s.points = *o;
    } else {
        if (payments.empty()) throw ModelError("no payments to choose split points from");
        std::vector<double> sorted = payments;
        std::sort(sorted.begin(), sorted.end());
        s.points.push_back(stats::quantile_sorted(sorted, config.lowerTailQuantile));
        std::vector<double> inner;
        for (int k = 1; k <= L - 3; ++k) {
            const double p = config.lowerTailQuantile +
                             (config.upperTailQuantile - config.lowerTailQuantile) * k / (L - 2);
            inner.push_back(stats::quantile_sorted(sorted, p));
        }
        if (!inner.empty()) {
            auto nearest = std::min_element(inner.begin(), inner.end(),
                                            [](double a, double b) { return std::abs(a) < std::abs(b); });
            *nearest = 0.0;
        }
        s.points.insert(s.points.end(), inner.begin(), inner.end());
        s.points.push_back(stats::quantile_sorted(sorted, config.upperTailQuantile));
        // Keep the points strictly increasing around the fixed zero.
        const auto zero = std::find(s.points.begin(), s.points.end(), 0.0);
        const auto z = zero == s.points.end() ? std::ptrdiff_t{-1} : zero - s.points.begin();
        for (std::ptrdiff_t k = z - 1; k >= 0; --k)
            if (s.points[static_cast<std::size_t>(k)] >= s.points[static_cast<std::size_t>(k + 1)])
                s.points[static_cast<std::size_t>(k)] = s.points[static_cast<std::size_t>(k + 1)] - 1.0;
        for (std::size_t k = static_cast<std::size_t>(std::max<std::ptrdiff_t>(z, 0)) + 1; k < s.points.size(); ++k)
            if (s.points[k] <= s.points[k - 1]) s.points[k] = s.points[k - 1] + 1.0;
    }
    if (!payments.empty()) {
        s.left_degenerate = std::none_of(payments.begin(), payments.end(), [&](double y) { return y < s.points.front(); });
        s.right_degenerate = std::none_of(payments.begin(), payments.end(), [&](double y) { return y >= s.points.back(); });
    }
    return s;
}

// ---------------------------------------------------------------------------
// Spliced model

struct SplicedPaymentModel {
    int state = 0;
    Fallback fallback = Fallback::Full;
    std::size_t training_rows = 0;
    std::vector<double> split_points;  // b_1 < ... < b_{L-1}
    GpdFit left;                       // on b_1 - y
    GpdFit right;                      // on y - b_{L-1}
    std::vector<TruncNormFit> body;    // bins 2 .. L-1
    std::vector<double> means;         // mu_1 .. mu_L
    std::vector<std::size_t> counts;   // training payments per bin
    CategoricalModel weights;          // outcomes are bin indices
    std::vector<MeanExcessRow> mean_excess;

    int bins() const noexcept { return static_cast<int>(split_points.size()) + 1; }
    int bin(double y) const noexcept {
        return static_cast<int>(std::upper_bound(split_points.begin(), split_points.end(), y) - split_points.begin());
    }

    std::vector<double> bin_probs(const CovariateVector& x) const {
        std::vector<double> p;
        weights.probs(x, p, static_cast<std::size_t>(bins()));
        return p;
    }

    /// Density of component `l` at y.
    double component_density(int l, double y) const {
        const int L = bins();
        if (l == 0) return y < split_points.front() ? left.density(split_points.front() - y) : 0.0;
        if (l == L - 1) return y >= split_points.back() ? right.density(y - split_points.back()) : 0.0;
        return body[static_cast<std::size_t>(l - 1)].density(y);
    }

    double sample_component(int l, double u) const {
        const int L = bins();
        if (l == 0) {
            const double y = split_points.front() - left.quantile(u);
            return std::min(y, std::nextafter(split_points.front(), -std::numeric_limits<double>::infinity()));
        }
        if (l == L - 1) return split_points.back() + right.quantile(u);
        return body[static_cast<std::size_t>(l - 1)].sample(u);
    }
};

/// E[Y | x] = sum_l pi_l(x) mu_l, in currency units.
inline double expected_payment(const SplicedPaymentModel& m, const CovariateVector& x) {
    const auto p = m.bin_probs(x);
    double e = 0.0;
    for (std::size_t l = 0; l < p.size(); ++l) e += p[l] * m.means[l];
    return e;
}

inline double expected_payment(const std::vector<double>& probs, const std::vector<double>& means) {
    if (probs.size() != means.size()) throw ModelError("bin probabilities and means differ in length");
    double e = 0.0;
    for (std::size_t l = 0; l < probs.size(); ++l) e += probs[l] * means[l];
    return e;
}

/// Draws a bin from pi(x), then a payment from that bin's component.
inline double sample_payment(const SplicedPaymentModel& m, const CovariateVector& x, Rng& rng) {
    const auto p = m.bin_probs(x);
    double u = uniform01(rng), acc = 0.0;
    int l = 0;
    for (; l + 1 < static_cast<int>(p.size()); ++l) {
        acc += p[static_cast<std::size_t>(l)];
        if (u < acc) break;
    }
    while (p[static_cast<std::size_t>(l)] == 0.0 && l > 0) --l;
    return m.sample_component(l, uniform_open(rng));
}

/// Spliced density at y for covariates x.
inline double payment_density(const SplicedPaymentModel& m, const CovariateVector& x, double y) {
    const auto p = m.bin_probs(x);
    const int l = m.bin(y);
    return p[static_cast<std::size_t>(l)] * m.component_density(l, y);
}

/// Total mass of each component over its own support: closed form (1) for the tails,
/// Gauss-Kronrod quadrature for the body bins.
inline std::vector<double> component_masses(const SplicedPaymentModel& m) {
    std::vector<double> out;
    out.push_back(1.0);
    for (const auto& b : m.body) {
        if (b.fallback) {
            out.push_back(1.0);
            continue;
        }
        out.push_back(boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
            [&](double y) { return b.density(y); }, b.lower, b.upper, 15, 1e-12));
    }
    out.push_back(1.0);
    return out;
}

/// Fits splits, tails, body bins and the mixture weights for payments `values` in one
/// state; `weights` is fitted separately by fit_payment_models.
inline SplicedPaymentModel fit_components(const std::vector<double>& values, const ModelConfig& config, int state) {
    SplicedPaymentModel m;
    m.state = state;
    const auto sel = select_split_points(values, config, state);
    m.split_points = sel.points;
    const int L = m.bins();
    std::vector<std::vector<double>> by_bin(static_cast<std::size_t>(L));
    for (double y : values) by_bin[static_cast<std::size_t>(m.bin(y))].push_back(y);
    m.counts.resize(static_cast<std::size_t>(L));
    for (int l = 0; l < L; ++l) m.counts[static_cast<std::size_t>(l)] = by_bin[static_cast<std::size_t>(l)].size();

    std::vector<double> lz, rz;
    for (double y : by_bin.front()) lz.push_back(m.split_points.front() - y);
    for (double y : by_bin.back()) rz.push_back(y - m.split_points.back());
    m.left = fit_gpd(lz);
    m.right = fit_gpd(rz);
    m.means.push_back(m.split_points.front() - m.left.mean_excess);
    for (int l = 1; l < L - 1; ++l) {
        auto t = fit_truncated_normal(by_bin[static_cast<std::size_t>(l)], m.split_points[static_cast<std::size_t>(l - 1)],
                                      m.split_points[static_cast<std::size_t>(l)]);
        m.means.push_back(t.mean);
        m.body.push_back(std::move(t));
    }
    m.means.push_back(m.split_points.back() + m.right.mean_excess);
    m.mean_excess = mean_excess_table(values);
    return m;
}

/// One spliced payment model per state dataset, with the time model's binning of the
/// payment history. The weight model follows the same fallback chain as the time
/// models with nMinModP, nMinNoModP and nTimesParamsP.
inline std::vector<SplicedPaymentModel> fit_payment_models(const std::vector<PeriodRow>& rows,
                                                           const std::vector<StateDataset>& sets,
                                                           const std::vector<HazardModel>& time_models,
                                                           const ModelConfig& config) {
    std::vector<SplicedPaymentModel> out;
    for (std::size_t s = 0; s < sets.size(); ++s) {
        const auto& idx = sets[s].payment_rows;
        if (static_cast<int>(idx.size()) < config.nMinNoModP) {
            if (out.empty())
                throw ModelError(fmt::format("state S0 has {} payments, fewer than nMinNoModP = {}; portfolio too small to model",
                                             idx.size(), config.nMinNoModP));
            auto m = out.back();
            m.state = sets[s].state;
            m.training_rows = idx.size();
            m.fallback = Fallback::Pooled;
            out.push_back(std::move(m));
            continue;
        }
        std::vector<double> values;
        values.reserve(idx.size());
        for (auto i : idx) values.push_back(rows[i].payment->units());
        auto m = fit_components(values, config, sets[s].state);
        m.training_rows = idx.size();
        const StateBinning& binning = s < time_models.size() ? time_models[s].binning : StateBinning{};
        auto enc = build_state_encoder(rows, idx, sets[s].state, config, binning, true);
        const auto need = std::max<std::size_t>(static_cast<std::size_t>(config.nMinModP),
                                                enc.width() * static_cast<std::size_t>(config.nTimesParamsP));
        m.fallback = idx.size() >= need && enc.width() > 1 ? Fallback::Full : Fallback::NoCovariates;
        if (m.fallback == Fallback::NoCovariates) enc = FeatureEncoder{};
        std::vector<std::string> names;
        for (int l = 1; l <= m.bins(); ++l) names.push_back("B" + std::to_string(l));
        const auto& splits = m.split_points;
        m.weights = fit_categorical(std::move(enc), rows, idx, m.bins(), names, [&](const PeriodRow& r) {
            return r.payment ? static_cast<int>(std::upper_bound(splits.begin(), splits.end(), r.payment->units()) - splits.begin())
                             : -1;
        }, config);
        out.push_back(std::move(m));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Serialization

inline void to_json(nlohmann::json& j, const GpdFit& g) {
    j = nlohmann::json{{"scale", g.scale}, {"shape", g.shape}, {"n", g.n}, {"mean_excess", g.mean_excess},
                       {"exponential_fallback", g.exponential_fallback}, {"shape_capped", g.shape_capped}};
}
inline void from_json(const nlohmann::json& j, GpdFit& g) {
    j.at("scale").get_to(g.scale);
    j.at("shape").get_to(g.shape);
    j.at("n").get_to(g.n);
    j.at("mean_excess").get_to(g.mean_excess);
    j.at("exponential_fallback").get_to(g.exponential_fallback);
    j.at("shape_capped").get_to(g.shape_capped);
}
inline void to_json(nlohmann::json& j, const TruncNormFit& t) {
    j = nlohmann::json{{"lower", t.lower}, {"upper", t.upper}, {"mu", t.mu}, {"sigma", t.sigma},
                       {"mean", t.mean}, {"n", t.n}, {"fallback", t.fallback}};
}
inline void from_json(const nlohmann::json& j, TruncNormFit& t) {
    j.at("lower").get_to(t.lower);
    j.at("upper").get_to(t.upper);
    j.at("mu").get_to(t.mu);
    j.at("sigma").get_to(t.sigma);
    j.at("mean").get_to(t.mean);
    j.at("n").get_to(t.n);
    j.at("fallback").get_to(t.fallback);
}
inline void to_json(nlohmann::json& j, const MeanExcessRow& r) {
    j = nlohmann::json{{"side", r.side}, {"threshold", r.threshold}, {"mean_excess", r.mean_excess}, {"count", r.count}};
}
inline void from_json(const nlohmann::json& j, MeanExcessRow& r) {
    j.at("side").get_to(r.side);
    j.at("threshold").get_to(r.threshold);
    j.at("mean_excess").get_to(r.mean_excess);
    j.at("count").get_to(r.count);
}
inline void to_json(nlohmann::json& j, const SplicedPaymentModel& m) {
    j = nlohmann::json{{"state", m.state},
                       {"fallback", std::string(to_string(m.fallback))},
                       {"training_rows", m.training_rows},
                       {"split_points", m.split_points},
                       {"left_tail", m.left},
                       {"right_tail", m.right},
                       {"body", m.body},
                       {"means", m.means},
                       {"counts", m.counts},
                       {"weights", m.weights},
                       {"mean_excess", m.mean_excess}};
}
inline void from_json(const nlohmann::json& j, SplicedPaymentModel& m) {
    j.at("state").get_to(m.state);
    m.fallback = fallback_from(j.at("fallback").get<std::string>());
    j.at("training_rows").get_to(m.training_rows);
    j.at("split_points").get_to(m.split_points);
    j.at("left_tail").get_to(m.left);
    j.at("right_tail").get_to(m.right);
    j.at("body").get_to(m.body);
    j.at("means").get_to(m.means);
    j.at("counts").get_to(m.counts);
    j.at("weights").get_to(m.weights);
    m.mean_excess = j.value("mean_excess", std::vector<MeanExcessRow>{});
    if (static_cast<int>(m.means.size()) != m.bins() || static_cast<int>(m.body.size()) != m.bins() - 2)
        throw ModelError("payment model bins are inconsistent");
}

}  // namespace microres
