#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "microres/error.hpp"
#include "microres/stats.hpp"

namespace microres::eval {

/// Sample CRPS: (1/N) sum |x_i - y| - 1/(2N^2) sum_i sum_r |x_i - x_r|. The double sum
/// is evaluated on the sorted draws as 2 sum_i (2i - N + 1) x_(i).
inline double crps(std::span<const double> draws, double truth) {
    if (draws.empty()) throw Error("CRPS needs at least one draw");
    const auto n = static_cast<double>(draws.size());
    std::vector<double> x(draws.begin(), draws.end());
    std::sort(x.begin(), x.end());
    double a = 0.0, b = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        a += std::abs(x[i] - truth);
        b += (2.0 * static_cast<double>(i) - n + 1.0) * x[i];
    }
    return a / n - b / (n * n);
}

struct IntervalScore {
    double interval_score = 0.0;  // mean width q_alpha - q_{1-alpha}
    double picp = 0.0;            // share of truths inside [q_{1-alpha}, q_alpha]
};

/// Per-claim type-7 quantiles at 1 - alpha and alpha (alpha > 0.5).
inline IntervalScore interval_score_and_picp(const std::vector<std::vector<double>>& draws,
                                             const std::vector<double>& truths, double alpha) {
    if (draws.size() != truths.size()) throw Error("draws and truths differ in length");
    if (!(alpha > 0.5 && alpha < 1.0)) throw Error("alpha must be in (0.5, 1)");
    IntervalScore s;
    if (draws.empty()) return s;
    for (std::size_t k = 0; k < draws.size(); ++k) {
        if (draws[k].size() < 2) throw Error("interval score needs at least two draws per claim");
        std::vector<double> v = draws[k];
        std::sort(v.begin(), v.end());
        const double lo = stats::quantile_sorted(v, 1.0 - alpha), hi = stats::quantile_sorted(v, alpha);
        s.interval_score += hi - lo;
        if (truths[k] >= lo && truths[k] <= hi) s.picp += 1.0;
    }
    s.interval_score /= static_cast<double>(draws.size());
    s.picp /= static_cast<double>(draws.size());
    return s;
}

struct PointMetrics {
    double bias = 0.0;   // sum of (truth - prediction)
    double mae = 0.0;
    double rmse = 0.0;
    double smape = 0.0;  // over pairs with a positive denominator
    std::size_t smape_skipped = 0;  // pairs with truth + prediction <= 0
};

/// sMAPE uses 200 |R - R_hat| / (R + R_hat) as printed, skipping and counting pairs
/// whose denominator is not positive.
inline PointMetrics pointwise_metrics(const std::vector<double>& predictions, const std::vector<double>& truths) {
    if (predictions.size() != truths.size()) throw Error("predictions and truths differ in length");
    PointMetrics m;
    if (truths.empty()) return m;
    std::size_t used = 0;
    for (std::size_t k = 0; k < truths.size(); ++k) {
        const double e = truths[k] - predictions[k];
        m.bias += e;
        m.mae += std::abs(e);
        m.rmse += e * e;
        const double den = truths[k] + predictions[k];
        if (den > 0) {
            m.smape += 200.0 * std::abs(e) / den;
            ++used;
        } else {
            ++m.smape_skipped;
        }
    }
    const auto n = static_cast<double>(truths.size());
    m.mae /= n;
    m.rmse = std::sqrt(m.rmse / n);
    m.smape = used ? m.smape / static_cast<double>(used) : 0.0;
    return m;
}

}  // namespace microres::eval
