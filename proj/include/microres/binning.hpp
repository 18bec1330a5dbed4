#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "microres/claims_data.hpp"
#include "microres/encoding.hpp"
#include "microres/glm.hpp"
#include "microres/parallel.hpp"
#include "microres/rng.hpp"
#include "microres/stats.hpp"

namespace microres::binning {

struct BinningSpec {
    std::string variable;
    std::vector<double> split_points;  // strictly increasing; bin k is [s_{k-1}, s_k)
    int min_bin_count = 0;
    int n_target_bins = 0;

    /// Bin index of `v`; values outside the training range fall in the end bins.
    int bin(double v) const noexcept {
        return static_cast<int>(std::upper_bound(split_points.begin(), split_points.end(), v) -
                                split_points.begin());
    }
    int bins() const noexcept { return static_cast<int>(split_points.size()) + 1; }
};

inline void to_json(nlohmann::json& j, const BinningSpec& b) {
    j = nlohmann::json{{"variable", b.variable},
                       {"split_points", b.split_points},
                       {"min_bin_count", b.min_bin_count},
                       {"n_target_bins", b.n_target_bins}};
}
inline void from_json(const nlohmann::json& j, BinningSpec& b) {
    j.at("variable").get_to(b.variable);
    j.at("split_points").get_to(b.split_points);
    j.at("min_bin_count").get_to(b.min_bin_count);
    j.at("n_target_bins").get_to(b.n_target_bins);
}

// ---------------------------------------------------------------------------

struct QuantileGroups {
    std::vector<double> boundaries;  // group g holds [b_{g-1}, b_g)
    std::vector<double> mediods;     // median of each group

    std::size_t size() const noexcept { return mediods.size(); }
    std::size_t group(double v) const noexcept {
        return static_cast<std::size_t>(std::upper_bound(boundaries.begin(), boundaries.end(), v) -
                                        boundaries.begin());
    }
};

/// 40 groups cut at the 0.025, 0.05, ..., 0.975 quantiles, each represented by its
/// median. Samples with fewer than 40 distinct values get one group per value; empty
/// groups from tied quantiles are dropped.
inline QuantileGroups quantile_groups(std::span<const double> values, int n_groups = 40) {
    QuantileGroups g;
    if (values.empty()) return g;
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> distinct = sorted;
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    std::vector<double> cuts;
    if (static_cast<int>(distinct.size()) < n_groups) {
        cuts.assign(distinct.begin() + 1, distinct.end());
    } else {
        for (int k = 1; k < n_groups; ++k) {
            const double q = stats::quantile_sorted(sorted, static_cast<double>(k) / n_groups);
            if (q > sorted.front() && (cuts.empty() || q > cuts.back())) cuts.push_back(q);
        }
    }
    // Members of each group are a contiguous run of the sorted sample.
    std::size_t start = 0;
    for (std::size_t k = 0; k <= cuts.size(); ++k) {
        std::size_t end = k < cuts.size()
                              ? static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), cuts[k]) - sorted.begin())
                              : sorted.size();
        if (end > start) {
            if (k > 0 && !g.mediods.empty()) g.boundaries.push_back(cuts[k - 1]);
            g.mediods.push_back(stats::median_sorted(std::span<const double>(sorted).subspan(start, end - start)));
        }
        start = end;
    }
    return g;
}

/// Locally weighted linear regression (tricube kernel, nearest-neighbour span) of
/// `effects` on `mediods`, evaluated at `at`. With fewer than 4 groups the effect of
/// the nearest group is returned unchanged.
inline std::vector<double> smooth_effects(std::span<const double> mediods, std::span<const double> effects,
                                          std::span<const double> at, double span = 0.75) {
    const std::size_t n = mediods.size();
    std::vector<double> out(at.size());
    if (n == 0) return out;
    if (n < 4) {
        for (std::size_t i = 0; i < at.size(); ++i) {
            std::size_t best = 0;
            for (std::size_t g = 1; g < n; ++g)
                if (std::abs(mediods[g] - at[i]) < std::abs(mediods[best] - at[i])) best = g;
            out[i] = effects[best];
        }
        return out;
    }
    const std::size_t q = std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil(span * static_cast<double>(n))), 2, n);
    std::vector<double> dist(n), w(n);
    for (std::size_t i = 0; i < at.size(); ++i) {
        const double x0 = at[i];
        for (std::size_t g = 0; g < n; ++g) dist[g] = std::abs(mediods[g] - x0);
        std::vector<double> sorted_d = dist;
        std::nth_element(sorted_d.begin(), sorted_d.begin() + static_cast<std::ptrdiff_t>(q - 1), sorted_d.end());
        double h = sorted_d[q - 1];
        if (span > 1.0) h *= span;
        h = h > 0 ? h * (1.0 + 1e-10) : 1.0;
        double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t g = 0; g < n; ++g) {
            const double u = dist[g] / h;
            w[g] = u < 1.0 ? std::pow(1.0 - u * u * u, 3) : 0.0;
            const double dx = mediods[g] - x0;
            sw += w[g];
            sx += w[g] * dx;
            sy += w[g] * effects[g];
            sxx += w[g] * dx * dx;
            sxy += w[g] * dx * effects[g];
        }
        if (sw <= 0) {
            out[i] = effects[std::min_element(dist.begin(), dist.end()) - dist.begin()];
            continue;
        }
        const double det = sw * sxx - sx * sx;
        // Local linear fit centred at x0: intercept is the estimate.
        out[i] = std::abs(det) > 1e-12 * sw * sxx ? (sxx * sy - sx * sxy) / det : sy / sw;
    }
    return out;
}

namespace detail {

/// Distinct values with observation counts and an effect per value.
struct Profile {
    std::vector<double> value;
    std::vector<double> count;
    std::vector<double> effect;
};

struct Prefix {
    std::vector<double> n, s, ss;
    explicit Prefix(const Profile& p) : n(p.value.size() + 1, 0), s(n), ss(n) {
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            n[i + 1] = n[i] + p.count[i];
            s[i + 1] = s[i] + p.count[i] * p.effect[i];
            ss[i + 1] = ss[i] + p.count[i] * p.effect[i] * p.effect[i];
        }
    }
    double count(std::size_t a, std::size_t b) const { return n[b] - n[a]; }
    double sse(std::size_t a, std::size_t b) const {
        const double m = n[b] - n[a];
        if (m <= 0) return 0.0;
        const double t = s[b] - s[a];
        return std::max(0.0, (ss[b] - ss[a]) - t * t / m);
    }
};

inline Profile make_profile(std::span<const double> values, std::span<const double> effects) {
    std::vector<std::size_t> idx(values.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return values[a] < values[b]; });
    Profile p;
    for (std::size_t i : idx) {
        if (!p.value.empty() && p.value.back() == values[i]) {
            const double c = p.count.back();
            p.effect.back() = (p.effect.back() * c + effects[i]) / (c + 1);
            p.count.back() = c + 1;
        } else {
            p.value.push_back(values[i]);
            p.count.push_back(1);
            p.effect.push_back(effects[i]);
        }
    }
    return p;
}

/// Best admissible split of [a, b): returns (position, sse reduction).
inline std::pair<std::size_t, double> best_split(const Prefix& pre, std::size_t a, std::size_t b, double min_count) {
    const double whole = pre.sse(a, b);
    std::pair<std::size_t, double> best{0, 0.0};
    for (std::size_t k = a + 1; k < b; ++k) {
        if (pre.count(a, k) < min_count || pre.count(k, b) < min_count) continue;
        const double gain = whole - pre.sse(a, k) - pre.sse(k, b);
        if (gain > best.second) best = {k, gain};
    }
    return best;
}

inline std::vector<double> tree_split_profile(const Profile& p, int n_target_bins, int min_bin_count) {
    if (p.value.size() < 2 || n_target_bins < 2) return {};
    const Prefix pre(p);
    const double total = pre.sse(0, p.value.size());
    if (!(total > 0)) return {};
    std::vector<std::pair<std::size_t, std::size_t>> leaves{{0, p.value.size()}};
    std::vector<std::size_t> cuts;
    while (static_cast<int>(leaves.size()) < n_target_bins) {
        double best_gain = 1e-10 * total;
        std::size_t best_leaf = leaves.size(), best_pos = 0;
        for (std::size_t l = 0; l < leaves.size(); ++l) {
            auto [pos, gain] = best_split(pre, leaves[l].first, leaves[l].second, min_bin_count);
            if (pos && gain > best_gain) best_gain = gain, best_leaf = l, best_pos = pos;
        }
        if (best_leaf == leaves.size()) break;
        const auto leaf = leaves[best_leaf];
        leaves[best_leaf] = {leaf.first, best_pos};
        leaves.push_back({best_pos, leaf.second});
        cuts.push_back(best_pos);
    }
    std::sort(cuts.begin(), cuts.end());
    std::vector<double> out;
    for (auto c : cuts) out.push_back(p.value[c]);
    return out;
}

}  // namespace detail

/// Greedy variance-reduction splitting of one variable (CART on a single predictor):
/// the leaf whose best split reduces the squared error most is split until
/// `n_target_bins` leaves exist or no split keeps both sides at `min_bin_count`.
/// Split points are the smallest value of the right-hand side.
inline std::vector<double> tree_split(std::span<const double> values, std::span<const double> effects,
                                      int n_target_bins, int min_bin_count) {
    return detail::tree_split_profile(detail::make_profile(values, effects), n_target_bins, min_bin_count);
}

struct MergeOptions {
    /// Training values of the variable; when empty no count-based merging happens.
    std::vector<double> values;
    int min_bin_count = 0;
    /// Maximum number of bins; 0 disables the limit.
    int max_bins = 0;
    /// Optional effect curves aligned with `values`, used to choose which splits to drop
    /// when more than max_bins bins remain (least added squared error first).
    std::vector<std::vector<double>> effects;
};

/// Union of split lists, sorted and deduplicated (relative tolerance 1e-9). Bins with
/// fewer than min_bin_count values are merged into their smaller neighbour; surplus
/// bins beyond max_bins are merged where that loses the least effect variation.
inline BinningSpec merge_splits(const std::vector<std::vector<double>>& lists, const MergeOptions& opt = {},
                                std::string variable = {}) {
    std::vector<double> s;
    for (const auto& l : lists) s.insert(s.end(), l.begin(), l.end());
    std::sort(s.begin(), s.end());
    std::vector<double> uniq;
    for (double v : s)
        if (uniq.empty() || std::abs(v - uniq.back()) > 1e-9 * std::max(std::abs(v), std::abs(uniq.back())))
            uniq.push_back(v);

    BinningSpec spec{std::move(variable), std::move(uniq), opt.min_bin_count, opt.max_bins};
    if (opt.values.empty()) {
        return spec;
    }
    auto& sp = spec.split_points;
    auto counts = [&] {
        std::vector<double> c(sp.size() + 1, 0.0);
        for (double v : opt.values) c[static_cast<std::size_t>(spec.bin(v))] += 1.0;
        return c;
    };
    // Drop splits that leave a bin empty or below the minimum.
    for (;;) {
        const auto c = counts();
        std::size_t worst = c.size();
        for (std::size_t k = 0; k < c.size(); ++k)
            if (c[k] < opt.min_bin_count && (worst == c.size() || c[k] < c[worst])) worst = k;
        if (worst == c.size() || sp.empty()) break;
        std::size_t remove;
        if (worst == 0) remove = 0;
        else if (worst == c.size() - 1) remove = sp.size() - 1;
        else remove = c[worst - 1] <= c[worst + 1] ? worst - 1 : worst;
        sp.erase(sp.begin() + static_cast<std::ptrdiff_t>(remove));
    }
    if (opt.max_bins > 0 && static_cast<int>(sp.size()) + 1 > opt.max_bins) {
        std::vector<detail::Profile> profiles;
        std::vector<detail::Prefix> prefixes;
        if (opt.effects.empty()) {
            std::vector<double> zero(opt.values.size(), 0.0);
            profiles.push_back(detail::make_profile(opt.values, zero));
        } else {
            for (const auto& e : opt.effects) profiles.push_back(detail::make_profile(opt.values, e));
        }
        for (const auto& p : profiles) prefixes.emplace_back(p);
        const auto& pv = profiles.front().value;
        auto pos = [&](double split) {
            return static_cast<std::size_t>(std::lower_bound(pv.begin(), pv.end(), split) - pv.begin());
        };
        while (static_cast<int>(sp.size()) + 1 > opt.max_bins) {
            std::size_t best = 0;
            double best_cost = std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < sp.size(); ++k) {
                const std::size_t a = k == 0 ? 0 : pos(sp[k - 1]);
                const std::size_t m = pos(sp[k]);
                const std::size_t b = k + 1 == sp.size() ? pv.size() : pos(sp[k + 1]);
                double cost = 0.0;
                for (const auto& pre : prefixes) cost += pre.sse(a, b) - pre.sse(a, m) - pre.sse(m, b);
                if (opt.effects.empty()) cost = prefixes.front().count(a, b);
                if (cost < best_cost) best_cost = cost, best = k;
            }
            sp.erase(sp.begin() + static_cast<std::ptrdiff_t>(best));
        }
    }
    return spec;
}

// ---------------------------------------------------------------------------

struct BinningOptions {
    int n_target_bins = 5;        // nGroups
    int min_bin_count = 30;       // nMinLev
    int bootstraps = 10;
    int sample_size = 100000;
    double span = 0.75;
    double ridge = 1.0;
    int state_time_cap = 12;      // nMaxLevInState
    int state_time_min = 30;      // nMinTimeLev
    unsigned workers = 1;         // resamples run in parallel
};

/// Data-driven binning of one continuous covariate against the transition response:
/// bootstrap resamples, 40 quantile groups, a multinomial fit on group and time in
/// state, loess smoothing of the per-group effects, one tree per hazard, and a merge.
inline BinningSpec bin_variable(std::string name, std::span<const double> values,
                                std::span<const int> state_time, std::span<const Transition> transitions,
                                const BinningOptions& opt, std::uint64_t seed) {
    const std::size_t n = values.size();
    BinningSpec empty{std::move(name), {}, opt.min_bin_count, opt.n_target_bins};
    if (n < 2 * static_cast<std::size_t>(opt.min_bin_count)) return empty;

    std::vector<double> distinct(values.begin(), values.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

    const std::size_t m = std::min<std::size_t>(n, static_cast<std::size_t>(opt.sample_size));

    // Per resample: smoothed effect curve and tree splits per hazard class.
    struct Resample {
        std::vector<std::pair<int, std::vector<double>>> curves;
        std::vector<std::vector<double>> splits;
    };
    std::vector<Resample> resamples(static_cast<std::size_t>(std::max(0, opt.bootstraps)));
    parallel_for(resamples.size(), opt.workers, [&](std::size_t b) {
        Rng rng = substream(seed, static_cast<std::uint64_t>(b));
        std::vector<std::size_t> pick(m);
        for (auto& i : pick) i = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
        std::vector<double> sv(m);
        std::vector<int> st(m);
        for (std::size_t k = 0; k < m; ++k) sv[k] = values[pick[k]], st[k] = state_time[pick[k]];
        const auto groups = quantile_groups(sv);
        if (groups.size() < 2) return;

        std::vector<int> present(4, 0);
        for (std::size_t k = 0; k < m; ++k) present[static_cast<int>(transitions[pick[k]])] = 1;
        if (!present[0]) return;
        std::vector<int> class_of(4, -1);
        std::vector<std::string> class_names;
        for (int c = 0; c < 4; ++c)
            if (present[c]) {
                class_of[c] = static_cast<int>(class_names.size());
                class_names.emplace_back(to_string(static_cast<Transition>(c)));
            }
        if (class_names.size() < 2) return;

        const auto time_splits = integer_level_splits(st, opt.state_time_cap, opt.state_time_min);
        const int G = static_cast<int>(groups.size());
        const int T = static_cast<int>(time_splits.size()) + 1;
        // Columns: intercept, groups 1..G-1 (group 0 reference), time levels 1..T-1.
        const Eigen::Index p = 1 + (G - 1) + (T - 1);
        std::map<std::pair<int, int>, Eigen::Index> cell_row;
        std::vector<std::pair<int, int>> cells;
        std::vector<std::vector<double>> cell_counts;
        for (std::size_t k = 0; k < m; ++k) {
            const int g = static_cast<int>(groups.group(sv[k]));
            const int t = static_cast<int>(std::upper_bound(time_splits.begin(), time_splits.end(), double(st[k])) - time_splits.begin());
            auto [it, inserted] = cell_row.emplace(std::make_pair(g, t), static_cast<Eigen::Index>(cells.size()));
            if (inserted) {
                cells.emplace_back(g, t);
                cell_counts.emplace_back(class_names.size(), 0.0);
            }
            cell_counts[static_cast<std::size_t>(it->second)][static_cast<std::size_t>(class_of[static_cast<int>(transitions[pick[k]])])] += 1.0;
        }
        glm::DesignMatrix d;
        d.class_names = class_names;
        d.X = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(cells.size()), p);
        d.counts = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(cells.size()), static_cast<Eigen::Index>(class_names.size()));
        for (std::size_t r = 0; r < cells.size(); ++r) {
            const auto ri = static_cast<Eigen::Index>(r);
            d.X(ri, 0) = 1.0;
            if (cells[r].first > 0) d.X(ri, cells[r].first) = 1.0;
            if (cells[r].second > 0) d.X(ri, G - 1 + cells[r].second) = 1.0;
            for (std::size_t c = 0; c < class_names.size(); ++c) d.counts(ri, static_cast<Eigen::Index>(c)) = cell_counts[r][c];
        }
        for (Eigen::Index c = 0; c < p; ++c) d.column_names.push_back("c" + std::to_string(c));
        glm::FitOptions fo;
        fo.ridge = opt.ridge;
        fo.max_iter = 100;
        glm::MultinomialFit fit;
        try {
            fit = glm::fit_multinomial(d, fo);
        } catch (const ModelError&) {
            return;
        }
        for (std::size_t k = 1; k < class_names.size(); ++k) {
            std::vector<double> eff(static_cast<std::size_t>(G), 0.0);
            for (int g = 1; g < G; ++g) eff[static_cast<std::size_t>(g)] = fit.coefficients(static_cast<Eigen::Index>(k - 1), g);
            auto curve = smooth_effects(groups.mediods, eff, distinct, opt.span);
            const int cls = static_cast<int>(*parse_transition(class_names[k]));
            // Tree on the full sample's distinct values weighted by their frequency.
            detail::Profile prof;
            prof.value = distinct;
            prof.count.assign(distinct.size(), 0.0);
            prof.effect = curve;
            for (double v : values)
                prof.count[static_cast<std::size_t>(std::lower_bound(distinct.begin(), distinct.end(), v) - distinct.begin())] += 1.0;
            resamples[b].splits.push_back(detail::tree_split_profile(prof, opt.n_target_bins, opt.min_bin_count));
            resamples[b].curves.emplace_back(cls, std::move(curve));
        }
    });

    // Deterministic reduction in resample order.
    std::vector<std::vector<double>> split_lists;
    std::map<int, std::vector<double>> curve_sum;  // per hazard class, summed over resamples
    std::map<int, int> curve_n;
    for (auto& r : resamples) {
        for (auto& sl : r.splits) split_lists.push_back(std::move(sl));
        for (const auto& [cls, curve] : r.curves) {
            auto& acc = curve_sum[cls];
            if (acc.empty()) acc.assign(distinct.size(), 0.0);
            for (std::size_t i = 0; i < distinct.size(); ++i) acc[i] += curve[i];
            curve_n[cls]++;
        }
    }
    if (split_lists.empty()) return empty;

    MergeOptions mo;
    mo.values.assign(values.begin(), values.end());
    mo.min_bin_count = opt.min_bin_count;
    mo.max_bins = opt.n_target_bins;
    for (const auto& [cls, sum] : curve_sum) {
        std::vector<double> per_value(values.size());
        for (std::size_t i = 0; i < values.size(); ++i) {
            const auto pos = static_cast<std::size_t>(std::lower_bound(distinct.begin(), distinct.end(), values[i]) - distinct.begin());
            per_value[i] = sum[pos] / curve_n[cls];
        }
        mo.effects.push_back(std::move(per_value));
    }
    auto spec = merge_splits(split_lists, mo, std::move(empty.variable));
    spec.n_target_bins = opt.n_target_bins;
    return spec;
}

}  // namespace microres::binning
