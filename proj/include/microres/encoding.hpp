#pragma once

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "microres/claims_data.hpp"
#include "microres/error.hpp"

namespace microres {

/// Which covariate a model feature reads.
enum class FeatureSource {
    DeltRep,
    FastRep,
    InProcTime,
    Delt1Pay,
    Delt1PayTime,
    CumDelt1Pay,
    InStateTime,
    TerminalPayment,
    Base,
};

inline std::string_view to_string(FeatureSource s) noexcept {
    switch (s) {
        case FeatureSource::DeltRep: return "deltRep";
        case FeatureSource::FastRep: return "fastRep";
        case FeatureSource::InProcTime: return "inProcTime";
        case FeatureSource::Delt1Pay: return "delt1Pay";
        case FeatureSource::Delt1PayTime: return "delt1PayTime";
        case FeatureSource::CumDelt1Pay: return "cumDelt1Pay";
        case FeatureSource::InStateTime: return "inStateTime";
        case FeatureSource::TerminalPayment: return "terminalPayment";
        case FeatureSource::Base: return "base";
    }
    return "?";
}

inline FeatureSource feature_source_from(std::string_view s) {
    for (auto f : {FeatureSource::DeltRep, FeatureSource::FastRep, FeatureSource::InProcTime,
                   FeatureSource::Delt1Pay, FeatureSource::Delt1PayTime, FeatureSource::CumDelt1Pay,
                   FeatureSource::InStateTime, FeatureSource::TerminalPayment, FeatureSource::Base})
        if (to_string(f) == s) return f;
    throw ModelError("unknown feature source '" + std::string(s) + "'");
}

using FeatureValue = std::variant<std::monostate, double, std::string>;

inline FeatureValue feature_value(const CovariateVector& x, FeatureSource src, const std::string& base_name) {
    switch (src) {
        case FeatureSource::DeltRep: return double(x.deltRep);
        case FeatureSource::FastRep: return x.fastRep ? 1.0 : 0.0;
        case FeatureSource::InProcTime: return double(x.inProcTime);
        case FeatureSource::Delt1Pay:
            return x.delt1Pay ? FeatureValue(x.delt1Pay->units()) : FeatureValue{};
        case FeatureSource::Delt1PayTime:
            return x.delt1PayTime ? FeatureValue(double(*x.delt1PayTime)) : FeatureValue{};
        case FeatureSource::CumDelt1Pay:
            return x.cumDelt1Pay ? FeatureValue(x.cumDelt1Pay->units()) : FeatureValue{};
        case FeatureSource::InStateTime: return double(x.inStateTime);
        case FeatureSource::TerminalPayment: return x.terminalPayment ? 1.0 : 0.0;
        case FeatureSource::Base: {
            if (!x.base) return FeatureValue{};
            auto it = x.base->find(base_name);
            if (it == x.base->end()) return FeatureValue{};
            return it->second;
        }
    }
    return FeatureValue{};
}

/// Maps one covariate to a level index. Numeric features are cut at sorted split
/// points (bin k holds [s_{k-1}, s_k)); categorical features use a level table where
/// rare levels share an "other" level. Missing values map to the reference level.
struct Feature {
    std::string name;
    FeatureSource source = FeatureSource::Base;
    std::string base_name;
    bool numeric = true;
    std::vector<double> splits;                 // numeric
    std::vector<std::string> levels;            // categorical level labels
    std::map<std::string, int> level_of;        // categorical raw value -> level
    int reference = 0;

    int level_count() const noexcept {
        return numeric ? static_cast<int>(splits.size()) + 1 : static_cast<int>(levels.size());
    }

    /// Level index, or nullopt for a missing value or an unseen category.
    std::optional<int> level(const FeatureValue& v) const {
        if (std::holds_alternative<std::monostate>(v)) return std::nullopt;
        if (numeric) {
            const double* d = std::get_if<double>(&v);
            if (!d) return std::nullopt;
            return static_cast<int>(std::upper_bound(splits.begin(), splits.end(), *d) - splits.begin());
        }
        const std::string* s = std::get_if<std::string>(&v);
        if (!s) return std::nullopt;
        auto it = level_of.find(*s);
        if (it == level_of.end()) return std::nullopt;
        return it->second;
    }

    std::string level_label(int l) const {
        if (!numeric) return levels.at(static_cast<std::size_t>(l));
        auto fmt_num = [](double v) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%g", v);
            return std::string(buf);
        };
        const std::string lo = l == 0 ? "-inf" : fmt_num(splits[static_cast<std::size_t>(l - 1)]);
        const std::string hi = l == static_cast<int>(splits.size()) ? "inf" : fmt_num(splits[static_cast<std::size_t>(l)]);
        return "[" + lo + "," + hi + ")";
    }
};

/// Splits that make every integer 1..cap-1 its own level and cap the rest; levels with
/// fewer than `min_count` observations are merged into a neighbour.
inline std::vector<double> integer_level_splits(const std::vector<int>& values, int cap, int min_count) {
    cap = std::max(1, cap);
    std::vector<long> counts(static_cast<std::size_t>(cap) + 1, 0);  // index = level value 1..cap
    for (int v : values) counts[static_cast<std::size_t>(std::clamp(v, 1, cap))]++;
    // Bins as [lo, hi] integer ranges; start with one per value that occurs.
    struct Bin { int lo, hi; long n; };
    std::vector<Bin> bins;
    for (int v = 1; v <= cap; ++v)
        if (counts[static_cast<std::size_t>(v)] > 0) bins.push_back({v, v, counts[static_cast<std::size_t>(v)]});
    if (bins.empty()) return {};
    bool changed = true;
    while (changed && bins.size() > 1) {
        changed = false;
        for (std::size_t k = bins.size(); k-- > 0;) {
            if (bins[k].n >= min_count) continue;
            const std::size_t into = k == 0 ? 1 : k - 1;
            const std::size_t a = std::min(k, into), b = std::max(k, into);
            bins[a] = {bins[a].lo, bins[b].hi, bins[a].n + bins[b].n};
            bins.erase(bins.begin() + static_cast<std::ptrdiff_t>(b));
            changed = true;
            break;
        }
    }
    std::vector<double> splits;
    for (std::size_t k = 1; k < bins.size(); ++k) splits.push_back(bins[k].lo);
    return splits;
}

/// Categorical feature from observed values; levels below `min_count` form "other",
/// which joins the most frequent level when still too small. Most frequent level is
/// the reference.
inline Feature make_categorical(std::string name, FeatureSource src, std::string base_name,
                                const std::vector<std::string>& values, int min_count) {
    std::map<std::string, long> freq;
    for (const auto& v : values) freq[v]++;
    Feature f;
    f.name = std::move(name);
    f.source = src;
    f.base_name = std::move(base_name);
    f.numeric = false;
    std::vector<std::string> rare;
    long rare_n = 0;
    for (const auto& [v, n] : freq) {
        if (n >= min_count) {
            f.level_of[v] = static_cast<int>(f.levels.size());
            f.levels.push_back(v);
        } else {
            rare.push_back(v);
            rare_n += n;
        }
    }
    if (f.levels.empty()) {
        f.levels.push_back("other");
        for (const auto& v : rare) f.level_of[v] = 0;
        return f;
    }
    int best = 0;
    long best_n = -1;
    for (std::size_t l = 0; l < f.levels.size(); ++l)
        if (freq[f.levels[l]] > best_n) best_n = freq[f.levels[l]], best = static_cast<int>(l);
    if (!rare.empty()) {
        int target = best;
        if (rare_n >= min_count) {
            target = static_cast<int>(f.levels.size());
            f.levels.push_back("other");
        }
        for (const auto& v : rare) f.level_of[v] = target;
    }
    f.reference = best;
    return f;
}

/// Numeric feature over given split points; the most populated bin is the reference.
inline Feature make_numeric(std::string name, FeatureSource src, std::vector<double> splits,
                            const std::vector<double>& values) {
    Feature f;
    f.name = std::move(name);
    f.source = src;
    f.numeric = true;
    f.splits = std::move(splits);
    std::vector<long> counts(f.splits.size() + 1, 0);
    for (double v : values) counts[static_cast<std::size_t>(*f.level(v))]++;
    f.reference = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
    return f;
}

/// Turns covariate vectors into one-hot design rows (intercept first, reference levels
/// dropped).
class FeatureEncoder {
public:
    FeatureEncoder() : unseen_(std::make_shared<std::atomic<std::size_t>>(0)) {}
    explicit FeatureEncoder(std::vector<Feature> features)
        : features_(std::move(features)), unseen_(std::make_shared<std::atomic<std::size_t>>(0)) {
        offsets_.reserve(features_.size());
        std::size_t off = 1;
        for (const auto& f : features_) {
            offsets_.push_back(off);
            off += static_cast<std::size_t>(f.level_count() - 1);
        }
        width_ = off;
    }

    const std::vector<Feature>& features() const noexcept { return features_; }
    std::size_t width() const noexcept { return width_; }
    std::size_t unseen_count() const noexcept { return unseen_->load(); }

    /// Level per feature; missing or unseen values take the reference level
    /// (unseen categories are counted).
    void levels(const CovariateVector& x, std::vector<int>& out) const {
        out.resize(features_.size());
        for (std::size_t i = 0; i < features_.size(); ++i) {
            const auto& f = features_[i];
            const FeatureValue v = feature_value(x, f.source, f.base_name);
            auto l = f.level(v);
            if (!l) {
                if (std::holds_alternative<std::string>(v)) unseen_->fetch_add(1, std::memory_order_relaxed);
                l = f.reference;
            }
            out[i] = *l;
        }
    }

    /// Column index of (feature, level), or -1 for the reference level.
    std::ptrdiff_t column(std::size_t feature, int level) const {
        const auto& f = features_[feature];
        if (level == f.reference) return -1;
        const int k = level < f.reference ? level : level - 1;
        return static_cast<std::ptrdiff_t>(offsets_[feature]) + k;
    }

    std::vector<std::string> column_names() const {
        std::vector<std::string> names(width_);
        names[0] = "(Intercept)";
        for (std::size_t i = 0; i < features_.size(); ++i)
            for (int l = 0; l < features_[i].level_count(); ++l) {
                auto c = column(i, l);
                if (c >= 0) names[static_cast<std::size_t>(c)] = features_[i].name + "=" + features_[i].level_label(l);
            }
        return names;
    }

    Eigen::RowVectorXd row(const std::vector<int>& levels) const {
        Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(width_));
        r(0) = 1.0;
        for (std::size_t i = 0; i < features_.size(); ++i) {
            auto c = column(i, levels[i]);
            if (c >= 0) r(c) = 1.0;
        }
        return r;
    }

    Eigen::RowVectorXd row(const CovariateVector& x) const {
        std::vector<int> lv;
        levels(x, lv);
        return row(lv);
    }

private:
    std::vector<Feature> features_;
    std::vector<std::size_t> offsets_;
    std::size_t width_ = 1;
    std::shared_ptr<std::atomic<std::size_t>> unseen_;
};

/// Per-class additive lookup built from a fitted coefficient matrix: the linear
/// predictor of class k is intercept[k] + sum_f table[k][f][level_f].
struct LevelTable {
    std::vector<double> intercept;                         // per non-reference class
    std::vector<std::vector<std::vector<double>>> table;   // [class][feature][level]

    static LevelTable build(const FeatureEncoder& enc, const Eigen::MatrixXd& coef) {
        LevelTable t;
        const auto Km1 = static_cast<std::size_t>(coef.rows());
        t.intercept.resize(Km1);
        t.table.resize(Km1);
        for (std::size_t k = 0; k < Km1; ++k) {
            t.intercept[k] = coef(static_cast<Eigen::Index>(k), 0);
            t.table[k].resize(enc.features().size());
            for (std::size_t f = 0; f < enc.features().size(); ++f) {
                const int L = enc.features()[f].level_count();
                t.table[k][f].assign(static_cast<std::size_t>(L), 0.0);
                for (int l = 0; l < L; ++l) {
                    auto c = enc.column(f, l);
                    if (c >= 0) t.table[k][f][static_cast<std::size_t>(l)] = coef(static_cast<Eigen::Index>(k), c);
                }
            }
        }
        return t;
    }

    /// Softmax probabilities (reference class first) into `out`.
    void probs(const std::vector<int>& levels, std::vector<double>& out) const {
        const std::size_t K = intercept.size() + 1;
        out.resize(K);
        out[0] = 0.0;
        double mx = 0.0;
        for (std::size_t k = 0; k + 1 < K; ++k) {
            double eta = intercept[k];
            for (std::size_t f = 0; f < levels.size(); ++f) eta += table[k][f][static_cast<std::size_t>(levels[f])];
            out[k + 1] = eta;
            mx = std::max(mx, eta);
        }
        double s = 0.0;
        for (auto& v : out) {
            v = std::exp(v - mx);
            s += v;
        }
        for (auto& v : out) v /= s;
    }
};

inline void to_json(nlohmann::json& j, const Feature& f) {
    j = nlohmann::json{{"name", f.name},
                       {"source", std::string(to_string(f.source))},
                       {"base_name", f.base_name},
                       {"numeric", f.numeric},
                       {"splits", f.splits},
                       {"levels", f.levels},
                       {"level_of", f.level_of},
                       {"reference", f.reference}};
}

inline void from_json(const nlohmann::json& j, Feature& f) {
    j.at("name").get_to(f.name);
    f.source = feature_source_from(j.at("source").get<std::string>());
    j.at("base_name").get_to(f.base_name);
    j.at("numeric").get_to(f.numeric);
    j.at("splits").get_to(f.splits);
    j.at("levels").get_to(f.levels);
    j.at("level_of").get_to(f.level_of);
    j.at("reference").get_to(f.reference);
}

inline void to_json(nlohmann::json& j, const FeatureEncoder& e) { j = e.features(); }
inline void from_json(const nlohmann::json& j, FeatureEncoder& e) {
    e = FeatureEncoder(j.get<std::vector<Feature>>());
}

}  // namespace microres
