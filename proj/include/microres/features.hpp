#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "microres/binning.hpp"
#include "microres/claims_data.hpp"
#include "microres/config.hpp"
#include "microres/encoding.hpp"
#include "microres/glm.hpp"

namespace microres {

/// Binning of the payment-history amounts for one state.
struct StateBinning {
    std::optional<binning::BinningSpec> delt1Pay;
    std::optional<binning::BinningSpec> cumDelt1Pay;
};

inline void to_json(nlohmann::json& j, const StateBinning& b) {
    j = nlohmann::json::object();
    if (b.delt1Pay) j["delt1Pay"] = *b.delt1Pay;
    if (b.cumDelt1Pay) j["cumDelt1Pay"] = *b.cumDelt1Pay;
}
inline void from_json(const nlohmann::json& j, StateBinning& b) {
    if (j.contains("delt1Pay")) b.delt1Pay = j.at("delt1Pay").get<binning::BinningSpec>();
    if (j.contains("cumDelt1Pay")) b.cumDelt1Pay = j.at("cumDelt1Pay").get<binning::BinningSpec>();
}

inline binning::BinningOptions binning_options(const ModelConfig& c) {
    binning::BinningOptions o;
    o.n_target_bins = c.nGroups;
    o.min_bin_count = c.nMinLev;
    o.bootstraps = c.binBootstraps;
    o.sample_size = c.binSampleSize;
    o.span = c.loessSpan;
    o.ridge = c.binningRidge;
    o.state_time_cap = c.nMaxLevInState;
    o.state_time_min = c.nMinTimeLev;
    o.workers = c.workers;
    return o;
}

/// Bins delt1Pay and cumDelt1Pay on the time-model rows of one state (none in S_0).
inline StateBinning fit_state_binning(const std::vector<PeriodRow>& rows, const std::vector<std::size_t>& idx,
                                      int state, const ModelConfig& config, std::uint64_t seed) {
    StateBinning out;
    if (state == 0) return out;
    std::vector<double> last, cum;
    std::vector<int> st;
    std::vector<Transition> tr;
    for (auto i : idx) {
        const auto& r = rows[i];
        if (!r.x.delt1Pay || !r.x.cumDelt1Pay) continue;
        last.push_back(r.x.delt1Pay->units());
        cum.push_back(r.x.cumDelt1Pay->units());
        st.push_back(r.x.inStateTime);
        tr.push_back(r.transition);
    }
    const auto opt = binning_options(config);
    const auto s = static_cast<std::uint64_t>(state);
    out.delt1Pay = binning::bin_variable("delt1Pay", last, st, tr, opt, splitmix64(seed ^ (s * 2 + 1)));
    out.cumDelt1Pay = binning::bin_variable("cumDelt1Pay", cum, st, tr, opt, splitmix64(seed ^ (s * 2 + 2)));
    return out;
}

namespace detail {

inline std::optional<Feature> integer_feature(std::string name, FeatureSource src, const std::vector<int>& values,
                                              int cap, int min_count) {
    auto splits = integer_level_splits(values, cap, min_count);
    if (splits.empty()) return std::nullopt;
    std::vector<double> dv(values.begin(), values.end());
    return make_numeric(std::move(name), src, std::move(splits), dv);
}

}  // namespace detail

/// Covariates of one state's model. S_0 uses deltRep, fastRep, inStateTime (which
/// equals the process time there) and static covariates; later states add
/// inProcTime and the binned payment history. Payment models also get the terminal
/// payment flag. Features with a single populated level are left out.
inline FeatureEncoder build_state_encoder(const std::vector<PeriodRow>& rows, const std::vector<std::size_t>& idx,
                                          int state, const ModelConfig& config, const StateBinning& binning,
                                          bool payment_model) {
    std::vector<Feature> features;
    std::vector<int> delt_rep, proc, st;
    std::vector<double> fast, term, last, cum;
    std::set<std::string> base_names;
    for (auto i : idx) {
        const auto& x = rows[i].x;
        delt_rep.push_back(x.deltRep);
        proc.push_back(x.inProcTime);
        st.push_back(x.inStateTime);
        fast.push_back(x.fastRep ? 1.0 : 0.0);
        term.push_back(rows[i].transition == Transition::TP ? 1.0 : 0.0);
        if (x.delt1Pay) last.push_back(x.delt1Pay->units());
        if (x.cumDelt1Pay) cum.push_back(x.cumDelt1Pay->units());
        if (x.base)
            for (const auto& [k, v] : *x.base) base_names.insert(k);
    }
    auto binary = [&](const char* name, FeatureSource src, const std::vector<double>& v) {
        const auto ones = std::count(v.begin(), v.end(), 1.0);
        if (ones > 0 && ones < static_cast<long>(v.size())) features.push_back(make_numeric(name, src, {0.5}, v));
    };
    if (auto f = detail::integer_feature("deltRep", FeatureSource::DeltRep, delt_rep, config.nMaxLevInProc, config.nMinTimeLev))
        features.push_back(std::move(*f));
    binary("fastRep", FeatureSource::FastRep, fast);
    if (state > 0)
        if (auto f = detail::integer_feature("inProcTime", FeatureSource::InProcTime, proc, config.nMaxLevInProc, config.nMinTimeLev))
            features.push_back(std::move(*f));
    if (auto f = detail::integer_feature("inStateTime", FeatureSource::InStateTime, st, config.nMaxLevInState, config.nMinTimeLev))
        features.push_back(std::move(*f));
    if (state > 0) {
        if (binning.delt1Pay && !binning.delt1Pay->split_points.empty() && !last.empty())
            features.push_back(make_numeric("delt1Pay", FeatureSource::Delt1Pay, binning.delt1Pay->split_points, last));
        if (binning.cumDelt1Pay && !binning.cumDelt1Pay->split_points.empty() && !cum.empty())
            features.push_back(make_numeric("cumDelt1Pay", FeatureSource::CumDelt1Pay, binning.cumDelt1Pay->split_points, cum));
    }
    if (payment_model) binary("terminalPayment", FeatureSource::TerminalPayment, term);
    for (const auto& name : base_names) {
        std::vector<std::string> vals;
        vals.reserve(idx.size());
        for (auto i : idx) {
            const auto& b = rows[i].x.base;
            auto it = b ? b->find(name) : StaticCovariates::const_iterator{};
            vals.push_back(b && it != b->end() ? it->second : std::string("NA"));
        }
        auto f = make_categorical(name, FeatureSource::Base, name, vals, config.nMinLev);
        if (f.level_count() > 1) features.push_back(std::move(f));
    }
    return FeatureEncoder(std::move(features));
}

/// Aggregated design for the rows `idx`: one design row per distinct level pattern,
/// with class counts from `label` (class index, or -1 to skip the row).
template <class Label>
glm::DesignMatrix build_design(const FeatureEncoder& enc, const std::vector<PeriodRow>& rows,
                               const std::vector<std::size_t>& idx, std::vector<std::string> class_names,
                               Label label) {
    std::map<std::vector<int>, std::vector<double>> cells;
    std::vector<int> lv;
    const std::size_t K = class_names.size();
    for (auto i : idx) {
        const int y = label(rows[i]);
        if (y < 0) continue;
        CovariateVector x = rows[i].x;
        x.terminalPayment = rows[i].transition == Transition::TP;
        enc.levels(x, lv);
        auto& c = cells[lv];
        if (c.empty()) c.assign(K, 0.0);
        c[static_cast<std::size_t>(y)] += 1.0;
    }
    glm::DesignMatrix d;
    d.class_names = std::move(class_names);
    d.column_names = enc.column_names();
    d.X.resize(static_cast<Eigen::Index>(cells.size()), static_cast<Eigen::Index>(enc.width()));
    d.counts.resize(static_cast<Eigen::Index>(cells.size()), static_cast<Eigen::Index>(K));
    Eigen::Index r = 0;
    for (const auto& [levels, counts] : cells) {
        d.X.row(r) = enc.row(levels);
        for (std::size_t k = 0; k < K; ++k) d.counts(r, static_cast<Eigen::Index>(k)) = counts[k];
        ++r;
    }
    return d;
}

}  // namespace microres
