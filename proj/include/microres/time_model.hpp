#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "microres/claims_data.hpp"
#include "microres/config.hpp"
#include "microres/encoding.hpp"
#include "microres/features.hpp"
#include "microres/glm.hpp"

namespace microres {

/// Probabilities in Transition order: N, P, TN, TP.
using Hazards = std::array<double, 4>;

enum class Fallback { Full, NoCovariates, Pooled };

inline std::string_view to_string(Fallback f) noexcept {
    switch (f) {
        case Fallback::Full: return "Full";
        case Fallback::NoCovariates: return "NoCovariates";
        case Fallback::Pooled: return "Pooled";
    }
    return "?";
}

inline Fallback fallback_from(std::string_view s) {
    if (s == "Full") return Fallback::Full;
    if (s == "NoCovariates") return Fallback::NoCovariates;
    if (s == "Pooled") return Fallback::Pooled;
    throw ModelError("unknown fallback '" + std::string(s) + "'");
}

/// A multinomial model over a subset of outcome codes (transitions or payment bins),
/// with its encoder and a precomputed level table for fast prediction. Outcomes never
/// seen in training have no class and get probability 0.
struct CategoricalModel {
    std::vector<int> outcomes;  // outcome code of each class; class 0 is the reference
    FeatureEncoder encoder;
    glm::MultinomialFit fit;
    LevelTable table;

    /// Probability per outcome code in [0, n_outcomes).
    template <std::size_t N>
    void probs(const CovariateVector& x, std::array<double, N>& out) const {
        out.fill(0.0);
        if (outcomes.size() == 1) {
            out[static_cast<std::size_t>(outcomes[0])] = 1.0;
            return;
        }
        thread_local std::vector<int> lv;
        thread_local std::vector<double> p;
        encoder.levels(x, lv);
        table.probs(lv, p);
        for (std::size_t k = 0; k < outcomes.size(); ++k) out[static_cast<std::size_t>(outcomes[k])] = p[k];
    }

    void probs(const CovariateVector& x, std::vector<double>& out, std::size_t n_outcomes) const {
        out.assign(n_outcomes, 0.0);
        if (outcomes.size() == 1) {
            out[static_cast<std::size_t>(outcomes[0])] = 1.0;
            return;
        }
        thread_local std::vector<int> lv;
        thread_local std::vector<double> p;
        encoder.levels(x, lv);
        table.probs(lv, p);
        for (std::size_t k = 0; k < outcomes.size(); ++k) out[static_cast<std::size_t>(outcomes[k])] = p[k];
    }

    void rebuild_table() {
        if (outcomes.size() > 1) table = LevelTable::build(encoder, fit.coefficients);
    }
};

inline void to_json(nlohmann::json& j, const CategoricalModel& m) {
    j = nlohmann::json{{"outcomes", m.outcomes}, {"features", m.encoder}};
    if (m.outcomes.size() > 1) j["fit"] = m.fit;
}
inline void from_json(const nlohmann::json& j, CategoricalModel& m) {
    j.at("outcomes").get_to(m.outcomes);
    j.at("features").get_to(m.encoder);
    if (m.outcomes.size() > 1) {
        j.at("fit").get_to(m.fit);
        if (static_cast<std::size_t>(m.fit.coefficients.cols()) != m.encoder.width())
            throw ModelError("fit width does not match its features");
    }
    m.rebuild_table();
}

/// Fits `outcome` (codes in [0, n_outcomes), -1 = skip) over rows `idx` with the given
/// encoder. A single observed outcome gives a degenerate model.
template <class Outcome>
CategoricalModel fit_categorical(FeatureEncoder enc, const std::vector<PeriodRow>& rows,
                                 const std::vector<std::size_t>& idx, int n_outcomes,
                                 const std::vector<std::string>& outcome_names, Outcome outcome,
                                 const ModelConfig& config) {
    std::vector<long> seen(static_cast<std::size_t>(n_outcomes), 0);
    for (auto i : idx) {
        const int o = outcome(rows[i]);
        if (o >= 0) seen[static_cast<std::size_t>(o)]++;
    }
    CategoricalModel m;
    std::vector<int> class_of(static_cast<std::size_t>(n_outcomes), -1);
    std::vector<std::string> names;
    for (int o = 0; o < n_outcomes; ++o)
        if (seen[static_cast<std::size_t>(o)] > 0) {
            class_of[static_cast<std::size_t>(o)] = static_cast<int>(m.outcomes.size());
            m.outcomes.push_back(o);
            names.push_back(outcome_names[static_cast<std::size_t>(o)]);
        }
    if (m.outcomes.empty()) throw ModelError("no observations to fit");
    m.encoder = std::move(enc);
    if (m.outcomes.size() == 1) {
        m.encoder = FeatureEncoder{};
        return m;
    }
    auto design = build_design(m.encoder, rows, idx, names, [&](const PeriodRow& r) {
        const int o = outcome(r);
        return o < 0 ? -1 : class_of[static_cast<std::size_t>(o)];
    });
    glm::FitOptions fo;
    fo.max_iter = config.glmMaxIter;
    fo.tol = config.glmTol;
    fo.ridge = config.glmRidge;
    m.fit = glm::fit_multinomial(design, fo);
    m.rebuild_table();
    return m;
}

struct HazardModel {
    int state = 0;
    Fallback fallback = Fallback::Full;
    std::size_t training_rows = 0;
    StateBinning binning;
    CategoricalModel model;

    Hazards hazards(const CovariateVector& x) const {
        Hazards h;
        model.probs(x, h);
        return h;
    }
};

inline Hazards hazards_for(const HazardModel& m, const CovariateVector& x) { return m.hazards(x); }

inline void to_json(nlohmann::json& j, const HazardModel& m) {
    j = nlohmann::json{{"state", m.state},
                       {"fallback", std::string(to_string(m.fallback))},
                       {"training_rows", m.training_rows},
                       {"binning", m.binning},
                       {"model", m.model}};
}
inline void from_json(const nlohmann::json& j, HazardModel& m) {
    j.at("state").get_to(m.state);
    m.fallback = fallback_from(j.at("fallback").get<std::string>());
    j.at("training_rows").get_to(m.training_rows);
    j.at("binning").get_to(m.binning);
    j.at("model").get_to(m.model);
}

inline const std::vector<std::string>& transition_names() {
    static const std::vector<std::string> n{"N", "P", "TN", "TP"};
    return n;
}

/// One hazard model per state dataset. A state is fitted with covariates when it has
/// at least max(nMinModT, p * nTimesParamsT) rows (p = parameters per hazard),
/// intercept-only with at least nMinNoModT rows, and otherwise reuses the previous
/// state's model.
inline std::vector<HazardModel> fit_time_models(const std::vector<PeriodRow>& rows,
                                                const std::vector<StateDataset>& sets, const ModelConfig& config,
                                                std::uint64_t seed = 1) {
    std::vector<HazardModel> out;
    for (const auto& set : sets) {
        const auto& idx = set.time_rows;
        HazardModel h;
        h.state = set.state;
        h.training_rows = idx.size();
        if (static_cast<int>(idx.size()) < config.nMinNoModT) {
            if (out.empty())
                throw ModelError(fmt::format("state S0 has {} rows, fewer than nMinNoModT = {}; portfolio too small to model",
                                             idx.size(), config.nMinNoModT));
            h = out.back();
            h.state = set.state;
            h.training_rows = idx.size();
            h.fallback = Fallback::Pooled;
            out.push_back(std::move(h));
            continue;
        }
        h.binning = fit_state_binning(rows, idx, set.state, config, seed);
        auto enc = build_state_encoder(rows, idx, set.state, config, h.binning, false);
        const auto need = std::max<std::size_t>(static_cast<std::size_t>(config.nMinModT),
                                                enc.width() * static_cast<std::size_t>(config.nTimesParamsT));
        h.fallback = idx.size() >= need && enc.width() > 1 ? Fallback::Full : Fallback::NoCovariates;
        if (h.fallback == Fallback::NoCovariates) {
            enc = FeatureEncoder{};
            h.binning = {};
        }
        h.model = fit_categorical(std::move(enc), rows, idx, 4, transition_names(),
                                  [](const PeriodRow& r) { return static_cast<int>(r.transition); }, config);
        out.push_back(std::move(h));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Forced exits

/// Moves the stay probability to the three exits in equal parts.
inline Hazards force_state_exit(const Hazards& h) noexcept {
    const double stay = h[0];
    return {0.0, h[1] + stay / 3.0, h[2] + stay / 3.0, h[3] + stay / 3.0};
}

/// Folds the payment-transition mass into the terminal payment.
inline Hazards force_terminal_only(const Hazards& h) noexcept {
    return {h[0], 0.0, h[2], h[3] + h[1]};
}

/// Applies the forcing rules for a claim `periods_in_state` periods into state `state`
/// (uncapped) and `proc_time` periods into the process.
inline Hazards apply_forcing(Hazards h, int state, int periods_in_state, int proc_time, const ModelConfig& c) {
    const bool timed_out = periods_in_state >= c.fixedTimeMax;
    const bool last_state = state >= c.npmax - 1;
    if (timed_out) h = force_state_exit(h);
    if (last_state) h = force_terminal_only(h);
    if (proc_time >= c.procTimeMax) {
        // Absolute cap on process length: only terminal outcomes remain.
        const double tn = h[2], tp = h[3] + h[1], stay = h[0];
        const double s = tn + tp;
        if (s > 0) h = {0.0, 0.0, tn + stay * tn / s, tp + stay * tp / s};
        else h = {0.0, 0.0, 0.5, 0.5};
    }
    return h;
}

// ---------------------------------------------------------------------------
// Reporting delay

/// Per-period reporting probability for an occurred but unreported claim.
struct ReportingModel {
    double probability = 1.0;
    std::size_t claims = 0;
    double mean_delay = 1.0;  // mean deltRep of the training claims
};

inline void to_json(nlohmann::json& j, const ReportingModel& m) {
    j = nlohmann::json{{"probability", m.probability}, {"claims", m.claims}, {"mean_delay", m.mean_delay}};
}
inline void from_json(const nlohmann::json& j, ReportingModel& m) {
    j.at("probability").get_to(m.probability);
    m.claims = j.value("claims", std::size_t{0});
    m.mean_delay = j.value("mean_delay", 1.0);
}

/// Constant geometric model: a claim reported in delay period d (deltRep) contributes
/// d - 1 failures and one success, so the maximum likelihood estimate is n / sum(d).
inline ReportingModel fit_reporting_model(const std::vector<int>& delays) {
    if (delays.empty()) throw ModelError("no reported claims to fit the reporting model");
    double sum = 0.0;
    for (int d : delays) {
        if (d < 1) throw ModelError("reporting delay must be at least one period");
        sum += d;
    }
    ReportingModel m;
    m.claims = delays.size();
    m.mean_delay = sum / static_cast<double>(delays.size());
    m.probability = static_cast<double>(delays.size()) / sum;
    return m;
}

inline ReportingModel fit_reporting_model(const std::vector<Claim>& claims, Date tau, const ModelConfig& config) {
    std::vector<int> delays;
    for (const auto& c : claims)
        if (c.reported_by(tau)) delays.push_back(std::max(1, ceil_div(c.rep_date - c.acc_date, config.perLen)));
    return fit_reporting_model(delays);
}

// ---------------------------------------------------------------------------
// Partial dependence

struct DependencePoint {
    std::string level;
    Hazards probs{};
};

/// Average hazards over the rows `idx` with feature `feature` set to each of its levels.
inline std::vector<DependencePoint> partial_dependence(const HazardModel& m, const std::vector<PeriodRow>& rows,
                                                       const std::vector<std::size_t>& idx, std::size_t feature) {
    const auto& enc = m.model.encoder;
    if (feature >= enc.features().size()) throw ModelError("feature index out of range");
    const auto& f = enc.features()[feature];
    std::vector<DependencePoint> out;
    std::vector<int> lv;
    std::vector<double> p;
    for (int l = 0; l < f.level_count(); ++l) {
        DependencePoint d;
        d.level = f.level_label(l);
        for (auto i : idx) {
            enc.levels(rows[i].x, lv);
            lv[feature] = l;
            m.model.table.probs(lv, p);
            for (std::size_t k = 0; k < m.model.outcomes.size(); ++k)
                d.probs[static_cast<std::size_t>(m.model.outcomes[k])] += p[k];
        }
        if (!idx.empty())
            for (auto& v : d.probs) v /= static_cast<double>(idx.size());
        out.push_back(d);
    }
    return out;
}

}  // namespace microres
