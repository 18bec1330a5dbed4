#pragma once

#include <array>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "microres/claims_data.hpp"
#include "microres/config.hpp"
#include "microres/ibnr_counts.hpp"
#include "microres/payment_model.hpp"
#include "microres/time_model.hpp"

namespace microres {

/// Static covariate profile with its frequency among reported claims; IBNR claims draw
/// their covariates from this empirical distribution.
struct BaseProfile {
    std::shared_ptr<const StaticCovariates> covariates;
    double weight = 0.0;
};

/// Everything `fit` produces and `simulate` consumes.
struct FittedModels {
    Date eval_date;
    // Settings the fitted features depend on.
    int perLen = 30;
    Money minPayVal;
    int maxMod = 6;
    std::vector<HazardModel> time;
    std::vector<SplicedPaymentModel> payment;
    ReportingModel reporting;
    std::optional<IbnrCountModel> ibnr;
    RunoffTriangle triangle;
    std::vector<BaseProfile> base_pool;
    std::size_t training_rows = 0;
    /// Training transitions per state dataset, in N, P, TN, TP order.
    std::vector<std::array<long, 4>> transition_counts;

    /// `config` with the fit-time settings restored.
    ModelConfig adopt(ModelConfig config) const {
        config.perLen = perLen;
        config.minPayVal = minPayVal;
        config.maxMod = maxMod;
        return config;
    }
};

inline std::vector<BaseProfile> base_pool(const std::vector<Claim>& claims, Date tau) {
    std::map<StaticCovariates, double> freq;
    for (const auto& c : claims)
        if (c.reported_by(tau)) freq[c.base ? *c.base : StaticCovariates{}] += 1.0;
    std::vector<BaseProfile> out;
    for (auto& [k, n] : freq) out.push_back({std::make_shared<const StaticCovariates>(k), n});
    return out;
}

/// Full fitting pipeline at evaluation date tau.
inline FittedModels fit_models(const std::vector<Claim>& claims, Date tau, const ModelConfig& config) {
    config.validate();
    FittedModels m;
    m.eval_date = tau;
    m.perLen = config.perLen;
    m.minPayVal = config.minPayVal;
    m.maxMod = config.maxMod;
    const auto rows = discretize_portfolio(claims, tau, config);
    m.training_rows = rows.size();
    const auto sets = build_state_datasets(rows, config);
    for (const auto& set : sets) {
        std::array<long, 4> n{};
        for (auto i : set.time_rows) ++n[static_cast<std::size_t>(rows[i].transition)];
        m.transition_counts.push_back(n);
    }
    m.time = fit_time_models(rows, sets, config, config.rngSeed);
    m.payment = fit_payment_models(rows, sets, m.time, config);
    m.reporting = fit_reporting_model(claims, tau, config);
    m.triangle = build_triangle(claims, tau).triangle;
    try {
        m.ibnr = fit_ibnr_counts(m.triangle);
    } catch (const ModelError&) {
        m.ibnr.reset();  // no usable triangle: IBNR simulation is skipped
    }
    m.base_pool = base_pool(claims, tau);
    return m;
}

// ---------------------------------------------------------------------------
// Serialization

inline constexpr const char* kModelsFormat = "microres-models";
inline constexpr int kModelsVersion = 1;

inline void to_json(nlohmann::json& j, const IbnrCountModel& m) {
    j = nlohmann::json{{"pi", m.pi}, {"flagged", m.flagged}, {"r", m.r}, {"p", m.p},
                       {"first_unobserved", m.first_unobserved}, {"first_year", m.first_year}};
}
inline void from_json(const nlohmann::json& j, IbnrCountModel& m) {
    j.at("pi").get_to(m.pi);
    m.flagged = j.at("flagged").get<std::vector<bool>>();
    j.at("r").get_to(m.r);
    j.at("p").get_to(m.p);
    j.at("first_unobserved").get_to(m.first_unobserved);
    j.at("first_year").get_to(m.first_year);
}

inline nlohmann::json triangle_json(const RunoffTriangle& t) {
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < t.accident_years(); ++i) {
        std::vector<double> r;
        for (std::size_t j = 0; j <= t.last_observed(i) && j < t.dev_years(); ++j) r.push_back(t.at(i, j));
        rows.push_back(std::move(r));
    }
    return {{"first_year", t.first_year()}, {"dev_years", t.dev_years()}, {"rows", rows}};
}

inline RunoffTriangle triangle_from_json(const nlohmann::json& j) {
    const auto rows = j.at("rows").get<std::vector<std::vector<double>>>();
    RunoffTriangle t(rows.size(), j.at("dev_years").get<std::size_t>(), j.at("first_year").get<int>());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t k = 0; k < rows[i].size(); ++k) t.at(i, k) = rows[i][k];
    return t;
}

inline nlohmann::json to_json(const FittedModels& m) {
    nlohmann::json pool = nlohmann::json::array();
    for (const auto& b : m.base_pool) pool.push_back({{"covariates", *b.covariates}, {"weight", b.weight}});
    nlohmann::json j{{"format", kModelsFormat},
                     {"version", kModelsVersion},
                     {"eval_date", format_date(m.eval_date, DateFormat::Iso)},
                     {"perLen", m.perLen},
                     {"minPayVal", format_money(m.minPayVal)},
                     {"maxMod", m.maxMod},
                     {"training_rows", m.training_rows},
                     {"transition_counts", m.transition_counts},
                     {"time_models", m.time},
                     {"payment_models", m.payment},
                     {"reporting", m.reporting},
                     {"triangle", triangle_json(m.triangle)},
                     {"base_pool", pool}};
    j["ibnr"] = m.ibnr ? nlohmann::json(*m.ibnr) : nlohmann::json(nullptr);
    return j;
}

inline FittedModels models_from_json(const nlohmann::json& j) {
    if (!j.is_object() || j.value("format", std::string{}) != kModelsFormat)
        throw ModelError("schema mismatch: not a models file");
    if (j.value("version", 0) != kModelsVersion)
        throw ModelError("schema mismatch: unsupported models version " + std::to_string(j.value("version", 0)));
    try {
        FittedModels m;
        auto d = parse_date(j.at("eval_date").get<std::string>(), DateFormat::Iso);
        if (!d) throw ModelError("schema mismatch: invalid eval_date");
        m.eval_date = *d;
        j.at("perLen").get_to(m.perLen);
        auto mp = parse_money(j.at("minPayVal").get<std::string>());
        if (!mp) throw ModelError("schema mismatch: invalid minPayVal");
        m.minPayVal = *mp;
        j.at("maxMod").get_to(m.maxMod);
        m.training_rows = j.value("training_rows", std::size_t{0});
        if (j.contains("transition_counts")) j.at("transition_counts").get_to(m.transition_counts);
        j.at("time_models").get_to(m.time);
        j.at("payment_models").get_to(m.payment);
        j.at("reporting").get_to(m.reporting);
        m.triangle = triangle_from_json(j.at("triangle"));
        if (!j.at("ibnr").is_null()) m.ibnr = j.at("ibnr").get<IbnrCountModel>();
        for (const auto& b : j.at("base_pool"))
            m.base_pool.push_back({std::make_shared<const StaticCovariates>(b.at("covariates").get<StaticCovariates>()),
                                   b.at("weight").get<double>()});
        if (static_cast<int>(m.time.size()) != m.maxMod || static_cast<int>(m.payment.size()) != m.maxMod)
            throw ModelError("schema mismatch: expected one time and one payment model per state");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ModelError(std::string("schema mismatch: ") + e.what());
    }
}

inline void save_models(const FittedModels& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    out << to_json(m).dump(1) << '\n';
}

inline FittedModels load_models(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ModelError("models not found: '" + path + "' (run `fit` first)");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ModelError("schema mismatch: '" + path + "' is not valid JSON");
    }
    return models_from_json(j);
}

}  // namespace microres
