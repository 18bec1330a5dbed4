#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <iterator>
#include <type_traits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "microres/date.hpp"
#include "microres/error.hpp"
#include "microres/money.hpp"

namespace microres {

enum class IbnrCountMode { Draw, Mean };

/// Model hyper-parameters. Key names follow the usual naming of the multinomial
/// multi-state reserving setup (perLen, minPayVal, nMinLev, ...).
struct ModelConfig {
    // pre-processing
    int perLen = 30;
    Money minPayVal = Money::from_cents(20000);
    int nMinLev = 30;
    int nGroups = 5;
    DateFormat dateFormat = DateFormat::Iso;
    char delimiter = ',';

    // time process
    int nMinTimeLev = 30;
    int nMaxLevInState = 12;
    int nMaxLevInProc = 24;
    int maxMod = 6;
    int nMinModT = 500;
    int nMinNoModT = 50;
    int nTimesParamsT = 5;

    // payment process
    int nBins = 4;
    int nMinModP = 500;
    int nMinNoModP = 50;
    int nTimesParamsP = 5;
    double lowerTailQuantile = 0.05;
    double upperTailQuantile = 0.95;
    /// Per-state split point overrides (state index -> b_1 .. b_{L-1}); the last entry
    /// applies to every higher state as well.
    std::map<int, std::vector<double>> splitPoints;

    // binning
    int binBootstraps = 10;
    int binSampleSize = 100000;
    double loessSpan = 0.75;
    double binningRidge = 1.0;

    // glm
    int glmMaxIter = 200;
    double glmTol = 1e-8;
    double glmRidge = 1e-8;

    // simulation
    int nSims = 100;
    int fixedTimeMax = 24;
    int npmax = 50;
    int procTimeMax = 180;
    int reportingMaxPeriods = 600;
    bool samplePayments = false;
    IbnrCountMode ibnrCountMode = IbnrCountMode::Draw;
    std::optional<Date> evalDate;
    std::uint64_t rngSeed = 1;
    /// Threads for the binning resamples; results do not depend on it.
    unsigned workers = 1;

    void validate() const {
        auto positive = [](const char* name, long long v) {
            if (v <= 0) throw ConfigError(fmt::format("{} must be positive (got {})", name, v));
        };
        positive("perLen", perLen);
        positive("minPayVal", minPayVal.cents());
        positive("nMinLev", nMinLev);
        positive("nGroups", nGroups);
        positive("nMinTimeLev", nMinTimeLev);
        positive("nMaxLevInState", nMaxLevInState);
        positive("nMaxLevInProc", nMaxLevInProc);
        positive("maxMod", maxMod);
        positive("nMinModT", nMinModT);
        positive("nMinNoModT", nMinNoModT);
        positive("nTimesParamsT", nTimesParamsT);
        positive("nMinModP", nMinModP);
        positive("nMinNoModP", nMinNoModP);
        positive("nTimesParamsP", nTimesParamsP);
        positive("nSims", nSims);
        positive("fixedTimeMax", fixedTimeMax);
        positive("npmax", npmax);
        positive("procTimeMax", procTimeMax);
        positive("binBootstraps", binBootstraps);
        positive("binSampleSize", binSampleSize);
        positive("glmMaxIter", glmMaxIter);
        positive("reportingMaxPeriods", reportingMaxPeriods);
        if (maxMod > npmax) throw ConfigError("maxMod must not exceed npmax");
        if (nBins < 3) throw ConfigError("nBins must be at least 3");
        if (!(lowerTailQuantile > 0 && lowerTailQuantile < upperTailQuantile && upperTailQuantile < 1))
            throw ConfigError("tail quantiles must satisfy 0 < lower < upper < 1");
        if (!(loessSpan > 0 && loessSpan <= 1)) throw ConfigError("loessSpan must be in (0, 1]");
        if (glmTol <= 0 || glmRidge < 0 || binningRidge < 0) throw ConfigError("invalid glm tolerances");
        for (const auto& [state, pts] : splitPoints) {
            if (static_cast<int>(pts.size()) != nBins - 1)
                throw ConfigError(fmt::format("splitPoints.S{} needs {} values", state, nBins - 1));
            for (std::size_t i = 1; i < pts.size(); ++i)
                if (!(pts[i - 1] < pts[i]))
                    throw ConfigError(fmt::format("splitPoints.S{} must be increasing", state));
        }
    }

    /// Split-point override for `state`, if any (falls back to the closest lower state).
    std::optional<std::vector<double>> split_points_for(int state) const {
        if (splitPoints.empty()) return std::nullopt;
        auto it = splitPoints.upper_bound(state);
        if (it == splitPoints.begin()) return std::nullopt;
        return std::prev(it)->second;
    }
};

namespace detail {

inline std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& v) {
    T out{};
    if constexpr (std::is_floating_point_v<T>) {
        try {
            std::size_t pos = 0;
            out = static_cast<T>(std::stod(v, &pos));
            if (pos != v.size()) throw std::invalid_argument(v);
        } catch (const std::exception&) {
            throw ConfigError(fmt::format("{}: not a number: '{}'", key, v));
        }
    } else {
        auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc{} || p != v.data() + v.size())
            throw ConfigError(fmt::format("{}: not an integer: '{}'", key, v));
    }
    return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(fmt::format("{}: not a boolean: '{}'", key, v));
}

}  // namespace detail

/// Applies one `key = value` setting.
inline void apply_setting(ModelConfig& c, const std::string& key, const std::string& value) {
    using detail::parse_number;
    const std::string& v = value;
    if (key == "perLen") c.perLen = parse_number<int>(key, v);
    else if (key == "minPayVal") {
        auto m = parse_money(v);
        if (!m) throw ConfigError("minPayVal: not an amount: '" + v + "'");
        c.minPayVal = *m;
    }
    else if (key == "nMinLev") c.nMinLev = parse_number<int>(key, v);
    else if (key == "nGroups" || key == "nGroupsFin") c.nGroups = parse_number<int>(key, v);
    else if (key == "dateFormat") {
        auto f = parse_date_format(v);
        if (!f) throw ConfigError("dateFormat must be 'iso' or 'dmy'");
        c.dateFormat = *f;
    }
    else if (key == "delimiter") {
        if (v == "tab" || v == "\\t") c.delimiter = '\t';
        else if (v.size() == 1) c.delimiter = v[0];
        else throw ConfigError("delimiter must be a single character or 'tab'");
    }
    else if (key == "nMinTimeLev") c.nMinTimeLev = parse_number<int>(key, v);
    else if (key == "nMaxLevInState" || key == "nMaxLevInstate") c.nMaxLevInState = parse_number<int>(key, v);
    else if (key == "nMaxLevInProc") c.nMaxLevInProc = parse_number<int>(key, v);
    else if (key == "maxMod") c.maxMod = parse_number<int>(key, v);
    else if (key == "nMinModT") c.nMinModT = parse_number<int>(key, v);
    else if (key == "nMinNoModT") c.nMinNoModT = parse_number<int>(key, v);
    else if (key == "nTimesParamsT" || key == "nTimesParamT") c.nTimesParamsT = parse_number<int>(key, v);
    else if (key == "nBins") c.nBins = parse_number<int>(key, v);
    else if (key == "nMinModP") c.nMinModP = parse_number<int>(key, v);
    else if (key == "nMinNoModP") c.nMinNoModP = parse_number<int>(key, v);
    else if (key == "nTimesParamsP" || key == "nTimesParamP") c.nTimesParamsP = parse_number<int>(key, v);
    else if (key == "lowerTailQuantile") c.lowerTailQuantile = parse_number<double>(key, v);
    else if (key == "upperTailQuantile") c.upperTailQuantile = parse_number<double>(key, v);
    else if (key.rfind("splitPoints.S", 0) == 0) {
        const int state = parse_number<int>(key, key.substr(13));
        std::vector<double> pts;
        std::stringstream ss(v);
        std::string item;
        while (std::getline(ss, item, ',')) pts.push_back(parse_number<double>(key, detail::trim(item)));
        c.splitPoints[state] = std::move(pts);
    }
    else if (key == "binBootstraps") c.binBootstraps = parse_number<int>(key, v);
    else if (key == "binSampleSize") c.binSampleSize = parse_number<int>(key, v);
    else if (key == "loessSpan") c.loessSpan = parse_number<double>(key, v);
    else if (key == "binningRidge") c.binningRidge = parse_number<double>(key, v);
    else if (key == "glmMaxIter") c.glmMaxIter = parse_number<int>(key, v);
    else if (key == "glmTol") c.glmTol = parse_number<double>(key, v);
    else if (key == "glmRidge") c.glmRidge = parse_number<double>(key, v);
    else if (key == "nSims" || key == "N_sim") c.nSims = parse_number<int>(key, v);
    else if (key == "fixedTimeMax" || key == "fixedStateTimeMax") c.fixedTimeMax = parse_number<int>(key, v);
    else if (key == "npmax") c.npmax = parse_number<int>(key, v);
    else if (key == "procTimeMax") c.procTimeMax = parse_number<int>(key, v);
    else if (key == "reportingMaxPeriods") c.reportingMaxPeriods = parse_number<int>(key, v);
    else if (key == "samplePayments") c.samplePayments = detail::parse_bool(key, v);
    else if (key == "ibnrCountMode") {
        if (v == "draw") c.ibnrCountMode = IbnrCountMode::Draw;
        else if (v == "mean") c.ibnrCountMode = IbnrCountMode::Mean;
        else throw ConfigError("ibnrCountMode must be 'draw' or 'mean'");
    }
    else if (key == "evalDate") {
        auto d = parse_date(v, DateFormat::Iso);
        if (!d) d = parse_date(v, DateFormat::DayMonthYear);
        if (!d) throw ConfigError("evalDate: invalid date '" + v + "'");
        c.evalDate = *d;
    }
    else if (key == "rngSeed") c.rngSeed = parse_number<std::uint64_t>(key, v);
    else throw ConfigError("unknown config key '" + key + "'");
}

/// Reads an INI-style file: `[section]` headers (organisational only), `key = value`
/// lines, `#` comments. Unknown keys are errors.
inline ModelConfig read_config(std::istream& in) {
    ModelConfig c;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty() || line.front() == '[') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(fmt::format("line {}: expected key = value", lineno));
        try {
            apply_setting(c, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
        } catch (const ConfigError& e) {
            throw ConfigError(fmt::format("line {}: {}", lineno, e.what()));
        }
    }
    c.validate();
    return c;
}

inline ModelConfig read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    return read_config(in);
}

}  // namespace microres
