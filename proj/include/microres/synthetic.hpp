#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "microres/claims_data.hpp"
#include "microres/config.hpp"
#include "microres/csv.hpp"
#include "microres/parallel.hpp"
#include "microres/payment_model.hpp"
#include "microres/rng.hpp"

namespace microres::synth {

/// Static covariate with a categorical distribution.
struct CovariateLaw {
    std::string name;
    std::vector<std::string> levels;
    std::vector<double> probs;
};

/// Transition law of one state: baseline probabilities (N, P, TN, TP) turned into
/// log-odds, shifted by covariate effects ("name=level") and by a slope in the capped
/// time spent in the state. Classes with zero baseline probability stay impossible.
struct StateLaw {
    Hazards base{1.0, 0.0, 0.0, 0.0};
    std::map<std::string, Hazards> effects;
    Hazards state_time_slope{};
    int state_time_cap = 12;
};

/// Payment law of one state: spliced components plus bin weights with covariate and
/// terminal-payment effects on the log scale.
struct PaymentLaw {
    std::vector<double> split_points;
    GpdFit left, right;
    std::vector<TruncNormFit> body;
    std::vector<double> weights;
    std::map<std::string, std::vector<double>> effects;
    std::vector<double> terminal_effect;
    SplicedPaymentModel components;  // derived: split points, tails, body, means
};

struct Spec {
    std::size_t n_claims = 1000;
    Date accident_start;
    Date accident_end;
    Date eval_date;
    int perLen = 30;
    Money minPayVal = Money::from_cents(20000);
    double fast_share = 0.0;
    double report_probability = 1.0;
    std::vector<CovariateLaw> covariates;
    std::vector<StateLaw> states;
    std::vector<PaymentLaw> payments;
    int max_periods = 600;
    std::string id_prefix = "C";

    const StateLaw& state_law(int s) const { return states[static_cast<std::size_t>(std::min<int>(s, static_cast<int>(states.size()) - 1))]; }
    const PaymentLaw& payment_law(int s) const {
        return payments[static_cast<std::size_t>(std::min<int>(s, static_cast<int>(payments.size()) - 1))];
    }

    /// Model config matching the spec's discretization.
    ModelConfig config(ModelConfig base = {}) const {
        base.perLen = perLen;
        base.minPayVal = minPayVal;
        return base;
    }
};

namespace detail {

inline double log_or_ninf(double p) { return p > 0 ? std::log(p) : -std::numeric_limits<double>::infinity(); }

template <class V>
void softmax_inplace(V& eta) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double e : eta) mx = std::max(mx, e);
    double s = 0.0;
    for (auto& e : eta) {
        e = std::isfinite(e) ? std::exp(e - mx) : 0.0;
        s += e;
    }
    for (auto& e : eta) e /= s;
}

inline void check_probs(const std::vector<double>& p, const std::string& what) {
    double s = 0.0;
    for (double v : p) {
        if (!(v >= 0)) throw ConfigError(what + ": probabilities must be nonnegative");
        s += v;
    }
    if (std::abs(s - 1.0) > 1e-9) throw ConfigError(what + fmt::format(": probabilities sum to {}, not 1", s));
}

inline Date parse_spec_date(const nlohmann::json& j, const char* key) {
    auto d = parse_date(j.at(key).get<std::string>(), DateFormat::Iso);
    if (!d) throw ConfigError(std::string("spec: invalid date in ") + key);
    return *d;
}

inline Hazards hazards_from(const nlohmann::json& j) {
    return {j.value("N", 0.0), j.value("P", 0.0), j.value("TN", 0.0), j.value("TP", 0.0)};
}

}  // namespace detail

/// True transition probabilities for a claim in state `s` with covariates `x`.
inline Hazards true_hazards(const Spec& spec, int s, const CovariateVector& x) {
    const auto& law = spec.state_law(s);
    Hazards eta;
    const double t = std::min(x.inStateTime, law.state_time_cap) - 1;
    for (std::size_t k = 0; k < 4; ++k) eta[k] = detail::log_or_ninf(law.base[k]) + law.state_time_slope[k] * t;
    if (x.base)
        for (const auto& [name, value] : *x.base)
            if (auto it = law.effects.find(name + "=" + value); it != law.effects.end())
                for (std::size_t k = 0; k < 4; ++k) eta[k] += it->second[k];
    detail::softmax_inplace(eta);
    return eta;
}

/// True bin probabilities of the payment made on leaving state `s`.
inline std::vector<double> true_bin_probs(const Spec& spec, int s, const CovariateVector& x) {
    const auto& law = spec.payment_law(s);
    std::vector<double> eta(law.weights.size());
    for (std::size_t l = 0; l < eta.size(); ++l) {
        eta[l] = detail::log_or_ninf(law.weights[l]);
        if (x.terminalPayment && l < law.terminal_effect.size()) eta[l] += law.terminal_effect[l];
    }
    if (x.base)
        for (const auto& [name, value] : *x.base)
            if (auto it = law.effects.find(name + "=" + value); it != law.effects.end())
                for (std::size_t l = 0; l < eta.size() && l < it->second.size(); ++l) eta[l] += it->second[l];
    detail::softmax_inplace(eta);
    return eta;
}

inline double true_expected_payment(const Spec& spec, int s, const CovariateVector& x) {
    return expected_payment(true_bin_probs(spec, s, x), spec.payment_law(s).components.means);
}

/// Fills the derived component model and checks every law.
inline void finalize(PaymentLaw& law) {
    const std::size_t L = law.split_points.size() + 1;
    if (L < 3) throw ConfigError("spec: a payment law needs at least two split points");
    for (std::size_t k = 1; k < law.split_points.size(); ++k)
        if (!(law.split_points[k - 1] < law.split_points[k])) throw ConfigError("spec: split points must increase");
    if (law.body.size() != L - 2) throw ConfigError("spec: body needs one component per inner bin");
    if (law.weights.size() != L) throw ConfigError("spec: weights need one entry per bin");
    detail::check_probs(law.weights, "spec payment weights");
    for (const auto* g : {&law.left, &law.right})
        if (!(g->scale > 0) || !(g->shape < 1)) throw ConfigError("spec: GPD tails need scale > 0 and shape < 1");
    auto& m = law.components;
    m.split_points = law.split_points;
    m.left = law.left;
    m.right = law.right;
    m.left.mean_excess = m.left.scale / (1.0 - m.left.shape);
    m.right.mean_excess = m.right.scale / (1.0 - m.right.shape);
    m.body.clear();
    m.means.assign(1, m.split_points.front() - m.left.mean_excess);
    for (std::size_t l = 0; l + 2 < L; ++l) {
        TruncNormFit t = law.body[l];
        t.lower = law.split_points[l];
        t.upper = law.split_points[l + 1];
        if (!(t.sigma > 0)) throw ConfigError("spec: body sigma must be positive");
        t.fallback = false;
        t.mean = TruncNormFit::truncated_mean(t.mu, t.sigma, t.lower, t.upper);
        m.means.push_back(t.mean);
        m.body.push_back(t);
    }
    m.means.push_back(m.split_points.back() + m.right.mean_excess);
}

inline void validate(Spec& spec) {
    if (spec.n_claims == 0) throw ConfigError("spec: n_claims must be positive");
    if (spec.accident_end < spec.accident_start) throw ConfigError("spec: accident window is empty");
    if (spec.perLen <= 0) throw ConfigError("spec: perLen must be positive");
    if (!(spec.report_probability > 0 && spec.report_probability <= 1))
        throw ConfigError("spec: reporting probability must be in (0, 1]");
    if (!(spec.fast_share >= 0 && spec.fast_share <= 1)) throw ConfigError("spec: fast_share must be in [0, 1]");
    if (spec.states.empty() || spec.payments.empty()) throw ConfigError("spec: needs at least one state and payment law");
    bool terminal = false;
    for (const auto& s : spec.states) {
        detail::check_probs({s.base.begin(), s.base.end()}, "spec hazards");
        if (s.base[2] > 0 || s.base[3] > 0) terminal = true;
        if (s.state_time_cap < 1) throw ConfigError("spec: state_time_cap must be positive");
    }
    if (!terminal) throw ConfigError("spec: terminal hazards are zero in every state; claims would never close");
    for (auto& p : spec.payments) finalize(p);
    for (const auto& c : spec.covariates) {
        if (c.levels.empty() || c.levels.size() != c.probs.size())
            throw ConfigError("spec: covariate '" + c.name + "' needs one probability per level");
        detail::check_probs(c.probs, "spec covariate '" + c.name + "'");
    }
    if (spec.max_periods < 1) throw ConfigError("spec: max_periods must be positive");
}

inline Spec spec_from_json(const nlohmann::json& j) {
    try {
        Spec s;
        s.n_claims = j.at("n_claims").get<std::size_t>();
        s.accident_start = detail::parse_spec_date(j, "accident_start");
        s.accident_end = detail::parse_spec_date(j, "accident_end");
        s.eval_date = detail::parse_spec_date(j, "eval_date");
        s.perLen = j.value("perLen", 30);
        s.minPayVal = Money::from_units(j.value("minPayVal", 200.0));
        if (j.contains("reporting")) {
            s.fast_share = j["reporting"].value("fast_share", 0.0);
            s.report_probability = j["reporting"].value("probability", 1.0);
        }
        for (const auto& c : j.value("covariates", nlohmann::json::array()))
            s.covariates.push_back({c.at("name"), c.at("levels"), c.at("probs")});
        for (const auto& st : j.at("states")) {
            StateLaw law;
            law.base = detail::hazards_from(st.at("hazards"));
            const auto effects = st.value("effects", nlohmann::json::object());
            for (const auto& [k, v] : effects.items()) law.effects[k] = detail::hazards_from(v);
            if (st.contains("state_time_slope")) law.state_time_slope = detail::hazards_from(st["state_time_slope"]);
            law.state_time_cap = st.value("state_time_cap", 12);
            s.states.push_back(std::move(law));
        }
        for (const auto& p : j.at("payments")) {
            PaymentLaw law;
            law.split_points = p.at("split_points").get<std::vector<double>>();
            law.left.scale = p.at("left").at("scale");
            law.left.shape = p.at("left").at("shape");
            law.right.scale = p.at("right").at("scale");
            law.right.shape = p.at("right").at("shape");
            for (const auto& b : p.at("body")) {
                TruncNormFit t;
                t.mu = b.at("mu");
                t.sigma = b.at("sigma");
                law.body.push_back(t);
            }
            law.weights = p.at("weights").get<std::vector<double>>();
            const auto effects = p.value("effects", nlohmann::json::object());
            for (const auto& [k, v] : effects.items())
                law.effects[k] = v.get<std::vector<double>>();
            law.terminal_effect = p.value("terminal_effect", std::vector<double>{});
            s.payments.push_back(std::move(law));
        }
        s.max_periods = j.value("max_periods", 600);
        s.id_prefix = j.value("id_prefix", std::string("C"));
        validate(s);
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("spec: ") + e.what());
    }
}

inline Spec read_spec_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open spec file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("spec '" + path + "' is not valid JSON: " + e.what());
    }
    return spec_from_json(j);
}

// ---------------------------------------------------------------------------
// Generation

struct GeneratedClaim {
    std::string policy_id;
    Date acc_date, rep_date;
    std::optional<Date> closed_date;
    std::shared_ptr<const StaticCovariates> base;
    std::vector<ClaimTransaction> transactions;  // full history
    std::vector<Transition> transitions;          // one per period
    std::vector<int> states;                      // state at the start of each period
};

struct Truth {
    std::string policy_id;
    Date acc_date;
    ClaimPhase phase = ClaimPhase::Open;
    Money paid_at_eval;
    Money paid_final;
    Money reserve() const noexcept { return paid_final - paid_at_eval; }
};

struct Portfolio {
    std::vector<GeneratedClaim> claims;
    Date eval_date;
    std::vector<std::string> covariate_names;

    /// Bookings on or before `tau` of claims reported by `tau`.
    std::vector<ClaimTransaction> observed_log(Date tau) const;
    std::vector<ClaimTransaction> full_log() const;
    std::vector<Truth> truth(Date tau) const;
    /// Claims as the ingestion step would build them from the observed log.
    std::vector<Claim> observed_claims(Date tau) const;
};

namespace detail {

inline std::string draw_level(const CovariateLaw& c, Rng& rng) {
    double u = uniform01(rng);
    for (std::size_t k = 0; k < c.levels.size(); ++k) {
        if (u < c.probs[k]) return c.levels[k];
        u -= c.probs[k];
    }
    return c.levels.back();
}

inline Transition draw_transition(const Hazards& h, Rng& rng) {
    const double u = uniform01(rng);
    double acc = 0.0;
    for (int k = 0; k < 4; ++k) {
        acc += h[static_cast<std::size_t>(k)];
        if (u < acc && h[static_cast<std::size_t>(k)] > 0) return static_cast<Transition>(k);
    }
    for (int k = 3; k >= 0; --k)
        if (h[static_cast<std::size_t>(k)] > 0) return static_cast<Transition>(k);
    return Transition::TN;
}

/// Payment from state `s`: bin from the true weights, amount from its component. An
/// intermediate payment must exceed minPayVal in absolute value and a terminal one must
/// be nonzero; other draws are rejected.
inline Money draw_payment(const Spec& spec, int s, const CovariateVector& x, bool terminal, Rng& rng) {
    const auto& law = spec.payment_law(s);
    const auto probs = true_bin_probs(spec, s, x);
    for (int attempt = 0; attempt < 100000; ++attempt) {
        double u = uniform01(rng);
        int l = 0;
        for (; l + 1 < static_cast<int>(probs.size()); ++l) {
            if (u < probs[static_cast<std::size_t>(l)]) break;
            u -= probs[static_cast<std::size_t>(l)];
        }
        const Money y = Money::from_units(law.components.sample_component(l, uniform_open(rng)));
        if (terminal ? y.cents() != 0 : y.abs() > spec.minPayVal) return y;
    }
    throw ConfigError(fmt::format("spec: payment law of state {} rarely exceeds minPayVal", s));
}

inline GeneratedClaim generate_claim(const Spec& spec, std::size_t k, std::uint64_t seed, int id_width) {
    Rng rng = substream(seed, k);
    GeneratedClaim c;
    c.policy_id = fmt::format("{}{:0{}d}", spec.id_prefix, k + 1, id_width);
    const int window = spec.accident_end - spec.accident_start;
    c.acc_date = spec.accident_start + static_cast<int>(uniform01(rng) * (window + 1));
    const int L = spec.perLen;
    if (uniform01(rng) < spec.fast_share) {
        c.rep_date = c.acc_date;
    } else {
        int d = 1;
        while (uniform01(rng) >= spec.report_probability && d < 10000) ++d;
        c.rep_date = c.acc_date + (d - 1) * L + 1 + static_cast<int>(uniform01(rng) * L);
    }
    StaticCovariates base;
    for (const auto& cov : spec.covariates) base[cov.name] = draw_level(cov, rng);
    c.base = std::make_shared<const StaticCovariates>(std::move(base));

    auto book = [&](Date d, Money cum, ClaimStatus st) {
        ClaimTransaction t;
        t.policy_id = c.policy_id;
        t.cum_pay = cum;
        t.book_date = d;
        t.acc_date = c.acc_date;
        t.rep_date = c.rep_date;
        t.status = st;
        t.static_covariates = *c.base;
        c.transactions.push_back(std::move(t));
    };
    book(c.rep_date, Money{}, ClaimStatus::Open);
    ModelConfig cfg = spec.config();
    CovariateVector x = engineer_features(c.acc_date, c.rep_date, {}, 1, cfg, c.base);
    int state = 0;
    Money cum;
    for (int p = 1;; ++p) {
        Hazards h = true_hazards(spec, state, x);
        if (p >= spec.max_periods) h = {0.0, 0.0, 1.0, 0.0};
        const Transition t = draw_transition(h, rng);
        const Date day = c.rep_date + (p - 1) * L + 1 + static_cast<int>(uniform01(rng) * L);
        c.transitions.push_back(t);
        c.states.push_back(state);
        Money pay;
        if (has_payment(t)) {
            CovariateVector ctx = x;
            ctx.terminalPayment = t == Transition::TP;
            pay = draw_payment(spec, state, ctx, t == Transition::TP, rng);
            cum += pay;
        }
        if (is_terminal(t)) {
            c.closed_date = day;
            book(day, cum, ClaimStatus::Closed);
            break;
        }
        if (t == Transition::P) book(day, cum, ClaimStatus::Open);
        x = advance(x, t, pay);
        if (t == Transition::P) ++state;
    }
    for (auto& t : c.transactions) t.closed_date = c.closed_date;
    return c;
}

}  // namespace detail

/// Draws `spec.n_claims` complete claim histories; claim k uses sub-stream (seed, k).
inline Portfolio generate_portfolio(const Spec& spec, std::uint64_t seed, unsigned workers = 1) {
    Portfolio out;
    out.eval_date = spec.eval_date;
    for (const auto& c : spec.covariates) out.covariate_names.push_back(c.name);
    out.claims.resize(spec.n_claims);
    const int width = static_cast<int>(std::to_string(spec.n_claims).size());
    parallel_for(spec.n_claims, workers, [&](std::size_t k) { out.claims[k] = detail::generate_claim(spec, k, seed, width); });
    return out;
}

inline std::vector<ClaimTransaction> Portfolio::full_log() const {
    std::vector<ClaimTransaction> out;
    for (const auto& c : claims) out.insert(out.end(), c.transactions.begin(), c.transactions.end());
    return out;
}

inline std::vector<ClaimTransaction> Portfolio::observed_log(Date tau) const {
    std::vector<ClaimTransaction> out;
    for (const auto& c : claims) {
        if (c.rep_date > tau) continue;
        const bool closed = c.closed_date && *c.closed_date <= tau;
        for (auto t : c.transactions) {
            if (t.book_date > tau) break;
            if (!closed) t.closed_date.reset();
            out.push_back(std::move(t));
        }
    }
    return out;
}

inline std::vector<Claim> Portfolio::observed_claims(Date tau) const {
    std::vector<Claim> out;
    for (const auto& g : claims) {
        if (g.rep_date > tau) continue;
        Claim c;
        c.policy_id = g.policy_id;
        c.acc_date = g.acc_date;
        c.rep_date = g.rep_date;
        if (g.closed_date && *g.closed_date <= tau) c.closed_date = g.closed_date;
        c.base = g.base;
        for (const auto& t : g.transactions) {
            if (t.book_date > tau) break;
            c.transactions.push_back(t);
            if (!c.closed_date) c.transactions.back().closed_date.reset();
        }
        out.push_back(std::move(c));
    }
    return out;
}

inline std::vector<Truth> Portfolio::truth(Date tau) const {
    std::vector<Truth> out;
    for (const auto& c : claims) {
        if (c.acc_date > tau) continue;
        Truth t;
        t.policy_id = c.policy_id;
        t.acc_date = c.acc_date;
        if (c.rep_date > tau) t.phase = ClaimPhase::Unreported;
        else if (c.closed_date && *c.closed_date <= tau) t.phase = ClaimPhase::Closed;
        else t.phase = ClaimPhase::Open;
        for (const auto& x : c.transactions) {
            if (x.book_date <= tau && t.phase != ClaimPhase::Unreported) t.paid_at_eval = x.cum_pay;
            t.paid_final = x.cum_pay;
        }
        out.push_back(std::move(t));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Text output

/// Booking log in the ingestion format.
inline void write_transactions(std::ostream& out, const std::vector<ClaimTransaction>& txns,
                               const std::vector<std::string>& covariates, const ModelConfig& config) {
    csv::Writer w(out, config.delimiter);
    std::vector<std::string> header{"polNumb", "cumPay", "bookDate", "accDate", "repDate", "status", "closedDate"};
    header.insert(header.end(), covariates.begin(), covariates.end());
    w.row(header);
    const auto df = config.dateFormat;
    for (const auto& t : txns) {
        std::vector<std::string> f{t.policy_id, format_money(t.cum_pay), format_date(t.book_date, df),
                                   format_date(t.acc_date, df), format_date(t.rep_date, df),
                                   t.status == ClaimStatus::Closed ? "C" : "O",
                                   t.closed_date ? format_date(*t.closed_date, df) : ""};
        for (const auto& name : covariates) {
            auto it = t.static_covariates.find(name);
            f.push_back(it == t.static_covariates.end() ? "" : it->second);
        }
        w.row(f);
    }
}

inline void write_truth(std::ostream& out, const std::vector<Truth>& truth, char delim = ',') {
    csv::Writer w(out, delim);
    w.row({"polNumb", "accDate", "phase", "cumPayAtEval", "cumPayFinal", "reserve"});
    for (const auto& t : truth)
        w.row({t.policy_id, format_date(t.acc_date, DateFormat::Iso), std::string(to_string(t.phase)),
               format_money(t.paid_at_eval), format_money(t.paid_final), format_money(t.reserve())});
}

inline std::vector<Truth> read_truth(std::istream& in, char delim = ',') {
    const auto t = csv::Table::read(in, delim);
    const auto c_id = t.require("polNumb"), c_acc = t.require("accDate"), c_phase = t.require("phase"),
               c_eval = t.require("cumPayAtEval"), c_final = t.require("cumPayFinal");
    std::vector<Truth> out;
    for (std::size_t r = 0; r < t.size(); ++r) {
        const auto& f = t.row(r);
        Truth x;
        x.policy_id = f[c_id];
        auto d = parse_date(f[c_acc], DateFormat::Iso);
        auto a = parse_money(f[c_eval]);
        auto b = parse_money(f[c_final]);
        if (!d || !a || !b) throw ParseError(t.line(r), "invalid truth record");
        x.acc_date = *d;
        x.paid_at_eval = *a;
        x.paid_final = *b;
        if (f[c_phase] == "Unreported") x.phase = ClaimPhase::Unreported;
        else if (f[c_phase] == "Closed") x.phase = ClaimPhase::Closed;
        else if (f[c_phase] == "Open") x.phase = ClaimPhase::Open;
        else throw ParseError(t.line(r), "invalid phase '" + f[c_phase] + "'");
        out.push_back(std::move(x));
    }
    return out;
}

}  // namespace microres::synth
