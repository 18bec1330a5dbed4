#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "microres/claims_data.hpp"
#include "microres/config.hpp"
#include "microres/csv.hpp"
#include "microres/models.hpp"
#include "microres/parallel.hpp"
#include "microres/rng.hpp"
#include "microres/stats.hpp"

namespace microres {

enum class SimPhase { Unreported, Open, ClosedTN, ClosedTP };

/// A claim at the start of a period still to be simulated.
struct ClaimState {
    std::string policy_id;
    int state = 0;        // payment transitions so far (uncapped)
    CovariateVector x;    // covariates of the current period
    Money cum_paid;       // C_{k,tau}
    SimPhase phase = SimPhase::Open;

    int periods_in_state() const noexcept { return x.inStateTime; }
    int periods_in_process() const noexcept { return x.inProcTime; }
};

/// State of an open claim at tau: the covariates of the first period without a row.
inline ClaimState initial_state(const Claim& claim, Date tau, const ModelConfig& config) {
    if (!claim.reported_by(tau) || claim.closed_by(tau)) throw ModelError("claim " + claim.policy_id + " is not open at tau");
    const auto rows = discretize_claim(claim, tau, config);
    std::vector<RecordedPayment> pays;
    for (const auto& r : rows)
        if (r.transition == Transition::P) pays.push_back({r.period, *r.payment});
    ClaimState s;
    s.policy_id = claim.policy_id;
    s.state = static_cast<int>(pays.size());
    s.x = engineer_features(claim.acc_date, claim.rep_date, pays, static_cast<int>(rows.size()) + 1, config, claim.base);
    s.cum_paid = claim.cum_pay_at(tau);
    return s;
}

struct TrajectoryStep {
    CovariateVector x;
    int state = 0;
    Transition transition = Transition::N;
    Money payment;
};

struct TrajectoryResult {
    Money total;        // C_{k,T_c}
    int periods = 0;
    SimPhase phase = SimPhase::Open;
};

/// Runs one claim to closure. `hazards(model_index, x)` gives the transition
/// probabilities and `payment(model_index, x, rng)` the amount of a payment made on a
/// transition out of a state (x carries the terminal payment flag).
template <class HazardFn, class PaymentFn>
TrajectoryResult simulate_trajectory(ClaimState s, HazardFn&& hazards, PaymentFn&& payment, const ModelConfig& c,
                                     Rng& rng, std::vector<TrajectoryStep>* trace = nullptr) {
    TrajectoryResult out;
    Money cum = s.cum_paid;
    for (;;) {
        const int m = model_index(s.state, c);
        Hazards h = apply_forcing(hazards(m, s.x), s.state, s.periods_in_state(), s.periods_in_process(), c);
        const double u = uniform01(rng);
        Transition t = Transition::TP;
        double acc = 0.0;
        for (int k = 0; k < 4; ++k) {
            acc += h[static_cast<std::size_t>(k)];
            if (u < acc && h[static_cast<std::size_t>(k)] > 0) {
                t = static_cast<Transition>(k);
                break;
            }
        }
        if (acc <= u) {
            // Rounding left u beyond the cumulative sum: take the last class with mass.
            for (int k = 3; k >= 0; --k)
                if (h[static_cast<std::size_t>(k)] > 0) {
                    t = static_cast<Transition>(k);
                    break;
                }
        }
        Money pay;
        if (has_payment(t)) {
            CovariateVector ctx = s.x;
            ctx.terminalPayment = t == Transition::TP;
            pay = payment(m, ctx, rng);
            cum += pay;
        }
        if (trace) trace->push_back({s.x, s.state, t, pay});
        ++out.periods;
        if (is_terminal(t)) {
            out.phase = t == Transition::TP ? SimPhase::ClosedTP : SimPhase::ClosedTN;
            break;
        }
        s.x = advance(s.x, t, pay);
        if (t == Transition::P) ++s.state;
    }
    out.total = cum;
    return out;
}

/// Payment on a transition out of model state m: the expected payment rounded to cents,
/// or a draw from the spliced model when `sample` is set.
inline Money model_payment(const FittedModels& models, int m, const CovariateVector& x, Rng& rng, bool sample) {
    const auto& pm = models.payment[static_cast<std::size_t>(m)];
    return Money::from_units(sample ? sample_payment(pm, x, rng) : expected_payment(pm, x));
}

inline TrajectoryResult simulate_rbns_trajectory(const ClaimState& s, const FittedModels& models, const ModelConfig& c,
                                                 Rng& rng, std::vector<TrajectoryStep>* trace = nullptr) {
    return simulate_trajectory(
        s, [&](int m, const CovariateVector& x) { return models.time[static_cast<std::size_t>(m)].hazards(x); },
        [&](int m, const CovariateVector& x, Rng& r) { return model_payment(models, m, x, r, c.samplePayments); }, c, rng,
        trace);
}

/// Reporting delay of an IBNR claim in periods, counting from the periods already
/// elapsed at tau; capped at reportingMaxPeriods.
struct ReportingDraw {
    int deltRep = 1;
    bool capped = false;
};

inline ReportingDraw draw_reporting(int elapsed_periods, double probability, int max_periods, Rng& rng) {
    ReportingDraw d;
    d.deltRep = std::max(1, elapsed_periods);
    for (int k = 0;; ++k) {
        if (uniform01(rng) < probability) break;
        if (k + 1 >= max_periods) {
            d.capped = true;
            break;
        }
        ++d.deltRep;
    }
    return d;
}

/// One IBNR claim that occurred at `acc_date`: a Bernoulli reporting draw per period
/// from tau on, then a trajectory from S_0. Returns C_{k,T_c} (C_{k,tau} = 0).
inline TrajectoryResult simulate_ibnr_claim(Date acc_date, Date tau, std::shared_ptr<const StaticCovariates> base,
                                            const FittedModels& models, const ModelConfig& c, Rng& rng,
                                            bool* capped = nullptr) {
    const int elapsed = ceil_div(std::max(0, tau - acc_date), c.perLen);
    const auto rep = draw_reporting(elapsed, models.reporting.probability, c.reportingMaxPeriods, rng);
    if (capped) *capped = rep.capped;
    ClaimState s;
    s.x.deltRep = rep.deltRep;
    s.x.fastRep = false;
    s.x.inProcTime = 1;
    s.x.inStateTime = 1;
    s.x.base = std::move(base);
    return simulate_rbns_trajectory(s, models, c, rng);
}

struct ReserveDistribution {
    std::vector<std::string> claim_ids;
    std::vector<Money> current_paid;              // C_{k,tau}
    std::vector<std::vector<Money>> claim_draws;  // [claim][replication] reserve
    std::vector<Money> rbns_totals, ibnr_totals, totals;
    std::vector<long> ibnr_counts;
    std::size_t capped_reporting = 0;

    std::size_t replications() const noexcept { return totals.size(); }
};

struct SimulationOptions {
    int n_sims = 100;
    std::uint64_t seed = 1;
    unsigned workers = 1;
    bool include_ibnr = true;
};

namespace detail {

inline std::shared_ptr<const StaticCovariates> draw_base(const std::vector<BaseProfile>& pool, Rng& rng) {
    if (pool.empty()) return std::make_shared<const StaticCovariates>();
    double total = 0.0;
    for (const auto& b : pool) total += b.weight;
    double u = uniform01(rng) * total;
    for (const auto& b : pool) {
        if (u < b.weight) return b.covariates;
        u -= b.weight;
    }
    return pool.back().covariates;
}

/// Accident date of IBNR claims of accident year `year`: mid-year, not after tau.
inline Date ibnr_accident_date(int year, Date tau) {
    const Date mid = Date::from_ymd(year, 7, 1);
    return mid < tau ? mid : tau;
}

}  // namespace detail

/// Monte-Carlo reserve distribution: every open claim is simulated once per
/// replication and IBNR claims are added per the count model. Each (replication,
/// claim) pair uses its own sub-stream, so results do not depend on `workers`.
inline ReserveDistribution simulate_portfolio(const std::vector<ClaimState>& rbns, const FittedModels& models,
                                              const ModelConfig& config, const SimulationOptions& opt) {
    const ModelConfig c = models.adopt(config);
    const auto R = static_cast<std::size_t>(std::max(0, opt.n_sims));
    ReserveDistribution d;
    d.claim_ids.reserve(rbns.size());
    for (const auto& s : rbns) {
        d.claim_ids.push_back(s.policy_id);
        d.current_paid.push_back(s.cum_paid);
    }
    d.claim_draws.assign(rbns.size(), std::vector<Money>(R));
    parallel_for(rbns.size(), opt.workers, [&](std::size_t k) {
        const std::uint64_t key = fnv1a(rbns[k].policy_id);
        for (std::size_t r = 0; r < R; ++r) {
            Rng rng = substream(opt.seed, r, key);
            d.claim_draws[k][r] = simulate_rbns_trajectory(rbns[k], models, c, rng).total - rbns[k].cum_paid;
        }
    });

    d.rbns_totals.assign(R, Money{});
    d.ibnr_totals.assign(R, Money{});
    d.ibnr_counts.assign(R, 0);
    for (std::size_t k = 0; k < rbns.size(); ++k)
        for (std::size_t r = 0; r < R; ++r) d.rbns_totals[r] += d.claim_draws[k][r];

    const bool ibnr = opt.include_ibnr && models.ibnr.has_value();
    std::atomic<std::size_t> capped{0};
    if (ibnr) {
        const auto& im = *models.ibnr;
        const std::size_t I = im.r.size(), J = im.pi.size();
        // Mean mode: expected counts per cell, rounded.
        std::vector<long> mean_cells(I * J, 0);
        if (c.ibnrCountMode == IbnrCountMode::Mean) {
            const auto e = expected_ibnr(im);
            for (std::size_t i = 0; i < I; ++i) {
                if (e.per_year[i] <= 0) continue;
                const auto tail = standardize_tail(im.pi, im.first_unobserved[i]);
                for (std::size_t t = 0; t < tail.size(); ++t)
                    mean_cells[i * J + im.first_unobserved[i] + t] = std::lround(e.per_year[i] * tail[t]);
            }
        }
        const Date tau = models.eval_date;
        parallel_for(R, opt.workers, [&](std::size_t r) {
            std::vector<long> cells = mean_cells;
            if (c.ibnrCountMode == IbnrCountMode::Draw) {
                Rng rng = substream(opt.seed, r, 0x1b2b3b4bULL);
                cells = draw_ibnr(im, rng).cells;
            }
            Money total;
            long count = 0;
            for (std::size_t i = 0; i < I; ++i) {
                const Date acc = detail::ibnr_accident_date(im.first_year + static_cast<int>(i), tau);
                for (std::size_t j = 0; j < J; ++j)
                    for (long n = 0; n < cells[i * J + j]; ++n) {
                        Rng rng = substream(opt.seed, r, splitmix64(0x5eedULL + (i * J + j) * 1000003ULL + static_cast<std::uint64_t>(n)));
                        auto base = detail::draw_base(models.base_pool, rng);
                        bool cap = false;
                        total += simulate_ibnr_claim(acc, tau, base, models, c, rng, &cap).total;
                        if (cap) capped.fetch_add(1);
                        ++count;
                    }
            }
            d.ibnr_totals[r] = total;
            d.ibnr_counts[r] = count;
        });
    }
    d.capped_reporting = capped.load();
    d.totals.resize(R);
    for (std::size_t r = 0; r < R; ++r) d.totals[r] = d.rbns_totals[r] + d.ibnr_totals[r];
    return d;
}

/// Open claims at tau as simulation start states.
inline std::vector<ClaimState> open_claims(const std::vector<Claim>& claims, Date tau, const ModelConfig& config) {
    std::vector<ClaimState> out;
    for (const auto& c : claims)
        if (c.reported_by(tau) && !c.closed_by(tau)) out.push_back(initial_state(c, tau, config));
    return out;
}

// ---------------------------------------------------------------------------
// Output tables

inline std::vector<double> to_units(const std::vector<Money>& v) {
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i].units();
    return out;
}

inline std::string fixed2(double v) { return fmt::format("{:.2f}", v); }

/// Per-claim table: paid at tau, mean reserve, standard deviation and quantiles.
inline void write_claim_table(std::ostream& out, const ReserveDistribution& d, char delim = ',') {
    csv::Writer w(out, delim);
    w.row({"polNumb", "cumPayAtEval", "meanReserve", "sdReserve", "q05", "q25", "q50", "q75", "q95"});
    for (std::size_t k = 0; k < d.claim_ids.size(); ++k) {
        auto v = to_units(d.claim_draws[k]);
        std::sort(v.begin(), v.end());
        std::vector<std::string> row{d.claim_ids[k], format_money(d.current_paid[k])};
        if (v.empty()) {
            for (int i = 0; i < 7; ++i) row.push_back("NA");
        } else {
            row.push_back(fixed2(stats::mean(v)));
            row.push_back(fixed2(std::sqrt(stats::variance(v))));
            for (double q : {0.05, 0.25, 0.5, 0.75, 0.95}) row.push_back(fixed2(stats::quantile_sorted(v, q)));
        }
        w.row(row);
    }
}

/// Portfolio draws, one line per replication.
inline void write_portfolio_draws(std::ostream& out, const ReserveDistribution& d, char delim = ',') {
    csv::Writer w(out, delim);
    w.row({"replication", "rbns", "ibnr", "ibnrCount", "total"});
    for (std::size_t r = 0; r < d.replications(); ++r)
        w.row({std::to_string(r + 1), format_money(d.rbns_totals[r]), format_money(d.ibnr_totals[r]),
               std::to_string(d.ibnr_counts[r]), format_money(d.totals[r])});
}

struct Histogram {
    std::vector<double> edges;  // bins + 1 edges
    std::vector<long> counts;
};

/// Equal-width histogram over [min, max]; the last bin is closed.
inline Histogram histogram(const std::vector<double>& v, int bins = 30) {
    Histogram h;
    if (v.empty() || bins < 1) return h;
    const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
    double lo = *lo_it, hi = *hi_it;
    if (hi == lo) hi = lo + 1.0;
    const double w = (hi - lo) / bins;
    for (int b = 0; b <= bins; ++b) h.edges.push_back(b == bins ? hi : lo + b * w);
    h.counts.assign(static_cast<std::size_t>(bins), 0);
    for (double x : v) {
        auto b = static_cast<int>((x - lo) / w);
        h.counts[static_cast<std::size_t>(std::clamp(b, 0, bins - 1))]++;
    }
    return h;
}

inline void write_histogram(std::ostream& out, const Histogram& h, char delim = ',') {
    csv::Writer w(out, delim);
    w.row({"lower", "upper", "count"});
    for (std::size_t b = 0; b < h.counts.size(); ++b)
        w.row({fixed2(h.edges[b]), fixed2(h.edges[b + 1]), std::to_string(h.counts[b])});
}

/// Summary of the portfolio distribution: mean and quantiles of the totals.
inline void write_portfolio_summary(std::ostream& out, const ReserveDistribution& d, char delim = ',') {
    csv::Writer w(out, delim);
    w.row({"component", "mean", "sd", "q05", "q25", "q50", "q75", "q95", "q995"});
    auto line = [&](const char* name, const std::vector<Money>& m) {
        auto v = to_units(m);
        std::sort(v.begin(), v.end());
        std::vector<std::string> row{name};
        if (v.empty()) {
            for (int i = 0; i < 8; ++i) row.push_back("NA");
        } else {
            row.push_back(fixed2(stats::mean(v)));
            row.push_back(fixed2(std::sqrt(stats::variance(v))));
            for (double q : {0.05, 0.25, 0.5, 0.75, 0.95, 0.995}) row.push_back(fixed2(stats::quantile_sorted(v, q)));
        }
        w.row(row);
    };
    line("rbns", d.rbns_totals);
    line("ibnr", d.ibnr_totals);
    line("total", d.totals);
}

/// All draws, one column per claim (columnar dump).
inline void write_draw_matrix(std::ostream& out, const ReserveDistribution& d, char delim = ',') {
    csv::Writer w(out, delim);
    std::vector<std::string> header{"replication"};
    header.insert(header.end(), d.claim_ids.begin(), d.claim_ids.end());
    w.row(header);
    for (std::size_t r = 0; r < d.replications(); ++r) {
        std::vector<std::string> row{std::to_string(r + 1)};
        for (const auto& c : d.claim_draws) row.push_back(format_money(c[r]));
        w.row(row);
    }
}

}  // namespace microres
