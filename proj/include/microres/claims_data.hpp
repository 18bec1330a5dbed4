#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "microres/config.hpp"
#include "microres/csv.hpp"
#include "microres/date.hpp"
#include "microres/error.hpp"
#include "microres/money.hpp"
#include "microres/triangle.hpp"

namespace microres {

enum class ClaimStatus { Open, Closed };

/// Event at the end of a period: no event, intermediate payment, terminal without
/// payment, terminal with payment.
enum class Transition : std::uint8_t { N = 0, P = 1, TN = 2, TP = 3 };

inline constexpr std::string_view to_string(Transition t) noexcept {
    switch (t) {
        case Transition::N: return "N";
        case Transition::P: return "P";
        case Transition::TN: return "TN";
        case Transition::TP: return "TP";
    }
    return "?";
}

inline std::optional<Transition> parse_transition(std::string_view s) {
    if (s == "N") return Transition::N;
    if (s == "P") return Transition::P;
    if (s == "TN") return Transition::TN;
    if (s == "TP") return Transition::TP;
    return std::nullopt;
}

inline constexpr bool is_terminal(Transition t) noexcept {
    return t == Transition::TN || t == Transition::TP;
}
inline constexpr bool has_payment(Transition t) noexcept {
    return t == Transition::P || t == Transition::TP;
}

using StaticCovariates = std::map<std::string, std::string>;

struct ClaimTransaction {
    std::string policy_id;
    Money cum_pay;
    Date book_date;
    Date acc_date;
    Date rep_date;
    ClaimStatus status = ClaimStatus::Open;
    std::optional<Date> closed_date;
    StaticCovariates static_covariates;
    std::size_t line = 0;
};

/// All bookings of one policy, ordered by booking date.
struct Claim {
    std::string policy_id;
    Date acc_date;
    Date rep_date;
    std::optional<Date> closed_date;
    std::shared_ptr<const StaticCovariates> base;
    std::vector<ClaimTransaction> transactions;

    bool closed_by(Date tau) const noexcept { return closed_date && *closed_date <= tau; }
    bool reported_by(Date tau) const noexcept { return rep_date <= tau; }

    /// Cumulative payment read from the last booking on or before `d`.
    Money cum_pay_at(Date d) const noexcept {
        Money m;
        for (const auto& t : transactions) {
            if (t.book_date > d) break;
            m = t.cum_pay;
        }
        return m;
    }
};

struct Anomaly {
    std::string policy_id;
    std::size_t line = 0;
    std::string reason;
};

struct ParsedPortfolio {
    std::vector<Claim> claims;      // sorted by policy id
    std::vector<Anomaly> anomalies;  // quarantined claims, one entry per rejected policy
};

/// Engineered covariates for one period.
struct CovariateVector {
    int deltRep = 1;
    bool fastRep = false;
    int inProcTime = 1;
    std::optional<Money> delt1Pay;
    std::optional<int> delt1PayTime;
    std::optional<Money> cumDelt1Pay;
    int inStateTime = 1;
    std::shared_ptr<const StaticCovariates> base;
    bool terminalPayment = false;

    bool operator==(const CovariateVector& o) const {
        const bool base_eq = (base == o.base) || (base && o.base && *base == *o.base) ||
                             (!base && o.base && o.base->empty()) || (base && !o.base && base->empty());
        return deltRep == o.deltRep && fastRep == o.fastRep && inProcTime == o.inProcTime &&
               delt1Pay == o.delt1Pay && delt1PayTime == o.delt1PayTime &&
               cumDelt1Pay == o.cumDelt1Pay && inStateTime == o.inStateTime && base_eq &&
               terminalPayment == o.terminalPayment;
    }
};

/// One period of one claim in one state.
struct PeriodRow {
    std::string policy_id;
    int state = 0;        // number of prior payment transitions (not capped)
    int period = 1;       // 1-based period index since reporting
    CovariateVector x;
    Transition transition = Transition::N;
    std::optional<Money> payment;  // present iff transition is P or TP
    Date ref_date;        // booking date shown for the row
    Money cum_pay;        // cumulative payment read at the end of the period
};

// ---------------------------------------------------------------------------
// Ingestion

namespace detail {

inline std::string lower(std::string_view s) {
    std::string r(s);
    for (auto& c : r) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return r;
}

struct TxnColumns {
    std::size_t policy, cum_pay, book, acc, rep, status;
    std::optional<std::size_t> closed;
    std::vector<std::pair<std::size_t, std::string>> extra;
};

inline TxnColumns locate_columns(const csv::Table& t) {
    std::map<std::string, std::size_t> by_lower;
    for (std::size_t i = 0; i < t.header().size(); ++i) by_lower[lower(t.header()[i])] = i;
    auto need = [&](std::initializer_list<const char*> names) -> std::size_t {
        for (const char* n : names)
            if (auto it = by_lower.find(n); it != by_lower.end()) return it->second;
        throw ParseError(1, fmt::format("missing column '{}'", *names.begin()));
    };
    TxnColumns c{};
    c.policy = need({"polnumb", "policy_id", "policy"});
    c.cum_pay = need({"cumpay", "cum_pay"});
    c.book = need({"bookdate", "book_date"});
    c.acc = need({"accdate", "acc_date"});
    c.rep = need({"repdate", "rep_date"});
    c.status = need({"status"});
    for (const char* n : {"closeddate", "closed_date"})
        if (auto it = by_lower.find(n); it != by_lower.end()) c.closed = it->second;
    std::set<std::size_t> known{c.policy, c.cum_pay, c.book, c.acc, c.rep, c.status};
    if (c.closed) known.insert(*c.closed);
    for (std::size_t i = 0; i < t.header().size(); ++i)
        if (!known.count(i)) c.extra.emplace_back(i, t.header()[i]);
    return c;
}

}  // namespace detail

/// Reads a delimiter-separated booking log. Malformed dates or amounts raise a
/// ParseError naming the line; inconsistent claims are quarantined as anomalies.
inline ParsedPortfolio parse_transactions(std::istream& in, const ModelConfig& config) {
    ParsedPortfolio out;
    // An empty stream has no header at all.
    if (in.peek() == std::char_traits<char>::eof()) return out;
    const auto table = csv::Table::read(in, config.delimiter);
    if (table.header().empty() || (table.header().size() == 1 && table.header()[0].empty())) return out;
    const auto cols = detail::locate_columns(table);

    std::map<std::string, std::vector<ClaimTransaction>> grouped;
    for (std::size_t r = 0; r < table.size(); ++r) {
        const auto& row = table.row(r);
        const std::size_t line = table.line(r);
        ClaimTransaction t;
        t.line = line;
        t.policy_id = row[cols.policy];
        if (t.policy_id.empty()) throw ParseError(line, "empty policy id");
        auto amount = parse_money(row[cols.cum_pay]);
        if (!amount) throw ParseError(line, fmt::format("invalid amount '{}' in cumPay", row[cols.cum_pay]));
        t.cum_pay = *amount;
        auto date = [&](std::size_t col, const char* name) {
            auto d = parse_date(row[col], config.dateFormat);
            if (!d) throw ParseError(line, fmt::format("invalid date '{}' in {}", row[col], name));
            return *d;
        };
        t.book_date = date(cols.book, "bookDate");
        t.acc_date = date(cols.acc, "accDate");
        t.rep_date = date(cols.rep, "repDate");
        const std::string st = detail::lower(row[cols.status]);
        if (st == "o" || st == "open") t.status = ClaimStatus::Open;
        else if (st == "c" || st == "closed") t.status = ClaimStatus::Closed;
        else throw ParseError(line, fmt::format("invalid status '{}'", row[cols.status]));
        if (cols.closed && !row[*cols.closed].empty()) t.closed_date = date(*cols.closed, "closedDate");
        for (const auto& [idx, name] : cols.extra) t.static_covariates[name] = row[idx];
        grouped[t.policy_id].push_back(std::move(t));
    }

    for (auto& [policy, txns] : grouped) {
        std::stable_sort(txns.begin(), txns.end(),
                         [](const auto& a, const auto& b) { return a.book_date < b.book_date; });
        Claim c;
        c.policy_id = policy;
        c.acc_date = txns.front().acc_date;
        c.rep_date = txns.front().rep_date;
        std::string reason;
        for (const auto& t : txns) {
            if (t.acc_date != c.acc_date || t.rep_date != c.rep_date) reason = "inconsistent accident/reporting dates";
            if (t.closed_date) c.closed_date = t.closed_date;
            if (t.status == ClaimStatus::Closed && !c.closed_date) c.closed_date = t.book_date;
        }
        if (c.rep_date < c.acc_date) reason = "reporting date before accident date";
        else if (txns.front().book_date < c.rep_date) reason = "booking before reporting date";
        else if (c.closed_date && *c.closed_date < c.rep_date) reason = "closure before reporting date";
        if (!reason.empty()) {
            out.anomalies.push_back({policy, txns.front().line, reason});
            continue;
        }
        c.base = std::make_shared<const StaticCovariates>(txns.front().static_covariates);
        c.transactions = std::move(txns);
        out.claims.push_back(std::move(c));
    }
    return out;
}

inline void write_anomalies(std::ostream& out, const std::vector<Anomaly>& anomalies, char delim = ',') {
    csv::Writer w(out, delim);
    w.row({"polNumb", "line", "reason"});
    for (const auto& a : anomalies) w.row({a.policy_id, std::to_string(a.line), a.reason});
}

// ---------------------------------------------------------------------------
// Feature engineering

/// A payment transition recorded at the end of `period`.
struct RecordedPayment {
    int period = 0;
    Money amount;
};

inline int ceil_div(std::int64_t a, std::int64_t b) {
    return static_cast<int>(a >= 0 ? (a + b - 1) / b : -((-a) / b));
}

/// Covariates for period `period` (1-based, on the grid anchored at the reporting
/// date) given the payment transitions recorded at the end of earlier periods.
inline CovariateVector engineer_features(Date acc_date, Date rep_date,
                                         const std::vector<RecordedPayment>& prior_payments,
                                         int period, const ModelConfig& config,
                                         std::shared_ptr<const StaticCovariates> base = nullptr) {
    CovariateVector x;
    x.deltRep = std::max(1, ceil_div(rep_date - acc_date, config.perLen));
    x.fastRep = rep_date == acc_date;
    x.inProcTime = std::max(1, period);
    x.base = std::move(base);
    if (prior_payments.empty()) {
        x.inStateTime = x.inProcTime;
        return x;
    }
    Money cum;
    for (const auto& p : prior_payments) cum += p.amount;
    const auto& last = prior_payments.back();
    x.delt1Pay = last.amount;
    x.delt1PayTime = period - last.period;
    x.cumDelt1Pay = cum;
    x.inStateTime = *x.delt1PayTime;
    return x;
}

/// Covariates of the period following one with covariates `x` and event `t`.
/// This is the update rule the simulator applies between periods.
inline CovariateVector advance(const CovariateVector& x, Transition t, std::optional<Money> payment) {
    CovariateVector n = x;
    n.terminalPayment = false;
    n.inProcTime = x.inProcTime + 1;
    if (t == Transition::P) {
        const Money pay = payment.value_or(Money{});
        n.delt1Pay = pay;
        n.delt1PayTime = 1;
        n.cumDelt1Pay = x.cumDelt1Pay.value_or(Money{}) + pay;
        n.inStateTime = 1;
    } else {
        n.inStateTime = x.inStateTime + 1;
        if (n.delt1PayTime) n.delt1PayTime = *x.delt1PayTime + 1;
    }
    return n;
}

// ---------------------------------------------------------------------------
// Discretization

/// Converts one claim's bookings into period rows observed up to `tau`.
///
/// Periods are consecutive windows of perLen days starting at the reporting date.
/// The cumulative payment is read at the last booking on or before each period end.
/// A change of more than minPayVal against the last recorded value is a payment (P);
/// the period holding the closure date ends with TP if any net change is pending and
/// TN otherwise. Complete periods of a claim open at tau are censored N rows; the
/// partial period containing tau only yields a row when a payment was observed in it.
inline std::vector<PeriodRow> discretize_claim(const Claim& claim, Date tau, const ModelConfig& config) {
    std::vector<PeriodRow> rows;
    if (!claim.reported_by(tau)) return rows;
    if (claim.closed_date && *claim.closed_date < claim.rep_date)
        throw ModelError("claim " + claim.policy_id + " closes before it is reported");
    const int L = config.perLen;
    const bool closed = claim.closed_by(tau);
    int last_period = 0;
    bool partial_open = false;
    if (closed) {
        last_period = std::max(1, ceil_div(*claim.closed_date - claim.rep_date, L));
    } else {
        const int elapsed = tau - claim.rep_date;
        last_period = elapsed / L;
        if (elapsed % L != 0 || elapsed == 0) {
            ++last_period;
            partial_open = true;
        }
    }

    std::vector<RecordedPayment> payments;
    Money last_recorded;
    Date prev_ref = claim.rep_date;
    std::size_t txn_idx = 0;
    Money cum;
    for (int p = 1; p <= last_period; ++p) {
        const Date start = claim.rep_date + (p - 1) * L;
        Date end = claim.rep_date + p * L;
        if (end > tau) end = tau;
        std::optional<Date> booked_in_period;
        while (txn_idx < claim.transactions.size() && claim.transactions[txn_idx].book_date <= end) {
            const auto& t = claim.transactions[txn_idx];
            cum = t.cum_pay;
            if (p == 1 || t.book_date > start) booked_in_period = t.book_date;
            ++txn_idx;
        }
        const Money diff = cum - last_recorded;
        const bool closes_here = closed && p == last_period;
        PeriodRow row;
        row.policy_id = claim.policy_id;
        row.state = static_cast<int>(payments.size());
        row.period = p;
        row.x = engineer_features(claim.acc_date, claim.rep_date, payments, p, config, claim.base);
        row.cum_pay = cum;
        if (closes_here) {
            row.transition = diff.cents() != 0 ? Transition::TP : Transition::TN;
            row.ref_date = *claim.closed_date;
        } else if (diff.abs() > config.minPayVal) {
            row.transition = Transition::P;
        } else {
            row.transition = Transition::N;
        }
        if (!closes_here) row.ref_date = booked_in_period ? *booked_in_period : prev_ref + L;
        if (has_payment(row.transition)) row.payment = diff;
        if (partial_open && p == last_period && row.transition != Transition::P) break;
        prev_ref = row.ref_date;
        if (row.transition == Transition::P) {
            payments.push_back({p, diff});
            last_recorded = cum;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

/// Discretizes every claim; output ordered by (policy id, period).
inline std::vector<PeriodRow> discretize_portfolio(const std::vector<Claim>& claims, Date tau,
                                                   const ModelConfig& config) {
    std::vector<PeriodRow> rows;
    for (const auto& c : claims) {
        auto r = discretize_claim(c, tau, config);
        rows.insert(rows.end(), std::make_move_iterator(r.begin()), std::make_move_iterator(r.end()));
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Per-state training sets

struct StateDataset {
    int state = 0;                       // model index; the last one pools higher states
    std::vector<std::size_t> time_rows;     // indices into the row vector
    std::vector<std::size_t> payment_rows;  // subset with P or TP
};

/// Index of the model used for claims in `state`.
inline int model_index(int state, const ModelConfig& config) noexcept {
    return std::min(state, config.maxMod - 1);
}

/// Splits rows into maxMod state datasets S_0 .. S_{maxMod-2}, S_{maxMod-1}+.
inline std::vector<StateDataset> build_state_datasets(const std::vector<PeriodRow>& rows,
                                                      const ModelConfig& config) {
    std::vector<StateDataset> sets(static_cast<std::size_t>(config.maxMod));
    for (int s = 0; s < config.maxMod; ++s) sets[static_cast<std::size_t>(s)].state = s;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        auto& set = sets[static_cast<std::size_t>(model_index(rows[i].state, config))];
        set.time_rows.push_back(i);
        if (has_payment(rows[i].transition)) set.payment_rows.push_back(i);
    }
    return sets;
}

// ---------------------------------------------------------------------------
// Claim count triangle

struct TriangleBuild {
    RunoffTriangle triangle;
    std::size_t clamped = 0;  // claims whose delay exceeded the last development year
};

/// Claim counts by accident year and reporting delay (years) for claims reported by tau.
inline TriangleBuild build_triangle(const std::vector<Claim>& claims, Date tau,
                                    std::optional<int> first_year = std::nullopt) {
    int y0 = first_year.value_or(tau.year());
    if (!first_year)
        for (const auto& c : claims)
            if (c.acc_date <= tau) y0 = std::min(y0, c.acc_date.year());
    const int years = tau.year() - y0 + 1;
    if (years <= 0) throw ModelError("evaluation date precedes the first accident year");
    TriangleBuild out{RunoffTriangle(static_cast<std::size_t>(years), static_cast<std::size_t>(years), y0), 0};
    for (const auto& c : claims) {
        if (c.acc_date > tau || !c.reported_by(tau)) continue;
        const int i = c.acc_date.year() - y0;
        if (i < 0) continue;
        int j = c.rep_date.year() - c.acc_date.year();
        if (j > years - 1) {
            j = years - 1;
            ++out.clamped;
        }
        out.triangle.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) += 1.0;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Claim summaries and period dataset text form

enum class ClaimPhase { Unreported, Open, Closed };

inline std::string_view to_string(ClaimPhase p) noexcept {
    switch (p) {
        case ClaimPhase::Unreported: return "Unreported";
        case ClaimPhase::Open: return "Open";
        case ClaimPhase::Closed: return "Closed";
    }
    return "?";
}

/// Per-claim state at the evaluation date.
struct ClaimSummary {
    std::string policy_id;
    Date acc_date;
    Date rep_date;
    std::optional<Date> closed_date;  // only when closed by tau
    ClaimPhase phase = ClaimPhase::Open;
    Money cum_paid;                   // C_{k,tau}
    std::shared_ptr<const StaticCovariates> base;
};

inline std::vector<ClaimSummary> summarize_claims(const std::vector<Claim>& claims, Date tau) {
    std::vector<ClaimSummary> out;
    out.reserve(claims.size());
    for (const auto& c : claims) {
        if (c.acc_date > tau) continue;
        ClaimSummary s;
        s.policy_id = c.policy_id;
        s.acc_date = c.acc_date;
        s.rep_date = c.rep_date;
        s.base = c.base;
        if (!c.reported_by(tau)) {
            s.phase = ClaimPhase::Unreported;
        } else if (c.closed_by(tau)) {
            s.phase = ClaimPhase::Closed;
            s.closed_date = c.closed_date;
        } else {
            s.phase = ClaimPhase::Open;
        }
        s.cum_paid = s.phase == ClaimPhase::Unreported ? Money{} : c.cum_pay_at(tau);
        out.push_back(std::move(s));
    }
    return out;
}

namespace detail {
inline std::vector<std::string> base_columns(const std::vector<const StaticCovariates*>& maps) {
    std::set<std::string> names;
    for (const auto* m : maps)
        if (m)
            for (const auto& [k, v] : *m) names.insert(k);
    return {names.begin(), names.end()};
}
inline std::string opt_money(const std::optional<Money>& m) { return m ? format_money(*m) : "NA"; }
inline std::string opt_int(const std::optional<int>& v) { return v ? std::to_string(*v) : "NA"; }
}  // namespace detail

inline const std::vector<std::string>& period_columns() {
    static const std::vector<std::string> cols{
        "polNumb",  "period",     "cumPay",  "bookDate",  "accDate",     "repDate",
        "transType", "closedDate", "deltRep", "fastRep",  "procTime",    "deltPay",
        "deltPayTime", "cumDeltPay", "stateTime", "state", "payment"};
    return cols;
}

/// Writes rows with the standard period-dataset column names plus period, deltPayTime, payment
/// and one column per static covariate.
inline void write_period_dataset(std::ostream& out, const std::vector<PeriodRow>& rows,
                                 const std::vector<Claim>& claims, const ModelConfig& config) {
    std::map<std::string, const Claim*> by_id;
    std::vector<const StaticCovariates*> maps;
    for (const auto& c : claims) {
        by_id[c.policy_id] = &c;
        maps.push_back(c.base.get());
    }
    const auto extra = detail::base_columns(maps);
    csv::Writer w(out, config.delimiter);
    auto header = period_columns();
    header.insert(header.end(), extra.begin(), extra.end());
    w.row(header);
    const auto df = config.dateFormat;
    for (const auto& r : rows) {
        const Claim* c = by_id.at(r.policy_id);
        std::vector<std::string> f{
            r.policy_id,
            std::to_string(r.period),
            format_money(r.cum_pay),
            format_date(r.ref_date, df),
            format_date(c->acc_date, df),
            format_date(c->rep_date, df),
            std::string(to_string(r.transition)),
            c->closed_date ? format_date(*c->closed_date, df) : "NA",
            std::to_string(r.x.deltRep),
            r.x.fastRep ? "1" : "0",
            std::to_string(r.x.inProcTime),
            detail::opt_money(r.x.delt1Pay),
            detail::opt_int(r.x.delt1PayTime),
            detail::opt_money(r.x.cumDelt1Pay),
            std::to_string(r.x.inStateTime),
            "S" + std::to_string(r.state),
            detail::opt_money(r.payment)};
        for (const auto& name : extra) {
            auto it = r.x.base ? r.x.base->find(name) : StaticCovariates::const_iterator{};
            f.push_back(r.x.base && it != r.x.base->end() ? it->second : "NA");
        }
        w.row(f);
    }
}

/// Reads rows written by write_period_dataset.
inline std::vector<PeriodRow> read_period_dataset(std::istream& in, const ModelConfig& config) {
    const auto t = csv::Table::read(in, config.delimiter);
    std::vector<std::size_t> idx;
    for (const auto& name : period_columns()) idx.push_back(t.require(name));
    std::vector<std::pair<std::size_t, std::string>> extra;
    for (std::size_t i = 0; i < t.header().size(); ++i)
        if (std::find(period_columns().begin(), period_columns().end(), t.header()[i]) == period_columns().end())
            extra.emplace_back(i, t.header()[i]);

    std::vector<PeriodRow> rows;
    rows.reserve(t.size());
    std::shared_ptr<const StaticCovariates> last_base;
    std::string last_policy;
    for (std::size_t r = 0; r < t.size(); ++r) {
        const auto& f = t.row(r);
        const std::size_t line = t.line(r);
        auto get = [&](std::size_t k) -> const std::string& { return f[idx[k]]; };
        auto integer = [&](std::size_t k) {
            try {
                return std::stoi(get(k));
            } catch (const std::exception&) {
                throw ParseError(line, fmt::format("invalid integer '{}' in {}", get(k), period_columns()[k]));
            }
        };
        auto money = [&](std::size_t k) -> std::optional<Money> {
            if (get(k) == "NA") return std::nullopt;
            auto m = parse_money(get(k));
            if (!m) throw ParseError(line, fmt::format("invalid amount '{}' in {}", get(k), period_columns()[k]));
            return m;
        };
        PeriodRow row;
        row.policy_id = get(0);
        row.period = integer(1);
        row.cum_pay = money(2).value_or(Money{});
        auto d = parse_date(get(3), config.dateFormat);
        if (!d) throw ParseError(line, "invalid bookDate '" + get(3) + "'");
        row.ref_date = *d;
        auto tr = parse_transition(get(6));
        if (!tr) throw ParseError(line, "invalid transType '" + get(6) + "'");
        row.transition = *tr;
        row.x.deltRep = integer(8);
        row.x.fastRep = integer(9) != 0;
        row.x.inProcTime = integer(10);
        row.x.delt1Pay = money(11);
        if (get(12) != "NA") row.x.delt1PayTime = integer(12);
        row.x.cumDelt1Pay = money(13);
        row.x.inStateTime = integer(14);
        const std::string& st = get(15);
        if (st.size() < 2 || st[0] != 'S') throw ParseError(line, "invalid state '" + st + "'");
        try {
            row.state = std::stoi(st.substr(1));
        } catch (const std::exception&) {
            throw ParseError(line, "invalid state '" + st + "'");
        }
        row.payment = money(16);
        if (has_payment(row.transition) != row.payment.has_value())
            throw ParseError(line, "payment must be present exactly for P and TP rows");
        if (row.policy_id != last_policy || !last_base) {
            StaticCovariates base;
            for (const auto& [i, name] : extra)
                if (f[i] != "NA") base[name] = f[i];
            last_base = std::make_shared<const StaticCovariates>(std::move(base));
            last_policy = row.policy_id;
        }
        row.x.base = last_base;
        rows.push_back(std::move(row));
    }
    return rows;
}

inline void write_claim_summaries(std::ostream& out, const std::vector<ClaimSummary>& claims,
                                  const ModelConfig& config) {
    std::vector<const StaticCovariates*> maps;
    for (const auto& c : claims) maps.push_back(c.base.get());
    const auto extra = detail::base_columns(maps);
    csv::Writer w(out, config.delimiter);
    std::vector<std::string> header{"polNumb", "accDate", "repDate", "closedDate", "phase", "cumPayAtEval"};
    header.insert(header.end(), extra.begin(), extra.end());
    w.row(header);
    const auto df = config.dateFormat;
    for (const auto& c : claims) {
        std::vector<std::string> f{c.policy_id, format_date(c.acc_date, df), format_date(c.rep_date, df),
                                   c.closed_date ? format_date(*c.closed_date, df) : "NA",
                                   std::string(to_string(c.phase)), format_money(c.cum_paid)};
        for (const auto& name : extra) {
            auto it = c.base ? c.base->find(name) : StaticCovariates::const_iterator{};
            f.push_back(c.base && it != c.base->end() ? it->second : "NA");
        }
        w.row(f);
    }
}

inline std::vector<ClaimSummary> read_claim_summaries(std::istream& in, const ModelConfig& config) {
    const auto t = csv::Table::read(in, config.delimiter);
    static const std::vector<std::string> fixed{"polNumb", "accDate", "repDate", "closedDate", "phase", "cumPayAtEval"};
    std::vector<std::size_t> idx;
    for (const auto& n : fixed) idx.push_back(t.require(n));
    std::vector<std::pair<std::size_t, std::string>> extra;
    for (std::size_t i = 0; i < t.header().size(); ++i)
        if (std::find(fixed.begin(), fixed.end(), t.header()[i]) == fixed.end()) extra.emplace_back(i, t.header()[i]);
    std::vector<ClaimSummary> out;
    for (std::size_t r = 0; r < t.size(); ++r) {
        const auto& f = t.row(r);
        const std::size_t line = t.line(r);
        auto date = [&](std::size_t k) {
            auto d = parse_date(f[idx[k]], config.dateFormat);
            if (!d) throw ParseError(line, "invalid date '" + f[idx[k]] + "'");
            return *d;
        };
        ClaimSummary s;
        s.policy_id = f[idx[0]];
        s.acc_date = date(1);
        s.rep_date = date(2);
        if (f[idx[3]] != "NA") s.closed_date = date(3);
        const auto& ph = f[idx[4]];
        if (ph == "Unreported") s.phase = ClaimPhase::Unreported;
        else if (ph == "Open") s.phase = ClaimPhase::Open;
        else if (ph == "Closed") s.phase = ClaimPhase::Closed;
        else throw ParseError(line, "invalid phase '" + ph + "'");
        auto m = parse_money(f[idx[5]]);
        if (!m) throw ParseError(line, "invalid amount '" + f[idx[5]] + "'");
        s.cum_paid = *m;
        StaticCovariates base;
        for (const auto& [i, name] : extra)
            if (f[i] != "NA") base[name] = f[i];
        s.base = std::make_shared<const StaticCovariates>(std::move(base));
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace microres
