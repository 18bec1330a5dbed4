#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "microres/chain_ladder.hpp"
#include "microres/error.hpp"
#include "microres/parallel.hpp"
#include "microres/rng.hpp"
#include "microres/triangle.hpp"

namespace microres {

/// Reporting-delay probabilities and per-year negative binomial parameters.
struct IbnrCountModel {
    std::vector<double> pi;            // pi_0 .. pi_{J-1}
    std::vector<bool> flagged;         // development years with an undefined factor
    std::vector<double> r;             // observed count per accident year
    std::vector<double> p;             // reported share per accident year
    std::vector<std::size_t> first_unobserved;  // per accident year; J when complete
    int first_year = 0;
};

/// Reporting probabilities from the chain-ladder factors: beta_j = 1 / prod_{k>=j} f_k
/// is the share reported by development year j and pi_j its increment.
inline std::vector<double> estimate_reporting_probs(const RunoffTriangle& t, std::vector<bool>* flagged = nullptr) {
    if (t.accident_years() == 0 || t.dev_years() == 0) throw ModelError("empty triangle");
    if (!(t.observed_row_total(0) > 0)) throw ModelError("first accident year has no reported claims");
    std::vector<bool> fl;
    const auto f = development_factors(t, &fl);
    const std::size_t J = t.dev_years();
    std::vector<double> beta(J, 1.0);
    for (std::size_t j = J - 1; j-- > 0;) beta[j] = beta[j + 1] / f[j];
    std::vector<double> pi(J);
    for (std::size_t j = 0; j < J; ++j) pi[j] = beta[j] - (j > 0 ? beta[j - 1] : 0.0);
    if (flagged) {
        flagged->assign(J, false);
        for (std::size_t j = 0; j + 1 < J; ++j)
            if (fl[j]) (*flagged)[j + 1] = true;
    }
    return pi;
}

/// Reporting probabilities of accident year `i`'s unobserved development years
/// [first_unobserved, J), renormalised to sum to one.
inline std::vector<double> standardize_tail(const std::vector<double>& pi, std::size_t first_unobserved) {
    if (first_unobserved >= pi.size()) throw ModelError("accident year has no unobserved development years");
    double s = 0.0;
    for (std::size_t j = first_unobserved; j < pi.size(); ++j) s += pi[j];
    if (!(s > 0)) throw ModelError("zero reporting mass in the unobserved years; the expected IBNR count is 0");
    std::vector<double> out;
    for (std::size_t j = first_unobserved; j < pi.size(); ++j) out.push_back(pi[j] / s);
    return out;
}

inline IbnrCountModel fit_ibnr_counts(const RunoffTriangle& t) {
    IbnrCountModel m;
    m.pi = estimate_reporting_probs(t, &m.flagged);
    m.first_year = t.first_year();
    const std::size_t J = t.dev_years();
    for (std::size_t i = 0; i < t.accident_years(); ++i) {
        const std::size_t last = t.last_observed(i);
        double p = 0.0;
        for (std::size_t j = 0; j <= last; ++j) p += m.pi[j];
        m.r.push_back(t.observed_row_total(i));
        m.p.push_back(std::min(1.0, p));
        m.first_unobserved.push_back(std::min(J, last + 1));
    }
    return m;
}

struct IbnrExpectation {
    std::vector<double> per_year;
    double total = 0.0;
};

/// E[N_i^IBNR] = r_i (1 - p_i) / p_i.
inline double expected_ibnr(double r, double p) {
    if (!(p > 0)) throw ModelError("reporting probability must be positive");
    return r * (1.0 - p) / p;
}

inline IbnrExpectation expected_ibnr(const IbnrCountModel& m) {
    IbnrExpectation e;
    for (std::size_t i = 0; i < m.r.size(); ++i) {
        e.per_year.push_back(m.p[i] >= 1.0 ? 0.0 : expected_ibnr(m.r[i], m.p[i]));
        e.total += e.per_year.back();
    }
    return e;
}

/// One predictive draw: counts per (accident year, development year), row major.
struct IbnrDraw {
    std::size_t J = 0;
    std::vector<long> cells;
    std::vector<long> per_year;
    long total = 0;
    long at(std::size_t i, std::size_t j) const { return cells[i * J + j]; }
};

/// Draws N_i^IBNR ~ NegBinom(r_i, p_i) (failures before r_i successes) and allocates it
/// over the unobserved development years with the standardised tail probabilities.
inline IbnrDraw draw_ibnr(const IbnrCountModel& m, Rng& rng) {
    const std::size_t I = m.r.size(), J = m.pi.size();
    IbnrDraw d;
    d.J = J;
    d.cells.assign(I * J, 0);
    d.per_year.assign(I, 0);
    for (std::size_t i = 0; i < I; ++i) {
        if (m.p[i] >= 1.0 || m.first_unobserved[i] >= J || m.r[i] <= 0) continue;
        std::negative_binomial_distribution<long> nb(static_cast<long>(std::llround(m.r[i])), m.p[i]);
        long n = nb(rng);
        d.per_year[i] = n;
        d.total += n;
        const auto tail = standardize_tail(m.pi, m.first_unobserved[i]);
        double rest = 1.0;
        for (std::size_t k = 0; k < tail.size(); ++k) {
            const std::size_t j = m.first_unobserved[i] + k;
            long x = n;
            if (k + 1 < tail.size() && n > 0) {
                const double q = rest > 0 ? std::clamp(tail[k] / rest, 0.0, 1.0) : 1.0;
                x = std::binomial_distribution<long>(n, q)(rng);
            }
            d.cells[i * J + j] = x;
            n -= x;
            rest -= tail[k];
        }
    }
    return d;
}

/// `n_draws` independent draws; draw k uses sub-stream (seed, k).
inline std::vector<IbnrDraw> sample_ibnr(const IbnrCountModel& m, std::size_t n_draws, std::uint64_t seed,
                                         unsigned workers = 1) {
    std::vector<IbnrDraw> out(n_draws);
    parallel_for(n_draws, workers, [&](std::size_t k) {
        Rng rng = substream(seed, k, 0x1b);
        out[k] = draw_ibnr(m, rng);
    });
    return out;
}

}  // namespace microres
