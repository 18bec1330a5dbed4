#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "microres/error.hpp"
#include "microres/parallel.hpp"
#include "microres/rng.hpp"
#include "microres/triangle.hpp"

namespace microres {

struct ClProjection {
    std::vector<double> factors;      // f_0 .. f_{J-2}
    std::vector<bool> factor_flagged;  // zero denominator: factor set to 1
    RunoffTriangle completed;          // incremental, observed cells kept as is
    std::vector<double> reserve;       // per accident year: projected future total
    double total = 0.0;
};

/// Volume-weighted development factors from an incremental triangle.
inline std::vector<double> development_factors(const RunoffTriangle& t, std::vector<bool>* flagged = nullptr) {
    const std::size_t I = t.accident_years(), J = t.dev_years();
    std::vector<double> f(J > 0 ? J - 1 : 0, 1.0);
    if (flagged) flagged->assign(f.size(), false);
    std::vector<double> cum(I * J, 0.0);
    for (std::size_t i = 0; i < I; ++i) {
        double c = 0.0;
        for (std::size_t j = 0; j < J && t.observed(i, j); ++j) cum[i * J + j] = c += t.at(i, j);
    }
    for (std::size_t j = 0; j + 1 < J; ++j) {
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < I; ++i)
            if (t.observed(i, j + 1)) num += cum[i * J + j + 1], den += cum[i * J + j];
        if (den > 0) f[j] = num / den;
        else if (flagged) (*flagged)[j] = true;
    }
    return f;
}

/// Deterministic chain-ladder completion of an incremental triangle.
inline ClProjection cl_project(const RunoffTriangle& t) {
    ClProjection p;
    p.factors = development_factors(t, &p.factor_flagged);
    p.completed = t;
    const std::size_t I = t.accident_years(), J = t.dev_years();
    p.reserve.assign(I, 0.0);
    for (std::size_t i = 0; i < I; ++i) {
        const std::size_t last = t.last_observed(i);
        double c = t.observed_row_total(i);
        for (std::size_t j = last + 1; j < J; ++j) {
            const double next = c * p.factors[j - 1];
            p.completed.at(i, j) = next - c;
            p.reserve[i] += next - c;
            c = next;
        }
        p.total += p.reserve[i];
    }
    return p;
}

struct OdpBootstrap {
    std::vector<double> totals;  // one future total per resample
    double phi = 0.0;            // scale parameter
    double cl_total = 0.0;
    std::size_t residuals = 0;
};

/// England-Verrall bootstrap of the over-dispersed Poisson chain ladder: unscaled
/// Pearson residuals (bias-corrected by sqrt(n / (n - p))) are resampled into pseudo
/// triangles, each is re-projected, and every future cell gets a process draw
/// phi * Poisson(m / phi).
inline OdpBootstrap odp_bootstrap(const RunoffTriangle& t, std::size_t n_boot, std::uint64_t seed,
                                  unsigned workers = 1) {
    const std::size_t I = t.accident_years(), J = t.dev_years();
    for (std::size_t i = 0; i < I; ++i)
        for (std::size_t j = 0; j < J; ++j)
            if (t.observed(i, j) && t.at(i, j) < 0) throw ModelError("ODP bootstrap needs nonnegative counts");
    const auto f = development_factors(t);
    // Fitted incrementals from the latest diagonal backwards.
    RunoffTriangle fitted(I, J, t.first_year());
    std::size_t n = 0;
    for (std::size_t i = 0; i < I; ++i) {
        const std::size_t last = t.last_observed(i);
        double c = t.observed_row_total(i);
        for (std::size_t j = last + 1; j-- > 0;) {
            const double prev = j > 0 ? c / f[j - 1] : 0.0;
            fitted.at(i, j) = c - prev;
            if (fitted.at(i, j) < -1e-9)
                throw ModelError(fmt::format("negative fitted incremental {:.4f} at accident row {}, development {}; "
                                             "the ODP bootstrap does not apply", fitted.at(i, j), i, j));
            c = prev;
            ++n;
        }
    }
    std::vector<double> resid;
    double ss = 0.0;
    for (std::size_t i = 0; i < I; ++i)
        for (std::size_t j = 0; j <= t.last_observed(i); ++j) {
            const double m = fitted.at(i, j);
            if (m <= 0) continue;
            const double r = (t.at(i, j) - m) / std::sqrt(m);
            resid.push_back(r);
            ss += r * r;
        }
    const std::size_t params = I + J - 1;
    OdpBootstrap out;
    out.cl_total = cl_project(t).total;
    out.residuals = resid.size();
    out.phi = n > params ? ss / static_cast<double>(n - params) : 0.0;
    const double adj = n > params ? std::sqrt(static_cast<double>(n) / static_cast<double>(n - params)) : 0.0;
    for (auto& r : resid) r *= adj;

    out.totals.assign(n_boot, 0.0);
    parallel_for(n_boot, workers, [&](std::size_t b) {
        Rng rng = substream(seed, b);
        RunoffTriangle pseudo(I, J, t.first_year());
        for (std::size_t i = 0; i < I; ++i)
            for (std::size_t j = 0; j <= t.last_observed(i); ++j) {
                const double m = fitted.at(i, j);
                double r = 0.0;
                if (!resid.empty()) r = resid[static_cast<std::size_t>(uniform01(rng) * static_cast<double>(resid.size()))];
                pseudo.at(i, j) = m > 0 ? m + r * std::sqrt(m) : 0.0;
            }
        const auto proj = cl_project(pseudo);
        double total = 0.0;
        for (std::size_t i = 0; i < I; ++i)
            for (std::size_t j = t.last_observed(i) + 1; j < J; ++j) {
                const double m = proj.completed.at(i, j);
                if (out.phi <= 0) {
                    total += m;
                } else if (m != 0) {
                    std::poisson_distribution<long> pois(std::abs(m) / out.phi);
                    total += (m > 0 ? 1.0 : -1.0) * out.phi * static_cast<double>(pois(rng));
                }
            }
        out.totals[b] = total;
    });
    return out;
}

}  // namespace microres
