// Command-line driver: generate -> ingest -> fit -> simulate -> evaluate -> report,
// plus the triangle utilities (ibnr, chainladder).

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "microres/microres.hpp"

namespace fs = std::filesystem;
using namespace microres;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kUsage = 2, kConfig = 3, kParse = 4, kModel = 5, kExists = 6 };

class OutputExists : public Error {
public:
    using Error::Error;
};

struct Globals {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string as_of;
    unsigned workers = 1;
    bool force = false;
    std::string out_dir = ".";
};

ModelConfig load_config(const Globals& g) {
    ModelConfig c = g.config_path.empty() ? ModelConfig{} : read_config_file(g.config_path);
    if (g.seed) c.rngSeed = *g.seed;
    c.workers = g.workers;
    c.validate();
    return c;
}

Date parse_as_of(const std::string& s) {
    auto d = parse_date(s, DateFormat::Iso);
    if (!d) d = parse_date(s, DateFormat::DayMonthYear);
    if (!d) throw ConfigError("--as-of: invalid date '" + s + "' (use YYYY-MM-DD)");
    return *d;
}

/// Evaluation date: --as-of, else evalDate from the config, else the last booking.
Date resolve_tau(const Globals& g, const ModelConfig& c, const std::vector<Claim>& claims) {
    if (!g.as_of.empty()) return parse_as_of(g.as_of);
    if (c.evalDate) return *c.evalDate;
    std::optional<Date> last;
    for (const auto& cl : claims)
        for (const auto& t : cl.transactions)
            if (!last || t.book_date > *last) last = t.book_date;
    if (!last) throw ConfigError("no bookings and no --as-of date");
    return *last;
}

/// Output files of one subcommand, checked together before anything is written.
class Outputs {
public:
    Outputs(const Globals& g, std::vector<std::string> names) : dir_(g.out_dir) {
        for (auto& n : names) paths_[n] = (dir_ / n).string();
        if (!g.force)
            for (const auto& [n, p] : paths_)
                if (fs::exists(p)) throw OutputExists(fmt::format("'{}' exists; pass --force to overwrite", p));
        fs::create_directories(dir_);
    }

    void write(const std::string& name, const std::function<void(std::ostream&)>& body) const {
        const auto& p = paths_.at(name);
        std::ofstream out(p, std::ios::binary);
        if (!out) throw Error("cannot write '" + p + "'");
        body(out);
        if (!out) throw Error("error writing '" + p + "'");
    }
    const std::string& path(const std::string& name) const { return paths_.at(name); }

private:
    fs::path dir_;
    std::map<std::string, std::string> paths_;
};

ParsedPortfolio read_log(const std::string& path, const ModelConfig& c) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open transaction log '" + path + "'");
    return parse_transactions(in, c);
}

std::string models_path(const Globals& g, const std::string& explicit_path) {
    return explicit_path.empty() ? (fs::path(g.out_dir) / "models.json").string() : explicit_path;
}

std::string num(double v, int digits = 6) { return fmt::format("{:.{}f}", v, digits); }

// ---------------------------------------------------------------------------

void run_generate(const Globals& g, const std::string& spec_path) {
    if (!g.seed) throw ConfigError("generate requires --seed");
    auto spec = synth::read_spec_file(spec_path);
    const Date tau = g.as_of.empty() ? spec.eval_date : parse_as_of(g.as_of);
    ModelConfig c = spec.config(g.config_path.empty() ? ModelConfig{} : read_config_file(g.config_path));
    Outputs out(g, {"transactions.csv", "transactions_full.csv", "truth.csv"});
    const auto pf = synth::generate_portfolio(spec, *g.seed, g.workers);
    out.write("transactions.csv", [&](std::ostream& o) { synth::write_transactions(o, pf.observed_log(tau), pf.covariate_names, c); });
    out.write("transactions_full.csv", [&](std::ostream& o) { synth::write_transactions(o, pf.full_log(), pf.covariate_names, c); });
    out.write("truth.csv", [&](std::ostream& o) { synth::write_truth(o, pf.truth(tau), c.delimiter); });
    std::cout << fmt::format("generated {} claims; evaluation date {}\n", pf.claims.size(), format_date(tau, DateFormat::Iso));
}

void run_ingest(const Globals& g, const std::string& input) {
    const auto c = load_config(g);
    const auto p = read_log(input, c);
    const Date tau = resolve_tau(g, c, p.claims);
    Outputs out(g, {"claims.csv", "periods.csv", "anomalies.csv", "triangle.csv"});
    const auto rows = discretize_portfolio(p.claims, tau, c);
    out.write("claims.csv", [&](std::ostream& o) { write_claim_summaries(o, summarize_claims(p.claims, tau), c); });
    out.write("periods.csv", [&](std::ostream& o) { write_period_dataset(o, rows, p.claims, c); });
    out.write("anomalies.csv", [&](std::ostream& o) { write_anomalies(o, p.anomalies, c.delimiter); });
    const auto tri = build_triangle(p.claims, tau);
    out.write("triangle.csv", [&](std::ostream& o) { write_triangle(o, tri.triangle, c.delimiter); });
    std::cout << fmt::format("{} claims, {} period rows, {} quarantined\n", p.claims.size(), rows.size(), p.anomalies.size());
}

void write_partial_dependence(std::ostream& o, const FittedModels& m, const std::vector<PeriodRow>& rows,
                              const std::vector<StateDataset>& sets) {
    csv::Writer w(o, ',');
    w.row({"state", "feature", "level", "N", "P", "TN", "TP"});
    for (std::size_t s = 0; s < m.time.size(); ++s) {
        const auto& hm = m.time[s];
        const auto& feats = hm.model.encoder.features();
        for (std::size_t f = 0; f < feats.size(); ++f)
            for (const auto& pt : partial_dependence(hm, rows, sets[s].time_rows, f))
                w.row({"S" + std::to_string(s), feats[f].name, pt.level, num(pt.probs[0]), num(pt.probs[1]),
                       num(pt.probs[2]), num(pt.probs[3])});
    }
}

void run_fit(const Globals& g, const std::string& input) {
    const auto c = load_config(g);
    const auto p = read_log(input, c);
    const Date tau = resolve_tau(g, c, p.claims);
    Outputs out(g, {"models.json", "partial_dependence.csv", "mean_excess.csv"});
    const auto m = fit_models(p.claims, tau, c);
    out.write("models.json", [&](std::ostream& o) { o << to_json(m).dump(1) << '\n'; });
    const auto rows = discretize_portfolio(p.claims, tau, c);
    const auto sets = build_state_datasets(rows, c);
    out.write("partial_dependence.csv", [&](std::ostream& o) { write_partial_dependence(o, m, rows, sets); });
    out.write("mean_excess.csv", [&](std::ostream& o) {
        csv::Writer w(o, ',');
        w.row({"state", "side", "threshold", "meanExcess", "count"});
        for (const auto& pm : m.payment)
            for (const auto& r : pm.mean_excess)
                w.row({"S" + std::to_string(pm.state), r.side, num(r.threshold, 2), num(r.mean_excess, 2),
                       std::to_string(r.count)});
    });
    std::cout << fmt::format("fitted {} state models on {} rows at {}\n", m.time.size(), m.training_rows,
                             format_date(tau, DateFormat::Iso));
}

void run_simulate(const Globals& g, const std::string& input, const std::string& models_file, int n_sims, bool no_ibnr) {
    if (g.as_of.empty()) throw ConfigError("simulate requires --as-of <date>");
    if (!g.seed) throw ConfigError("simulate requires --seed");
    auto c = load_config(g);
    const Date tau = parse_as_of(g.as_of);
    const auto m = load_models(models_path(g, models_file));
    c = m.adopt(c);
    const auto p = read_log(input, c);
    Outputs out(g, {"reserve_claims.csv", "reserve_portfolio.csv", "reserve_summary.csv", "reserve_histogram.csv",
                    "reserve_draws.csv"});
    SimulationOptions o;
    o.n_sims = n_sims > 0 ? n_sims : c.nSims;
    o.seed = *g.seed;
    o.workers = g.workers;
    o.include_ibnr = !no_ibnr;
    const auto d = simulate_portfolio(open_claims(p.claims, tau, c), m, c, o);
    out.write("reserve_claims.csv", [&](std::ostream& s) { write_claim_table(s, d); });
    out.write("reserve_portfolio.csv", [&](std::ostream& s) { write_portfolio_draws(s, d); });
    out.write("reserve_summary.csv", [&](std::ostream& s) { write_portfolio_summary(s, d); });
    out.write("reserve_histogram.csv", [&](std::ostream& s) { write_histogram(s, histogram(to_units(d.totals))); });
    out.write("reserve_draws.csv", [&](std::ostream& s) { write_draw_matrix(s, d); });
    if (d.capped_reporting > 0)
        std::cerr << fmt::format("warning: {} IBNR reporting delays hit reportingMaxPeriods\n", d.capped_reporting);
    std::cout << fmt::format("simulated {} open claims x {} replications\n", d.claim_ids.size(), d.replications());
}

void write_ibnr_table(std::ostream& o, const IbnrCountModel& m) {
    const auto e = expected_ibnr(m);
    csv::Writer w(o, ',');
    w.row({"accidentYear", "reported", "reportedShare", "expectedIbnr"});
    for (std::size_t i = 0; i < m.r.size(); ++i)
        w.row({std::to_string(m.first_year + static_cast<int>(i)), num(m.r[i], 0), num(m.p[i]), num(e.per_year[i], 4)});
    w.row({"total", "", "", num(e.total, 4)});
}

void run_ibnr(const Globals& g, const std::string& input, const std::string& triangle_path) {
    const auto c = load_config(g);
    RunoffTriangle t;
    if (!triangle_path.empty()) {
        std::ifstream in(triangle_path);
        if (!in) throw ConfigError("cannot open triangle '" + triangle_path + "'");
        t = read_triangle(in, c.delimiter);
    } else if (!input.empty()) {
        const auto p = read_log(input, c);
        t = build_triangle(p.claims, resolve_tau(g, c, p.claims)).triangle;
    } else {
        throw ConfigError("ibnr needs --input or --triangle");
    }
    Outputs out(g, {"ibnr_counts.csv", "ibnr_delays.csv"});
    const auto m = fit_ibnr_counts(t);
    out.write("ibnr_counts.csv", [&](std::ostream& o) { write_ibnr_table(o, m); });
    out.write("ibnr_delays.csv", [&](std::ostream& o) {
        csv::Writer w(o, ',');
        w.row({"delay", "probability", "flagged"});
        for (std::size_t j = 0; j < m.pi.size(); ++j)
            w.row({std::to_string(j), num(m.pi[j], 8), j < m.flagged.size() && m.flagged[j] ? "1" : "0"});
    });
    std::cout << fmt::format("expected IBNR claims: {:.2f}\n", expected_ibnr(m).total);
}

void run_chainladder(const Globals& g, const std::string& triangle_path, int bootstrap) {
    if (triangle_path.empty()) throw ConfigError("chainladder requires --triangle");
    const auto c = load_config(g);
    std::ifstream in(triangle_path);
    if (!in) throw ConfigError("cannot open triangle '" + triangle_path + "'");
    const auto t = read_triangle(in, c.delimiter);
    std::vector<std::string> names{"cl_factors.csv", "cl_projection.csv"};
    if (bootstrap > 0) {
        if (!g.seed) throw ConfigError("chainladder --bootstrap requires --seed");
        names.push_back("cl_bootstrap.csv");
        names.push_back("cl_bootstrap_summary.csv");
    }
    Outputs out(g, names);
    const auto p = cl_project(t);
    out.write("cl_factors.csv", [&](std::ostream& o) {
        csv::Writer w(o, ',');
        w.row({"development", "factor", "flagged"});
        for (std::size_t j = 0; j < p.factors.size(); ++j)
            w.row({std::to_string(j) + "-" + std::to_string(j + 1), num(p.factors[j], 8), p.factor_flagged[j] ? "1" : "0"});
    });
    out.write("cl_projection.csv", [&](std::ostream& o) {
        csv::Writer w(o, ',');
        w.row({"accidentYear", "observed", "reserve"});
        for (std::size_t i = 0; i < t.accident_years(); ++i)
            w.row({std::to_string(t.first_year() + static_cast<int>(i)), num(t.observed_row_total(i), 4), num(p.reserve[i], 4)});
        w.row({"total", "", num(p.total, 4)});
    });
    if (bootstrap > 0) {
        const auto b = odp_bootstrap(t, static_cast<std::size_t>(bootstrap), *g.seed, g.workers);
        out.write("cl_bootstrap.csv", [&](std::ostream& o) {
            csv::Writer w(o, ',');
            w.row({"replication", "total"});
            for (std::size_t r = 0; r < b.totals.size(); ++r) w.row({std::to_string(r + 1), num(b.totals[r], 4)});
        });
        out.write("cl_bootstrap_summary.csv", [&](std::ostream& o) {
            auto v = b.totals;
            std::sort(v.begin(), v.end());
            csv::Writer w(o, ',');
            w.row({"clTotal", "phi", "mean", "sd", "q05", "q50", "q95", "q995"});
            w.row({num(b.cl_total, 4), num(b.phi, 6), num(stats::mean(v), 4), num(std::sqrt(stats::variance(v)), 4),
                   num(stats::quantile_sorted(v, 0.05), 4), num(stats::quantile_sorted(v, 0.5), 4),
                   num(stats::quantile_sorted(v, 0.95), 4), num(stats::quantile_sorted(v, 0.995), 4)});
        });
    }
    std::cout << fmt::format("chain-ladder reserve: {:.4f}\n", p.total);
}

/// Per-claim reserve draws written by `simulate` (one column per claim).
std::map<std::string, std::vector<double>> read_draw_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ModelError("reserve draws not found: '" + path + "' (run `simulate` first)");
    const auto t = csv::Table::read(in, ',');
    std::map<std::string, std::vector<double>> out;
    for (std::size_t c = 1; c < t.header().size(); ++c) {
        auto& v = out[t.header()[c]];
        for (std::size_t r = 0; r < t.size(); ++r) {
            auto m = parse_money(t.row(r)[c]);
            if (!m) throw ParseError(t.line(r), "invalid amount in reserve draws");
            v.push_back(m->units());
        }
    }
    return out;
}

void run_evaluate(const Globals& g, const std::string& truth_path, double alpha) {
    const std::string draws_path = (fs::path(g.out_dir) / "reserve_draws.csv").string();
    const auto draws = read_draw_matrix(draws_path);
    std::ifstream in(truth_path);
    if (!in) throw ConfigError("cannot open truth file '" + truth_path + "'");
    const auto truth = synth::read_truth(in);
    std::map<std::string, double> true_reserve;
    for (const auto& t : truth) true_reserve[t.policy_id] = t.reserve().units();

    std::vector<std::vector<double>> per_claim;
    std::vector<double> truths, means;
    double crps_sum = 0.0;
    std::size_t missing = 0;
    const std::size_t R = draws.empty() ? 0 : draws.begin()->second.size();
    std::vector<double> portfolio(R, 0.0);
    for (const auto& [id, v] : draws) {
        auto it = true_reserve.find(id);
        if (it == true_reserve.end()) {
            ++missing;
            continue;
        }
        per_claim.push_back(v);
        truths.push_back(it->second);
        means.push_back(stats::mean(v));
        crps_sum += eval::crps(v, it->second);
        for (std::size_t r = 0; r < R; ++r) portfolio[r] += v[r];
    }
    if (per_claim.empty()) throw ModelError("no simulated claim appears in the truth file");
    Outputs out(g, {"evaluation.csv"});
    const auto is = eval::interval_score_and_picp(per_claim, truths, alpha);
    const auto pm = eval::pointwise_metrics(means, truths);
    double true_total = 0.0;
    for (double t : truths) true_total += t;
    const double be = stats::mean(portfolio);
    std::sort(portfolio.begin(), portfolio.end());
    out.write("evaluation.csv", [&](std::ostream& o) {
        csv::Writer w(o, ',');
        w.row({"metric", "value"});
        w.row({"claims", std::to_string(per_claim.size())});
        w.row({"claimsWithoutTruth", std::to_string(missing)});
        w.row({"trueReserve", num(true_total, 2)});
        w.row({"bestEstimate", num(be, 2)});
        w.row({"percentageError", num(true_total != 0 ? 100.0 * (be - true_total) / true_total : 0.0, 4)});
        w.row({"portfolioQ05", num(stats::quantile_sorted(portfolio, 0.05), 2)});
        w.row({"portfolioQ95", num(stats::quantile_sorted(portfolio, 0.95), 2)});
        w.row({"meanCRPS", num(crps_sum / static_cast<double>(per_claim.size()), 4)});
        w.row({"intervalScore", num(is.interval_score, 4)});
        w.row({"PICP", num(is.picp, 4)});
        w.row({"bias", num(pm.bias, 2)});
        w.row({"MAE", num(pm.mae, 2)});
        w.row({"RMSE", num(pm.rmse, 2)});
        w.row({"sMAPE", num(pm.smape, 4)});
        w.row({"sMAPESkipped", std::to_string(pm.smape_skipped)});
    });
    std::cout << fmt::format("best estimate {:.2f} vs true reserve {:.2f}\n", be, true_total);
}

void copy_csv_section(std::ostream& o, const std::string& title, const fs::path& path) {
    o << "## " << title << '\n';
    std::ifstream in(path);
    if (!in) {
        o << "(not available: " << path.filename().string() << ")\n\n";
        return;
    }
    o << in.rdbuf() << '\n';
}

void run_report(const Globals& g, const std::string& models_file) {
    const auto m = load_models(models_path(g, models_file));
    const fs::path dir(g.out_dir);
    Outputs out(g, {"report.txt"});
    out.write("report.txt", [&](std::ostream& o) {
        o << "# Reserving report (evaluation date " << format_date(m.eval_date, DateFormat::Iso) << ")\n\n";

        o << "## Transitions in the training data (%)\n";
        {
            csv::Writer w(o, ',');
            w.row({"state", "rows", "N", "P", "TN", "TP", "model"});
            for (std::size_t s = 0; s < m.transition_counts.size(); ++s) {
                const auto& n = m.transition_counts[s];
                const double tot = static_cast<double>(n[0] + n[1] + n[2] + n[3]);
                std::vector<std::string> row{"S" + std::to_string(s) + (s + 1 == m.transition_counts.size() ? "+" : ""),
                                             num(tot, 0)};
                for (long v : n) row.push_back(num(tot > 0 ? 100.0 * static_cast<double>(v) / tot : 0.0, 2));
                row.emplace_back(s < m.time.size() ? to_string(m.time[s].fallback) : "");
                w.row(row);
            }
        }
        o << '\n';

        o << "## Payment split points\n";
        {
            csv::Writer w(o, ',');
            w.row({"state", "splitPoints", "leftScale", "leftShape", "rightScale", "rightShape"});
            for (const auto& pm : m.payment) {
                std::string pts;
                for (std::size_t k = 0; k < pm.split_points.size(); ++k)
                    pts += (k ? " " : "") + num(pm.split_points[k], 2);
                w.row({"S" + std::to_string(pm.state), pts, num(pm.left.scale, 4), num(pm.left.shape, 4),
                       num(pm.right.scale, 4), num(pm.right.shape, 4)});
            }
        }
        o << '\n';

        o << "## Mean payment and share of payments per bin\n";
        {
            csv::Writer w(o, ',');
            std::vector<std::string> header{"state"};
            const int L = m.payment.empty() ? 0 : m.payment.front().bins();
            for (int l = 1; l <= L; ++l) header.push_back("mu" + std::to_string(l));
            for (int l = 1; l <= L; ++l) header.push_back("share" + std::to_string(l));
            w.row(header);
            for (const auto& pm : m.payment) {
                std::vector<std::string> row{"S" + std::to_string(pm.state)};
                for (double mu : pm.means) row.push_back(num(mu, 2));
                double tot = 0;
                for (auto n : pm.counts) tot += static_cast<double>(n);
                for (auto n : pm.counts) row.push_back(num(tot > 0 ? 100.0 * static_cast<double>(n) / tot : 0.0, 2));
                w.row(row);
            }
        }
        o << '\n';

        o << "## Reporting and IBNR counts\n";
        o << "reportingProbabilityPerPeriod," << num(m.reporting.probability) << '\n';
        if (m.ibnr) write_ibnr_table(o, *m.ibnr);
        else o << "(no usable claim count triangle)\n";
        o << '\n';

        copy_csv_section(o, "Best estimate distribution", dir / "reserve_summary.csv");
        copy_csv_section(o, "Accuracy against the true reserves", dir / "evaluation.csv");
    });
    std::cout << "wrote " << out.path("report.txt") << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Micro-level multi-state claims reserving"};
    app.require_subcommand(1);
    Globals g;
    std::uint64_t seed = 0;
    app.add_option("--config", g.config_path, "Model configuration file (INI)")->check(CLI::ExistingFile);
    auto* seed_opt = app.add_option("--seed", seed, "Random seed");
    app.add_option("--as-of", g.as_of, "Evaluation date tau (YYYY-MM-DD)");
    app.add_option("--workers", g.workers, "Worker threads")->check(CLI::PositiveNumber);
    app.add_flag("--force", g.force, "Overwrite existing outputs");
    app.add_option("--out-dir", g.out_dir, "Output directory");

    std::string input, spec, models_file, triangle, truth;
    int n_sims = 0, bootstrap = 0;
    bool no_ibnr = false;
    double alpha = 0.95;

    auto* gen = app.add_subcommand("generate", "Draw a synthetic portfolio with known truth");
    gen->add_option("--spec", spec, "Synthetic spec (JSON)")->required()->check(CLI::ExistingFile);
    auto* ingest = app.add_subcommand("ingest", "Parse a booking log and write the period dataset");
    ingest->add_option("--input", input, "Booking log")->required();
    auto* fit = app.add_subcommand("fit", "Fit and persist all models");
    fit->add_option("--input", input, "Booking log")->required();
    auto* sim = app.add_subcommand("simulate", "Simulate the reserve distribution");
    sim->add_option("--input", input, "Booking log")->required();
    sim->add_option("--models", models_file, "Models file (default <out-dir>/models.json)");
    sim->add_option("--n-sims", n_sims, "Replications (default nSims from the config)");
    sim->add_flag("--no-ibnr", no_ibnr, "Simulate reported claims only");
    auto* ibnr = app.add_subcommand("ibnr", "Estimate IBNR claim counts");
    ibnr->add_option("--input", input, "Booking log");
    ibnr->add_option("--triangle", triangle, "Claim count triangle");
    auto* cl = app.add_subcommand("chainladder", "Chain-ladder projection and ODP bootstrap");
    cl->add_option("--triangle", triangle, "Triangle file")->required();
    cl->add_option("--bootstrap", bootstrap, "Bootstrap resamples")->check(CLI::NonNegativeNumber);
    auto* ev = app.add_subcommand("evaluate", "Score simulated reserves against known truth");
    ev->add_option("--truth", truth, "Truth file from generate")->required();
    ev->add_option("--alpha", alpha, "Upper quantile level of the prediction interval");
    auto* rep = app.add_subcommand("report", "Summary tables from persisted artifacts");
    rep->add_option("--models", models_file, "Models file (default <out-dir>/models.json)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kUsage;
    }
    if (*seed_opt) g.seed = seed;

    try {
        if (*gen) run_generate(g, spec);
        else if (*ingest) run_ingest(g, input);
        else if (*fit) run_fit(g, input);
        else if (*sim) run_simulate(g, input, models_file, n_sims, no_ibnr);
        else if (*ibnr) run_ibnr(g, input, triangle);
        else if (*cl) run_chainladder(g, triangle, bootstrap);
        else if (*ev) run_evaluate(g, truth, alpha);
        else if (*rep) run_report(g, models_file);
        return kOk;
    } catch (const OutputExists& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExists;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return kParse;
    } catch (const ModelError& e) {
        std::cerr << "model error: " << e.what() << '\n';
        return kModel;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFailure;
    }
}
