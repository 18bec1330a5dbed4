#include <gtest/gtest.h>

#include <sstream>

#include "microres/synthetic.hpp"
#include "test_support.hpp"

using namespace microres;
using microres::testing::toy_spec;

namespace {

nlohmann::json deterministic_json() {
    return nlohmann::json::parse(R"({
      "n_claims": 20, "accident_start": "2020-03-01", "accident_end": "2020-03-01",
      "eval_date": "2020-03-01", "reporting": {"fast_share": 1.0},
      "states": [{"hazards": {"TP": 1.0}}],
      "payments": [{"split_points": [0, 99.99, 100.01],
                    "left": {"scale": 1, "shape": 0}, "right": {"scale": 1, "shape": 0},
                    "body": [{"mu": 50, "sigma": 10}, {"mu": 100, "sigma": 0.0001}],
                    "weights": [0, 0, 1, 0]}]
    })");
}

}  // namespace

TEST(Synthetic, DeterministicSpec) {
    const auto spec = synth::spec_from_json(deterministic_json());
    const auto pf = synth::generate_portfolio(spec, 1);
    ASSERT_EQ(pf.claims.size(), 20u);
    for (const auto& c : pf.claims) {
        ASSERT_EQ(c.transactions.size(), 2u);
        EXPECT_EQ(c.transactions[1].cum_pay.cents(), 10000);
        EXPECT_EQ(c.transitions, std::vector<Transition>{Transition::TP});
    }
    for (const auto& t : pf.truth(spec.eval_date)) {
        EXPECT_EQ(t.phase, ClaimPhase::Open);
        EXPECT_EQ(t.reserve().cents(), 10000);
    }
    EXPECT_EQ(pf.claims[0].policy_id, "C01");
}

TEST(Synthetic, RejectsNonTerminatingSpec) {
    auto j = deterministic_json();
    j["states"][0]["hazards"] = {{"N", 0.5}, {"P", 0.5}};
    EXPECT_THROW(synth::spec_from_json(j), ConfigError);
    auto k = deterministic_json();
    k["payments"][0]["weights"] = {0.5, 0.5};
    EXPECT_THROW(synth::spec_from_json(k), ConfigError);
}

TEST(Synthetic, SameSeedSamePortfolio) {
    auto spec = toy_spec();
    spec.n_claims = 200;
    const auto a = synth::generate_portfolio(spec, 3, 1), b = synth::generate_portfolio(spec, 3, 4);
    ASSERT_EQ(a.claims.size(), b.claims.size());
    for (std::size_t k = 0; k < a.claims.size(); ++k) {
        EXPECT_EQ(a.claims[k].transitions, b.claims[k].transitions);
        EXPECT_EQ(a.claims[k].transactions.back().cum_pay, b.claims[k].transactions.back().cum_pay);
    }
}

TEST(Synthetic, StartStateMix) {
    auto spec = toy_spec();
    spec.n_claims = 50000;
    spec.states[0].effects.clear();
    const auto pf = synth::generate_portfolio(spec, 11);
    std::array<double, 4> n{};
    double total = 0;
    for (const auto& c : pf.claims)
        for (std::size_t p = 0; p < c.transitions.size(); ++p)
            if (c.states[p] == 0) {
                n[static_cast<std::size_t>(c.transitions[p])] += 1;
                total += 1;
            }
    EXPECT_NEAR(n[0] / total, 0.62, 0.01);
    EXPECT_NEAR(n[1] / total, 0.35, 0.01);
    EXPECT_EQ(n[2], 0.0);
    EXPECT_NEAR(n[3] / total, 0.03, 0.01);
}

TEST(Synthetic, LogRoundTripRecoversStates) {
    auto spec = toy_spec();
    spec.n_claims = 500;
    const auto pf = synth::generate_portfolio(spec, 5);
    const Date late = Date::from_ymd(2080, 1, 1);
    ModelConfig cfg = spec.config();
    std::ostringstream out;
    synth::write_transactions(out, pf.full_log(), pf.covariate_names, cfg);
    std::istringstream in(out.str());
    const auto parsed = parse_transactions(in, cfg);
    EXPECT_TRUE(parsed.anomalies.empty());
    ASSERT_EQ(parsed.claims.size(), pf.claims.size());
    for (std::size_t k = 0; k < pf.claims.size(); ++k) {
        const auto& g = pf.claims[k];
        const auto rows = discretize_claim(parsed.claims[k], late, cfg);
        ASSERT_EQ(rows.size(), g.transitions.size()) << g.policy_id;
        for (std::size_t p = 0; p < rows.size(); ++p) {
            EXPECT_EQ(rows[p].transition, g.transitions[p]) << g.policy_id << " period " << p + 1;
            EXPECT_EQ(rows[p].state, g.states[p]);
        }
        EXPECT_EQ(parsed.claims[k].base->at("cover"), g.base->at("cover"));
    }
}

TEST(Synthetic, TruthBookkeeping) {
    auto spec = toy_spec();
    spec.n_claims = 400;
    const auto pf = synth::generate_portfolio(spec, 6);
    const auto truth = pf.truth(spec.eval_date);
    const auto observed = pf.observed_claims(spec.eval_date);
    std::size_t open = 0;
    for (std::size_t k = 0; k < truth.size(); ++k) {
        const auto& g = pf.claims[k];
        Money after;
        Money prev;
        for (const auto& t : g.transactions) {
            if (t.book_date > spec.eval_date) after += t.cum_pay - prev;
            prev = t.cum_pay;
        }
        if (truth[k].phase != ClaimPhase::Unreported) {
            EXPECT_EQ(truth[k].reserve(), after);
        }
        if (truth[k].phase == ClaimPhase::Closed) {
            EXPECT_EQ(truth[k].reserve().cents(), 0);
        }
        open += truth[k].phase == ClaimPhase::Open;
    }
    std::size_t open_obs = 0;
    for (const auto& c : observed) open_obs += !c.closed_by(spec.eval_date);
    EXPECT_EQ(open, open_obs);

    std::ostringstream out;
    synth::write_truth(out, truth);
    std::istringstream in(out.str());
    const auto back = synth::read_truth(in);
    ASSERT_EQ(back.size(), truth.size());
    EXPECT_EQ(back[3].reserve(), truth[3].reserve());
    EXPECT_EQ(back[3].phase, truth[3].phase);
}
