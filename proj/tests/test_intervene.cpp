#include <doctest.h>

#include <random>

#include "comet/errors.hpp"
#include "comet/ground_truth.hpp"
#include "comet/intervene.hpp"
#include "comet/minienvs.hpp"
#include "comet/pipeline.hpp"
#include "comet/trace.hpp"

using namespace comet;

namespace {

Trace random_trace(const std::string& name, int steps, std::uint64_t seed) {
    auto env = make_env(name);
    auto policy = random_policy(seed, env->info().actions);
    return sample(*env, *policy, steps, seed);
}

CausalWorldModel with_rule(CausalWorldModel m, int target, RuleSet rs) {
    m.rules[target].ruleset = std::move(rs);
    m.rules[target].status = RuleStatus::Regressed;
    m.refresh();
    return m;
}

const RuleRefinement& entry(const RefinementReport& r, int target) {
    for (const auto& x : r.rules)
        if (x.target == target) return x;
    throw std::runtime_error("no report entry");
}

void check_verdict_invariant(const DependencyVerdict& v, int min_trials) {
    CHECK(v.agreements <= v.trials);
    CHECK((v.verdict == Verdict::Confirmed) == (v.agreements == v.trials && v.trials >= min_trials));
    CHECK((v.verdict == Verdict::Refuted) == (v.agreements == 0 && v.trials >= min_trials));
}

}  // namespace

TEST_SUITE("intervene") {

TEST_CASE("the ball velocity is refuted for the enemy and confirmed for the ball") {
    auto env = make_env("minipong");
    const CausalWorldModel gt = ground_truth_model("minipong");
    const CausalWorldModel spurious = with_rule(gt, pong::ENEMY_Y, RuleSet{{}, Add(Var(1), Var(5))});

    const DependencyVerdict enemy = test_dependency(env.get(), spurious, pong::ENEMY_Y, pong::BALL_VY, 20, 1);
    CHECK(enemy.verdict == Verdict::Refuted);
    CHECK(enemy.trials == 20);
    CHECK(enemy.agreements == 0);

    const CausalWorldModel ball = with_rule(gt, pong::BALL_Y, RuleSet{{}, Add(Var(3), Var(5))});
    const DependencyVerdict ball_y = test_dependency(env.get(), ball, pong::BALL_Y, pong::BALL_VY, 20, 1);
    CHECK(ball_y.verdict == Verdict::Confirmed);
    CHECK(ball_y.agreements == 20);

    CHECK_THROWS_AS(test_dependency(nullptr, ball, pong::BALL_Y, pong::BALL_VY, 20, 1), EnvUnavailable);
    CHECK_THROWS_AS(test_dependency(env.get(), ball, pong::BALL_Y, pong::PARITY, 20, 1), UsageError);
    CHECK_THROWS_AS(refine_model(nullptr, ball, random_trace("minipong", 10, 1), RefineConfig{}), EnvUnavailable);
}

TEST_CASE("paired trials differ only in the nudged cell") {
    auto env = make_env("minipong");
    const CausalWorldModel gt = ground_truth_model("minipong");
    std::vector<Transition> rows;
    test_dependency(env.get(), gt, pong::BALL_X, pong::BALL_VX, 30, 4, kMinTrials, &rows);
    REQUIRE(rows.size() == 60);
    for (std::size_t i = 0; i < rows.size(); i += 2) {
        const State& a = rows[i].state_before;
        const State& b = rows[i + 1].state_before;
        CHECK(rows[i].action == rows[i + 1].action);
        for (int k = 0; k < 32; ++k)
            if (k != pong::BALL_VX) REQUIRE(a[k] == b[k]);
        CHECK(a[pong::BALL_VX] != b[pong::BALL_VX]);
    }
}

TEST_CASE("verdicts satisfy their invariant") {
    std::mt19937_64 rng(21);
    for (const std::string name : {"minipong", "minifreeway"}) {
        auto env = make_env(name);
        const CausalWorldModel gt = ground_truth_model(name);
        std::vector<std::pair<int, int>> pairs;
        for (const auto& [t, r] : gt.rules)
            for (int c : r.inputs.cells) pairs.push_back({t, c});
        REQUIRE_FALSE(pairs.empty());
        for (int i = 0; i < 30; ++i) {
            const auto [t, c] = pairs[rng() % pairs.size()];
            const int trials = 1 + static_cast<int>(rng() % 30);
            const int min_trials = 1 + static_cast<int>(rng() % 25);
            const auto v = test_dependency(env.get(), gt, t, c, trials, rng(), min_trials);
            CHECK(v.trials <= trials);
            check_verdict_invariant(v, min_trials);
        }
    }
}

TEST_CASE("ground truth is immune to refinement") {
    for (const std::string name : {"minipong", "minifreeway"}) {
        auto env = make_env(name);
        const CausalWorldModel gt = ground_truth_model(name);
        RefineConfig cfg;
        cfg.seed = 3;
        const auto [refined, report] = refine_model(env.get(), gt, random_trace(name, 2000, 3), cfg);
        CHECK(report.added_cells.empty());
        for (const auto& rr : report.rules) {
            CHECK(rr.action == RefineAction::Kept);
            for (const auto& v : rr.verdicts) CHECK(v.verdict == Verdict::Confirmed);
            CHECK(rr.after == rr.before);
        }
        for (const auto& [t, r] : gt.rules) {
            const RuleSet& got = refined.rules.at(t).ruleset;
            CHECK(equal(got.fallback, r.ruleset.fallback));
            REQUIRE(got.cases.size() == r.ruleset.cases.size());
            for (std::size_t i = 0; i < got.cases.size(); ++i) {
                CHECK(equal(got.cases[i].when, r.ruleset.cases[i].when));
                CHECK(equal(got.cases[i].then, r.ruleset.cases[i].then));
            }
            CHECK(refined.rules.at(t).status == RuleStatus::Verified);
        }
    }
}

TEST_CASE("refinement repairs the extracted enemy rule") {
    auto env = make_env("minipong");
    const Trace t = random_trace("minipong", 5000, 7);
    const CausalWorldModel m = extract_world_model(t, SearchConfig{});
    REQUIRE(m.rules.at(pong::ENEMY_Y).inputs.cells.count(pong::BALL_VY));

    RefineConfig cfg;
    cfg.seed = 7;
    const auto [refined, report] = refine_model(env.get(), m, t, cfg);
    const RuleRefinement& enemy = entry(report, pong::ENEMY_Y);
    bool refuted = false;
    for (const auto& v : enemy.verdicts) refuted |= v.candidate == pong::BALL_VY && v.verdict == Verdict::Refuted;
    CHECK(refuted);
    CHECK(enemy.action == RefineAction::Refit);
    CHECK(refined.rules.at(pong::ENEMY_Y).status == RuleStatus::RefutedRefit);
    CHECK_FALSE(refined.rules.at(pong::ENEMY_Y).inputs.cells.count(pong::BALL_VY));
    CHECK(refined.rules.at(pong::ENEMY_Y).inputs.cells.count(pong::BALL_Y));

    // refinement never lowers a rule's accuracy on the trace
    for (const auto& rr : report.rules) CHECK(rr.after >= rr.before);
    CHECK(refined.edges == refined.derived_edges());

    const auto held = prediction_accuracy(refined, random_trace("minipong", 1000, 1007));
    CHECK(held.at(pong::ENEMY_Y) == 1.0);
}

TEST_CASE("an injected read of the active flag is refuted and removed") {
    auto env = make_env("minifreeway");
    const Trace t = random_trace("minifreeway", 3000, 5);
    const CausalWorldModel gt = ground_truth_model("minifreeway");
    // car 1 (period 2, speed 1) with its speed routed through the constant flag
    const RuleSet injected{{{VarEqConst(freeway::counter_cell(1), 1), Add(Var(freeway::car_cell(1)), Var(freeway::kActive))}},
                           Var(freeway::car_cell(1))};
    CausalWorldModel m = with_rule(gt, freeway::car_cell(1), injected);
    // and a hold rule for the flag itself
    m = with_rule(m, freeway::kActive, RuleSet{{}, Var(freeway::kActive)});

    RefineConfig cfg;
    cfg.seed = 5;
    const auto [refined, report] = refine_model(env.get(), m, t, cfg);

    const RuleRefinement& car = entry(report, freeway::car_cell(1));
    bool refuted = false;
    for (const auto& v : car.verdicts) refuted |= v.candidate == freeway::kActive && v.verdict == Verdict::Refuted;
    CHECK(refuted);
    CHECK_FALSE(refined.rules.at(freeway::car_cell(1)).inputs.cells.count(freeway::kActive));
    CHECK(car.after == car.before);
    CHECK(car.after == 1.0);

    const RuleRefinement& flag = entry(report, freeway::kActive);
    CHECK(flag.action == RefineAction::DemotedToConstant);
    CHECK(refined.rules.at(freeway::kActive).inputs.cells.empty());
    for (const auto& e : refined.edges) CHECK((e.from_action || e.source != freeway::kActive));
}

TEST_CASE("reports serialize with every verdict") {
    RefinementReport r;
    RuleRefinement rr;
    rr.target = 1;
    rr.action = RefineAction::Refit;
    rr.verdicts.push_back({1, 5, Verdict::Refuted, 20, 0});
    r.rules.push_back(rr);
    const std::string text = report_to_string(r);
    CHECK(text.find("\"refuted\"") != std::string::npos);
    CHECK(text.find("\"refit\"") != std::string::npos);
    CHECK(report_to_string(r) == text);
}

}  // TEST_SUITE
