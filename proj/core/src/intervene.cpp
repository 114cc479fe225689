#include "comet/intervene.hpp"

#include <algorithm>
#include <array>
#include <random>
#include <set>

#include "json.hpp"

namespace comet {

std::string verdict_name(Verdict v) {
    switch (v) {
        case Verdict::Confirmed: return "confirmed";
        case Verdict::Refuted: return "refuted";
        case Verdict::Inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

std::string action_name(RefineAction a) {
    switch (a) {
        case RefineAction::Kept: return "kept";
        case RefineAction::Refit: return "refit";
        case RefineAction::DemotedToConstant: return "demoted-to-constant";
    }
    return "kept";
}

namespace {

constexpr int kMaxRolloutSteps = 200000;
constexpr double kCollectProbability = 0.2;
constexpr std::array<int, 6> kDeltas = {1, -1, 2, -2, 4, -4};

Byte predict(const RuleSet& rs, const State& s, int action) { return eval_ruleset(rs, row_of(s, action)); }

// candidate values that move the prediction, in seeded order
std::vector<Byte> movers(const RuleSet& rs, State s, int cell, int action, std::mt19937_64& rng) {
    std::array<int, 6> deltas = kDeltas;
    std::shuffle(deltas.begin(), deltas.end(), rng);
    const Byte base = predict(rs, s, action);
    const Byte orig = s[cell];
    std::vector<Byte> out;
    for (int d : deltas) {
        s[cell] = static_cast<Byte>(orig + d);
        if (predict(rs, s, action) != base) out.push_back(s[cell]);
    }
    return out;
}

double rule_accuracy(const RuleSet& rs, const Trace& trace, int target) {
    if (trace.transitions.empty()) return 0.0;
    std::size_t ok = 0;
    for (const auto& tr : trace.transitions) ok += predict(rs, tr.state_before, tr.action) == tr.state_after[target];
    return static_cast<double>(ok) / trace.transitions.size();
}

bool never_changes(const Trace& trace, int target) {
    if (trace.transitions.empty()) return false;
    const Byte v = trace.transitions.front().state_before[target];
    for (const auto& tr : trace.transitions)
        if (tr.state_before[target] != v || tr.state_after[target] != v) return false;
    return true;
}

}  // namespace

DependencyVerdict test_dependency(Env* env, const CausalWorldModel& model, int target, int candidate, int trials,
                                  std::uint64_t seed, int min_trials, std::vector<Transition>* samples) {
    if (!env) throw EnvUnavailable("interventions need a live environment");
    const auto it = model.rules.find(target);
    if (it == model.rules.end()) throw UnmodeledCell("cell s" + std::to_string(target) + " has no rule");
    const RuleSet& rs = it->second.ruleset;
    if (!inputs_of(rs).cells.count(candidate))
        throw UsageError("cell s" + std::to_string(candidate) + " is not an input of the rule for s" +
                         std::to_string(target));
    if (env->info().ram_size != model.ram_size) throw UsageError("environment and model disagree on ram size");

    DependencyVerdict out{target, candidate, Verdict::Inconclusive, 0, 0};
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick_action(0, env->info().actions.size() - 1);
    std::bernoulli_distribution collect(kCollectProbability);
    std::uint64_t episode = 0;
    env->reset(seed);
    for (int step = 0; step < kMaxRolloutSteps && out.trials < trials; ++step) {
        const int a = env->info().actions[pick_action(rng)];
        const State s = env->state();
        if (collect(rng)) {
            const auto values = movers(rs, s, candidate, a, rng);
            if (!values.empty()) {
                const SnapshotToken token = env->snapshot();
                const State baseline_after = env->step(a).state_after;
                const Byte baseline = baseline_after[target];
                State moved = s;
                // the nudge must also predict something other than what happens untouched
                std::optional<Byte> chosen;
                for (Byte v : values) {
                    moved[candidate] = v;
                    if (predict(rs, moved, a) != baseline) {
                        chosen = v;
                        break;
                    }
                }
                env->restore(token);
                if (chosen) {
                    moved[candidate] = *chosen;
                    const Byte expected = predict(rs, moved, a);
                    env->set_cell(candidate, *chosen);
                    const State after = env->step(a).state_after;
                    ++out.trials;
                    out.agreements += after[target] == expected;
                    env->restore(token);
                    if (samples) {
                        samples->push_back(Transition{0, s, a, baseline_after, {}, 0, false});
                        samples->push_back(Transition{0, moved, a, after, {}, 0, false});
                    }
                }
            }
        }
        if (env->step(a).done) env->reset(seed + ++episode);
    }
    if (out.trials >= min_trials) {
        if (out.agreements == out.trials) out.verdict = Verdict::Confirmed;
        else if (out.agreements == 0) out.verdict = Verdict::Refuted;
    }
    return out;
}

namespace {

double accuracy_on(const RuleSet& rs, const std::vector<Transition>& rows, int target) {
    if (rows.empty()) return 1.0;
    std::size_t ok = 0;
    for (const auto& tr : rows) ok += predict(rs, tr.state_before, tr.action) == tr.state_after[target];
    return static_cast<double>(ok) / rows.size();
}

}  // namespace

std::pair<CausalWorldModel, RefinementReport> refine_model(Env* env, const CausalWorldModel& model, const Trace& trace,
                                                           const RefineConfig& cfg) {
    if (!env) throw EnvUnavailable("refinement needs a live environment");
    if (env->info().name != model.env)
        throw UsageError("environment " + env->info().name + " does not match model " + model.env);
    CausalWorldModel out = model;
    std::map<int, RuleRefinement> entries;
    std::map<int, std::set<int>> refuted_of;
    std::vector<Transition> interventional;
    std::set<int> before_cells;
    for (const auto& [t, r] : model.rules) {
        before_cells.insert(t);
        RuleRefinement rr;
        rr.target = t;
        rr.before = rule_accuracy(r.ruleset, trace, t);
        rr.status = r.status;
        entries[t] = rr;
    }

    std::set<int> to_test(before_cells);
    for (int round = 0; round < cfg.max_rounds && !to_test.empty(); ++round) {
        std::map<int, std::vector<DependencyVerdict>> verdicts;
        for (int t : to_test)
            for (int c : inputs_of(out.rules.at(t).ruleset).cells)
                verdicts[t].push_back(test_dependency(env, out, t, c, cfg.trials,
                                                      cfg.seed + 1000003ull * t + 7919ull * c + 104729ull * round,
                                                      cfg.min_trials, &interventional));

        // interventions break correlations the observational trace cannot, so refits see both
        Trace augmented = trace;
        augmented.transitions.insert(augmented.transitions.end(), interventional.begin(), interventional.end());

        std::set<int> next;
        for (int t : to_test) {
            UpdateRule& rule = out.rules.at(t);
            RuleRefinement& rr = entries[t];
            const auto& round_verdicts = verdicts[t];
            rr.verdicts.insert(rr.verdicts.end(), round_verdicts.begin(), round_verdicts.end());
            ++rr.rounds;
            const Inputs in = inputs_of(rule.ruleset);
            std::vector<int> refuted;
            bool all_confirmed = true;
            for (const auto& v : round_verdicts) {
                all_confirmed &= v.verdict == Verdict::Confirmed;
                if (v.verdict == Verdict::Refuted) refuted.push_back(v.candidate);
            }
            refuted_of[t].insert(refuted.begin(), refuted.end());
            const double seen = accuracy_on(rule.ruleset, interventional, t);

            if (!refuted.empty() && in.cells.size() == 1 && refuted.size() == 1 && never_changes(trace, t)) {
                rule.ruleset = score_ruleset(RuleSet{{}, Const(trace.transitions.front().state_before[t]), 0, 0},
                                             columns(trace, t));
                rule.status = RuleStatus::RefutedRefit;
                rr.action = RefineAction::DemotedToConstant;
            } else if (!refuted.empty() || seen < 1.0 || rule_accuracy(rule.ruleset, trace, t) < 1.0) {
                const double acc = rule_accuracy(rule.ruleset, trace, t);
                auto improves = [&](const UpdateRule& refit, bool dropped_inputs) {
                    if (refit.status == RuleStatus::Unexplained) return false;
                    const double refit_acc = rule_accuracy(refit.ruleset, trace, t);
                    return refit_acc >= acc && (dropped_inputs || refit_acc > acc ||
                                                accuracy_on(refit.ruleset, interventional, t) > seen);
                };
                // with the env at hand, refits aim for an exact rule rather than the theta floor
                SearchConfig sc = cfg.search;
                sc.complete = true;
                const SearchConfig open = sc;
                sc.excluded.insert(sc.excluded.end(), refuted_of[t].begin(), refuted_of[t].end());
                UpdateRule refit = find_hidden_state(augmented, t, sc);
                bool better = improves(refit, !refuted.empty());
                if (!better && !refuted.empty()) {
                    // a refuted input may still matter through a different case; refit without excluding it
                    refit = find_hidden_state(augmented, t, open);
                    better = improves(refit, false);
                    if (better) refuted_of[t].clear();
                }
                if (better) {
                    rule.ruleset = score_ruleset(refit.ruleset, columns(trace, t));
                    rule.status = refuted_of[t].empty() ? RuleStatus::Regressed : RuleStatus::RefutedRefit;
                    rr.action = RefineAction::Refit;
                    next.insert(t);
                } else if (!refuted.empty()) {
                    rule.status = RuleStatus::Unexplained;
                } else if (all_confirmed && rule.status == RuleStatus::Regressed) {
                    rule.status = RuleStatus::Verified;
                }
            } else if (all_confirmed && rule.status == RuleStatus::Regressed) {
                rule.status = RuleStatus::Verified;
            }
            rule.inputs = inputs_of(rule.ruleset);
            rr.status = rule.status;
        }

        const std::set<int> known = [&] {
            std::set<int> k;
            for (const auto& [c, r] : out.rules) k.insert(c);
            return k;
        }();
        close_worklist(out, trace, cfg.search);
        for (const auto& [c, r] : out.rules)
            if (!known.count(c)) {
                RuleRefinement rr;
                rr.target = c;
                rr.before = rule_accuracy(r.ruleset, trace, c);
                rr.status = r.status;
                entries[c] = rr;
                next.insert(c);
            }
        to_test = std::move(next);
    }

    RefinementReport report;
    for (auto& [t, rr] : entries) {
        rr.after = rule_accuracy(out.rules.at(t).ruleset, trace, t);
        rr.status = out.rules.at(t).status;
        report.rules.push_back(rr);
        if (!before_cells.count(t)) report.added_cells.push_back(t);
    }
    report.interventional_rows = static_cast<int>(interventional.size());
    out.refresh();
    return {std::move(out), std::move(report)};
}

std::string report_to_string(const RefinementReport& report) {
    using json = nlohmann::ordered_json;
    json rules = json::array();
    for (const auto& r : report.rules) {
        json verdicts = json::array();
        for (const auto& v : r.verdicts)
            verdicts.push_back({{"candidate", v.candidate},
                                {"verdict", verdict_name(v.verdict)},
                                {"trials", v.trials},
                                {"agreements", v.agreements}});
        rules.push_back({{"target", r.target},
                         {"action", action_name(r.action)},
                         {"status", status_name(r.status)},
                         {"before", r.before},
                         {"after", r.after},
                         {"rounds", r.rounds},
                         {"verdicts", verdicts}});
    }
    json doc{{"format", "comet-refinement"}, {"version", 1}, {"rules", rules}, {"added_cells", report.added_cells},
              {"interventional_rows", report.interventional_rows}};
    return doc.dump(2) + "\n";
}

}  // namespace comet
