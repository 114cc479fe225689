#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "comet/env.hpp"
#include "comet/pipeline.hpp"

namespace comet {

enum class Verdict { Confirmed, Refuted, Inconclusive };
std::string verdict_name(Verdict v);

struct DependencyVerdict {
    int target = 0;
    int candidate = 0;
    Verdict verdict = Verdict::Inconclusive;
    int trials = 0;
    int agreements = 0;
};

inline constexpr int kMinTrials = 20;

// Paired trials on a live environment: each trial branches one state into a baseline step
// and a step after nudging the candidate cell to a value that moves the rule's prediction.
// Both branches of every trial are appended to `samples` when given.
DependencyVerdict test_dependency(Env* env, const CausalWorldModel& model, int target, int candidate, int trials,
                                  std::uint64_t seed, int min_trials = kMinTrials,
                                  std::vector<Transition>* samples = nullptr);

enum class RefineAction { Kept, Refit, DemotedToConstant };
std::string action_name(RefineAction a);

struct RuleRefinement {
    int target = 0;
    int rounds = 0;  // rounds in which the rule was tested
    std::vector<DependencyVerdict> verdicts;  // every round, in order
    RefineAction action = RefineAction::Kept;
    double before = 0.0;
    double after = 0.0;
    RuleStatus status = RuleStatus::Regressed;
};

struct RefinementReport {
    std::vector<RuleRefinement> rules;
    std::vector<int> added_cells;  // cells modeled by the closure after refits
    int interventional_rows = 0;
};

struct RefineConfig {
    int trials = kMinTrials;
    int min_trials = kMinTrials;
    std::uint64_t seed = 0;
    int max_rounds = 3;
    SearchConfig search;
};

std::pair<CausalWorldModel, RefinementReport> refine_model(Env* env, const CausalWorldModel& model, const Trace& trace,
                                                           const RefineConfig& cfg);

std::string report_to_string(const RefinementReport& report);

}  // namespace comet
