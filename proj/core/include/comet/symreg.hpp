#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "comet/errors.hpp"
#include "comet/expr.hpp"
#include "comet/trace.hpp"

namespace comet {

struct SearchConfig {
    int max_expr_size = 7;
    int top_k_vars = 8;
    double lambda = 0.01;
    double theta = 0.98;
    int max_cases = 3;
    // Const leaves range over [-const_range, const_range] when fit_offsets is off;
    // with fit_offsets on, additive constants are solved from the residuals instead.
    int const_range = 32;
    bool fit_offsets = true;
    std::vector<int> excluded;  // cells removed from every candidate pool
    int conjunction_width = 24;
    // Keep appending zero-misfire exceptions after theta is reached (used when refining).
    bool complete = false;
};

struct Candidate {
    ExprPtr expr;
    int correct = 0;
    int rows = 0;
    int complexity = 0;

    double accuracy() const { return rows ? static_cast<double>(correct) / rows : 0.0; }
};

// Variables considered by search_equations, in ascending index order.
std::vector<int> prefilter_vars(const Rows& rows, const SearchConfig& cfg);

// Pareto front over (1 - accuracy, complexity), sorted by ascending complexity.
std::vector<Candidate> search_equations(const Rows& rows, const SearchConfig& cfg);

// Neutral rows are neither rewarded nor penalized but count toward how often a predicate fires.
enum class Label : std::int8_t { Ignore = -1, Negative = 0, Positive = 1, Neutral = 2 };

struct PredicateFit {
    PredPtr pred;
    int tp = 0, fp = 0, fn = 0;
    int fires = 0;  // non-ignored rows the predicate holds on
    double precision() const { return tp + fp ? static_cast<double>(tp) / (tp + fp) : 0.0; }
    double recall() const { return tp + fn ? static_cast<double>(tp) / (tp + fn) : 0.0; }
    double f1() const { return tp ? 2.0 * tp / (2.0 * tp + fp + fn) : 0.0; }
};

// Best literal or 2-conjunction by F1; ties by lower complexity, then structural order.
// With require_clean only predicates firing on no negative row are eligible, and
// max_fires (when non-negative) caps the rows they may fire on.
PredicateFit search_predicate(const Rows& rows, const std::vector<Label>& labels, const SearchConfig& cfg,
                              bool require_clean = false, int max_fires = -1);
PredicateFit search_predicate(const Rows& rows, const std::vector<bool>& positives, const SearchConfig& cfg);

class NoRuleFound : public Error {
public:
    NoRuleFound(const std::string& msg, RuleSet best) : Error(msg), best_(std::move(best)) {}
    const RuleSet& best() const { return best_; }

private:
    RuleSet best_;
};

RuleSet fit_ruleset(const Rows& rows, const SearchConfig& cfg);

// Recounts correct predictions of a ruleset on rows.
RuleSet score_ruleset(RuleSet rs, const Rows& rows);

struct AffineFit {
    int scale = 1;
    int offset = 0;
    bool exact = false;
    int mismatches = 0;
};

// ys ~ scale * xs + offset with scale in {-2,-1,1,2}; none if no fit reaches theta.
std::optional<AffineFit> fit_affine(const std::vector<int>& xs, const std::vector<int>& ys, double theta = 0.98);

}  // namespace comet
