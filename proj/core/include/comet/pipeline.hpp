#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "comet/expr.hpp"
#include "comet/symreg.hpp"
#include "comet/trace.hpp"

namespace comet {

struct PropertyBinding {
    std::string category;
    int instance = 0;
    std::string property;  // x, y, w, h or value
    int cell = 0;
    int scale = 1;
    int offset = 0;
    bool exact = true;
    std::vector<int> alternates;

    std::string object_name() const;
    bool operator==(const PropertyBinding&) const = default;
};

struct ConstantProperty {
    std::string category;
    int instance = 0;
    std::string property;
    int value = 0;

    bool operator==(const ConstantProperty&) const = default;
};

struct UnboundProperty {
    std::string category;
    int instance = 0;
    std::string property;

    bool operator==(const UnboundProperty&) const = default;
};

enum class RuleStatus { Regressed, Verified, RefutedRefit, Unexplained };
std::string status_name(RuleStatus s);
RuleStatus parse_status(const std::string& s);

struct UpdateRule {
    int target = 0;
    RuleSet ruleset;
    RuleStatus status = RuleStatus::Regressed;
    Inputs inputs;
};

struct Edge {
    bool from_action = false;
    int source = 0;  // cell index or action id
    int target = 0;

    auto operator<=>(const Edge&) const = default;
};

enum class AnnotationSource { Heuristic, Llm };
enum class Confidence { High, Low };

struct Annotation {
    int cell = 0;
    std::string label;
    AnnotationSource source = AnnotationSource::Heuristic;
    Confidence confidence = Confidence::High;

    bool operator==(const Annotation&) const = default;
};

struct CoverageReport {
    std::vector<int> unexplained;             // cells whose rule missed the acceptance floor
    std::vector<UnboundProperty> unbound;     // varying properties no cell explains
};

struct CausalWorldModel {
    std::string env;
    int ram_size = 0;
    std::vector<PropertyBinding> bindings;
    std::vector<ConstantProperty> constants;
    std::map<int, UpdateRule> rules;
    std::vector<Edge> edges;
    std::map<int, Annotation> annotations;
    CoverageReport coverage;

    // recompute edges and rule inputs from the rulesets
    void refresh();
    std::vector<Edge> derived_edges() const;
    const PropertyBinding* binding_for(int cell) const;
};

struct RelevantEis {
    std::vector<PropertyBinding> bindings;
    std::vector<ConstantProperty> constants;
    std::vector<UnboundProperty> unbound;
};

// max_mismatch is the tolerated fraction of frames off the affine fit; 0 demands exactness.
RelevantEis find_relevant_eis(const Trace& trace, double max_mismatch = 0.0);

UpdateRule find_hidden_state(const Trace& trace, int target, const SearchConfig& cfg);

struct ExtractStats {
    int find_hidden_state_calls = 0;
};

CausalWorldModel extract_world_model(const Trace& trace, const SearchConfig& cfg, ExtractStats* stats = nullptr);

// Fits rules for every cell read by a rule but not yet modeled; returns the number of fits.
int close_worklist(CausalWorldModel& model, const Trace& trace, const SearchConfig& cfg);

std::vector<State> simulate(const CausalWorldModel& model, const State& initial, const std::vector<int>& actions);

std::map<int, double> prediction_accuracy(const CausalWorldModel& model, const Trace& trace);

}  // namespace comet
