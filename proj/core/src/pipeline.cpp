#include "comet/pipeline.hpp"

#include <algorithm>
#include <future>
#include <set>
#include <thread>

namespace comet {

std::string PropertyBinding::object_name() const {
    return instance ? category + std::to_string(instance) : category;
}

std::string status_name(RuleStatus s) {
    switch (s) {
        case RuleStatus::Regressed: return "regressed";
        case RuleStatus::Verified: return "verified";
        case RuleStatus::RefutedRefit: return "refuted-refit";
        case RuleStatus::Unexplained: return "unexplained";
    }
    return "regressed";
}

RuleStatus parse_status(const std::string& s) {
    if (s == "regressed") return RuleStatus::Regressed;
    if (s == "verified") return RuleStatus::Verified;
    if (s == "refuted-refit") return RuleStatus::RefutedRefit;
    if (s == "unexplained") return RuleStatus::Unexplained;
    throw ParseError("unknown rule status '" + s + "'");
}

std::vector<Edge> CausalWorldModel::derived_edges() const {
    std::vector<Edge> out;
    for (const auto& [t, rule] : rules) {
        const Inputs in = inputs_of(rule.ruleset);
        for (int a : in.actions) out.push_back(Edge{true, a, t});
        for (int c : in.cells) out.push_back(Edge{false, c, t});
    }
    std::sort(out.begin(), out.end());
    return out;
}

void CausalWorldModel::refresh() {
    for (auto& [t, rule] : rules) rule.inputs = inputs_of(rule.ruleset);
    edges = derived_edges();
    coverage.unexplained.clear();
    for (const auto& [t, rule] : rules)
        if (rule.status == RuleStatus::Unexplained) coverage.unexplained.push_back(t);
}

const PropertyBinding* CausalWorldModel::binding_for(int cell) const {
    for (const auto& b : bindings)
        if (b.cell == cell) return &b;
    return nullptr;
}

namespace {

struct Series {
    std::string category;
    int instance = 0;
    std::string property;
    std::vector<std::size_t> frames;
    std::vector<int> values;
};

int property_of(const ObjectState& o, const std::string& p) {
    if (p == "x") return o.x;
    if (p == "y") return o.y;
    if (p == "w") return o.w;
    if (p == "h") return o.h;
    return o.value.value_or(0);
}

std::vector<Series> collect_series(const Trace& trace) {
    std::vector<Series> out;
    std::map<std::pair<std::string, int>, std::size_t> first;  // object -> index of its first series
    for (std::size_t f = 0; f < trace.transitions.size(); ++f) {
        for (const auto& o : trace.transitions[f].objects_before) {
            const auto key = std::make_pair(o.category, o.instance);
            auto it = first.find(key);
            if (it == first.end()) {
                it = first.emplace(key, out.size()).first;
                // a value object's box only restates its value
                const std::vector<std::string> props =
                    o.value ? std::vector<std::string>{"value"} : std::vector<std::string>{"x", "y", "w", "h"};
                for (const auto& p : props) out.push_back(Series{o.category, o.instance, p, {}, {}});
            }
            if (!o.visible) continue;
            for (std::size_t s = it->second; s < out.size() && out[s].category == o.category &&
                                             out[s].instance == o.instance;
                 ++s) {
                if (out[s].property == "value" && !o.value) continue;
                out[s].frames.push_back(f);
                out[s].values.push_back(property_of(o, out[s].property));
            }
        }
    }
    return out;
}

}  // namespace

RelevantEis find_relevant_eis(const Trace& trace, double max_mismatch) {
    RelevantEis out;
    for (const auto& s : collect_series(trace)) {
        if (s.values.empty()) {
            out.unbound.push_back(UnboundProperty{s.category, s.instance, s.property});
            continue;
        }
        if (std::all_of(s.values.begin(), s.values.end(), [&](int v) { return v == s.values.front(); })) {
            out.constants.push_back(ConstantProperty{s.category, s.instance, s.property, s.values.front()});
            continue;
        }
        std::optional<PropertyBinding> best;
        int best_miss = 0;
        std::vector<int> xs(s.frames.size());
        for (int k = 0; k < trace.ram_size; ++k) {
            for (std::size_t i = 0; i < s.frames.size(); ++i) xs[i] = trace.transitions[s.frames[i]].state_before[k];
            if (xs.size() < 2) break;
            std::optional<AffineFit> fit;
            try {
                fit = fit_affine(xs, s.values, 1.0 - max_mismatch);
            } catch (const DegenerateSeries&) {
                continue;
            }
            if (!fit) continue;
            if (best && fit->mismatches == best_miss) {
                best->alternates.push_back(k);
            } else if (!best || fit->mismatches < best_miss) {
                best = PropertyBinding{s.category, s.instance, s.property, k, fit->scale, fit->offset, fit->exact, {}};
                best_miss = fit->mismatches;
            }
        }
        if (best) out.bindings.push_back(*best);
        else out.unbound.push_back(UnboundProperty{s.category, s.instance, s.property});
    }
    return out;
}

UpdateRule find_hidden_state(const Trace& trace, int target, const SearchConfig& cfg) {
    if (target < 0 || target >= trace.ram_size)
        throw IndexOutOfRange("cell " + std::to_string(target) + " outside ram of size " + std::to_string(trace.ram_size));
    UpdateRule rule;
    rule.target = target;
    try {
        rule.ruleset = fit_ruleset(columns(trace, target), cfg);
        rule.status = RuleStatus::Regressed;
    } catch (const NoRuleFound& e) {
        rule.ruleset = e.best();
        rule.status = RuleStatus::Unexplained;
    }
    rule.inputs = inputs_of(rule.ruleset);
    return rule;
}

namespace {

// Fits one wave of independent targets concurrently; results come back in target order.
std::vector<UpdateRule> fit_wave(const Trace& trace, const std::vector<int>& targets, const SearchConfig& cfg) {
    std::vector<UpdateRule> out(targets.size());
    const std::size_t workers = std::max(1u, std::min(8u, std::thread::hardware_concurrency()));
    std::size_t next = 0;
    while (next < targets.size()) {
        std::vector<std::future<UpdateRule>> batch;
        const std::size_t start = next;
        for (; next < targets.size() && batch.size() < workers; ++next)
            batch.push_back(std::async(std::launch::async, [&, t = targets[next]] { return find_hidden_state(trace, t, cfg); }));
        for (std::size_t i = 0; i < batch.size(); ++i) out[start + i] = batch[i].get();
    }
    return out;
}

}  // namespace

int close_worklist(CausalWorldModel& model, const Trace& trace, const SearchConfig& cfg) {
    int fits = 0;
    std::set<int> pending;
    for (const auto& [t, rule] : model.rules)
        for (int c : inputs_of(rule.ruleset).cells)
            if (!model.rules.count(c)) pending.insert(c);
    while (!pending.empty()) {
        const std::vector<int> wave(pending.begin(), pending.end());
        pending.clear();
        const auto fitted = fit_wave(trace, wave, cfg);
        fits += static_cast<int>(fitted.size());
        for (const auto& rule : fitted) model.rules[rule.target] = rule;
        for (const auto& rule : fitted)
            for (int c : rule.inputs.cells)
                if (!model.rules.count(c)) pending.insert(c);
    }
    model.refresh();
    return fits;
}

CausalWorldModel extract_world_model(const Trace& trace, const SearchConfig& cfg, ExtractStats* stats) {
    CausalWorldModel model;
    model.env = trace.env;
    model.ram_size = trace.ram_size;
    if (trace.transitions.empty()) throw UsageError("cannot extract a world model from an empty trace");

    RelevantEis eis = find_relevant_eis(trace);
    model.bindings = std::move(eis.bindings);
    model.constants = std::move(eis.constants);
    model.coverage.unbound = std::move(eis.unbound);

    std::set<int> bound;
    for (const auto& b : model.bindings) bound.insert(b.cell);
    const auto fitted = fit_wave(trace, std::vector<int>(bound.begin(), bound.end()), cfg);
    for (const auto& rule : fitted) model.rules[rule.target] = rule;
    const int more = close_worklist(model, trace, cfg);
    if (stats) stats->find_hidden_state_calls = static_cast<int>(fitted.size()) + more;
    return model;
}

std::vector<State> simulate(const CausalWorldModel& model, const State& initial, const std::vector<int>& actions) {
    if (static_cast<int>(initial.size()) != model.ram_size)
        throw UsageError("initial state has " + std::to_string(initial.size()) + " cells, model expects " +
                         std::to_string(model.ram_size));
    for (const auto& [t, rule] : model.rules)
        for (int c : inputs_of(rule.ruleset).cells)
            if (!model.rules.count(c))
                throw MissingRule("cell s" + std::to_string(c) + " is read by the rule for s" + std::to_string(t) +
                                  " but has no rule");
    std::vector<State> out{initial};
    out.reserve(actions.size() + 1);
    for (int a : actions) {
        const State& cur = out.back();
        State next = cur;
        const RowView row = row_of(cur, a);
        for (const auto& [t, rule] : model.rules) next[t] = eval_ruleset(rule.ruleset, row);
        out.push_back(std::move(next));
    }
    return out;
}

std::map<int, double> prediction_accuracy(const CausalWorldModel& model, const Trace& trace) {
    if (trace.ram_size != model.ram_size) throw UsageError("trace and model disagree on ram size");
    std::map<int, double> out;
    if (trace.transitions.empty()) return out;
    for (const auto& [t, rule] : model.rules) {
        std::size_t ok = 0;
        for (const auto& tr : trace.transitions)
            ok += eval_ruleset(rule.ruleset, row_of(tr.state_before, tr.action)) == tr.state_after[t];
        out[t] = static_cast<double>(ok) / trace.transitions.size();
    }
    return out;
}

}  // namespace comet
