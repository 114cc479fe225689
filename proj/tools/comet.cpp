// comet: extract, test and export causal world models of the bundled environments.
#include <cstdio>
#include <iostream>
#include <map>
#include <set>

#include "CLI11.hpp"
#include "comet/annotate.hpp"
#include "comet/intervene.hpp"
#include "comet/model_io.hpp"
#include "comet/pipeline.hpp"
#include "comet/trace.hpp"

using namespace comet;

namespace {

constexpr int kOk = 0, kFailure = 1, kUsage = 2;

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path);
    f << text;
}

std::string env_list() {
    std::string s;
    for (const auto& n : env_names()) s += (s.empty() ? "" : ", ") + n;
    return s;
}

void print_coverage(const CausalWorldModel& m) {
    std::printf("modeled cells: %zu\n", m.rules.size());
    for (const auto& [t, r] : m.rules)
        std::printf("  s%-3d %-13s acc %.4f  %s\n", t, status_name(r.status).c_str(), r.ruleset.accuracy(),
                    describe_rule(t, r.ruleset).substr(0, describe_rule(t, r.ruleset).find('\n')).c_str());
    for (int c : m.coverage.unexplained) std::printf("unexplained: s%d\n", c);
    for (const auto& u : m.coverage.unbound)
        std::printf("unbound: %s%s.%s\n", u.category.c_str(), u.instance ? std::to_string(u.instance).c_str() : "",
                    u.property.c_str());
}

struct Flags {
    std::string env, policy = "random", detector = "oracle", out, trace, model, mode = "heuristic", format = "json";
    std::string endpoint = LlmConfig{}.endpoint, llm_model = LlmConfig{}.model_name;
    int steps = 5000, trials = kMinTrials, max_cases = SearchConfig{}.max_cases;
    std::uint64_t seed = 0;
    double lambda = SearchConfig{}.lambda, theta = SearchConfig{}.theta;
};

int cmd_sample(const Flags& f) {
    if (!is_known_env(f.env)) {
        std::fprintf(stderr, "unknown env '%s' (known: %s)\n", f.env.c_str(), env_list().c_str());
        return kUsage;
    }
    auto env = make_env(f.env);
    const Detector det = f.detector == "blob" ? Detector::Blob : Detector::Oracle;
    auto policy = parse_policy(f.policy, f.seed, env->info().actions);
    const Trace tr = sample(*env, *policy, f.steps, f.seed, det);
    if (f.out.empty()) throw UsageError("--out is required");
    save_trace(tr, f.out);
    std::set<std::string> seen;
    for (const auto& t : tr.transitions)
        for (const auto& o : t.objects_before)
            if (o.visible) seen.insert(o.name());
    std::printf("wrote %zu steps of %s to %s; objects seen: %zu\n", tr.transitions.size(), tr.env.c_str(),
                f.out.c_str(), seen.size());
    return kOk;
}

int cmd_extract(const Flags& f) {
    const Trace tr = load_trace(f.trace);
    SearchConfig cfg;
    cfg.lambda = f.lambda;
    cfg.theta = f.theta;
    cfg.max_cases = f.max_cases;
    const CausalWorldModel m = extract_world_model(tr, cfg);
    if (f.out.empty()) throw UsageError("--out is required");
    save_model(m, f.out);
    print_coverage(m);
    for (const auto& b : m.bindings) {
        const auto it = m.rules.find(b.cell);
        if (it == m.rules.end() || it->second.status == RuleStatus::Unexplained) {
            std::fprintf(stderr, "bound property %s.%s has no rule chain\n", b.object_name().c_str(),
                         b.property.c_str());
            return kFailure;
        }
    }
    return kOk;
}

Trace validation_trace(const Flags& f, Env& env) {
    if (!f.trace.empty()) return load_trace(f.trace);
    auto policy = random_policy(f.seed + 1, env.info().actions);
    return sample(env, *policy, f.steps, f.seed + 1);
}

int cmd_refine(const Flags& f) {
    if (f.env.empty()) {
        std::fprintf(stderr, "refine needs --env: interventions require a live environment\n");
        return kUsage;
    }
    if (!is_known_env(f.env)) {
        std::fprintf(stderr, "unknown env '%s' (known: %s)\n", f.env.c_str(), env_list().c_str());
        return kUsage;
    }
    const CausalWorldModel m = load_model(f.model);
    auto env = make_env(f.env);
    const Trace tr = validation_trace(f, *env);
    RefineConfig cfg;
    cfg.trials = f.trials;
    cfg.seed = f.seed;
    cfg.search.lambda = f.lambda;
    cfg.search.theta = f.theta;
    cfg.search.max_cases = f.max_cases;
    auto [refined, report] = refine_model(env.get(), m, tr, cfg);
    if (f.out.empty()) throw UsageError("--out is required");
    save_model(refined, f.out);
    write_text(f.out + ".report.json", report_to_string(report));
    for (const auto& r : report.rules) {
        std::printf("s%-3d %-20s %-13s %.4f -> %.4f", r.target, action_name(r.action).c_str(),
                    status_name(r.status).c_str(), r.before, r.after);
        for (const auto& v : r.verdicts)
            std::printf("  s%d:%s(%d/%d)", v.candidate, verdict_name(v.verdict).c_str(), v.agreements, v.trials);
        std::printf("\n");
    }
    return kOk;
}

int cmd_annotate(const Flags& f) {
    CausalWorldModel m = load_model(f.model);
    if (f.mode == "heuristic") {
        merge_annotations(m, heuristic_annotate(m));
    } else if (f.mode == "llm") {
        LlmConfig cfg;
        cfg.endpoint = f.endpoint;
        cfg.model_name = f.llm_model;
        merge_annotations(m, llm_annotate(m, cfg));
    } else {
        std::fprintf(stderr, "unknown mode '%s' (heuristic, llm)\n", f.mode.c_str());
        return kUsage;
    }
    save_model(m, f.out.empty() ? f.model : f.out);
    for (const auto& [c, a] : m.annotations) std::printf("s%-3d %s\n", c, a.label.c_str());
    return kOk;
}

int cmd_eval(const Flags& f) {
    const CausalWorldModel m = load_model(f.model);
    const Trace tr = load_trace(f.trace);
    const auto acc = prediction_accuracy(m, tr);
    std::printf("modeled cells\n");
    for (const auto& [c, a] : acc)
        std::printf("  s%-3d %.4f  %s\n", c, a, status_name(m.rules.at(c).status).c_str());
    std::printf("unmodeled cells (held constant)\n");
    for (int c = 0; c < m.ram_size; ++c) {
        if (acc.count(c)) continue;
        std::size_t same = 0;
        for (const auto& t : tr.transitions) same += t.state_after[c] == t.state_before[c];
        std::printf("  s%-3d %.4f\n", c, tr.transitions.empty() ? 0.0 : static_cast<double>(same) / tr.transitions.size());
    }
    return kOk;
}

int cmd_export(const Flags& f) {
    if (f.format != "dot" && f.format != "json") {
        std::fprintf(stderr, "unknown format '%s' (dot, json)\n", f.format.c_str());
        return kUsage;
    }
    const CausalWorldModel m = load_model(f.model);
    write_text(f.out, f.format == "dot" ? model_to_dot(m) : model_to_string(m));
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Extract causal world models from the internal state of small games"};
    app.require_subcommand(1);
    Flags f;

    auto* sample_cmd = app.add_subcommand("sample", "Roll out a policy and record a trace");
    sample_cmd->add_option("--env", f.env, "Environment name")->required();
    sample_cmd->add_option("--steps", f.steps, "Number of transitions")->check(CLI::PositiveNumber);
    sample_cmd->add_option("--seed", f.seed, "Seed for resets and the policy");
    sample_cmd->add_option("--policy", f.policy, "random, scripted:<a,b,...> or replay:<trace>");
    sample_cmd->add_option("--detector", f.detector, "oracle or blob")->check(CLI::IsMember({"oracle", "blob"}));
    sample_cmd->add_option("--out", f.out, "Trace file")->required();

    auto* extract_cmd = app.add_subcommand("extract", "Extract a world model from a trace");
    extract_cmd->add_option("--trace", f.trace, "Trace file")->required();
    extract_cmd->add_option("--out", f.out, "Model file")->required();
    extract_cmd->add_option("--lambda", f.lambda, "Complexity weight");
    extract_cmd->add_option("--theta", f.theta, "Accuracy floor");
    extract_cmd->add_option("--max-cases", f.max_cases, "Cases per ruleset");

    auto* refine_cmd = app.add_subcommand("refine", "Test rule inputs by intervention and refit refuted rules");
    refine_cmd->add_option("--model", f.model, "Model file")->required();
    refine_cmd->add_option("--env", f.env, "Live environment to intervene on");
    refine_cmd->add_option("--trials", f.trials, "Paired trials per dependency")->check(CLI::PositiveNumber);
    refine_cmd->add_option("--seed", f.seed, "Seed for rollouts and nudges");
    refine_cmd->add_option("--trace", f.trace, "Validation trace (sampled from --env when omitted)");
    refine_cmd->add_option("--steps", f.steps, "Length of the sampled validation trace");
    refine_cmd->add_option("--lambda", f.lambda, "Complexity weight for refits");
    refine_cmd->add_option("--theta", f.theta, "Accuracy floor for refits");
    refine_cmd->add_option("--max-cases", f.max_cases, "Cases per ruleset for refits");
    refine_cmd->add_option("--out", f.out, "Refined model file")->required();

    auto* annotate_cmd = app.add_subcommand("annotate", "Label cells");
    annotate_cmd->add_option("--model", f.model, "Model file")->required();
    annotate_cmd->add_option("--mode", f.mode, "heuristic or llm");
    annotate_cmd->add_option("--endpoint", f.endpoint, "Chat-completion endpoint url");
    annotate_cmd->add_option("--llm-model", f.llm_model, "Model name sent to the endpoint");
    annotate_cmd->add_option("--out", f.out, "Annotated model file (defaults to --model)");

    auto* eval_cmd = app.add_subcommand("eval", "One-step prediction accuracy per cell");
    eval_cmd->add_option("--model", f.model, "Model file")->required();
    eval_cmd->add_option("--trace", f.trace, "Trace file")->required();

    auto* export_cmd = app.add_subcommand("export", "Write the model as dot or json");
    export_cmd->add_option("--model", f.model, "Model file")->required();
    export_cmd->add_option("--format", f.format, "dot or json");
    export_cmd->add_option("--out", f.out, "Output file (stdout when omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (*sample_cmd) return cmd_sample(f);
        if (*extract_cmd) return cmd_extract(f);
        if (*refine_cmd) return cmd_refine(f);
        if (*annotate_cmd) return cmd_annotate(f);
        if (*eval_cmd) return cmd_eval(f);
        if (*export_cmd) return cmd_export(f);
    } catch (const UsageError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kUsage;
    } catch (const UnknownEnv& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kUsage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kFailure;
    }
    return kUsage;
}
