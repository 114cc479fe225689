#include "comet/trace.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "comet/detect.hpp"
#include "comet/errors.hpp"

namespace comet {

using nlohmann::json;

namespace {

class RandomPolicy : public Policy {
public:
    RandomPolicy(std::uint64_t seed, std::vector<int> actions) : rng_(seed), actions_(std::move(actions)) {}
    int act(const State&, int) override { return actions_[rng_() % actions_.size()]; }
    std::string describe() const override { return "random"; }

private:
    std::mt19937_64 rng_;
    std::vector<int> actions_;
};

class ScriptedPolicy : public Policy {
public:
    explicit ScriptedPolicy(std::vector<int> script) : script_(std::move(script)) {
        if (script_.empty()) throw UsageError("scripted policy needs at least one action");
    }
    int act(const State&, int t) override { return script_[static_cast<std::size_t>(t) % script_.size()]; }
    std::string describe() const override {
        std::string s = "scripted:";
        for (std::size_t i = 0; i < script_.size(); ++i) s += (i ? "," : "") + std::to_string(script_[i]);
        return s;
    }

private:
    std::vector<int> script_;
};

class ReplayPolicy : public Policy {
public:
    explicit ReplayPolicy(std::vector<int> actions) : actions_(std::move(actions)) {
        if (actions_.empty()) throw UsageError("replay policy needs a non-empty trace");
    }
    int act(const State&, int t) override {
        if (t < 0 || static_cast<std::size_t>(t) >= actions_.size())
            throw UsageError("replay policy ran past the end of its trace");
        return actions_[t];
    }
    std::string describe() const override { return "replay"; }

private:
    std::vector<int> actions_;
};

std::vector<ObjectState> detect_objects(const Env& env, const State& s, Detector d) {
    std::vector<ObjectState> objs;
    if (d == Detector::Oracle) {
        for (auto& o : env.oracle_objects(s))
            if (o.visible) objs.push_back(o);
    } else {
        objs = detect(env.render(s), env.info().palette);
    }
    return complete_roster(env.info(), objs);
}

json object_json(const ObjectState& o) {
    json j = {{"category", o.category}, {"instance", o.instance}, {"x", o.x}, {"y", o.y},
              {"w", o.w}, {"h", o.h}, {"visible", o.visible}};
    j["value"] = o.value ? json(*o.value) : json(nullptr);
    return j;
}

json state_json(const State& s) {
    json a = json::array();
    for (Byte b : s) a.push_back(static_cast<int>(b));
    return a;
}

State parse_state(const json& j, int ram_size, int line, const char* what) {
    if (!j.is_array() || static_cast<int>(j.size()) != ram_size)
        throw FormatError(std::string(what) + " must be an array of " + std::to_string(ram_size) + " integers", line);
    State s;
    s.reserve(ram_size);
    for (const auto& v : j) {
        if (!v.is_number_integer() || v.get<int>() < 0 || v.get<int>() > 255)
            throw FormatError(std::string(what) + " holds a non-byte value", line);
        s.push_back(static_cast<Byte>(v.get<int>()));
    }
    return s;
}

template <class T>
T field(const json& j, const char* key, int line) {
    if (!j.contains(key)) throw FormatError(std::string("missing field '") + key + "'", line);
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw FormatError(std::string("bad type for field '") + key + "'", line);
    }
}

ObjectState parse_object(const json& j, int line) {
    if (!j.is_object()) throw FormatError("object entry must be a record", line);
    ObjectState o;
    o.category = field<std::string>(j, "category", line);
    o.instance = field<int>(j, "instance", line);
    o.x = field<int>(j, "x", line);
    o.y = field<int>(j, "y", line);
    o.w = field<int>(j, "w", line);
    o.h = field<int>(j, "h", line);
    o.visible = field<bool>(j, "visible", line);
    if (j.contains("value") && !j["value"].is_null()) o.value = field<int>(j, "value", line);
    return o;
}

}  // namespace

std::unique_ptr<Policy> random_policy(std::uint64_t seed, std::vector<int> actions) {
    return std::make_unique<RandomPolicy>(seed, std::move(actions));
}

std::unique_ptr<Policy> scripted_policy(std::vector<int> script) {
    return std::make_unique<ScriptedPolicy>(std::move(script));
}

std::unique_ptr<Policy> replay_policy(const Trace& trace) {
    std::vector<int> acts;
    for (const auto& tr : trace.transitions) acts.push_back(tr.action);
    return std::make_unique<ReplayPolicy>(std::move(acts));
}

std::unique_ptr<Policy> parse_policy(const std::string& text, std::uint64_t seed,
                                     const std::vector<int>& actions) {
    if (text == "random") return random_policy(seed, actions);
    if (text.rfind("scripted:", 0) == 0) {
        std::vector<int> script;
        std::stringstream ss(text.substr(9));
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            std::size_t used = 0;
            int a = 0;
            try {
                a = std::stoi(tok, &used);
            } catch (const std::exception&) {
                throw UsageError("bad action '" + tok + "' in policy script");
            }
            if (used != tok.size() || std::find(actions.begin(), actions.end(), a) == actions.end())
                throw UsageError("bad action '" + tok + "' in policy script");
            script.push_back(a);
        }
        return scripted_policy(std::move(script));
    }
    if (text.rfind("replay:", 0) == 0) return replay_policy(load_trace(text.substr(7)));
    throw UsageError("unknown policy '" + text + "' (random, scripted:<a,b,...>, replay:<path>)");
}

Trace sample(Env& env, Policy& policy, int n_steps, std::uint64_t seed, Detector detector) {
    if (n_steps < 1) throw UsageError("n_steps must be at least 1");
    Trace tr;
    tr.env = env.info().name;
    tr.ram_size = env.info().ram_size;
    tr.actions = env.info().actions;
    tr.seed = seed;
    tr.policy = policy.describe();
    tr.transitions.reserve(n_steps);
    std::uint64_t episode = 0;
    env.reset(seed);
    for (int t = 0; t < n_steps; ++t) {
        Transition x;
        x.t = t;
        x.state_before = env.state();
        x.objects_before = detect_objects(env, x.state_before, detector);
        x.action = policy.act(x.state_before, t);
        StepRecord rec = env.step(x.action);
        x.state_after = rec.state_after;
        x.reward = rec.reward;
        x.done = rec.done;
        tr.transitions.push_back(std::move(x));
        if (rec.done) env.reset(seed + ++episode);
    }
    return tr;
}

std::string trace_to_string(const Trace& trace) {
    std::string out;
    json header = {{"format", "comet-trace"}, {"version", kTraceFormatVersion}, {"env", trace.env},
                   {"ram_size", trace.ram_size}, {"actions", trace.actions}, {"seed", trace.seed},
                   {"policy", trace.policy}, {"steps", trace.transitions.size()}};
    out += header.dump() + "\n";
    const auto& ts = trace.transitions;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const Transition& x = ts[i];
        json j = {{"t", x.t}, {"action", x.action}, {"reward", x.reward}, {"done", x.done},
                  {"state", state_json(x.state_before)}};
        json objs = json::array();
        for (const auto& o : x.objects_before) objs.push_back(object_json(o));
        j["objects"] = objs;
        if (i + 1 == ts.size() || ts[i + 1].state_before != x.state_after) j["after"] = state_json(x.state_after);
        out += j.dump() + "\n";
    }
    return out;
}

Trace trace_from_string(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    auto parse_line = [&](const std::string& s) {
        try {
            return json::parse(s);
        } catch (const json::exception& e) {
            throw FormatError(std::string("malformed record: ") + e.what(), lineno);
        }
    };
    if (!std::getline(in, line)) throw FormatError("missing header", 1);
    ++lineno;
    json h = parse_line(line);
    if (!h.is_object()) throw FormatError("header must be a record", lineno);
    if (!h.contains("version")) throw FormatError("header lacks a format version", lineno);
    if (field<int>(h, "version", lineno) != kTraceFormatVersion)
        throw FormatError("unsupported trace format version", lineno);
    Trace tr;
    tr.env = field<std::string>(h, "env", lineno);
    tr.ram_size = field<int>(h, "ram_size", lineno);
    tr.actions = field<std::vector<int>>(h, "actions", lineno);
    tr.seed = field<std::uint64_t>(h, "seed", lineno);
    tr.policy = field<std::string>(h, "policy", lineno);
    const long long steps = h.contains("steps") ? field<long long>(h, "steps", lineno) : -1;
    tr.unknown_env = !is_known_env(tr.env);
    if (tr.ram_size <= 0) throw FormatError("ram_size must be positive", lineno);

    std::vector<bool> has_after;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j = parse_line(line);
        if (!j.is_object()) throw FormatError("step record must be a record", lineno);
        Transition x;
        x.t = field<int>(j, "t", lineno);
        if (x.t != static_cast<int>(tr.transitions.size())) throw FormatError("step index out of sequence", lineno);
        x.action = field<int>(j, "action", lineno);
        if (std::find(tr.actions.begin(), tr.actions.end(), x.action) == tr.actions.end())
            throw FormatError("action outside the declared action set", lineno);
        x.reward = field<int>(j, "reward", lineno);
        x.done = field<bool>(j, "done", lineno);
        if (!j.contains("state")) throw FormatError("missing field 'state'", lineno);
        x.state_before = parse_state(j["state"], tr.ram_size, lineno, "state");
        if (!j.contains("objects") || !j["objects"].is_array()) throw FormatError("missing objects list", lineno);
        for (const auto& o : j["objects"]) x.objects_before.push_back(parse_object(o, lineno));
        const bool after = j.contains("after");
        if (after) x.state_after = parse_state(j["after"], tr.ram_size, lineno, "after");
        if (!tr.transitions.empty() && !has_after.back())
            tr.transitions.back().state_after = x.state_before;
        has_after.push_back(after);
        tr.transitions.push_back(std::move(x));
    }
    if (tr.transitions.empty()) throw FormatError("trace has no steps", lineno + 1);
    if (!has_after.back()) throw FormatError("final step lacks its terminal state (truncated file?)", lineno);
    if (steps >= 0 && steps != static_cast<long long>(tr.transitions.size()))
        throw FormatError("header declares " + std::to_string(steps) + " steps but file holds " +
                              std::to_string(tr.transitions.size()),
                          lineno + 1);
    return tr;
}

void save_trace(const Trace& trace, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path);
    f << trace_to_string(trace);
    if (!f) throw Error("write failed for " + path);
}

Trace load_trace(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot read " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return trace_from_string(ss.str());
}

Rows Rows::subset(const std::vector<std::size_t>& idx) const {
    Rows r;
    r.target = target;
    r.n_cells = n_cells;
    r.actions = actions;
    r.cells.assign(n_cells, {});
    for (int k = 0; k < n_cells; ++k) {
        r.cells[k].reserve(idx.size());
        for (auto i : idx) r.cells[k].push_back(cells[k][i]);
    }
    for (auto i : idx) {
        r.action.push_back(action[i]);
        r.label.push_back(label[i]);
    }
    return r;
}

Rows Rows::with_target(int t, const std::vector<Byte>& labels) const {
    Rows r = *this;
    r.target = t;
    r.label = labels;
    return r;
}

Rows columns(const Trace& trace, int target) {
    if (target < 0 || target >= trace.ram_size)
        throw IndexOutOfRange("target cell " + std::to_string(target) + " outside ram of size " +
                              std::to_string(trace.ram_size));
    Rows r;
    r.target = target;
    r.n_cells = trace.ram_size;
    r.actions = trace.actions;
    const std::size_t n = trace.transitions.size();
    r.cells.assign(trace.ram_size, std::vector<Byte>(n));
    r.action.resize(n);
    r.label.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Transition& x = trace.transitions[i];
        for (int k = 0; k < trace.ram_size; ++k) r.cells[k][i] = x.state_before[k];
        r.action[i] = static_cast<Byte>(x.action);
        r.label[i] = x.state_after[target];
    }
    return r;
}

}  // namespace comet
