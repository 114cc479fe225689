#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "comet/env.hpp"

namespace comet {

struct Transition {
    int t = 0;
    State state_before;
    int action = 0;
    State state_after;
    std::vector<ObjectState> objects_before;
    int reward = 0;
    bool done = false;

    bool operator==(const Transition&) const = default;
};

struct Trace {
    std::string env;
    int ram_size = 32;
    std::vector<int> actions;
    std::uint64_t seed = 0;
    std::string policy;
    std::vector<Transition> transitions;
    bool unknown_env = false;  // set by load when the header names no bundled environment

    bool operator==(const Trace& o) const {
        return env == o.env && ram_size == o.ram_size && actions == o.actions && seed == o.seed &&
               policy == o.policy && transitions == o.transitions;
    }
};

class Policy {
public:
    virtual ~Policy() = default;
    virtual int act(const State& s, int t) = 0;
    virtual std::string describe() const = 0;
};

std::unique_ptr<Policy> random_policy(std::uint64_t seed, std::vector<int> actions);
std::unique_ptr<Policy> scripted_policy(std::vector<int> script);
std::unique_ptr<Policy> replay_policy(const Trace& trace);
// "random", "scripted:1,1,0,2" or "replay:<trace path>"
std::unique_ptr<Policy> parse_policy(const std::string& text, std::uint64_t seed,
                                     const std::vector<int>& actions);

enum class Detector { Oracle, Blob };

// Episodes that end are reset with seed + episode index.
Trace sample(Env& env, Policy& policy, int n_steps, std::uint64_t seed, Detector detector = Detector::Oracle);

inline constexpr int kTraceFormatVersion = 1;

void save_trace(const Trace& trace, const std::string& path);
Trace load_trace(const std::string& path);
std::string trace_to_string(const Trace& trace);
Trace trace_from_string(const std::string& text);

// Column-major regression rows for one target cell.
struct Rows {
    int target = 0;
    int n_cells = 0;
    std::vector<int> actions;
    std::vector<std::vector<Byte>> cells;  // cells[k][row]
    std::vector<Byte> action;              // action id per row
    std::vector<Byte> label;               // state_after[target] per row

    std::size_t size() const { return label.size(); }
    Byte action_indicator(std::size_t row, int a) const { return action[row] == a ? 1 : 0; }
    Rows subset(const std::vector<std::size_t>& idx) const;
    Rows with_target(int target, const std::vector<Byte>& labels) const;
};

Rows columns(const Trace& trace, int target);

}  // namespace comet
