#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace comet {

using Byte = std::uint8_t;
using State = std::vector<Byte>;

enum Action : int { NOOP = 0, UP = 1, DOWN = 2 };

struct Frame {
    int width = 0;
    int height = 0;
    std::vector<Byte> pixels;

    Byte at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
    void fill_rect(int x, int y, int w, int h, Byte index);
};

struct ObjectState {
    std::string category;
    int instance = 0;
    int x = 0, y = 0, w = 0, h = 0;
    std::optional<int> value;
    bool visible = true;

    std::string name() const;
    bool operator==(const ObjectState&) const = default;
};

struct PaletteEntry {
    std::string category;
    bool value_bar = false;
    // instance = (y - lane_origin) / lane_height + 1 when lane_height > 0
    int lane_origin = 0;
    int lane_height = 0;
};

// index 0 is background and has no entry
struct Palette {
    std::vector<std::optional<PaletteEntry>> entries;

    const PaletteEntry* lookup(Byte index) const;
};

struct RosterEntry {
    std::string category;
    int instance = 0;
};

struct EnvInfo {
    std::string name;
    int ram_size = 32;
    std::vector<int> actions;
    int width = 160;
    int height = 192;
    Palette palette;
    std::vector<RosterEntry> roster;
};

struct StepRecord {
    State state_after;
    int reward = 0;
    bool done = false;
};

struct SnapshotToken {
    std::uint64_t owner = 0;
    State cells;
    std::uint64_t steps = 0;
};

class Env {
public:
    virtual ~Env() = default;

    virtual const EnvInfo& info() const = 0;
    State reset(std::uint64_t seed);
    StepRecord step(int action);
    Frame render(const State& s) const;
    void set_cell(int index, int value);
    SnapshotToken snapshot() const;
    void restore(const SnapshotToken& token);
    virtual std::vector<ObjectState> oracle_objects(const State& s) const = 0;

    const State& state() const { return cells_; }
    std::uint64_t steps_taken() const { return steps_; }

    // pure transition function: next cells, reward, done
    virtual StepRecord transition(const State& s, int action) const = 0;

protected:
    Env();
    virtual State initial_state(std::uint64_t seed) const = 0;

private:
    std::uint64_t id_;
    State cells_;
    std::uint64_t steps_ = 0;
    bool ready_ = false;
};

std::unique_ptr<Env> make_env(const std::string& name);
std::vector<std::string> env_names();
bool is_known_env(const std::string& name);

}  // namespace comet
