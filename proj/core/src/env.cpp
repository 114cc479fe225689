#include "comet/env.hpp"

#include <algorithm>
#include <atomic>

#include "comet/errors.hpp"
#include "comet/minienvs.hpp"

namespace comet {

namespace {
std::atomic<std::uint64_t> next_env_id{1};
}

void Frame::fill_rect(int x, int y, int w, int h, Byte index) {
    for (int yy = std::max(0, y); yy < std::min(height, y + h); ++yy)
        for (int xx = std::max(0, x); xx < std::min(width, x + w); ++xx)
            pixels[static_cast<std::size_t>(yy) * width + xx] = index;
}

std::string ObjectState::name() const {
    return instance > 0 ? category + std::to_string(instance) : category;
}

const PaletteEntry* Palette::lookup(Byte index) const {
    if (index >= entries.size() || !entries[index]) return nullptr;
    return &*entries[index];
}

Env::Env() : id_(next_env_id++) {}

State Env::reset(std::uint64_t seed) {
    cells_ = initial_state(seed);
    steps_ = 0;
    ready_ = true;
    return cells_;
}

StepRecord Env::step(int action) {
    const auto& acts = info().actions;
    if (std::find(acts.begin(), acts.end(), action) == acts.end())
        throw UnknownAction("action " + std::to_string(action) + " not in action set");
    if (!ready_) reset(0);
    StepRecord rec = transition(cells_, action);
    cells_ = rec.state_after;
    ++steps_;
    return rec;
}

Frame Env::render(const State& s) const {
    const EnvInfo& inf = info();
    Frame f;
    f.width = inf.width;
    f.height = inf.height;
    f.pixels.assign(static_cast<std::size_t>(f.width) * f.height, 0);
    for (const ObjectState& o : oracle_objects(s)) {
        if (!o.visible) continue;
        for (std::size_t i = 1; i < inf.palette.entries.size(); ++i) {
            const auto& e = inf.palette.entries[i];
            if (e && e->category == o.category) {
                f.fill_rect(o.x, o.y, o.w, o.h, static_cast<Byte>(i));
                break;
            }
        }
    }
    return f;
}

void Env::set_cell(int index, int value) {
    if (index < 0 || index >= info().ram_size)
        throw IndexOutOfRange("cell " + std::to_string(index) + " outside ram of size " +
                              std::to_string(info().ram_size));
    if (value < 0 || value > 255)
        throw IndexOutOfRange("value " + std::to_string(value) + " is not a byte");
    if (!ready_) reset(0);
    cells_[index] = static_cast<Byte>(value);
}

SnapshotToken Env::snapshot() const { return SnapshotToken{id_, cells_, steps_}; }

void Env::restore(const SnapshotToken& token) {
    if (token.owner != id_) throw StaleToken("snapshot token belongs to another environment instance");
    cells_ = token.cells;
    steps_ = token.steps;
    ready_ = true;
}

std::unique_ptr<Env> make_env(const std::string& name) {
    if (name == "minipong") return std::make_unique<MiniPong>();
    if (name == "minifreeway") return std::make_unique<MiniFreeway>();
    std::string list;
    for (const auto& n : env_names()) list += (list.empty() ? "" : ", ") + n;
    throw UnknownEnv("unknown environment '" + name + "' (known: " + list + ")");
}

std::vector<std::string> env_names() { return {"minipong", "minifreeway"}; }

bool is_known_env(const std::string& name) {
    auto names = env_names();
    return std::find(names.begin(), names.end(), name) != names.end();
}

}  // namespace comet
