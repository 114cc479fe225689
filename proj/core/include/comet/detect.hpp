#pragma once

#include <utility>
#include <vector>

#include "comet/env.hpp"

namespace comet {

// One object per 4-connected component of a palette index.
std::vector<ObjectState> detect(const Frame& frame, const Palette& palette);

// Matches objects within a category by nearest center, ties by ascending (y, x).
std::vector<std::pair<int, int>> track(const std::vector<ObjectState>& prev,
                                       const std::vector<ObjectState>& cur);

// Keeps identities across frames; objects missing from a frame stay known but invisible.
class Tracker {
public:
    std::vector<ObjectState> update(const std::vector<ObjectState>& detected);
    const std::vector<ObjectState>& known() const { return known_; }

private:
    std::vector<ObjectState> known_;
};

// Orders objects by the environment roster; absent roster entries become invisible placeholders.
std::vector<ObjectState> complete_roster(const EnvInfo& info, const std::vector<ObjectState>& objs);

}  // namespace comet
