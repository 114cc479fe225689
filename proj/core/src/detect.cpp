#include "comet/detect.hpp"

#include <algorithm>
#include <map>
#include <tuple>

#include "comet/errors.hpp"

namespace comet {

std::vector<ObjectState> detect(const Frame& frame, const Palette& palette) {
    const int W = frame.width, H = frame.height;
    std::vector<char> seen(frame.pixels.size(), 0);
    std::vector<ObjectState> out;
    std::vector<int> stack;
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            const std::size_t idx = static_cast<std::size_t>(y) * W + x;
            const Byte c = frame.pixels[idx];
            if (c == 0 || seen[idx]) continue;
            const PaletteEntry* entry = palette.lookup(c);
            if (!entry)
                throw UnknownPaletteIndex("palette index " + std::to_string(c) + " at (" +
                                          std::to_string(x) + ", " + std::to_string(y) + ")");
            int x0 = x, x1 = x, y0 = y, y1 = y;
            seen[idx] = 1;
            stack.assign(1, static_cast<int>(idx));
            while (!stack.empty()) {
                const int p = stack.back();
                stack.pop_back();
                const int px = p % W, py = p / W;
                x0 = std::min(x0, px);
                x1 = std::max(x1, px);
                y0 = std::min(y0, py);
                y1 = std::max(y1, py);
                const int nx[4] = {px - 1, px + 1, px, px};
                const int ny[4] = {py, py, py - 1, py + 1};
                for (int k = 0; k < 4; ++k) {
                    if (nx[k] < 0 || ny[k] < 0 || nx[k] >= W || ny[k] >= H) continue;
                    const std::size_t q = static_cast<std::size_t>(ny[k]) * W + nx[k];
                    if (seen[q] || frame.pixels[q] != c) continue;
                    seen[q] = 1;
                    stack.push_back(static_cast<int>(q));
                }
            }
            ObjectState o;
            o.category = entry->category;
            o.x = x0;
            o.y = y0;
            o.w = x1 - x0 + 1;
            o.h = y1 - y0 + 1;
            if (entry->value_bar) o.value = o.w - 1;
            if (entry->lane_height > 0) o.instance = (o.y - entry->lane_origin) / entry->lane_height + 1;
            o.instance = entry->lane_height > 0 ? o.instance : -1;
            out.push_back(o);
        }
    }
    // unlaned duplicates are numbered by (y, x)
    std::sort(out.begin(), out.end(), [](const ObjectState& a, const ObjectState& b) {
        return std::tie(a.category, a.y, a.x) < std::tie(b.category, b.y, b.x);
    });
    std::map<std::string, int> counts;
    for (auto& o : out)
        if (o.instance < 0) o.instance = counts[o.category]++;
    std::sort(out.begin(), out.end(), [](const ObjectState& a, const ObjectState& b) {
        return std::tie(a.category, a.instance, a.y, a.x) < std::tie(b.category, b.instance, b.y, b.x);
    });
    return out;
}

namespace {
long long center_dist2(const ObjectState& a, const ObjectState& b) {
    const long long dx = (2LL * a.x + a.w) - (2LL * b.x + b.w);
    const long long dy = (2LL * a.y + a.h) - (2LL * b.y + b.h);
    return dx * dx + dy * dy;
}
}  // namespace

std::vector<std::pair<int, int>> track(const std::vector<ObjectState>& prev,
                                       const std::vector<ObjectState>& cur) {
    struct Cand {
        long long d;
        int py, px, cy, cx, pi, ci;
    };
    std::vector<Cand> cands;
    for (int i = 0; i < static_cast<int>(prev.size()); ++i)
        for (int j = 0; j < static_cast<int>(cur.size()); ++j)
            if (prev[i].category == cur[j].category)
                cands.push_back({center_dist2(prev[i], cur[j]), prev[i].y, prev[i].x, cur[j].y, cur[j].x, i, j});
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
        return std::tie(a.d, a.py, a.px, a.cy, a.cx, a.pi, a.ci) <
               std::tie(b.d, b.py, b.px, b.cy, b.cx, b.pi, b.ci);
    });
    std::vector<char> pu(prev.size(), 0), cu(cur.size(), 0);
    std::vector<std::pair<int, int>> out;
    for (const Cand& c : cands) {
        if (pu[c.pi] || cu[c.ci]) continue;
        pu[c.pi] = cu[c.ci] = 1;
        out.emplace_back(c.pi, c.ci);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<ObjectState> Tracker::update(const std::vector<ObjectState>& detected) {
    auto pairs = track(known_, detected);
    std::vector<char> matched_known(known_.size(), 0), matched_cur(detected.size(), 0);
    std::vector<ObjectState> out = known_;
    for (auto [pi, ci] : pairs) {
        const int inst = known_[pi].instance;
        out[pi] = detected[ci];
        out[pi].instance = inst;
        out[pi].visible = true;
        matched_known[pi] = matched_cur[ci] = 1;
    }
    for (std::size_t i = 0; i < known_.size(); ++i)
        if (!matched_known[i]) out[i].visible = false;
    for (std::size_t j = 0; j < detected.size(); ++j) {
        if (matched_cur[j]) continue;
        int next = 0;
        for (const auto& o : out)
            if (o.category == detected[j].category) next = std::max(next, o.instance + 1);
        ObjectState o = detected[j];
        o.instance = std::max(next, o.instance);
        out.push_back(o);
    }
    known_ = out;
    return out;
}

std::vector<ObjectState> complete_roster(const EnvInfo& info, const std::vector<ObjectState>& objs) {
    std::vector<ObjectState> out;
    std::vector<char> used(objs.size(), 0);
    for (const RosterEntry& r : info.roster) {
        bool found = false;
        for (std::size_t i = 0; i < objs.size(); ++i) {
            if (used[i] || !objs[i].visible) continue;
            if (objs[i].category == r.category && objs[i].instance == r.instance) {
                out.push_back(objs[i]);
                used[i] = 1;
                found = true;
                break;
            }
        }
        if (!found) out.push_back(ObjectState{r.category, r.instance, 0, 0, 0, 0, std::nullopt, false});
    }
    for (std::size_t i = 0; i < objs.size(); ++i)
        if (!used[i] && objs[i].visible) out.push_back(objs[i]);
    return out;
}

}  // namespace comet
