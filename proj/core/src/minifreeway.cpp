#include <random>

#include "comet/minienvs.hpp"

namespace comet {

using namespace freeway;

namespace {
constexpr int kChickenX = 44, kChickenW = 6, kChickenH = 8;
constexpr int kCarW = 8, kCarH = 8, kLaneOrigin = 16, kLaneHeight = 16;
constexpr int kBarX = 56, kBarY = 2, kBarH = 3;

Byte b8(int v) { return static_cast<Byte>(v & 0xff); }
}  // namespace

MiniFreeway::MiniFreeway() {
    info_.name = "minifreeway";
    info_.ram_size = 32;
    info_.actions = {NOOP, UP, DOWN};
    info_.palette.entries = {
        std::nullopt,
        PaletteEntry{"Chicken"},
        PaletteEntry{"Car", false, kLaneOrigin, kLaneHeight},
        PaletteEntry{"Score", true},
    };
    info_.roster.push_back({"Chicken", 0});
    for (int i = 1; i <= kCars; ++i) info_.roster.push_back({"Car", i});
    info_.roster.push_back({"Score", 0});
}

State MiniFreeway::initial_state(std::uint64_t seed) const {
    std::mt19937_64 rng(seed);
    State c(info_.ram_size, 0);
    c[kChicken] = kChickenStart;
    for (int i = 1; i <= kCars; ++i) c[car_cell(i)] = b8(static_cast<int>(rng() & 0xff));
    c[kActive] = 1;
    return c;
}

StepRecord MiniFreeway::transition(const State& c, int a) const {
    StepRecord r;
    State n = c;
    const int y = c[kChicken];
    if (a == UP) {
        if (y > kChickenTop) {
            n[kChicken] = b8(y - kChickenStep);
        } else {
            n[kChicken] = kChickenStart;
            n[kScore] = b8(c[kScore] + 1);
            r.reward = 1;
        }
    } else if (a == DOWN && y < kChickenStart) {
        n[kChicken] = b8(y + kChickenStep);
    }
    for (int i = 1; i <= kCars; ++i) {
        const int period = kPeriods[i - 1];
        const int cnt = c[counter_cell(i)];
        const bool fire = cnt == period - 1;
        if (fire) {
            const int s = kSpeeds[i - 1];
            n[car_cell(i)] = b8(i <= 5 ? c[car_cell(i)] + s : c[car_cell(i)] - s);
        }
        n[counter_cell(i)] = fire ? 0 : b8(cnt + 1);
    }
    n[kActive] = 1;
    r.done = n[kScore] >= kWinScore;
    r.state_after = std::move(n);
    return r;
}

std::vector<ObjectState> MiniFreeway::oracle_objects(const State& c) const {
    const int fw = info_.width, fh = info_.height;
    std::vector<ObjectState> out;
    ObjectState ch{"Chicken", 0, kChickenX, c[kChicken], kChickenW, kChickenH, std::nullopt, true};
    ch.visible = ch.y + ch.h <= fh;
    out.push_back(ch);
    for (int i = 1; i <= kCars; ++i) {
        const int cell = c[car_cell(i)];
        ObjectState car{"Car", i, cell + kCarScreenOffset, kLaneOrigin + kLaneHeight * (i - 1),
                        kCarW, kCarH, std::nullopt, true};
        car.visible = cell >= kCarVisibleMin && cell <= kCarVisibleMax;
        out.push_back(car);
    }
    ObjectState sc{"Score", 0, kBarX, kBarY, c[kScore] + 1, kBarH, c[kScore], true};
    sc.visible = sc.x + sc.w <= fw;
    out.push_back(sc);
    return out;
}

}  // namespace comet
