#pragma once

#include <array>

#include "comet/env.hpp"

namespace comet {

namespace pong {
enum Cell : int {
    PLAYER_Y = 0, ENEMY_Y = 1, BALL_X = 2, BALL_Y = 3, BALL_VX = 4, BALL_VY = 5,
    PLAYER_SCORE = 6, ENEMY_SCORE = 7, PARITY = 8, CONST255 = 9,
};
inline constexpr int kPlayerMin = 16, kPlayerMax = 176, kPaddleStep = 4;
inline constexpr int kEnemyMin = 25, kEnemyMax = 173, kEnemyStep = 2;
inline constexpr int kBallTopBand = 25, kBallBottomBand = 171;
inline constexpr int kPlayerHitX = 144, kEnemyHitX = 14;
inline constexpr int kRightExitX = 146, kLeftExitX = 12, kCenterX = 80;
inline constexpr int kHitReach = 40;
inline constexpr int kBallScreenOffset = -14;
inline constexpr int kWinScore = 21;
}  // namespace pong

namespace freeway {
inline constexpr int kChicken = 0, kCar0 = 1, kCounter0 = 11, kActive = 21, kScore = 22;
inline constexpr int kCars = 10;
inline constexpr std::array<int, kCars> kPeriods = {2, 5, 6, 7, 8, 9, 10, 3, 4, 11};
inline constexpr std::array<int, kCars> kSpeeds = {1, 2, 3, 1, 2, 3, 1, 2, 1, 2};
inline constexpr int kChickenStart = 180, kChickenTop = 12, kChickenStep = 4;
inline constexpr int kCarScreenOffset = -40;
inline constexpr int kCarVisibleMin = 96, kCarVisibleMax = 192;
inline constexpr int kWinScore = 100;
inline int car_cell(int car) { return kCar0 + car - 1; }
inline int counter_cell(int car) { return kCounter0 + car - 1; }
}  // namespace freeway

class MiniPong : public Env {
public:
    MiniPong();
    const EnvInfo& info() const override { return info_; }
    std::vector<ObjectState> oracle_objects(const State& s) const override;
    StepRecord transition(const State& s, int action) const override;

protected:
    State initial_state(std::uint64_t seed) const override;

private:
    EnvInfo info_;
};

class MiniFreeway : public Env {
public:
    MiniFreeway();
    const EnvInfo& info() const override { return info_; }
    std::vector<ObjectState> oracle_objects(const State& s) const override;
    StepRecord transition(const State& s, int action) const override;

protected:
    State initial_state(std::uint64_t seed) const override;

private:
    EnvInfo info_;
};

}  // namespace comet
