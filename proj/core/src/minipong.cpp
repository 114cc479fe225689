#include <cstdlib>
#include <random>

#include "comet/minienvs.hpp"

namespace comet {

using namespace pong;

namespace {
constexpr int kEnemyX = 8, kPlayerX = 148, kPaddleW = 4, kPaddleH = 14;
constexpr int kBallW = 2, kBallH = 4;
constexpr int kBarY = 2, kBarH = 3, kPlayerBarX = 100, kEnemyBarX = 20;

ObjectState box(const char* cat, int x, int y, int w, int h, int fw, int fh) {
    ObjectState o{cat, 0, x, y, w, h, std::nullopt, true};
    o.visible = x >= 0 && y >= 0 && x + w <= fw && y + h <= fh;
    return o;
}

Byte b8(int v) { return static_cast<Byte>(v & 0xff); }
}  // namespace

MiniPong::MiniPong() {
    info_.name = "minipong";
    info_.ram_size = 32;
    info_.actions = {NOOP, UP, DOWN};
    info_.palette.entries = {
        std::nullopt,
        PaletteEntry{"Player"},
        PaletteEntry{"Enemy"},
        PaletteEntry{"Ball"},
        PaletteEntry{"PlayerScore", true},
        PaletteEntry{"EnemyScore", true},
    };
    info_.roster = {{"Player", 0}, {"Enemy", 0}, {"Ball", 0}, {"PlayerScore", 0}, {"EnemyScore", 0}};
}

State MiniPong::initial_state(std::uint64_t seed) const {
    std::mt19937_64 rng(seed);
    State c(info_.ram_size, 0);
    c[PLAYER_Y] = 96;
    c[ENEMY_Y] = b8(kEnemyMin + 2 * static_cast<int>(rng() % ((kEnemyMax - kEnemyMin) / 2 + 1)));
    c[BALL_X] = kCenterX;
    c[BALL_Y] = 98;
    c[BALL_VX] = (rng() & 1) ? 2 : 254;
    c[BALL_VY] = (rng() & 1) ? 2 : 254;
    c[CONST255] = 255;
    return c;
}

StepRecord MiniPong::transition(const State& c, int a) const {
    StepRecord r;
    State n = c;
    const int p = c[PLAYER_Y], e = c[ENEMY_Y], x = c[BALL_X], b = c[BALL_Y];
    const int vx = c[BALL_VX], vy = c[BALL_VY];

    if (a == UP && p > kPlayerMin) n[PLAYER_Y] = b8(p - kPaddleStep);
    else if (a == DOWN && p < kPlayerMax) n[PLAYER_Y] = b8(p + kPaddleStep);

    if (b < e && e > kEnemyMin) n[ENEMY_Y] = b8(e - kEnemyStep);
    else if (e < b && e < kEnemyMax) n[ENEMY_Y] = b8(e + kEnemyStep);

    const bool exit_right = x == kRightExitX && vx == 2;
    const bool exit_left = x == kLeftExitX && vx == 254;
    n[BALL_X] = (exit_right || exit_left) ? kCenterX : b8(x + vx);
    n[BALL_Y] = b8(b + vy);

    if (x == kPlayerHitX && std::abs(b - p) < kHitReach) n[BALL_VX] = 254;
    else if (x == kEnemyHitX && b < e) n[BALL_VX] = 2;

    if (b < kBallTopBand && vy == 254) n[BALL_VY] = 2;
    else if (b > kBallBottomBand && vy == 2) n[BALL_VY] = 254;

    if (exit_left) {
        n[PLAYER_SCORE] = b8(c[PLAYER_SCORE] + 1);
        r.reward = 1;
    }
    if (exit_right) {
        n[ENEMY_SCORE] = b8(c[ENEMY_SCORE] + 1);
        r.reward = -1;
    }
    n[PARITY] = b8(1 - c[PARITY]);
    n[CONST255] = 255;

    r.done = n[PLAYER_SCORE] >= kWinScore || n[ENEMY_SCORE] >= kWinScore;
    r.state_after = std::move(n);
    return r;
}

std::vector<ObjectState> MiniPong::oracle_objects(const State& c) const {
    const int fw = info_.width, fh = info_.height;
    std::vector<ObjectState> out;
    out.push_back(box("Player", kPlayerX, c[PLAYER_Y], kPaddleW, kPaddleH, fw, fh));
    out.push_back(box("Enemy", kEnemyX, c[ENEMY_Y], kPaddleW, kPaddleH, fw, fh));
    out.push_back(box("Ball", c[BALL_X], c[BALL_Y] + kBallScreenOffset, kBallW, kBallH, fw, fh));
    ObjectState ps = box("PlayerScore", kPlayerBarX, kBarY, c[PLAYER_SCORE] + 1, kBarH, fw, fh);
    ps.value = c[PLAYER_SCORE];
    out.push_back(ps);
    ObjectState es = box("EnemyScore", kEnemyBarX, kBarY, c[ENEMY_SCORE] + 1, kBarH, fw, fh);
    es.value = c[ENEMY_SCORE];
    out.push_back(es);
    return out;
}

}  // namespace comet
