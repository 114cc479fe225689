#include "comet/ground_truth.hpp"

#include "comet/minienvs.hpp"

namespace comet {

namespace {

RuleSet rules(std::vector<Case> cases, ExprPtr fallback) {
    RuleSet rs;
    rs.cases = std::move(cases);
    rs.fallback = std::move(fallback);
    return rs;
}

ExprPtr plus(int cell, int c) { return c >= 0 ? Add(Var(cell), Const(c)) : Sub(Var(cell), Const(-c)); }

std::map<int, RuleSet> pong_rules() {
    using namespace pong;
    std::map<int, RuleSet> m;
    m[PLAYER_Y] = rules({{And(ActEq(UP), VarGtConst(PLAYER_Y, kPlayerMin)), plus(PLAYER_Y, -kPaddleStep)},
                         {And(ActEq(DOWN), VarLtConst(PLAYER_Y, kPlayerMax)), plus(PLAYER_Y, kPaddleStep)}},
                        Var(PLAYER_Y));
    m[ENEMY_Y] = rules({{And(VarLtVar(BALL_Y, ENEMY_Y), VarGtConst(ENEMY_Y, kEnemyMin)), plus(ENEMY_Y, -kEnemyStep)},
                        {And(VarLtVar(ENEMY_Y, BALL_Y), VarLtConst(ENEMY_Y, kEnemyMax)), plus(ENEMY_Y, kEnemyStep)}},
                       Var(ENEMY_Y));
    m[BALL_X] = rules({{And(VarEqConst(BALL_X, kRightExitX), VarEqConst(BALL_VX, 2)), Const(kCenterX)},
                       {And(VarEqConst(BALL_X, kLeftExitX), VarEqConst(BALL_VX, 254)), Const(kCenterX)}},
                      Add(Var(BALL_X), Var(BALL_VX)));
    m[BALL_Y] = rules({}, Add(Var(BALL_Y), Var(BALL_VY)));
    m[BALL_VX] = rules({{And(VarEqConst(BALL_X, kPlayerHitX), AbsDiffLt(BALL_Y, PLAYER_Y, kHitReach)), Const(254)},
                        {And(VarEqConst(BALL_X, kEnemyHitX), VarLtVar(BALL_Y, ENEMY_Y)), Const(2)}},
                       Var(BALL_VX));
    m[BALL_VY] = rules({{And(VarLtConst(BALL_Y, kBallTopBand), VarEqConst(BALL_VY, 254)), Const(2)},
                        {And(VarGtConst(BALL_Y, kBallBottomBand), VarEqConst(BALL_VY, 2)), Const(254)}},
                       Var(BALL_VY));
    m[PLAYER_SCORE] = rules({{And(VarEqConst(BALL_X, kLeftExitX), VarEqConst(BALL_VX, 254)), plus(PLAYER_SCORE, 1)}},
                            Var(PLAYER_SCORE));
    m[ENEMY_SCORE] = rules({{And(VarEqConst(BALL_X, kRightExitX), VarEqConst(BALL_VX, 2)), plus(ENEMY_SCORE, 1)}},
                           Var(ENEMY_SCORE));
    m[PARITY] = rules({}, Sub(Const(1), Var(PARITY)));
    m[CONST255] = rules({}, Const(255));
    return m;
}

std::map<int, RuleSet> freeway_rules() {
    using namespace freeway;
    std::map<int, RuleSet> m;
    m[kChicken] = rules({{And(ActEq(UP), VarGtConst(kChicken, kChickenTop)), plus(kChicken, -kChickenStep)},
                         {ActEq(UP), Const(kChickenStart)},
                         {And(ActEq(DOWN), VarLtConst(kChicken, kChickenStart)), plus(kChicken, kChickenStep)}},
                        Var(kChicken));
    m[kScore] = rules({{And(ActEq(UP), VarLtConst(kChicken, kChickenTop + 1)), plus(kScore, 1)}}, Var(kScore));
    for (int i = 1; i <= kCars; ++i) {
        const int p = kPeriods[i - 1], s = kSpeeds[i - 1];
        const PredPtr fire = VarEqConst(counter_cell(i), p - 1);
        m[car_cell(i)] = rules({{fire, plus(car_cell(i), i <= 5 ? s : -s)}}, Var(car_cell(i)));
        m[counter_cell(i)] = rules({{fire, Const(0)}}, plus(counter_cell(i), 1));
    }
    m[kActive] = rules({}, Const(1));
    return m;
}

std::vector<PropertyBinding> pong_bindings() {
    using namespace pong;
    return {
        {"Player", 0, "y", PLAYER_Y, 1, 0, true, {}},
        {"Enemy", 0, "y", ENEMY_Y, 1, 0, true, {}},
        {"Ball", 0, "x", BALL_X, 1, 0, true, {}},
        {"Ball", 0, "y", BALL_Y, 1, kBallScreenOffset, true, {}},
        {"PlayerScore", 0, "value", PLAYER_SCORE, 1, 0, true, {}},
        {"EnemyScore", 0, "value", ENEMY_SCORE, 1, 0, true, {}},
    };
}

std::vector<PropertyBinding> freeway_bindings() {
    using namespace freeway;
    std::vector<PropertyBinding> out{{"Chicken", 0, "y", kChicken, 1, 0, true, {}}};
    for (int i = 1; i <= kCars; ++i) out.push_back({"Car", i, "x", car_cell(i), 1, kCarScreenOffset, true, {}});
    out.push_back({"Score", 0, "value", kScore, 1, 0, true, {}});
    return out;
}

}  // namespace

std::map<int, RuleSet> ground_truth_rules(const std::string& env) {
    if (env == "minipong") return pong_rules();
    if (env == "minifreeway") return freeway_rules();
    throw UnknownEnv("no ground truth for '" + env + "'");
}

CausalWorldModel ground_truth_model(const std::string& env) {
    CausalWorldModel m;
    m.env = env;
    m.ram_size = make_env(env)->info().ram_size;
    m.bindings = env == "minipong" ? pong_bindings() : freeway_bindings();
    for (auto& [cell, rs] : ground_truth_rules(env)) {
        UpdateRule r;
        r.target = cell;
        r.ruleset = rs;
        r.status = RuleStatus::Verified;
        m.rules[cell] = r;
    }
    m.refresh();
    return m;
}

}  // namespace comet
