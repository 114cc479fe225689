#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "comet/env.hpp"

namespace comet {

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
    enum class Kind { Const, Var, Act, Neg, Add, Sub, Mul };
    Kind kind;
    int value = 0;  // constant, cell index, action id or multiplier
    ExprPtr a, b;
};

ExprPtr Const(int c);
ExprPtr Var(int cell);
ExprPtr Act(int action);
ExprPtr Neg(ExprPtr e);
ExprPtr Add(ExprPtr l, ExprPtr r);
ExprPtr Sub(ExprPtr l, ExprPtr r);
ExprPtr MulConst(int c, ExprPtr e);

struct Pred;
using PredPtr = std::shared_ptr<const Pred>;

struct Pred {
    enum class Kind { Always, Never, VarEqConst, VarLtConst, VarGtConst, VarLtVar, ActEq, AbsDiffLt, And };
    Kind kind;
    int k = 0, j = 0, c = 0;
    PredPtr a, b;
};

PredPtr Always();
PredPtr Never();
PredPtr VarEqConst(int k, int c);
PredPtr VarLtConst(int k, int c);
PredPtr VarGtConst(int k, int c);
PredPtr VarLtVar(int k, int j);
PredPtr ActEq(int a);
PredPtr AbsDiffLt(int k, int j, int c);
PredPtr And(PredPtr a, PredPtr b);

struct Case {
    PredPtr when;
    ExprPtr then;
};

struct RuleSet {
    std::vector<Case> cases;
    ExprPtr fallback;
    int correct = 0;
    int rows = 0;

    double accuracy() const { return rows ? static_cast<double>(correct) / rows : 0.0; }
};

// A state row: cells plus the action taken.
struct RowView {
    const Byte* cells;
    int n_cells;
    int action;
};

inline RowView row_of(const State& s, int action) {
    return RowView{s.data(), static_cast<int>(s.size()), action};
}

Byte eval_expr(const ExprPtr& e, const RowView& row);
bool eval_pred(const PredPtr& p, const RowView& row);
Byte eval_ruleset(const RuleSet& rs, const RowView& row);

int complexity(const ExprPtr& e);
int complexity(const PredPtr& p);
int complexity(const RuleSet& rs);
int node_count(const ExprPtr& e);
int literal_count(const PredPtr& p);

bool equal(const ExprPtr& x, const ExprPtr& y);
bool equal(const PredPtr& x, const PredPtr& y);
bool equal(const RuleSet& x, const RuleSet& y);
// total structural order used for deterministic tie-breaks
int compare(const ExprPtr& x, const ExprPtr& y);
int compare(const PredPtr& x, const PredPtr& y);

struct Inputs {
    std::set<int> cells;
    std::set<int> actions;
};
Inputs inputs_of(const ExprPtr& e);
Inputs inputs_of(const PredPtr& p);
Inputs inputs_of(const RuleSet& rs);

// e == sum coef[k] * cell_k + sum act[a] * [action == a] + constant (mod 256)
struct LinearForm {
    std::map<int, int> cells;
    std::map<int, int> acts;
    int constant = 0;
};
LinearForm linear_form(const ExprPtr& e);

std::string to_sexpr(const ExprPtr& e);
std::string to_sexpr(const PredPtr& p);
ExprPtr parse_expr(const std::string& text);
PredPtr parse_pred(const std::string& text);

// Readable infix for prompts, e.g. "s3 + s5"
std::string to_infix(const ExprPtr& e);
std::string to_infix(const PredPtr& p);
std::string describe_rule(int target, const RuleSet& rs);

}  // namespace comet
