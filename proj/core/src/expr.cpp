#include "comet/expr.hpp"

#include <cstdlib>

#include "comet/errors.hpp"

namespace comet {

namespace {
ExprPtr mk(Expr::Kind k, int v, ExprPtr a = nullptr, ExprPtr b = nullptr) {
    return std::make_shared<const Expr>(Expr{k, v, std::move(a), std::move(b)});
}
PredPtr mp(Pred::Kind kind, int k = 0, int j = 0, int c = 0, PredPtr a = nullptr, PredPtr b = nullptr) {
    return std::make_shared<const Pred>(Pred{kind, k, j, c, std::move(a), std::move(b)});
}
int cell(const RowView& row, int k) {
    if (k < 0 || k >= row.n_cells) throw UnboundVariable("cell s" + std::to_string(k) + " is not in the row");
    return row.cells[k];
}
}  // namespace

ExprPtr Const(int c) { return mk(Expr::Kind::Const, c); }
ExprPtr Var(int k) { return mk(Expr::Kind::Var, k); }
ExprPtr Act(int a) { return mk(Expr::Kind::Act, a); }
ExprPtr Neg(ExprPtr e) { return mk(Expr::Kind::Neg, 0, std::move(e)); }
ExprPtr Add(ExprPtr l, ExprPtr r) { return mk(Expr::Kind::Add, 0, std::move(l), std::move(r)); }
ExprPtr Sub(ExprPtr l, ExprPtr r) { return mk(Expr::Kind::Sub, 0, std::move(l), std::move(r)); }
ExprPtr MulConst(int c, ExprPtr e) {
    if (c == 0 || c < -4 || c > 4) throw UsageError("MulConst coefficient must be in [-4,4] without 0");
    return mk(Expr::Kind::Mul, c, std::move(e));
}

PredPtr Always() { return mp(Pred::Kind::Always); }
PredPtr Never() { return mp(Pred::Kind::Never); }
PredPtr VarEqConst(int k, int c) { return mp(Pred::Kind::VarEqConst, k, 0, c); }
PredPtr VarLtConst(int k, int c) { return mp(Pred::Kind::VarLtConst, k, 0, c); }
PredPtr VarGtConst(int k, int c) { return mp(Pred::Kind::VarGtConst, k, 0, c); }
PredPtr VarLtVar(int k, int j) { return mp(Pred::Kind::VarLtVar, k, j); }
PredPtr ActEq(int a) { return mp(Pred::Kind::ActEq, a); }
PredPtr AbsDiffLt(int k, int j, int c) { return mp(Pred::Kind::AbsDiffLt, k, j, c); }
PredPtr And(PredPtr a, PredPtr b) {
    if (a->kind == Pred::Kind::And || b->kind == Pred::Kind::And)
        throw UsageError("And takes literals only");
    return mp(Pred::Kind::And, 0, 0, 0, std::move(a), std::move(b));
}

static int eval_int(const Expr& e, const RowView& row) {
    switch (e.kind) {
        case Expr::Kind::Const: return e.value;
        case Expr::Kind::Var: return cell(row, e.value);
        case Expr::Kind::Act: return row.action == e.value ? 1 : 0;
        case Expr::Kind::Neg: return -eval_int(*e.a, row);
        case Expr::Kind::Add: return eval_int(*e.a, row) + eval_int(*e.b, row);
        case Expr::Kind::Sub: return eval_int(*e.a, row) - eval_int(*e.b, row);
        case Expr::Kind::Mul: return e.value * eval_int(*e.a, row);
    }
    return 0;
}

Byte eval_expr(const ExprPtr& e, const RowView& row) {
    return static_cast<Byte>(((eval_int(*e, row) % 256) + 256) % 256);
}

bool eval_pred(const PredPtr& p, const RowView& row) {
    switch (p->kind) {
        case Pred::Kind::Always: return true;
        case Pred::Kind::Never: return false;
        case Pred::Kind::VarEqConst: return cell(row, p->k) == p->c;
        case Pred::Kind::VarLtConst: return cell(row, p->k) < p->c;
        case Pred::Kind::VarGtConst: return cell(row, p->k) > p->c;
        case Pred::Kind::VarLtVar: return cell(row, p->k) < cell(row, p->j);
        case Pred::Kind::ActEq: return row.action == p->k;
        case Pred::Kind::AbsDiffLt: return std::abs(cell(row, p->k) - cell(row, p->j)) < p->c;
        case Pred::Kind::And: return eval_pred(p->a, row) && eval_pred(p->b, row);
    }
    return false;
}

Byte eval_ruleset(const RuleSet& rs, const RowView& row) {
    for (const Case& c : rs.cases)
        if (eval_pred(c.when, row)) return eval_expr(c.then, row);
    return eval_expr(rs.fallback, row);
}

int complexity(const ExprPtr& e) {
    switch (e->kind) {
        case Expr::Kind::Const: return 1;
        case Expr::Kind::Var:
        case Expr::Kind::Act: return 2;
        case Expr::Kind::Neg:
        case Expr::Kind::Mul: return 1 + complexity(e->a);
        case Expr::Kind::Add:
        case Expr::Kind::Sub: return 1 + complexity(e->a) + complexity(e->b);
    }
    return 0;
}

int complexity(const PredPtr& p) {
    switch (p->kind) {
        case Pred::Kind::Always:
        case Pred::Kind::Never: return 1;
        case Pred::Kind::VarEqConst:
        case Pred::Kind::VarLtConst:
        case Pred::Kind::VarGtConst: return 4;
        case Pred::Kind::VarLtVar: return 5;
        case Pred::Kind::ActEq: return 3;
        case Pred::Kind::AbsDiffLt: return 6;
        case Pred::Kind::And: return 1 + complexity(p->a) + complexity(p->b);
    }
    return 0;
}

int complexity(const RuleSet& rs) {
    int total = complexity(rs.fallback);
    for (const Case& c : rs.cases) total += 1 + complexity(c.when) + complexity(c.then);
    return total;
}

int node_count(const ExprPtr& e) {
    int n = 1;
    if (e->a) n += node_count(e->a);
    if (e->b) n += node_count(e->b);
    return n;
}

int literal_count(const PredPtr& p) {
    if (p->kind == Pred::Kind::And) return literal_count(p->a) + literal_count(p->b);
    if (p->kind == Pred::Kind::Always || p->kind == Pred::Kind::Never) return 0;
    return 1;
}

int compare(const ExprPtr& x, const ExprPtr& y) {
    if (x.get() == y.get()) return 0;
    if (x->kind != y->kind) return static_cast<int>(x->kind) < static_cast<int>(y->kind) ? -1 : 1;
    if (x->value != y->value) return x->value < y->value ? -1 : 1;
    if (x->a) {
        if (int c = compare(x->a, y->a)) return c;
    }
    if (x->b) return compare(x->b, y->b);
    return 0;
}

int compare(const PredPtr& x, const PredPtr& y) {
    if (x.get() == y.get()) return 0;
    if (x->kind != y->kind) return static_cast<int>(x->kind) < static_cast<int>(y->kind) ? -1 : 1;
    if (x->k != y->k) return x->k < y->k ? -1 : 1;
    if (x->j != y->j) return x->j < y->j ? -1 : 1;
    if (x->c != y->c) return x->c < y->c ? -1 : 1;
    if (x->a) {
        if (int c = compare(x->a, y->a)) return c;
        return compare(x->b, y->b);
    }
    return 0;
}

bool equal(const ExprPtr& x, const ExprPtr& y) { return compare(x, y) == 0; }
bool equal(const PredPtr& x, const PredPtr& y) { return compare(x, y) == 0; }

bool equal(const RuleSet& x, const RuleSet& y) {
    if (x.cases.size() != y.cases.size() || !equal(x.fallback, y.fallback)) return false;
    for (std::size_t i = 0; i < x.cases.size(); ++i)
        if (!equal(x.cases[i].when, y.cases[i].when) || !equal(x.cases[i].then, y.cases[i].then)) return false;
    return x.correct == y.correct && x.rows == y.rows;
}

static void collect(const ExprPtr& e, Inputs& in) {
    if (e->kind == Expr::Kind::Var) in.cells.insert(e->value);
    if (e->kind == Expr::Kind::Act) in.actions.insert(e->value);
    if (e->a) collect(e->a, in);
    if (e->b) collect(e->b, in);
}

static void collect(const PredPtr& p, Inputs& in) {
    switch (p->kind) {
        case Pred::Kind::VarEqConst:
        case Pred::Kind::VarLtConst:
        case Pred::Kind::VarGtConst: in.cells.insert(p->k); break;
        case Pred::Kind::VarLtVar:
        case Pred::Kind::AbsDiffLt:
            in.cells.insert(p->k);
            in.cells.insert(p->j);
            break;
        case Pred::Kind::ActEq: in.actions.insert(p->k); break;
        case Pred::Kind::And:
            collect(p->a, in);
            collect(p->b, in);
            break;
        default: break;
    }
}

Inputs inputs_of(const ExprPtr& e) {
    Inputs in;
    collect(e, in);
    return in;
}

Inputs inputs_of(const PredPtr& p) {
    Inputs in;
    collect(p, in);
    return in;
}

Inputs inputs_of(const RuleSet& rs) {
    Inputs in;
    for (const Case& c : rs.cases) {
        collect(c.when, in);
        collect(c.then, in);
    }
    collect(rs.fallback, in);
    return in;
}

static void linear(const ExprPtr& e, int scale, LinearForm& f) {
    switch (e->kind) {
        case Expr::Kind::Const: f.constant += scale * e->value; break;
        case Expr::Kind::Var: f.cells[e->value] += scale; break;
        case Expr::Kind::Act: f.acts[e->value] += scale; break;
        case Expr::Kind::Neg: linear(e->a, -scale, f); break;
        case Expr::Kind::Mul: linear(e->a, scale * e->value, f); break;
        case Expr::Kind::Add:
            linear(e->a, scale, f);
            linear(e->b, scale, f);
            break;
        case Expr::Kind::Sub:
            linear(e->a, scale, f);
            linear(e->b, -scale, f);
            break;
    }
}

LinearForm linear_form(const ExprPtr& e) {
    LinearForm f;
    linear(e, 1, f);
    auto norm = [](int v) { return ((v % 256) + 256) % 256; };
    for (auto it = f.cells.begin(); it != f.cells.end();)
        it = (it->second = norm(it->second)) ? std::next(it) : f.cells.erase(it);
    for (auto it = f.acts.begin(); it != f.acts.end();)
        it = (it->second = norm(it->second)) ? std::next(it) : f.acts.erase(it);
    f.constant = norm(f.constant);
    return f;
}

static std::string infix(const ExprPtr& e, bool paren) {
    std::string s;
    switch (e->kind) {
        case Expr::Kind::Const: return std::to_string(e->value);
        case Expr::Kind::Var: return "s" + std::to_string(e->value);
        case Expr::Kind::Act: return "[action=" + std::to_string(e->value) + "]";
        case Expr::Kind::Neg: return "-" + infix(e->a, true);
        case Expr::Kind::Mul: return std::to_string(e->value) + "*" + infix(e->a, true);
        case Expr::Kind::Add:
            if (e->b->kind == Expr::Kind::Const && e->b->value < 0)
                s = infix(e->a, false) + " - " + std::to_string(-e->b->value);
            else
                s = infix(e->a, false) + " + " + infix(e->b, false);
            break;
        case Expr::Kind::Sub:
            if (e->b->kind == Expr::Kind::Const && e->b->value < 0)
                s = infix(e->a, false) + " + " + std::to_string(-e->b->value);
            else
                s = infix(e->a, false) + " - " + infix(e->b, true);
            break;
    }
    return paren ? "(" + s + ")" : s;
}

std::string to_infix(const ExprPtr& e) { return infix(e, false); }

std::string to_infix(const PredPtr& p) {
    auto s = [](int k) { return "s" + std::to_string(k); };
    switch (p->kind) {
        case Pred::Kind::Always: return "always";
        case Pred::Kind::Never: return "never";
        case Pred::Kind::VarEqConst: return s(p->k) + " == " + std::to_string(p->c);
        case Pred::Kind::VarLtConst: return s(p->k) + " < " + std::to_string(p->c);
        case Pred::Kind::VarGtConst: return s(p->k) + " > " + std::to_string(p->c);
        case Pred::Kind::VarLtVar: return s(p->k) + " < " + s(p->j);
        case Pred::Kind::ActEq: return "action == " + std::to_string(p->k);
        case Pred::Kind::AbsDiffLt: return "|" + s(p->k) + " - " + s(p->j) + "| < " + std::to_string(p->c);
        case Pred::Kind::And: return to_infix(p->a) + " and " + to_infix(p->b);
    }
    return "";
}

std::string describe_rule(int target, const RuleSet& rs) {
    const std::string lhs = "s" + std::to_string(target) + " = ";
    if (rs.cases.empty()) return lhs + to_infix(rs.fallback);
    std::string out;
    for (const Case& c : rs.cases) out += lhs + to_infix(c.then) + "  if " + to_infix(c.when) + "\n";
    out += lhs + to_infix(rs.fallback) + "  otherwise";
    return out;
}

}  // namespace comet
