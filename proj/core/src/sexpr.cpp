#include <cctype>

#include "comet/errors.hpp"
#include "comet/expr.hpp"

namespace comet {

namespace {

std::string var(int k) { return "(var s" + std::to_string(k) + ")"; }

struct Parser {
    const std::string& s;
    std::size_t i = 0;

    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError(msg + " at offset " + std::to_string(i) + " in \"" + s + "\"");
    }
    void skip() {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    }
    bool peek(char c) {
        skip();
        return i < s.size() && s[i] == c;
    }
    void expect(char c) {
        if (!peek(c)) fail(std::string("expected '") + c + "'");
        ++i;
    }
    std::string word() {
        skip();
        std::size_t j = i;
        while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j])) && s[j] != '(' && s[j] != ')') ++j;
        if (j == i) fail("expected a token");
        std::string w = s.substr(i, j - i);
        i = j;
        return w;
    }
    int integer() {
        const std::string w = word();
        std::size_t used = 0;
        int v = 0;
        try {
            v = std::stoi(w, &used);
        } catch (const std::exception&) {
            fail("expected an integer, got '" + w + "'");
        }
        if (used != w.size()) fail("expected an integer, got '" + w + "'");
        return v;
    }
    int cell_ref() {
        expect('(');
        if (word() != "var") fail("expected (var sK)");
        const int k = cell_name();
        expect(')');
        return k;
    }
    int cell_name() {
        const std::string w = word();
        if (w.size() < 2 || w[0] != 's') fail("expected a cell name sK");
        std::size_t used = 0;
        int k = -1;
        try {
            k = std::stoi(w.substr(1), &used);
        } catch (const std::exception&) {
            fail("bad cell name '" + w + "'");
        }
        if (used != w.size() - 1 || k < 0) fail("bad cell name '" + w + "'");
        return k;
    }
    void done() {
        skip();
        if (i != s.size()) fail("trailing input");
    }

    ExprPtr expr() {
        if (!peek('(')) return Const(integer());
        ++i;
        const std::string op = word();
        ExprPtr out;
        if (op == "var") out = Var(cell_name());
        else if (op == "act") out = Act(integer());
        else if (op == "neg") out = Neg(expr());
        else if (op == "add" || op == "sub") {
            ExprPtr l = expr();
            ExprPtr r = expr();
            out = op == "add" ? Add(l, r) : Sub(l, r);
        } else if (op == "mul") {
            const int c = integer();
            if (c == 0 || c < -4 || c > 4) fail("multiplier outside [-4,4]");
            out = MulConst(c, expr());
        } else {
            fail("unknown expression operator '" + op + "'");
        }
        expect(')');
        return out;
    }

    PredPtr literal_or_and() {
        expect('(');
        const std::string op = word();
        PredPtr out;
        if (op == "always") out = Always();
        else if (op == "never") out = Never();
        else if (op == "act") out = ActEq(integer());
        else if (op == "eq" || op == "gt") {
            const int k = cell_ref();
            const int c = integer();
            out = op == "eq" ? VarEqConst(k, c) : VarGtConst(k, c);
        } else if (op == "lt") {
            const int k = cell_ref();
            if (peek('(')) out = VarLtVar(k, cell_ref());
            else out = VarLtConst(k, integer());
        } else if (op == "absdifflt") {
            const int k = cell_ref();
            const int j = cell_ref();
            out = AbsDiffLt(k, j, integer());
        } else if (op == "and") {
            PredPtr a = literal_or_and();
            PredPtr b = literal_or_and();
            if (a->kind == Pred::Kind::And || b->kind == Pred::Kind::And) fail("and takes two literals");
            out = And(a, b);
        } else {
            fail("unknown predicate operator '" + op + "'");
        }
        expect(')');
        return out;
    }
};

}  // namespace

std::string to_sexpr(const ExprPtr& e) {
    switch (e->kind) {
        case Expr::Kind::Const: return std::to_string(e->value);
        case Expr::Kind::Var: return var(e->value);
        case Expr::Kind::Act: return "(act " + std::to_string(e->value) + ")";
        case Expr::Kind::Neg: return "(neg " + to_sexpr(e->a) + ")";
        case Expr::Kind::Add: return "(add " + to_sexpr(e->a) + " " + to_sexpr(e->b) + ")";
        case Expr::Kind::Sub: return "(sub " + to_sexpr(e->a) + " " + to_sexpr(e->b) + ")";
        case Expr::Kind::Mul: return "(mul " + std::to_string(e->value) + " " + to_sexpr(e->a) + ")";
    }
    return "";
}

std::string to_sexpr(const PredPtr& p) {
    const std::string c = std::to_string(p->c);
    switch (p->kind) {
        case Pred::Kind::Always: return "(always)";
        case Pred::Kind::Never: return "(never)";
        case Pred::Kind::VarEqConst: return "(eq " + var(p->k) + " " + c + ")";
        case Pred::Kind::VarLtConst: return "(lt " + var(p->k) + " " + c + ")";
        case Pred::Kind::VarGtConst: return "(gt " + var(p->k) + " " + c + ")";
        case Pred::Kind::VarLtVar: return "(lt " + var(p->k) + " " + var(p->j) + ")";
        case Pred::Kind::ActEq: return "(act " + std::to_string(p->k) + ")";
        case Pred::Kind::AbsDiffLt: return "(absdifflt " + var(p->k) + " " + var(p->j) + " " + c + ")";
        case Pred::Kind::And: return "(and " + to_sexpr(p->a) + " " + to_sexpr(p->b) + ")";
    }
    return "";
}

ExprPtr parse_expr(const std::string& text) {
    Parser p{text};
    ExprPtr e = p.expr();
    p.done();
    return e;
}

PredPtr parse_pred(const std::string& text) {
    Parser p{text};
    PredPtr out = p.literal_or_and();
    p.done();
    return out;
}

}  // namespace comet
