#include <algorithm>
#include <cmath>
#include <optional>

#include "comet/symreg.hpp"

namespace comet {

namespace {

std::vector<Byte> eval_all(const ExprPtr& e, const Rows& rows) {
    const LinearForm f = linear_form(e);
    const std::size_t n = rows.size();
    std::vector<Byte> out(n, static_cast<Byte>(f.constant));
    for (auto [k, c] : f.cells) {
        if (k < 0 || k >= rows.n_cells) throw UnboundVariable("cell s" + std::to_string(k) + " is not in the rows");
        const Byte* col = rows.cells[k].data();
        for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<Byte>(out[i] + c * col[i]);
    }
    for (auto [a, c] : f.acts)
        for (std::size_t i = 0; i < n; ++i)
            if (rows.action[i] == a) out[i] = static_cast<Byte>(out[i] + c);
    return out;
}

std::vector<char> eval_all(const PredPtr& p, const Rows& rows) {
    const std::size_t n = rows.size();
    std::vector<char> out(n);
    State buf(rows.n_cells);
    for (std::size_t i = 0; i < n; ++i) {
        for (int k = 0; k < rows.n_cells; ++k) buf[k] = rows.cells[k][i];
        out[i] = eval_pred(p, RowView{buf.data(), rows.n_cells, rows.action[i]});
    }
    return out;
}

bool is_excluded(const SearchConfig& cfg, int k) {
    return std::find(cfg.excluded.begin(), cfg.excluded.end(), k) != cfg.excluded.end();
}

double score_of(int correct, int n, int cx, double lambda) {
    return (1.0 - static_cast<double>(correct) / n) + lambda * cx;
}

// front plus the hold candidate
std::vector<Candidate> candidates(const Rows& rows, const SearchConfig& cfg) {
    auto front = search_equations(rows, cfg);
    if (!is_excluded(cfg, rows.target) && rows.target < rows.n_cells) {
        ExprPtr hold = Var(rows.target);
        bool present = false;
        for (const auto& c : front) present |= equal(c.expr, hold);
        if (!present) {
            int correct = 0;
            for (std::size_t i = 0; i < rows.size(); ++i) correct += rows.cells[rows.target][i] == rows.label[i];
            front.push_back(Candidate{hold, correct, static_cast<int>(rows.size()), complexity(hold)});
        }
    }
    return front;
}

const Candidate& pick(const std::vector<Candidate>& cands, double lambda) {
    const Candidate* best = &cands.front();
    for (const auto& c : cands) {
        const double s = score_of(c.correct, c.rows, c.complexity, lambda);
        const double b = score_of(best->correct, best->rows, best->complexity, lambda);
        if (s < b - 1e-12 ||
            (std::abs(s - b) <= 1e-12 &&
             (c.complexity < best->complexity ||
              (c.complexity == best->complexity && compare(c.expr, best->expr) < 0))))
            best = &c;
    }
    return *best;
}

struct CaseChoice {
    Case c;
    int gain = 0;
    int cx = 0;
};

bool better_case(const CaseChoice& x, const CaseChoice& y) {
    if (x.gain != y.gain) return x.gain > y.gain;
    if (x.cx != y.cx) return x.cx < y.cx;
    if (int d = compare(x.c.when, y.c.when)) return d < 0;
    return compare(x.c.then, y.c.then) < 0;
}

}  // namespace

RuleSet score_ruleset(RuleSet rs, const Rows& rows) {
    const std::size_t n = rows.size();
    std::vector<Byte> pred = eval_all(rs.fallback, rows);
    std::vector<char> done(n, 0);
    for (const Case& c : rs.cases) {
        const auto fire = eval_all(c.when, rows);
        const auto val = eval_all(c.then, rows);
        for (std::size_t i = 0; i < n; ++i)
            if (!done[i] && fire[i]) {
                pred[i] = val[i];
                done[i] = 1;
            }
    }
    rs.correct = 0;
    for (std::size_t i = 0; i < n; ++i) rs.correct += pred[i] == rows.label[i];
    rs.rows = static_cast<int>(n);
    return rs;
}

RuleSet fit_ruleset(const Rows& rows, const SearchConfig& cfg) {
    const int n = static_cast<int>(rows.size());
    if (n < 2) throw UsageError("fit_ruleset needs at least two rows");

    const auto all = candidates(rows, cfg);
    for (const auto& c : all)
        if (c.correct == n) {
            const Candidate* best = &c;
            for (const auto& d : all)
                if (d.correct == n && (d.complexity < best->complexity ||
                                       (d.complexity == best->complexity && compare(d.expr, best->expr) < 0)))
                    best = &d;
            RuleSet rs;
            rs.fallback = best->expr;
            return score_ruleset(rs, rows);
        }

    auto grow = [&](const ExprPtr& root) {
        const std::vector<Byte> root_pred = eval_all(root, rows);
        std::vector<char> uncovered(n, 1);
        RuleSet rs;
        rs.fallback = root;

        auto residual_rows = [&] {
            std::vector<std::size_t> idx;
            for (int i = 0; i < n; ++i)
                if (uncovered[i] && root_pred[i] != rows.label[i]) idx.push_back(i);
            return idx;
        };
        auto correct_now = [&] { return score_ruleset(rs, rows).correct; };
        auto append = [&](const Case& c) {
            const auto fire = eval_all(c.when, rows);
            for (int i = 0; i < n; ++i)
                if (fire[i]) uncovered[i] = 0;
            rs.cases.push_back(c);
        };

        // cases that never misfire, until the floor is reached (or the rule is exact when completing)
        while (static_cast<int>(rs.cases.size()) < cfg.max_cases && (cfg.complete || correct_now() < cfg.theta * n)) {
            const auto residual = residual_rows();
            if (residual.empty()) break;
            std::vector<char> in_residual(n, 0);
            for (auto i : residual) in_residual[i] = 1;
            const auto local = candidates(rows.subset(residual), cfg);
            std::optional<CaseChoice> best;
            for (const auto& cand : local) {
                const auto pe = eval_all(cand.expr, rows);
                std::vector<Label> labels(n, Label::Ignore);
                bool any = false;
                for (int i = 0; i < n; ++i) {
                    if (!uncovered[i]) continue;
                    if (pe[i] != rows.label[i]) labels[i] = Label::Negative;
                    else if (in_residual[i]) {
                        labels[i] = Label::Positive;
                        any = true;
                    }
                }
                if (!any) continue;
                const auto fit = search_predicate(rows, labels, cfg, true);
                if (fit.tp == 0 || fit.fp != 0) continue;
                CaseChoice choice{Case{fit.pred, cand.expr}, fit.tp, 1 + complexity(fit.pred) + complexity(cand.expr)};
                if (!best || better_case(choice, *best)) best = choice;
            }
            if (!best) break;
            append(best->c);
        }

        // while below the acceptance floor, allow cases that trade some misfires for net gain
        int correct = correct_now();
        while (correct < cfg.theta * n && static_cast<int>(rs.cases.size()) < cfg.max_cases) {
            const auto residual = residual_rows();
            if (residual.empty()) break;
            const auto local = candidates(rows.subset(residual), cfg);
            std::optional<CaseChoice> best;
            for (const auto& cand : local) {
                const auto pe = eval_all(cand.expr, rows);
                std::vector<Label> labels(n, Label::Ignore);
                bool any = false;
                for (int i = 0; i < n; ++i) {
                    if (!uncovered[i]) continue;
                    const bool e_ok = pe[i] == rows.label[i], d_ok = root_pred[i] == rows.label[i];
                    if (e_ok && !d_ok) {
                        labels[i] = Label::Positive;
                        any = true;
                    } else if (!e_ok && d_ok) {
                        labels[i] = Label::Negative;
                    }
                }
                if (!any) continue;
                const auto fit = search_predicate(rows, labels, cfg, false);
                if (fit.tp - fit.fp <= 0) continue;
                CaseChoice choice{Case{fit.pred, cand.expr}, fit.tp - fit.fp,
                                  1 + complexity(fit.pred) + complexity(cand.expr)};
                if (!best || better_case(choice, *best)) best = choice;
            }
            if (!best) break;
            append(best->c);
            correct = correct_now();
        }

        if (!rs.cases.empty() && rs.cases.back().when->kind == Pred::Kind::Always) {
            rs.fallback = rs.cases.back().then;
            rs.cases.pop_back();
        }

        // the parsimonious root stays the default unless holding does better on what the cases leave over
        std::vector<std::size_t> rest;
        for (int i = 0; i < n; ++i)
            if (uncovered[i]) rest.push_back(i);
        if (!rest.empty() && !rs.cases.empty() && !is_excluded(cfg, rows.target) && !equal(rs.fallback, Var(rows.target))) {
            int dc = 0, hc = 0;
            for (auto i : rest) {
                dc += root_pred[i] == rows.label[i];
                hc += rows.cells[rows.target][i] == rows.label[i];
            }
            const int m = static_cast<int>(rest.size());
            if (score_of(hc, m, complexity(Var(rows.target)), cfg.lambda) <
                score_of(dc, m, complexity(rs.fallback), cfg.lambda) - 1e-12)
                rs.fallback = Var(rows.target);
        }
        return score_ruleset(rs, rows);
    };

    RuleSet rs = grow(pick(all, cfg.lambda).expr);
    // an exact rule may need fewer cases around holding than around the most parsimonious equation
    if (cfg.complete && rs.correct < n && !is_excluded(cfg, rows.target) && !equal(rs.fallback, Var(rows.target))) {
        RuleSet held = grow(Var(rows.target));
        if (held.correct > rs.correct) rs = std::move(held);
    }
    if (rs.accuracy() < cfg.theta) {
        // the hold baseline only counts when the target itself may be read
        bool below_hold = true;
        if (!is_excluded(cfg, rows.target)) {
            int hold_correct = 0;
            for (int i = 0; i < n; ++i) hold_correct += rows.cells[rows.target][i] == rows.label[i];
            below_hold = rs.correct < hold_correct;
        }
        if (below_hold)
            throw NoRuleFound("no rule for s" + std::to_string(rows.target) + " reaches the acceptance floor", rs);
    }
    return rs;
}

}  // namespace comet
