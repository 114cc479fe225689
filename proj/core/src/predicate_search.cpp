#include <algorithm>
#include <array>
#include <cstdlib>
#include <tuple>

#include "comet/symreg.hpp"

namespace comet {

namespace {

using K = Pred::Kind;

struct Lit {
    K kind = K::Always;
    int k = 0, j = 0, c = 0;

    auto tie() const { return std::make_tuple(static_cast<int>(kind), k, j, c); }
    bool operator<(const Lit& o) const { return tie() < o.tie(); }
    bool operator==(const Lit& o) const { return tie() == o.tie(); }

    int cx() const {
        switch (kind) {
            case K::Always:
            case K::Never: return 1;
            case K::VarEqConst:
            case K::VarLtConst:
            case K::VarGtConst: return 4;
            case K::VarLtVar: return 5;
            case K::ActEq: return 3;
            case K::AbsDiffLt: return 6;
            default: return 0;
        }
    }
    PredPtr make() const {
        switch (kind) {
            case K::Always: return Always();
            case K::Never: return Never();
            case K::VarEqConst: return VarEqConst(k, c);
            case K::VarLtConst: return VarLtConst(k, c);
            case K::VarGtConst: return VarGtConst(k, c);
            case K::VarLtVar: return VarLtVar(k, j);
            case K::ActEq: return ActEq(k);
            case K::AbsDiffLt: return AbsDiffLt(k, j, c);
            default: return Never();
        }
    }
    bool holds(const Rows& rows, std::size_t i) const {
        switch (kind) {
            case K::Always: return true;
            case K::Never: return false;
            case K::VarEqConst: return rows.cells[k][i] == c;
            case K::VarLtConst: return rows.cells[k][i] < c;
            case K::VarGtConst: return rows.cells[k][i] > c;
            case K::VarLtVar: return rows.cells[k][i] < rows.cells[j][i];
            case K::ActEq: return rows.action[i] == k;
            case K::AbsDiffLt: return std::abs(rows.cells[k][i] - rows.cells[j][i]) < c;
            default: return false;
        }
    }
};

struct Cand {
    Lit a;
    bool conj = false;
    Lit b;
    int tp = 0, fp = 0, fires = 0;

    int cx() const { return conj ? 1 + a.cx() + b.cx() : a.cx(); }
};

class Scorer {
public:
    Scorer(int total_pos, bool clean, int max_fires = -1)
        : total_pos_(total_pos), clean_(clean), max_fires_(max_fires) {}

    // true if x beats y
    bool better(const Cand& x, const Cand& y) const {
        const long long fnx = total_pos_ - x.tp, fny = total_pos_ - y.tp;
        const long long lhs = static_cast<long long>(x.tp) * (2LL * y.tp + y.fp + fny);
        const long long rhs = static_cast<long long>(y.tp) * (2LL * x.tp + x.fp + fnx);
        if (lhs != rhs) return lhs > rhs;
        if (x.cx() != y.cx()) return x.cx() < y.cx();
        // broader support: firing on more rows the labels leave free
        if (x.fires != y.fires) return x.fires > y.fires;
        if (x.conj != y.conj) return !x.conj;
        if (!(x.a == y.a)) return x.a < y.a;
        return x.b < y.b;
    }
    bool eligible(const Cand& c) const {
        return !clean_ || (c.fp == 0 && c.tp > 0 && (max_fires_ < 0 || c.fires <= max_fires_));
    }

private:
    long long total_pos_;
    bool clean_;
    int max_fires_;
};

struct Gather {
    const Rows& rows;
    const std::vector<Label>& labels;
    const std::vector<int>& pool;
    const std::vector<int>& actions;

    // visit(lit, tp, fp, fires) over all literal families on the subset
    template <class Visit>
    void run(const std::vector<int>& subset, Visit&& visit) const {
        std::array<int, 256> pos{}, neg{}, all{};
        int tot_p = 0, tot_n = 0;
        const int tot = static_cast<int>(subset.size());
        for (int i : subset) {
            tot_p += labels[i] == Label::Positive;
            tot_n += labels[i] == Label::Negative;
        }
        auto count = [&](int i, int v) {
            ++all[v];
            if (labels[i] == Label::Positive) ++pos[v];
            else if (labels[i] == Label::Negative) ++neg[v];
        };
        for (int k : pool) {
            pos.fill(0);
            neg.fill(0);
            all.fill(0);
            const Byte* col = rows.cells[k].data();
            for (int i : subset) count(i, col[i]);
            int cp = 0, cn = 0, ca = 0, prev = -1;
            for (int v = 0; v < 256; ++v) {
                if (all[v] == 0) continue;
                const int pv = pos[v], nv = neg[v];
                if (prev >= 0) visit(Lit{K::VarLtConst, k, 0, prev + 1}, cp, cn, ca);
                visit(Lit{K::VarEqConst, k, 0, v}, pv, nv, all[v]);
                cp += pv;
                cn += nv;
                ca += all[v];
                if (ca < tot) visit(Lit{K::VarGtConst, k, 0, v}, tot_p - cp, tot_n - cn, tot - ca);
                prev = v;
            }
        }
        for (std::size_t x = 0; x < pool.size(); ++x) {
            for (std::size_t y = 0; y < pool.size(); ++y) {
                if (x == y) continue;
                const Byte* a = rows.cells[pool[x]].data();
                const Byte* b = rows.cells[pool[y]].data();
                int tp = 0, fp = 0, fires = 0;
                for (int i : subset) {
                    if (a[i] < b[i]) {
                        ++fires;
                        tp += labels[i] == Label::Positive;
                        fp += labels[i] == Label::Negative;
                    }
                }
                if (fires > 0) visit(Lit{K::VarLtVar, pool[x], pool[y], 0}, tp, fp, fires);
                if (y < x) continue;
                pos.fill(0);
                neg.fill(0);
                all.fill(0);
                for (int i : subset) count(i, std::abs(a[i] - b[i]));
                int cp = 0, cn = 0, ca = 0;
                for (int d = 0; d < 256; ++d) {
                    if (all[d] == 0) continue;
                    cp += pos[d];
                    cn += neg[d];
                    ca += all[d];
                    if (ca < tot) visit(Lit{K::AbsDiffLt, pool[x], pool[y], d + 1}, cp, cn, ca);
                }
            }
        }
        for (int a : actions) {
            int tp = 0, fp = 0, fires = 0;
            for (int i : subset) {
                if (rows.action[i] != a) continue;
                ++fires;
                tp += labels[i] == Label::Positive;
                fp += labels[i] == Label::Negative;
            }
            if (fires > 0) visit(Lit{K::ActEq, a, 0, 0}, tp, fp, fires);
        }
    }
};

bool constant_column(const std::vector<Byte>& col) {
    return std::all_of(col.begin(), col.end(), [&](Byte b) { return b == col.front(); });
}

}  // namespace

PredicateFit search_predicate(const Rows& rows, const std::vector<Label>& labels, const SearchConfig& cfg,
                              bool require_clean, int max_fires) {
    const int n = static_cast<int>(rows.size());
    if (static_cast<int>(labels.size()) != n) throw UsageError("one label per row required");
    int total_pos = 0, total_neg = 0;
    for (Label l : labels) {
        total_pos += l == Label::Positive;
        total_neg += l == Label::Negative;
    }
    std::vector<int> pool;
    for (int k = 0; k < rows.n_cells; ++k) {
        if (std::find(cfg.excluded.begin(), cfg.excluded.end(), k) != cfg.excluded.end()) continue;
        if (!constant_column(rows.cells[k])) pool.push_back(k);
    }
    std::vector<int> all;
    for (int i = 0; i < n; ++i)
        if (labels[i] != Label::Ignore) all.push_back(i);

    const Scorer scorer(total_pos, require_clean, max_fires);
    Cand best;
    bool have = false;
    auto offer = [&](const Cand& c) {
        if (!scorer.eligible(c)) return;
        if (!have || scorer.better(c, best)) {
            best = c;
            have = true;
        }
    };
    offer(Cand{Lit{K::Always}, false, {}, total_pos, total_neg, static_cast<int>(all.size())});
    offer(Cand{Lit{K::Never}, false, {}, 0, 0, 0});

    const int width = std::max(1, cfg.conjunction_width);
    std::vector<Cand> top;
    const Scorer ranker(total_pos, false);
    Gather g{rows, labels, pool, rows.actions};
    g.run(all, [&](const Lit& lit, int tp, int fp, int fires) {
        Cand c{lit, false, {}, tp, fp, fires};
        offer(c);
        if (tp == 0) return;
        if (static_cast<int>(top.size()) < width) {
            top.push_back(c);
            std::sort(top.begin(), top.end(), [&](const Cand& x, const Cand& y) { return ranker.better(x, y); });
        } else if (ranker.better(c, top.back())) {
            top.back() = c;
            std::sort(top.begin(), top.end(), [&](const Cand& x, const Cand& y) { return ranker.better(x, y); });
        }
    });

    const bool perfect = have && best.fp == 0 && best.tp == total_pos;
    if (!perfect) {
        for (const Cand& a : top) {
            std::vector<int> subset;
            for (int i : all)
                if (a.a.holds(rows, i)) subset.push_back(i);
            g.run(subset, [&](const Lit& lit, int tp, int fp, int fires) {
                if (lit == a.a) return;
                Cand c;
                c.conj = true;
                c.a = std::min(a.a, lit);
                c.b = std::max(a.a, lit);
                c.tp = tp;
                c.fp = fp;
                c.fires = fires;
                offer(c);
            });
        }
    }

    PredicateFit out;
    if (!have) {
        out.pred = Never();
        out.tp = 0;
        out.fp = 0;
        out.fn = total_pos;
        return out;
    }
    out.pred = best.conj ? And(best.a.make(), best.b.make()) : best.a.make();
    out.tp = best.tp;
    out.fp = best.fp;
    out.fn = total_pos - best.tp;
    out.fires = best.fires;
    return out;
}

PredicateFit search_predicate(const Rows& rows, const std::vector<bool>& positives, const SearchConfig& cfg) {
    std::vector<Label> labels(positives.size());
    for (std::size_t i = 0; i < positives.size(); ++i) labels[i] = positives[i] ? Label::Positive : Label::Negative;
    return search_predicate(rows, labels, cfg, false);
}

}  // namespace comet
