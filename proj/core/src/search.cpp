#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <unordered_map>

#include "comet/symreg.hpp"

namespace comet {

namespace {

constexpr int kMaxSlots = 12;
constexpr int kActSlots = 3;
constexpr int kConstSlot = kMaxSlots + kActSlots;
using Key = std::array<Byte, kConstSlot + 1>;

struct KeyHash {
    std::size_t operator()(const Key& k) const {
        std::size_t h = 1469598103934665603ULL;
        for (Byte b : k) h = (h ^ b) * 1099511628211ULL;
        return h;
    }
};

int nonzero_vars(const Key& k) {
    int n = 0;
    for (int i = 0; i < kMaxSlots; ++i) n += k[i] != 0;
    return n;
}

enum class Op : std::uint8_t { Var, Act, Const, Neg, Mul, Add, Sub };

struct Node {
    Key key;
    int cx;
    Op op;
    int value;  // slot, action, constant or multiplier
    int l = -1, r = -1;
    int ls = 0, rs = 0;  // sizes of children
};

struct Level {
    std::vector<Node> nodes;
    std::unordered_map<Key, int, KeyHash> index;

    void offer(const Node& n) {
        if (nonzero_vars(n.key) > 2) return;
        auto [it, fresh] = index.emplace(n.key, static_cast<int>(nodes.size()));
        if (fresh) {
            nodes.push_back(n);
        } else if (n.cx < nodes[it->second].cx) {
            nodes[it->second] = n;
        }
    }
};

struct Form {
    ExprPtr expr;  // Var leaves hold slot indices
    int cx;
    int size;
    int nvar;
    std::array<int, 2> slot{};
    std::array<Byte, 2> coef{};
    std::array<Byte, kActSlots> act{};
    Byte constant = 0;
    bool zero = false;
};

struct Library {
    std::vector<Form> forms;
};

struct LibraryId {
    int nv, na, max_size, const_range;
    bool operator<(const LibraryId& o) const {
        return std::tie(nv, na, max_size, const_range) < std::tie(o.nv, o.na, o.max_size, o.const_range);
    }
};

ExprPtr build(const std::vector<Level>& levels, int size, int idx) {
    const Node& n = levels[size].nodes[idx];
    switch (n.op) {
        case Op::Var: return Var(n.value);
        case Op::Act: return Act(n.value);
        case Op::Const: return Const(n.value);
        case Op::Neg: return Neg(build(levels, n.ls, n.l));
        case Op::Mul: return MulConst(n.value, build(levels, n.ls, n.l));
        case Op::Add: return Add(build(levels, n.ls, n.l), build(levels, n.rs, n.r));
        case Op::Sub: return Sub(build(levels, n.ls, n.l), build(levels, n.rs, n.r));
    }
    return nullptr;
}

// const_range < 0 means no Const leaves (offsets are fitted instead)
std::shared_ptr<const Library> make_library(const LibraryId& id) {
    std::vector<Level> levels(id.max_size + 1);
    Key zero{};
    for (int s = 0; s < id.nv; ++s) {
        Node n{zero, 2, Op::Var, s};
        n.key[s] = 1;
        levels[1].offer(n);
    }
    for (int a = 0; a < id.na; ++a) {
        Node n{zero, 2, Op::Act, a};
        n.key[kMaxSlots + a] = 1;
        levels[1].offer(n);
    }
    for (int c = -id.const_range; c <= id.const_range && id.const_range >= 0; ++c) {
        Node n{zero, 1, Op::Const, c};
        n.key[kConstSlot] = static_cast<Byte>(c);
        levels[1].offer(n);
    }
    for (int size = 2; size <= id.max_size; ++size) {
        Level& out = levels[size];
        const Level& prev = levels[size - 1];
        for (int i = 0; i < static_cast<int>(prev.nodes.size()); ++i) {
            const Node& c = prev.nodes[i];
            Node n{c.key, c.cx + 1, Op::Neg, 0, i, -1, size - 1, 0};
            for (auto& b : n.key) b = static_cast<Byte>(-b);
            out.offer(n);
            for (int m : {-4, -3, -2, 2, 3, 4}) {
                Node mn{c.key, c.cx + 1, Op::Mul, m, i, -1, size - 1, 0};
                for (auto& b : mn.key) b = static_cast<Byte>(b * m);
                out.offer(mn);
            }
        }
        for (int ls = 1; ls <= size - 2; ++ls) {
            const int rs = size - 1 - ls;
            const Level& L = levels[ls];
            const Level& R = levels[rs];
            for (int i = 0; i < static_cast<int>(L.nodes.size()); ++i) {
                const Node& l = L.nodes[i];
                for (int j = 0; j < static_cast<int>(R.nodes.size()); ++j) {
                    const Node& r = R.nodes[j];
                    Node add{l.key, l.cx + r.cx + 1, Op::Add, 0, i, j, ls, rs};
                    Node sub{l.key, l.cx + r.cx + 1, Op::Sub, 0, i, j, ls, rs};
                    for (std::size_t b = 0; b < add.key.size(); ++b) {
                        add.key[b] = static_cast<Byte>(l.key[b] + r.key[b]);
                        sub.key[b] = static_cast<Byte>(l.key[b] - r.key[b]);
                    }
                    if (ls <= rs) out.offer(add);
                    out.offer(sub);
                }
            }
        }
    }

    // cheapest representative per form across sizes
    std::unordered_map<Key, std::pair<int, int>, KeyHash> best;  // key -> (size, idx)
    for (int size = 1; size <= id.max_size; ++size) {
        for (int i = 0; i < static_cast<int>(levels[size].nodes.size()); ++i) {
            const Node& n = levels[size].nodes[i];
            auto [it, fresh] = best.emplace(n.key, std::make_pair(size, i));
            if (!fresh && n.cx < levels[it->second.first].nodes[it->second.second].cx)
                it->second = {size, i};
        }
    }
    auto lib = std::make_shared<Library>();
    bool have_zero = false;
    for (auto& [key, loc] : best) {
        Form f;
        f.expr = build(levels, loc.first, loc.second);
        f.cx = levels[loc.first].nodes[loc.second].cx;
        f.size = loc.first;
        f.nvar = 0;
        for (int s = 0; s < kMaxSlots; ++s) {
            if (key[s] == 0) continue;
            f.slot[f.nvar] = s;
            f.coef[f.nvar] = key[s];
            ++f.nvar;
        }
        for (int a = 0; a < kActSlots; ++a) f.act[a] = key[kMaxSlots + a];
        f.constant = key[kConstSlot];
        f.zero = key == zero;
        if (f.zero && id.const_range < 0) continue;
        have_zero |= f.zero;
        lib->forms.push_back(std::move(f));
    }
    if (id.const_range < 0) {
        // placeholder for a pure constant; the value comes from offset fitting
        Form f;
        f.expr = Const(0);
        f.cx = 1;
        f.size = 1;
        f.nvar = 0;
        f.zero = true;
        lib->forms.push_back(std::move(f));
    }
    std::sort(lib->forms.begin(), lib->forms.end(), [](const Form& a, const Form& b) {
        if (a.cx != b.cx) return a.cx < b.cx;
        if (a.size != b.size) return a.size < b.size;
        return compare(a.expr, b.expr) < 0;
    });
    return lib;
}

std::shared_ptr<const Library> library(const LibraryId& id) {
    static std::mutex mu;
    static std::map<LibraryId, std::shared_ptr<const Library>> cache;
    {
        std::lock_guard<std::mutex> lock(mu);
        auto it = cache.find(id);
        if (it != cache.end()) return it->second;
    }
    auto lib = make_library(id);
    std::lock_guard<std::mutex> lock(mu);
    return cache.emplace(id, lib).first->second;
}

ExprPtr remap(const ExprPtr& e, const std::vector<int>& slots) {
    switch (e->kind) {
        case Expr::Kind::Var: return Var(slots[e->value]);
        case Expr::Kind::Const:
        case Expr::Kind::Act: return e;
        case Expr::Kind::Neg: return Neg(remap(e->a, slots));
        case Expr::Kind::Mul: return MulConst(e->value, remap(e->a, slots));
        case Expr::Kind::Add: return Add(remap(e->a, slots), remap(e->b, slots));
        case Expr::Kind::Sub: return Sub(remap(e->a, slots), remap(e->b, slots));
    }
    return e;
}

ExprPtr with_offset(const ExprPtr& base, bool zero, int c, int& cx, int& size) {
    const int sc = c <= 128 ? c : c - 256;
    if (zero) {
        cx = 1;
        size = 1;
        return Const(sc);
    }
    if (sc == 0) return base;
    if (base->kind == Expr::Kind::Neg) {
        cx = complexity(base->a) + 2;
        size = node_count(base->a) + 2;
        return Sub(Const(sc), base->a);
    }
    cx = complexity(base) + 2;
    size = node_count(base) + 2;
    return sc > 0 ? Add(base, Const(sc)) : Sub(base, Const(-sc));
}

class Front {
public:
    int need(int cx) const {
        int best = -1;
        for (const auto& c : items_)
            if (c.complexity <= cx) best = std::max(best, c.correct);
        return best + 1;
    }
    void offer(const Candidate& c) {
        if (c.correct < need(c.complexity)) return;
        for (const auto& o : items_)
            if (o.complexity == c.complexity && o.correct == c.correct) return;
        std::vector<Candidate> kept;
        for (auto& o : items_)
            if (!(o.complexity >= c.complexity && o.correct <= c.correct)) kept.push_back(o);
        kept.push_back(c);
        std::sort(kept.begin(), kept.end(),
                  [](const Candidate& a, const Candidate& b) { return a.complexity < b.complexity; });
        items_ = std::move(kept);
    }
    std::vector<Candidate> take() { return std::move(items_); }

private:
    std::vector<Candidate> items_;
};

std::vector<double> ranks(const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
        i = j + 1;
    }
    return r;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const double n = static_cast<double>(a.size());
    if (n < 2) return 0.0;
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa <= 0 || sbb <= 0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

bool is_constant(const std::vector<Byte>& col) {
    return std::all_of(col.begin(), col.end(), [&](Byte b) { return b == col.front(); });
}

bool excluded(const SearchConfig& cfg, int k) {
    return std::find(cfg.excluded.begin(), cfg.excluded.end(), k) != cfg.excluded.end();
}

}  // namespace

std::vector<int> prefilter_vars(const Rows& rows, const SearchConfig& cfg) {
    const int limit = std::clamp(cfg.top_k_vars, 1, kMaxSlots);
    std::vector<int> chosen;
    const bool keep_target = !excluded(cfg, rows.target) && rows.target < rows.n_cells && rows.size() > 0;
    if (keep_target) chosen.push_back(rows.target);
    if (rows.size() == 0) return chosen;

    std::vector<double> label(rows.size()), delta(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        label[i] = rows.label[i];
        const int d = static_cast<int>(rows.label[i]) - rows.cells[rows.target][i];
        delta[i] = ((d + 128) % 256 + 256) % 256 - 128;
    }
    const auto rl = ranks(label), rd = ranks(delta);
    std::vector<std::pair<double, int>> scored;
    for (int k = 0; k < rows.n_cells; ++k) {
        if (k == rows.target || excluded(cfg, k) || is_constant(rows.cells[k])) continue;
        std::vector<double> col(rows.cells[k].begin(), rows.cells[k].end());
        const auto rc = ranks(col);
        const double s = std::max(std::abs(pearson(rc, rl)), std::abs(pearson(rc, rd)));
        scored.emplace_back(s, k);
    }
    std::stable_sort(scored.begin(), scored.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (const auto& [s, k] : scored) {
        if (static_cast<int>(chosen.size()) >= limit) break;
        chosen.push_back(k);
    }
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

std::vector<Candidate> search_equations(const Rows& rows, const SearchConfig& cfg) {
    const int n = static_cast<int>(rows.size());
    if (n == 0) return {};
    if (static_cast<int>(rows.actions.size()) > kActSlots) throw UsageError("at most three actions supported");
    const std::vector<int> vars = prefilter_vars(rows, cfg);
    const LibraryId id{static_cast<int>(vars.size()), static_cast<int>(rows.actions.size()),
                       std::max(1, cfg.max_expr_size), cfg.fit_offsets ? -1 : std::max(0, cfg.const_range)};
    const auto lib = library(id);

    std::vector<Byte> act_index(n);
    for (int i = 0; i < n; ++i) {
        auto it = std::find(rows.actions.begin(), rows.actions.end(), rows.action[i]);
        act_index[i] = static_cast<Byte>(it - rows.actions.begin());
    }
    const Byte* label = rows.label.data();
    const Byte* ai = act_index.data();

    Front front;
    constexpr int kChunk = 128;
    std::array<int, 256> hist{};
    for (const Form& f : lib->forms) {
        const Byte* x0 = f.nvar > 0 ? rows.cells[vars[f.slot[0]]].data() : nullptr;
        const Byte* x1 = f.nvar > 1 ? rows.cells[vars[f.slot[1]]].data() : nullptr;
        const Byte c0 = f.coef[0], c1 = f.coef[1];
        std::array<Byte, kActSlots> table{};
        for (int a = 0; a < kActSlots; ++a) table[a] = static_cast<Byte>(f.act[a] + f.constant);

        auto predict = [&](int i) -> Byte {
            Byte p = table[ai[i]];
            if (x0) p = static_cast<Byte>(p + c0 * x0[i]);
            if (x1) p = static_cast<Byte>(p + c1 * x1[i]);
            return p;
        };

        if (!cfg.fit_offsets) {
            const int need = front.need(f.cx);
            int correct = 0;
            bool aborted = false;
            for (int start = 0; start < n && !aborted; start += kChunk) {
                const int end = std::min(n, start + kChunk);
                for (int i = start; i < end; ++i) correct += predict(i) == label[i];
                if (correct + (n - end) < need) aborted = true;
            }
            if (aborted) continue;
            front.offer(Candidate{f.expr, correct, n, f.cx});
            continue;
        }

        int off_cx = f.cx + 2, off_size = f.size + 2;
        if (f.zero) {
            off_cx = 1;
            off_size = 1;
        } else if (f.expr->kind == Expr::Kind::Neg) {
            off_cx = f.cx + 1;
            off_size = f.size + 1;
        }
        const bool offset_ok = off_size <= cfg.max_expr_size;
        const int need0 = f.zero ? n + 1 : front.need(f.cx);
        const int need1 = offset_ok ? front.need(off_cx) : n + 1;
        hist.fill(0);
        int mx = 0;
        bool aborted = false;
        for (int start = 0; start < n && !aborted; start += kChunk) {
            const int end = std::min(n, start + kChunk);
            for (int i = start; i < end; ++i) {
                const int h = ++hist[static_cast<Byte>(label[i] - predict(i))];
                if (h > mx) mx = h;
            }
            const int rem = n - end;
            if (hist[0] + rem < need0 && mx + rem < need1) aborted = true;
        }
        if (aborted) continue;
        if (!f.zero && hist[0] >= need0) front.offer(Candidate{remap(f.expr, vars), hist[0], n, f.cx});
        if (offset_ok && mx >= need1) {
            int best_c = -1;
            for (int d = 0; d <= 128 && best_c < 0; ++d) {
                if (hist[d] == mx) best_c = d;
                else if (d > 0 && hist[(256 - d) & 255] == mx) best_c = (256 - d) & 255;
            }
            if (best_c != 0 || f.zero) {
                int cx = off_cx, size = off_size;
                ExprPtr e = with_offset(remap(f.expr, vars), f.zero, best_c, cx, size);
                front.offer(Candidate{e, mx, n, cx});
            }
        }
    }
    auto out = front.take();
    if (!cfg.fit_offsets)
        for (auto& c : out) c.expr = remap(c.expr, vars);
    return out;
}

std::optional<AffineFit> fit_affine(const std::vector<int>& xs, const std::vector<int>& ys, double theta) {
    if (xs.size() != ys.size() || xs.size() < 2) throw UsageError("fit_affine needs two equal series of length >= 2");
    if (std::all_of(xs.begin(), xs.end(), [&](int v) { return v == xs.front(); }))
        throw DegenerateSeries("cell series is constant");
    const int n = static_cast<int>(xs.size());
    std::optional<AffineFit> best;
    for (int scale : {1, -1, 2, -2}) {
        std::map<int, int> counts;
        for (int i = 0; i < n; ++i) ++counts[ys[i] - scale * xs[i]];
        int offset = 0, hits = -1;
        for (auto [o, c] : counts)
            if (c > hits || (c == hits && std::abs(o) < std::abs(offset))) {
                offset = o;
                hits = c;
            }
        if (hits < theta * n) continue;
        if (!best || n - hits < best->mismatches) best = AffineFit{scale, offset, hits == n, n - hits};
    }
    return best;
}

}  // namespace comet
