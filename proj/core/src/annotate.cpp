#include "comet/annotate.hpp"

#include <algorithm>
#include <cstdlib>
#include <numeric>
#include <regex>
#include <set>
#include <sstream>

#include "httplib.h"
#include "json.hpp"

namespace comet {

namespace {

std::string cell_name(int c) { return "s" + std::to_string(c); }

std::string binding_text(const PropertyBinding& b) {
    std::string rhs = b.scale == 1 ? cell_name(b.cell)
                      : b.scale == -1 ? "-" + cell_name(b.cell)
                                      : std::to_string(b.scale) + "*" + cell_name(b.cell);
    if (b.offset > 0) rhs += " + " + std::to_string(b.offset);
    if (b.offset < 0) rhs += " - " + std::to_string(-b.offset);
    return b.object_name() + "." + b.property + " = " + rhs;
}

bool is_bound(const CausalWorldModel& m, int cell) { return m.binding_for(cell) != nullptr; }

// cells whose rules connect `start` downstream to the nearest bound cells
std::set<int> chain_to_bindings(const CausalWorldModel& m, int start) {
    std::map<int, std::vector<int>> readers;
    for (const auto& e : m.derived_edges())
        if (!e.from_action && e.source != e.target) readers[e.source].push_back(e.target);
    std::set<int> seen{start};
    std::vector<int> level{start};
    while (!level.empty()) {
        if (std::any_of(level.begin(), level.end(), [&](int c) { return is_bound(m, c); })) break;
        std::vector<int> next;
        for (int c : level)
            for (int r : readers[c])
                if (seen.insert(r).second) next.push_back(r);
        std::sort(next.begin(), next.end());
        level = std::move(next);
    }
    return seen;
}

}  // namespace

PromptBundle build_prompt(const CausalWorldModel& model, const std::vector<int>& cells) {
    std::set<int> rules;
    for (int c : cells) {
        if (!model.rules.count(c)) throw UnmodeledCell("cell " + cell_name(c) + " has no rule in the model");
        for (int r : chain_to_bindings(model, c))
            if (model.rules.count(r)) rules.insert(r);
    }
    std::string text = "Internal state cells of the " + model.env + " environment are named s0 to s" +
                       std::to_string(model.ram_size - 1) + ". Actions are numbered integers.\n";
    text += "\nObject properties bound to cells:\n";
    if (model.bindings.empty()) text += "  (none)\n";
    for (const auto& b : model.bindings) text += "  " + binding_text(b) + "\n";
    text += "\nUpdate equations, applied to all cells at once each frame:\n";
    for (int r : rules) {
        std::string rule = describe_rule(r, model.rules.at(r).ruleset);
        std::size_t pos = 0;
        while ((pos = rule.find('\n', pos)) != std::string::npos) rule.replace(pos++, 1, "\n  ");
        text += "  " + rule + "\n";
    }
    for (int c : cells)
        if (const PropertyBinding* b = model.binding_for(c)) text += "\n" + cell_name(c) + " is bound directly: " + binding_text(*b) + "\n";
    text += "\nCells to label:";
    for (int c : cells) text += " " + cell_name(c);
    text += "\nReply with one line per cell in the form \"sK: short description\" and nothing else.\n";
    return PromptBundle{cells, text};
}

PromptBundle build_prompt(const CausalWorldModel& model, int cell) { return build_prompt(model, std::vector<int>{cell}); }

std::vector<Annotation> heuristic_annotate(const CausalWorldModel& model) {
    std::set<int> cells;
    for (const auto& [t, r] : model.rules) cells.insert(t);
    for (const auto& b : model.bindings) cells.insert(b.cell);

    std::vector<Annotation> out;
    for (int c : cells) {
        Annotation a{c, "", AnnotationSource::Heuristic, Confidence::High};
        const auto rit = model.rules.find(c);
        const RuleSet* rs = rit == model.rules.end() ? nullptr : &rit->second.ruleset;
        if (const PropertyBinding* b = model.binding_for(c)) {
            a.label = b->object_name() + "." + b->property;
        } else if (rs && rs->cases.empty() && rs->fallback->kind == Expr::Kind::Const) {
            a.label = "constant";
        }
        if (a.label.empty() && rs) {
            // a cell that cycles on its own: count up and wrap, or toggle between 0 and 1
            const LinearForm f = linear_form(rs->fallback);
            const bool own = f.acts.empty() && f.cells.size() == 1 && f.cells.count(c);
            const int coef = own ? ((f.cells.at(c) % 256) + 256) % 256 : 0;
            if (rs->cases.size() == 1 && coef == 1 && f.constant == 1) {
                const Case& k = rs->cases.front();
                if (k.when->kind == Pred::Kind::VarEqConst && k.when->k == c && k.then->kind == Expr::Kind::Const &&
                    k.then->value == 0)
                    a.label = "frame counter (period " + std::to_string(k.when->c + 1) + ")";
            } else if (rs->cases.empty() && coef == 255 && f.constant == 1) {
                a.label = "frame counter (period 2)";
            }
        }
        if (a.label.empty()) {
            // added to a bound position cell every step
            const PropertyBinding* pos = nullptr;
            double best = -1.0;
            for (const auto& [t, r] : model.rules) {
                const PropertyBinding* b = model.binding_for(t);
                if (!b || (b->property != "x" && b->property != "y")) continue;
                const LinearForm f = linear_form(r.ruleset.fallback);
                const bool adds = f.acts.empty() && f.cells.size() == 2 && f.cells.count(t) && f.cells.count(c) &&
                                  f.cells.at(t) == 1 && f.cells.at(c) == 1;
                if (adds && r.ruleset.accuracy() > best) {
                    best = r.ruleset.accuracy();
                    pos = b;
                }
            }
            if (pos) a.label = pos->object_name() + (pos->property == "y" ? " vertical" : " horizontal") + " velocity";
        }
        if (a.label.empty()) {
            a.label = "auxiliary";
            a.confidence = Confidence::Low;
        }
        out.push_back(a);
    }
    return out;
}

std::vector<Annotation> parse_annotation_block(const std::string& text, const std::vector<int>& wanted) {
    static const std::regex line_re(R"(^\s*[-*]?\s*`?s(\d+)`?\s*[:=]\s*(.*\S)\s*$)");
    std::vector<Annotation> out;
    std::set<int> done;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::smatch m;
        if (!std::regex_match(line, m, line_re)) continue;
        const int cell = std::stoi(m[1].str());
        if (std::find(wanted.begin(), wanted.end(), cell) == wanted.end() || !done.insert(cell).second) continue;
        out.push_back(Annotation{cell, m[2].str(), AnnotationSource::Llm, Confidence::High});
    }
    return out;
}

namespace {

struct Endpoint {
    std::string base;  // scheme://host[:port]
    std::string path;
};

Endpoint split_url(const std::string& url) {
    static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(url, m, re)) throw UsageError("malformed endpoint url '" + url + "'");
    return Endpoint{m[1].str(), m[2].matched ? m[2].str() : "/"};
}

// reply text from a chat-completion body; bodies that are not json are taken verbatim
std::string reply_text(const std::string& body) {
    const auto doc = nlohmann::json::parse(body, nullptr, false);
    if (doc.is_discarded()) return body;
    try {
        return doc.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception&) {
        return body;
    }
}

std::vector<std::vector<int>> components(const CausalWorldModel& model, const std::vector<int>& cells) {
    std::map<int, int> parent;
    for (int c : cells) parent[c] = c;
    auto find = [&](int c) {
        while (parent[c] != c) c = parent[c] = parent[parent[c]];
        return c;
    };
    for (const auto& e : model.derived_edges())
        if (!e.from_action && parent.count(e.source) && parent.count(e.target)) {
            const int a = find(e.source), b = find(e.target);
            if (a != b) parent[std::max(a, b)] = std::min(a, b);
        }
    std::map<int, std::vector<int>> groups;
    for (int c : cells) groups[find(c)].push_back(c);
    std::vector<std::vector<int>> out;
    for (auto& [root, g] : groups) out.push_back(std::move(g));
    return out;
}

}  // namespace

std::vector<Annotation> llm_annotate(const CausalWorldModel& model, const LlmConfig& cfg) {
    const char* key = std::getenv(cfg.key_env.c_str());
    if (!key || !*key) throw MissingCredential("environment variable " + cfg.key_env + " is not set");
    const Endpoint ep = split_url(cfg.endpoint);

    std::vector<int> cells;
    for (const auto& [t, r] : model.rules) {
        const auto it = model.annotations.find(t);
        if (it == model.annotations.end() || it->second.source != AnnotationSource::Llm) cells.push_back(t);
    }

    httplib::Client client(ep.base);
    client.set_connection_timeout(cfg.timeout_seconds, 0);
    client.set_read_timeout(cfg.timeout_seconds, 0);
    client.set_write_timeout(cfg.timeout_seconds, 0);
    const httplib::Headers headers{{"Authorization", std::string("Bearer ") + key}};

    auto post = [&](const std::string& body) {
        for (int attempt = 0; attempt < 2; ++attempt) {
            auto res = client.Post(ep.path, headers, body, "application/json");
            if (res && res->status == 200) return res->body;
            if (attempt == 1) {
                if (!res) throw NetworkError("request to " + cfg.endpoint + " failed: " + httplib::to_string(res.error()));
                throw NetworkError("request to " + cfg.endpoint + " returned status " + std::to_string(res->status));
            }
        }
        return std::string();
    };

    std::vector<Annotation> out;
    for (const auto& group : components(model, cells)) {
        const PromptBundle prompt = build_prompt(model, group);
        const nlohmann::ordered_json request{
            {"model", cfg.model_name},
            {"messages",
             {{{"role", "system"}, {"content", "You label the internal state variables of a video game."}},
              {{"role", "user"}, {"content", prompt.text}}}}};
        std::string raw;
        std::vector<Annotation> labels;
        for (int attempt = 0; attempt < 2 && labels.empty(); ++attempt) {
            raw = reply_text(post(request.dump()));
            labels = parse_annotation_block(raw, group);
        }
        if (labels.empty()) throw AnnotationParseError("reply has no \"sK: label\" lines", raw);
        out.insert(out.end(), labels.begin(), labels.end());
    }
    return out;
}

void merge_annotations(CausalWorldModel& model, const std::vector<Annotation>& incoming) {
    for (const auto& a : incoming) {
        const auto it = model.annotations.find(a.cell);
        if (it != model.annotations.end() && it->second.source == AnnotationSource::Llm &&
            a.source == AnnotationSource::Heuristic)
            continue;
        model.annotations[a.cell] = a;
    }
}

}  // namespace comet
