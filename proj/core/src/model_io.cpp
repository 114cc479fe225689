#include "comet/model_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace comet {

using json = nlohmann::ordered_json;

namespace {

std::string source_name(AnnotationSource s) { return s == AnnotationSource::Llm ? "llm" : "heuristic"; }
std::string confidence_name(Confidence c) { return c == Confidence::Low ? "low" : "high"; }

AnnotationSource parse_source(const std::string& s) {
    if (s == "llm") return AnnotationSource::Llm;
    if (s == "heuristic") return AnnotationSource::Heuristic;
    throw FormatError("unknown annotation source '" + s + "'", 0);
}

Confidence parse_confidence(const std::string& s) {
    if (s == "low") return Confidence::Low;
    if (s == "high") return Confidence::High;
    throw FormatError("unknown confidence '" + s + "'", 0);
}

json rule_json(const UpdateRule& r) {
    json cases = json::array();
    for (const auto& c : r.ruleset.cases) cases.push_back({{"when", to_sexpr(c.when)}, {"then", to_sexpr(c.then)}});
    const Inputs in = inputs_of(r.ruleset);
    return {{"target", r.target},
            {"status", status_name(r.status)},
            {"cases", cases},
            {"default", to_sexpr(r.ruleset.fallback)},
            {"correct", r.ruleset.correct},
            {"rows", r.ruleset.rows},
            {"inputs", {{"cells", in.cells}, {"actions", in.actions}}}};
}

}  // namespace

std::string model_to_string(const CausalWorldModel& m) {
    json doc;
    doc["format"] = "comet-model";
    doc["version"] = kModelFormatVersion;
    doc["env"] = m.env;
    doc["ram_size"] = m.ram_size;
    json bindings = json::array();
    for (const auto& b : m.bindings)
        bindings.push_back({{"category", b.category},
                            {"instance", b.instance},
                            {"property", b.property},
                            {"cell", b.cell},
                            {"scale", b.scale},
                            {"offset", b.offset},
                            {"exact", b.exact},
                            {"alternates", b.alternates}});
    doc["bindings"] = bindings;
    json constants = json::array();
    for (const auto& c : m.constants)
        constants.push_back(
            {{"category", c.category}, {"instance", c.instance}, {"property", c.property}, {"value", c.value}});
    doc["constants"] = constants;
    json rules = json::array();
    for (const auto& [t, r] : m.rules) rules.push_back(rule_json(r));
    doc["rules"] = rules;
    json edges = json::array();
    for (const auto& e : m.derived_edges())
        edges.push_back({{"source", (e.from_action ? "a" : "s") + std::to_string(e.source)}, {"target", e.target}});
    doc["edges"] = edges;
    json notes = json::array();
    for (const auto& [c, a] : m.annotations)
        notes.push_back({{"cell", c},
                         {"label", a.label},
                         {"source", source_name(a.source)},
                         {"confidence", confidence_name(a.confidence)}});
    doc["annotations"] = notes;
    json unbound = json::array();
    for (const auto& u : m.coverage.unbound)
        unbound.push_back({{"category", u.category}, {"instance", u.instance}, {"property", u.property}});
    std::vector<int> unexplained;
    for (const auto& [t, r] : m.rules)
        if (r.status == RuleStatus::Unexplained) unexplained.push_back(t);
    doc["coverage"] = {{"unexplained", unexplained}, {"unbound", unbound}};
    return doc.dump(2) + "\n";
}

CausalWorldModel model_from_string(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError(std::string("model is not valid json: ") + e.what(), 0);
    }
    try {
        if (doc.value("format", "") != "comet-model") throw FormatError("not a comet-model document", 0);
        if (!doc.contains("version")) throw FormatError("model document lacks a version", 0);
        if (doc["version"].get<int>() != kModelFormatVersion)
            throw FormatError("unsupported model version " + doc["version"].dump(), 0);
        CausalWorldModel m;
        m.env = doc.at("env").get<std::string>();
        m.ram_size = doc.at("ram_size").get<int>();
        for (const auto& b : doc.at("bindings"))
            m.bindings.push_back(PropertyBinding{b.at("category"), b.at("instance"), b.at("property"), b.at("cell"),
                                                 b.at("scale"), b.at("offset"), b.at("exact"),
                                                 b.at("alternates").get<std::vector<int>>()});
        for (const auto& c : doc.at("constants"))
            m.constants.push_back(ConstantProperty{c.at("category"), c.at("instance"), c.at("property"), c.at("value")});
        for (const auto& r : doc.at("rules")) {
            UpdateRule u;
            u.target = r.at("target");
            if (u.target < 0 || u.target >= m.ram_size)
                throw FormatError("rule target s" + std::to_string(u.target) + " outside ram", 0);
            u.status = parse_status(r.at("status"));
            for (const auto& c : r.at("cases"))
                u.ruleset.cases.push_back(Case{parse_pred(c.at("when")), parse_expr(c.at("then"))});
            u.ruleset.fallback = parse_expr(r.at("default"));
            u.ruleset.correct = r.at("correct");
            u.ruleset.rows = r.at("rows");
            m.rules[u.target] = u;
        }
        for (const auto& a : doc.at("annotations")) {
            Annotation n{a.at("cell"), a.at("label"), parse_source(a.at("source")), parse_confidence(a.at("confidence"))};
            m.annotations[n.cell] = n;
        }
        for (const auto& u : doc.at("coverage").at("unbound"))
            m.coverage.unbound.push_back(UnboundProperty{u.at("category"), u.at("instance"), u.at("property")});
        m.refresh();
        return m;
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed model document: ") + e.what(), 0);
    } catch (const ParseError& e) {
        throw FormatError(std::string("malformed rule text: ") + e.what(), 0);
    }
}

void save_model(const CausalWorldModel& model, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path);
    f << model_to_string(model);
    if (!f) throw Error("write failed for " + path);
}

CausalWorldModel load_model(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot read " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return model_from_string(ss.str());
}

std::string model_to_dot(const CausalWorldModel& m) {
    std::ostringstream out;
    out << "digraph \"" << m.env << "\" {\n";
    out << "  rankdir=LR;\n";
    std::set<int> cells;
    for (const auto& [t, r] : m.rules) cells.insert(t);
    for (const auto& b : m.bindings) {
        const std::string prop = b.object_name() + "." + b.property;
        out << "  \"" << prop << "\" [shape=ellipse, class=\"property\"];\n";
    }
    for (int c : cells) {
        const bool bound = m.binding_for(c) != nullptr;
        std::string label = "s" + std::to_string(c);
        const auto a = m.annotations.find(c);
        if (a != m.annotations.end()) label += "\\n" + a->second.label;
        out << "  s" << c << " [shape=box, style=filled, class=\"" << (bound ? "light" : "dark")
            << "\", fillcolor=\"" << (bound ? "lightblue" : "darkblue") << "\", fontcolor=\""
            << (bound ? "black" : "white") << "\", label=\"";
        for (char ch : label) out << (ch == '"' ? std::string("\\\"") : std::string(1, ch));
        out << "\"];\n";
    }
    std::set<int> acts;
    const auto edges = m.derived_edges();
    for (const auto& e : edges)
        if (e.from_action) acts.insert(e.source);
    for (int a : acts) out << "  a" << a << " [shape=diamond, label=\"action " << a << "\"];\n";
    for (const auto& b : m.bindings)
        if (cells.count(b.cell))
            out << "  s" << b.cell << " -> \"" << b.object_name() << "." << b.property << "\" [style=dashed];\n";
    for (const auto& e : edges)
        out << "  " << (e.from_action ? "a" : "s") << e.source << " -> s" << e.target << ";\n";
    out << "}\n";
    return out.str();
}

}  // namespace comet
