#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "comet/model_io.hpp"
#include "comet/pipeline.hpp"

using namespace comet;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string output;
};

const fs::path& workdir() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / "comet_cli_test";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string path(const std::string& leaf) { return (workdir() / leaf).string(); }

std::string slurp(const std::string& p) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

Run run_cli(const std::string& args) {
    const std::string out = path("output.txt");
    const std::string cmd = std::string("\"") + COMET_CLI + "\" " + args + " > \"" + out + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out)};
}

const std::string& pong_trace() {
    static const std::string p = [] {
        const std::string t = path("pong.jsonl");
        REQUIRE(run_cli("sample --env minipong --steps 3000 --seed 7 --policy random --out " + t).code == 0);
        return t;
    }();
    return p;
}

const std::string& pong_model() {
    static const std::string p = [] {
        const std::string m = path("pong.json");
        REQUIRE(run_cli("extract --trace " + pong_trace() + " --out " + m).code == 0);
        return m;
    }();
    return p;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("sample writes the requested trace") {
    const Run r = run_cli("sample --env minipong --steps 5000 --seed 7 --policy random --out " + path("t.jsonl"));
    CHECK(r.code == 0);
    CHECK(r.output.find("5000") != std::string::npos);
    const std::string first = slurp(path("t.jsonl"));
    CHECK(std::count(first.begin(), first.end(), '\n') == 5001);

    run_cli("sample --env minipong --steps 5000 --seed 7 --policy random --out " + path("t2.jsonl"));
    CHECK(slurp(path("t2.jsonl")) == first);

    CHECK(run_cli("sample --env minifreeway --steps 20 --seed 1 --policy scripted:1,1,0,2 --out " + path("s.jsonl")).code == 0);
}

TEST_CASE("usage errors exit with 2") {
    const Run bad_env = run_cli("sample --env nosuch --steps 10 --out " + path("x.jsonl"));
    CHECK(bad_env.code == 2);
    CHECK(bad_env.output.find("minipong") != std::string::npos);
    CHECK(bad_env.output.find("minifreeway") != std::string::npos);
    CHECK(run_cli("sample --env minipong --steps 10 --bogus 1 --out " + path("x.jsonl")).code == 2);
    CHECK(run_cli("sample --env minipong --steps 10 --policy greedy --out " + path("x.jsonl")).code == 2);
    CHECK(run_cli("frobnicate").code == 2);
    CHECK(run_cli("refine --model " + pong_model() + " --out " + path("r.json")).code == 2);
    CHECK(run_cli("export --model " + pong_model() + " --format xml --out " + path("x.xml")).code == 2);
}

TEST_CASE("runtime failures exit with 1") {
    std::ofstream(path("empty.jsonl")).close();
    const Run r = run_cli("extract --trace " + path("empty.jsonl") + " --out " + path("e.json"));
    CHECK(r.code == 1);
    CHECK(run_cli("extract --trace " + path("missing.jsonl") + " --out " + path("e.json")).code == 1);
}

TEST_CASE("extract, annotate, eval and export") {
    const CausalWorldModel m = load_model(pong_model());
    CHECK(m.rules.size() >= 8);

    CHECK(run_cli("annotate --model " + pong_model() + " --mode heuristic --out " + path("a.json")).code == 0);
    const CausalWorldModel a = load_model(path("a.json"));
    for (const auto& [t, r] : a.rules) CHECK(a.annotations.count(t));

    const Run eval = run_cli("eval --model " + pong_model() + " --trace " + pong_trace());
    CHECK(eval.code == 0);
    CHECK(eval.output.find("modeled cells") != std::string::npos);
    CHECK(eval.output.find("unmodeled cells") != std::string::npos);

    CHECK(run_cli("export --model " + pong_model() + " --format json --out " + path("x.json")).code == 0);
    CHECK(slurp(path("x.json")) == slurp(pong_model()));
    CHECK(model_to_string(load_model(path("x.json"))) == model_to_string(m));

    CHECK(run_cli("export --model " + pong_model() + " --format dot --out " + path("x.dot")).code == 0);
    const std::string dot = slurp(path("x.dot"));
    CHECK(dot.find("s5 -> s3;") != std::string::npos);
    run_cli("export --model " + pong_model() + " --format dot --out " + path("y.dot"));
    CHECK(slurp(path("y.dot")) == dot);
}

TEST_CASE("refine rewrites the enemy rule") {
    const Run r = run_cli("refine --model " + pong_model() + " --env minipong --seed 7 --trace " + pong_trace() + " --out " +
                        path("r.json"));
    CHECK(r.code == 0);
    const CausalWorldModel refined = load_model(path("r.json"));
    CHECK(refined.rules.at(1).status == RuleStatus::RefutedRefit);

    CHECK(run_cli("sample --env minipong --steps 1000 --seed 1007 --out " + path("held.jsonl")).code == 0);
    const Run eval = run_cli("eval --model " + path("r.json") + " --trace " + path("held.jsonl"));
    CHECK(eval.code == 0);
    CHECK(eval.output.find("s1   1.0000") != std::string::npos);
}

}  // TEST_SUITE
