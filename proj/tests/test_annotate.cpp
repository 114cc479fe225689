#include <doctest.h>

#include <cstdlib>

#include "comet/annotate.hpp"
#include "comet/errors.hpp"
#include "comet/ground_truth.hpp"
#include "comet/minienvs.hpp"
#include "comet/pipeline.hpp"
#include "comet/trace.hpp"
#include "mock_llm.hpp"

using namespace comet;

namespace {

const char* const kKeyVar = "COMET_TEST_LLM_KEY";

CausalWorldModel extracted(const std::string& name, std::uint64_t seed) {
    auto env = make_env(name);
    auto policy = random_policy(seed, env->info().actions);
    return extract_world_model(sample(*env, *policy, 5000, seed), SearchConfig{});
}

const CausalWorldModel& pong_model() {
    static const CausalWorldModel m = extracted("minipong", 7);
    return m;
}

// only cells 3 and 5 still lack an llm label, so one request covers them
CausalWorldModel velocity_only() {
    CausalWorldModel m = pong_model();
    for (const auto& [t, r] : m.rules)
        if (t != pong::BALL_Y && t != pong::BALL_VY)
            m.annotations[t] = {t, "known", AnnotationSource::Llm, Confidence::High};
    return m;
}

LlmConfig config(const std::string& endpoint) {
    LlmConfig cfg;
    cfg.endpoint = endpoint;
    cfg.key_env = kKeyVar;
    cfg.timeout_seconds = 5;
    return cfg;
}

std::string label_of(const std::vector<Annotation>& as, int cell) {
    for (const auto& a : as)
        if (a.cell == cell) return a.label;
    return "";
}

}  // namespace

TEST_SUITE("annotate") {

TEST_CASE("prompts carry the equations back to the bound properties") {
    const PromptBundle p = build_prompt(pong_model(), pong::BALL_VY);
    CHECK(p.text.find("s3 = s3 + s5") != std::string::npos);
    CHECK(p.text.find("Ball.y = s3 - 14") != std::string::npos);
    CHECK(p.text.find("sK:") != std::string::npos);
    CHECK(build_prompt(pong_model(), pong::BALL_VY).text == p.text);

    const PromptBundle bound = build_prompt(pong_model(), pong::BALL_Y);
    CHECK(bound.text.find("s3 is bound directly: Ball.y = s3 - 14") != std::string::npos);

    CHECK_THROWS_AS(build_prompt(pong_model(), 30), UnmodeledCell);
}

TEST_CASE("heuristic labels") {
    const auto labels = heuristic_annotate(pong_model());
    CHECK(label_of(labels, pong::BALL_VY) == "Ball vertical velocity");
    CHECK(label_of(labels, pong::BALL_VX) == "Ball horizontal velocity");
    CHECK(label_of(labels, pong::BALL_Y) == "Ball.y");
    for (const auto& [t, r] : pong_model().rules) CHECK_FALSE(label_of(labels, t).empty());
    for (const auto& a : labels) CHECK(a.source == AnnotationSource::Heuristic);

    const auto gt = heuristic_annotate(ground_truth_model("minipong"));
    CHECK(label_of(gt, pong::CONST255) == "constant");
    CHECK(label_of(gt, pong::PARITY) == "frame counter (period 2)");

    const auto freeway = heuristic_annotate(ground_truth_model("minifreeway"));
    CHECK(label_of(freeway, freeway::counter_cell(8)) == "frame counter (period 3)");
    CHECK(label_of(freeway, freeway::counter_cell(9)) == "frame counter (period 4)");
}

TEST_CASE("annotation blocks parse wanted cells only") {
    const auto as = parse_annotation_block("Sure.\ns5: vertical velocity of the ball\ns4: horizontal\ns9:\n", {5, 9});
    REQUIRE(as.size() == 1);
    CHECK(as[0] == Annotation{5, "vertical velocity of the ball", AnnotationSource::Llm, Confidence::High});
    CHECK(parse_annotation_block(mock::kProseReply, {4, 5}).empty());
}

TEST_CASE("llm labels come from the recorded replies") {
    setenv(kKeyVar, "test-key", 1);
    mock::Server server({{200, mock::completion(mock::kVelocityReply)}});
    const auto as = llm_annotate(velocity_only(), config(server.endpoint()));
    REQUIRE(as.size() == 1);
    CHECK(as[0].cell == 5);
    CHECK(as[0].label == "vertical velocity of the ball");
    CHECK(as[0].source == AnnotationSource::Llm);

    const auto requests = server.requests();
    REQUIRE(requests.size() == 1);
    const auto doc = nlohmann::json::parse(requests[0]);
    CHECK(doc.at("model") == "gpt-4o");
    CHECK(doc.at("messages").size() == 2);
    CHECK(doc.at("messages").back().at("content").get<std::string>().find("s3 = s3 + s5") != std::string::npos);
    CHECK(server.auth()[0] == "Bearer test-key");
    unsetenv(kKeyVar);
}

TEST_CASE("unparseable replies are retried once then surfaced") {
    setenv(kKeyVar, "test-key", 1);
    {
        mock::Server server({{200, mock::completion(mock::kProseReply)}});
        try {
            llm_annotate(velocity_only(), config(server.endpoint()));
            FAIL("expected AnnotationParseError");
        } catch (const AnnotationParseError& e) {
            CHECK(e.raw() == mock::kProseReply);
        }
        CHECK(server.requests().size() == 2);
    }
    {
        mock::Server server({{200, mock::completion(mock::kProseReply)}, {200, mock::completion(mock::kVelocityReply)}});
        CHECK(llm_annotate(velocity_only(), config(server.endpoint())).size() == 1);
        CHECK(server.requests().size() == 2);
    }
    unsetenv(kKeyVar);
}

TEST_CASE("network failures surface after one retry") {
    setenv(kKeyVar, "test-key", 1);
    {
        mock::Server server({{500, "overloaded"}});
        CHECK_THROWS_AS(llm_annotate(velocity_only(), config(server.endpoint())), NetworkError);
        CHECK(server.requests().size() == 2);
    }
    {
        mock::Server server({{503, "busy"}, {200, mock::completion(mock::kVelocityReply)}});
        CHECK(llm_annotate(velocity_only(), config(server.endpoint())).size() == 1);
    }
    const std::string dead = "http://127.0.0.1:" + std::to_string(mock::closed_port()) + "/v1/chat/completions";
    CHECK_THROWS_AS(llm_annotate(velocity_only(), config(dead)), NetworkError);
    unsetenv(kKeyVar);
}

TEST_CASE("a missing credential stops before any request") {
    unsetenv(kKeyVar);
    mock::Server server({{200, mock::completion(mock::kVelocityReply)}});
    CHECK_THROWS_AS(llm_annotate(velocity_only(), config(server.endpoint())), MissingCredential);
    CHECK(server.requests().empty());
}

TEST_CASE("merging never replaces an llm label with a heuristic one") {
    CausalWorldModel m = pong_model();
    merge_annotations(m, heuristic_annotate(m));
    CHECK(m.annotations.at(pong::BALL_VY).source == AnnotationSource::Heuristic);
    merge_annotations(m, {{pong::BALL_VY, "vertical velocity of the ball", AnnotationSource::Llm, Confidence::High}});
    CHECK(m.annotations.at(pong::BALL_VY).label == "vertical velocity of the ball");
    merge_annotations(m, heuristic_annotate(m));
    CHECK(m.annotations.at(pong::BALL_VY).source == AnnotationSource::Llm);
    CHECK(m.annotations.at(pong::BALL_VY).label == "vertical velocity of the ball");
    for (const auto& [t, r] : m.rules) CHECK(m.annotations.count(t));
}

}  // TEST_SUITE
