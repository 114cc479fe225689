#include <benchmark/benchmark.h>

#include "comet/detect.hpp"
#include "comet/ground_truth.hpp"
#include "comet/minienvs.hpp"
#include "comet/pipeline.hpp"
#include "comet/symreg.hpp"
#include "comet/trace.hpp"

using namespace comet;

namespace {

Trace random_trace(const std::string& name, int steps, std::uint64_t seed) {
    auto env = make_env(name);
    auto policy = random_policy(seed, env->info().actions);
    return sample(*env, *policy, steps, seed);
}

void BM_EnvStep(benchmark::State& state, const std::string& name) {
    auto env = make_env(name);
    env->reset(1);
    int a = 0;
    for (auto _ : state) {
        const StepRecord r = env->step(a);
        a = (a + 1) % 3;
        if (r.done) env->reset(2);
        benchmark::DoNotOptimize(r.state_after.data());
    }
}
BENCHMARK_CAPTURE(BM_EnvStep, minipong, std::string("minipong"));
BENCHMARK_CAPTURE(BM_EnvStep, minifreeway, std::string("minifreeway"));

void BM_RenderDetect(benchmark::State& state, const std::string& name) {
    auto env = make_env(name);
    const State s = env->reset(3);
    for (auto _ : state) {
        auto objs = detect(env->render(s), env->info().palette);
        benchmark::DoNotOptimize(objs.data());
    }
}
BENCHMARK_CAPTURE(BM_RenderDetect, minipong, std::string("minipong"));
BENCHMARK_CAPTURE(BM_RenderDetect, minifreeway, std::string("minifreeway"));

void BM_RelevantEis(benchmark::State& state) {
    const Trace t = random_trace("minipong", static_cast<int>(state.range(0)), 7);
    for (auto _ : state) benchmark::DoNotOptimize(find_relevant_eis(t).bindings.size());
}
BENCHMARK(BM_RelevantEis)->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);

void BM_SearchEquations(benchmark::State& state) {
    const Rows rows = columns(random_trace("minipong", static_cast<int>(state.range(0)), 7), pong::BALL_Y);
    const SearchConfig cfg;
    search_equations(rows, cfg);  // warms the expression library
    for (auto _ : state) benchmark::DoNotOptimize(search_equations(rows, cfg).size());
}
BENCHMARK(BM_SearchEquations)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_Simulate(benchmark::State& state) {
    const CausalWorldModel gt = ground_truth_model("minipong");
    auto env = make_env("minipong");
    const State s0 = env->reset(5);
    const std::vector<int> actions(static_cast<std::size_t>(state.range(0)), 1);
    for (auto _ : state) benchmark::DoNotOptimize(simulate(gt, s0, actions).size());
}
BENCHMARK(BM_Simulate)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_ExtractPong(benchmark::State& state) {
    const Trace t = random_trace("minipong", static_cast<int>(state.range(0)), 7);
    for (auto _ : state) benchmark::DoNotOptimize(extract_world_model(t, SearchConfig{}).rules.size());
}
BENCHMARK(BM_ExtractPong)->Arg(1000)->Unit(benchmark::kSecond)->Iterations(1)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
