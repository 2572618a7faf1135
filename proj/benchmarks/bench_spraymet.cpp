#include <benchmark/benchmark.h>

#include "spraymet/metrize.hpp"

using namespace spraymet;

namespace {

Spray poincare() {
    Spray s;
    s.g1 = parse_expr("-y1*y2/x2");
    s.g2 = parse_expr("((y1)^2 - (y2)^2)/(2*x2)");
    s.domain.x2 = {0.5, 2.0};
    s.domain.constraints.push_back(Constraint::parse("x2 > 0"));
    return s;
}

void BM_Parse(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(parse_expr("(x2*y1^2 + y2^2)^(1/2)*y1 + y1*y2/(2*x2)"));
}
BENCHMARK(BM_Parse);

void BM_JacobiDerivation(benchmark::State& state) {
    const Spray s = poincare();
    for (auto _ : state) benchmark::DoNotOptimize(analyze(s));
}
BENCHMARK(BM_JacobiDerivation);

void BM_CompiledEvaluate(benchmark::State& state) {
    const SprayGeometry g = analyze(poincare());
    const CompiledExprs prog{g.jac.r[0][0], g.jac.r[0][1], g.jac.r[1][0], g.jac.r[1][1], g.iso.rho};
    std::array<double, 5> out{};
    const Point p(0.1, 1.2, 0.3, -0.4);
    for (auto _ : state) {
        prog.evaluate(p, out);
        benchmark::DoNotOptimize(out);
    }
}
BENCHMARK(BM_CompiledEvaluate);

void BM_ClassifyPoincare(benchmark::State& state) {
    const Spray s = poincare();
    RunConfig cfg;
    cfg.samples = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(classify(s, cfg));
}
BENCHMARK(BM_ClassifyPoincare)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_EvaluateF(benchmark::State& state) {
    const RunConfig cfg;
    const Classification cls = classify(poincare(), cfg);
    const FinslerCandidate f = reconstruct(cls, Point(0, 1, 0, 1), cfg);
    std::size_t i = 0;
    for (auto _ : state) benchmark::DoNotOptimize(f(cls.samples[i++ % cls.samples.size()]));
}
BENCHMARK(BM_EvaluateF)->Unit(benchmark::kMicrosecond);

}  // namespace
BENCHMARK_MAIN();
