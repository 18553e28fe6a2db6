#include <benchmark/benchmark.h>

#include "aoisim/engine.hpp"
#include "aoisim/metrics.hpp"
#include "aoisim/traffic.hpp"

using namespace aoisim;

namespace {

ArrivalSchedule make_schedule(double rate, double horizon, std::uint64_t seed) {
    TrafficConfig cfg;
    cfg.rate = rate;
    cfg.delay = DelayModel::bernoulli_half();
    cfg.horizon = horizon;
    cfg.seed = seed;
    return generate_poisson_schedule(cfg);
}

void BM_RunSmallSystem(benchmark::State& state) {
    const auto policy = PolicySpec::parse(
        state.range(0) == 0 ? "prmp-MAF-LGFS" : "np-RAND-FCFS");
    const SystemConfig cfg{3, 1, 0.0};
    const auto sched = make_schedule(1.0 / 3.0, 5000.0, 1);
    const auto service = ServiceDistribution::exponential(1.0);
    RunOptions opts;
    opts.record_events = false;
    opts.record_packets = false;
    std::uint64_t seed = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(run(cfg, sched, service, policy, 5000.0, ++seed, opts));
    }
}
BENCHMARK(BM_RunSmallSystem)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_RunManyFlows(benchmark::State& state) {
    const SystemConfig cfg{50, 3, 0.0};
    const auto sched = make_schedule(0.054, 20000.0, 2);
    const auto service = ServiceDistribution::shifted_exponential(1.0 / 3.0, 1.5);
    const auto policy = PolicySpec::parse("np-MASIF-LGFS");
    RunOptions opts;
    opts.record_events = false;
    opts.record_packets = false;
    std::uint64_t seed = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            run(cfg, sched, service, policy, 20000.0, ++seed, opts));
    }
}
BENCHMARK(BM_RunManyFlows)->Unit(benchmark::kMillisecond);

void BM_TimeAveragePenalty(benchmark::State& state) {
    const SystemConfig cfg{10, 2, 0.0};
    const auto sched = make_schedule(0.2, 10000.0, 3);
    const auto trace = run(cfg, sched, ServiceDistribution::erlang(2, 2.0),
                           PolicySpec::parse("np-MAF-LGFS"), 10000.0, 4);
    const auto penalty = state.range(0) == 0 ? PenaltyFunction::average()
                                             : PenaltyFunction::maximum();
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            time_average_penalty(trace, penalty, 1000.0, 10000.0));
    }
}
BENCHMARK(BM_TimeAveragePenalty)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_SawtoothTimeAverage(benchmark::State& state) {
    SawtoothProcess p;
    p.append(0.0, 0.0);
    RngStream rng(5);
    double t = 0.0;
    for (int i = 0; i < 100000; ++i) {
        t += rng.next_exponential(1.0);
        p.append(t, rng.next_uniform_co() * p.value_at(t));
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(p.time_average(0.0, t));
    }
}
BENCHMARK(BM_SawtoothTimeAverage)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
