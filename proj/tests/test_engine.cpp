#include <doctest.h>
#include <sstream>

#include "aoisim/engine.hpp"
#include "aoisim/experiment.hpp"
#include "aoisim/metrics.hpp"
#include "aoisim/traffic.hpp"

using namespace aoisim;

namespace {

ArrivalSchedule poisson(double rate, double horizon, std::uint64_t seed) {
    TrafficConfig cfg;
    cfg.rate = rate;
    cfg.delay = DelayModel::bernoulli_half();
    cfg.horizon = horizon;
    cfg.seed = seed;
    return generate_poisson_schedule(cfg);
}

bool event_logs_equal(const SimTrace& a, const SimTrace& b) {
    if (a.events.size() != b.events.size()) return false;
    for (std::size_t i = 0; i < a.events.size(); ++i) {
        const auto& x = a.events[i];
        const auto& y = b.events[i];
        if (x.time != y.time || x.kind != y.kind || x.flow != y.flow ||
            x.seq != y.seq || x.server != y.server || x.queue_size != y.queue_size)
            return false;
    }
    return true;
}

} // namespace

TEST_CASE("single packet, constant service") {
    const SystemConfig cfg{1, 1, 0.0};
    const ArrivalSchedule sched({{0.0, 0.0}});
    const auto trace = run(cfg, sched, ServiceDistribution::constant(2.0),
                           PolicySpec::parse("np-MAF-FCFS"), 10.0, 1);
    REQUIRE(trace.packets.size() == 1);
    CHECK(trace.packets[0].service_start == 0.0);
    CHECK(trace.packets[0].delivery_time == 2.0);
    CHECK(trace.delivered == 1);
    // generation 0 delivered at 2: age is 2 there and keeps unit slope
    CHECK(trace.delta[0].value_at(2.0) == doctest::Approx(2.0));
    CHECK(trace.delta[0].value_at(7.0) == doctest::Approx(7.0));
    CHECK(trace.age_at(1, 2.0) == doctest::Approx(2.0));
}

TEST_CASE("synchronized first deliveries reset each flow's age to t") {
    const SystemConfig cfg{2, 1, 0.0};
    const ArrivalSchedule sched({{0.0, 0.0}});
    const auto trace = run(cfg, sched, ServiceDistribution::exponential(1.0),
                           PolicySpec::parse("prmp-MAF-LGFS"), 50.0, 3);
    REQUIRE(trace.delivered == 2);
    for (FlowId n = 1; n <= 2; ++n) {
        for (const auto& r : trace.delta_resets[n - 1])
            CHECK(r.stamp <= 0.0); // only the S=0 generation exists
        const auto& p = trace.packets[n - 1];
        CHECK(trace.age_at(n, p.delivery_time) == doctest::Approx(p.delivery_time));
    }
}

TEST_CASE("stale deliveries do not reset the age") {
    // generation 2 overtakes generation 1; FCFS then serves the stale packet
    const SystemConfig cfg{1, 1, 0.0};
    const ArrivalSchedule sched({{1.0, 5.0}, {2.0, 3.0}});
    const auto trace = run(cfg, sched, ServiceDistribution::constant(1.0),
                           PolicySpec::parse("np-MAF-FCFS"), 20.0, 1);
    REQUIRE(trace.delivered == 2);
    // delivery of S=2 at t=4 resets; delivery of S=1 at t=6 must not
    REQUIRE(trace.delta_resets[0].size() == 2);
    CHECK(trace.delta_resets[0][1].stamp == 2.0);
    CHECK(trace.delta[0].breakpoints().size() == 2);
    CHECK(trace.age_at(1, 6.0) == doctest::Approx(4.0));
}

TEST_CASE("runs are deterministic in the seed") {
    const SystemConfig cfg{3, 2, 0.0};
    const auto sched = poisson(0.8, 500.0, 10);
    const auto policy = PolicySpec::parse("np-RAND-LGFS");
    const auto a = run(cfg, sched, ServiceDistribution::erlang(2, 2.0), policy, 500.0, 7);
    const auto b = run(cfg, sched, ServiceDistribution::erlang(2, 2.0), policy, 500.0, 7);
    CHECK(event_logs_equal(a, b));
    const auto c = run(cfg, sched, ServiceDistribution::erlang(2, 2.0), policy, 500.0, 8);
    CHECK(!event_logs_equal(a, c));
}

TEST_CASE("work conservation and packet conservation on random runs") {
    const std::vector<const char*> policies = {"prmp-MAF-LGFS", "np-MAF-FCFS",
                                               "np-MASIF-LGFS", "np-RAND-FCFS"};
    std::uint64_t seed = 0;
    for (const char* name : policies) {
        const auto policy = PolicySpec::parse(name);
        for (std::uint32_t servers : {1u, 3u}) {
            const SystemConfig cfg{4, servers, 0.0};
            const auto sched = poisson(0.5, 400.0, 100 + seed);
            const auto service = policy.is_preemptive()
                                     ? ServiceDistribution::exponential(1.0)
                                     : ServiceDistribution::erlang(2, 2.0);
            const auto trace = run(cfg, sched, service, policy, 400.0, 200 + seed);
            ++seed;
            CHECK(trace.work_conservation_violations == 0);
            CHECK(trace.arrived ==
                  trace.delivered + trace.queued_at_end + trace.in_service_at_end);
            CHECK(xi_bounds_age(trace));
        }
    }
}

TEST_CASE("tracker values agree with the exact reset logs") {
    const SystemConfig cfg{3, 1, 0.0};
    const auto sched = poisson(1.0, 300.0, 5);
    const auto trace = run(cfg, sched, ServiceDistribution::exponential(1.0),
                           PolicySpec::parse("prmp-MAF-LGFS"), 300.0, 6);
    RngStream rng(9);
    for (int i = 0; i < 500; ++i) {
        const double t = rng.next_uniform_co() * 300.0;
        const FlowId n = 1 + static_cast<FlowId>(rng.next_below(3));
        CHECK(trace.delta[n - 1].value_at(t) ==
              doctest::Approx(trace.age_at(n, t)).epsilon(1e-12));
        CHECK(trace.xi[n - 1].value_at(t) ==
              doctest::Approx(trace.age_of_served_at(n, t)).epsilon(1e-12));
    }
}

TEST_CASE("preemptive MAF-LGFS beats RAND-FCFS on the same schedule") {
    const SystemConfig cfg{3, 1, 0.0};
    const auto sched = poisson(1.0, 10000.0, 11);
    const auto maf = run(cfg, sched, ServiceDistribution::exponential(1.0),
                         PolicySpec::parse("prmp-MAF-LGFS"), 10000.0, 12);
    const auto rnd = run(cfg, sched, ServiceDistribution::exponential(1.0),
                         PolicySpec::parse("np-RAND-FCFS"), 10000.0, 12);
    const auto p = PenaltyFunction::maximum();
    const double maf_avg = time_average_penalty(maf, p, 0.0, 10000.0);
    const double rnd_avg = time_average_penalty(rnd, p, 0.0, 10000.0);
    CHECK(maf_avg < rnd_avg);
    CHECK(maf_avg < 100.0); // stays bounded even though rho = 3
}

TEST_CASE("engine preconditions") {
    const SystemConfig cfg{1, 1, 0.0};
    const ArrivalSchedule sched({{0.0, 0.0}});
    const auto prmp = PolicySpec::parse("prmp-MAF-LGFS");
    CHECK_THROWS_AS(
        run(cfg, sched, ServiceDistribution::constant(1.0), prmp, 10.0, 1),
        ConfigError);
    RunOptions allow;
    allow.allow_preemptive_non_exponential = true;
    CHECK_NOTHROW(
        run(cfg, sched, ServiceDistribution::constant(1.0), prmp, 10.0, 1, allow));
    CHECK_THROWS_AS(run(cfg, sched, ServiceDistribution::exponential(1.0), prmp,
                        0.0, 1),
                    ConfigError);
    RunOptions bad_idle;
    bad_idle.idle_probability = 1.5;
    CHECK_THROWS_AS(run(cfg, sched, ServiceDistribution::exponential(1.0), prmp,
                        10.0, 1, bad_idle),
                    ConfigError);
    CHECK_THROWS_AS(run_with_epochs(SystemConfig{1, 2, 0.0}, sched,
                                    ServiceDistribution::exponential(1.0), prmp,
                                    10.0, {}, 1),
                    ConfigError);
}

TEST_CASE("decision epochs with nothing to do produce no actions") {
    SystemState state(SystemConfig{2, 2, 0.0}, PacketRule::lgfs);
    RngStream stream(1);
    CHECK(on_decision_epoch(state, PolicySpec::parse("prmp-MAF-LGFS"), stream, true)
              .empty());
}

TEST_CASE("non-preemptive policies never unseat a busy server") {
    SystemState state(SystemConfig{2, 1, 0.0}, PacketRule::lgfs);
    const PacketId first = state.add_packet(2, 1, 0.0, 0.0);
    state.mark_arrived(first, 0.0);
    state.assign_to_server(first, 0, 0.0);
    state.advance_clock(1.0);
    const PacketId second = state.add_packet(1, 1, 1.0, 1.0);
    state.mark_arrived(second, 1.0);

    RngStream stream(1);
    const auto actions =
        on_decision_epoch(state, PolicySpec::parse("np-MAF-LGFS"), stream, true);
    CHECK(actions.empty());
    CHECK(state.packet(first).status == PacketStatus::in_service);

    // the preemptive counterpart displaces the stale flow's packet
    const auto prmp =
        on_decision_epoch(state, PolicySpec::parse("prmp-MAF-LGFS"), stream, true);
    REQUIRE(prmp.size() == 1);
    CHECK(prmp[0].kind == EpochAction::Kind::preempt);
    CHECK(prmp[0].packet == second);
    CHECK(*prmp[0].displaced == first);
}

TEST_CASE("delivery of a packet not in service is an internal error") {
    SystemState state(SystemConfig{1, 1, 0.0}, PacketRule::lgfs);
    const PacketId id = state.add_packet(1, 1, 0.0, 0.0);
    state.mark_arrived(id, 0.0);
    CHECK_THROWS_AS(state.record_delivery(id, 1.0), std::logic_error);
}

TEST_CASE("idle knob yields a non-work-conserving comparator") {
    const SystemConfig cfg{2, 1, 0.0};
    const auto sched = poisson(0.8, 2000.0, 21);
    RunOptions opts;
    opts.idle_probability = 0.4;
    const auto lazy = run(cfg, sched, ServiceDistribution::exponential(1.0),
                          PolicySpec::parse("np-MAF-LGFS"), 2000.0, 22, opts);
    const auto eager = run(cfg, sched, ServiceDistribution::exponential(1.0),
                           PolicySpec::parse("np-MAF-LGFS"), 2000.0, 22);
    CHECK(lazy.arrived ==
          lazy.delivered + lazy.queued_at_end + lazy.in_service_at_end);
    // postponing service can only delay deliveries
    CHECK(lazy.delivered <= eager.delivered);
    CHECK(xi_bounds_age(lazy));
}

TEST_CASE("trace export formats") {
    const SystemConfig cfg{2, 1, 0.0};
    const ArrivalSchedule sched({{0.0, 0.0}, {1.0, 1.5}});
    const auto trace = run(cfg, sched, ServiceDistribution::constant(0.4),
                           PolicySpec::parse("np-MAF-FCFS"), 10.0, 1);
    const std::string json = trace_to_json(trace);
    CHECK(json.find("\"policy\":\"np-MAF-FCFS\"") != std::string::npos);
    CHECK(json.find("\"events\":[") != std::string::npos);
    std::ostringstream csv;
    write_trace_breakpoints_csv(trace, csv);
    CHECK(csv.str().rfind("flow,tracker,time,value\n", 0) == 0);
    CHECK(csv.str().find(",delta,") != std::string::npos);
    CHECK(csv.str().find(",xi,") != std::string::npos);
}

TEST_CASE("age queries before the trace start are rejected") {
    const SystemConfig cfg{1, 1, 0.0};
    const ArrivalSchedule sched({{0.0, 0.0}});
    const auto trace = run(cfg, sched, ServiceDistribution::constant(1.0),
                           PolicySpec::parse("np-MAF-FCFS"), 5.0, 1);
    CHECK_THROWS_AS(trace.age_at(1, -0.5), ConfigError);
}
