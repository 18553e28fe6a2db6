#include <doctest.h>

#include "aoisim/coupling.hpp"
#include "aoisim/experiment.hpp"
#include "aoisim/traffic.hpp"
#include "support.hpp"

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

CoupledRunConfig basic_coupled(std::uint32_t flows, double rate, double horizon,
                               std::uint64_t seed) {
    CoupledRunConfig cc;
    cc.system = SystemConfig{flows, 1, 0.0};
    cc.schedule = poisson(rate, horizon, seed);
    cc.service = ServiceDistribution::exponential(1.0);
    cc.mode = CompletionMode::shared_epochs;
    cc.horizon = horizon;
    cc.seed = seed + 1;
    return cc;
}

} // namespace

TEST_CASE("shared epochs coupling preconditions") {
    auto cc = basic_coupled(2, 0.5, 100.0, 1);
    cc.policies = {PolicySpec::parse("np-MAF-LGFS")};
    cc.system.num_servers = 2;
    CHECK_THROWS_AS(run_coupled(cc), ConfigError);
    cc.system.num_servers = 1;
    cc.service = ServiceDistribution::constant(1.0);
    CHECK_THROWS_AS(run_coupled(cc), ConfigError);
    cc.policies.clear();
    cc.service = ServiceDistribution::exponential(1.0);
    CHECK_THROWS_AS(run_coupled(cc), ConfigError);
}

TEST_CASE("potential completions fire only when the server is busy") {
    const SystemConfig cfg{1, 1, 0.0};
    const ArrivalSchedule sched({{1.0, 1.0}});
    const std::vector<double> epochs = {0.5, 2.0, 3.0};
    const auto trace =
        run_with_epochs(cfg, sched, ServiceDistribution::exponential(1.0),
                        PolicySpec::parse("np-MAF-LGFS"), 10.0, epochs, 1);
    REQUIRE(trace.delivered == 1);
    CHECK(trace.packets[0].service_start == 1.0);
    CHECK(trace.packets[0].delivery_time == 2.0); // first epoch while busy
}

TEST_CASE("work-conserving policies share identical busy periods and delivery times") {
    auto cc = basic_coupled(3, 0.4, 2000.0, 3);
    cc.policies = {PolicySpec::parse("prmp-MAF-LGFS"), PolicySpec::parse("np-RAND-FCFS"),
                   PolicySpec::parse("np-MASIF-LGFS")};
    const auto traces = run_coupled(cc);
    REQUIRE(traces.size() == 3);
    CHECK(traces[0].coupling_key != 0);
    CHECK(traces[0].coupling_key == traces[1].coupling_key);
    CHECK(traces[0].coupling_key == traces[2].coupling_key);

    // same arrivals + busy-gated epochs: every policy delivers at the same times
    for (std::size_t i = 1; i < traces.size(); ++i) {
        REQUIRE(traces[i].delivered == traces[0].delivered);
        std::vector<double> a, b;
        for (const auto& e : traces[0].events)
            if (e.kind == TraceEventKind::delivery) a.push_back(e.time);
        for (const auto& e : traces[i].events)
            if (e.kind == TraceEventKind::delivery) b.push_back(e.time);
        CHECK(a == b);
    }
}

TEST_CASE("a policy coupled with itself dominates with zero margin") {
    auto cc = basic_coupled(3, 0.5, 500.0, 5);
    cc.policies = {PolicySpec::parse("prmp-MAF-LGFS"), PolicySpec::parse("prmp-MAF-LGFS")};
    const auto traces = run_coupled(cc);
    const auto report = check_samplepath_dominance(traces[0], traces[1]);
    CHECK(report.ok);
    CHECK(report.checked_boundaries > 10);
    // and the reverse direction holds too: the trajectories are identical
    CHECK(check_samplepath_dominance(traces[1], traces[0]).ok);
}

TEST_CASE("sample-path dominance of preemptive MAF-LGFS over comparators") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto cc = basic_coupled(3, 1.0 / 3.0, 2000.0, 100 + seed);
        cc.policies = {PolicySpec::parse("prmp-MAF-LGFS"),
                       PolicySpec::parse("np-RAND-FCFS"),
                       PolicySpec::parse("np-MAF-LGFS")};
        const auto traces = run_coupled(cc);
        for (std::size_t i = 1; i < traces.size(); ++i) {
            const auto report = check_samplepath_dominance(traces[0], traces[i]);
            CHECK(report.ok);
            CHECK(report.violation_count == 0);
        }
        for (const auto& t : traces) CHECK(xi_bounds_age(t));
    }
}

TEST_CASE("the dominance checker has power: a mislabeled reference fails") {
    std::size_t total_violations = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto cc = basic_coupled(3, 0.5, 1000.0, 500 + seed);
        cc.policies = {PolicySpec::parse("prmp-RAND-LGFS"),
                       PolicySpec::parse("prmp-MAF-LGFS")};
        const auto traces = run_coupled(cc);
        total_violations += check_samplepath_dominance(traces[0], traces[1])
                                .violation_count;
    }
    CHECK(total_violations > 0);
}

TEST_CASE("dominance check rejects uncoupled traces") {
    const auto sched = poisson(0.5, 100.0, 7);
    const SystemConfig cfg{2, 1, 0.0};
    const auto a = run(cfg, sched, ServiceDistribution::exponential(1.0),
                       PolicySpec::parse("prmp-MAF-LGFS"), 100.0, 1);
    const auto b = run(cfg, sched, ServiceDistribution::exponential(1.0),
                       PolicySpec::parse("np-MAF-LGFS"), 100.0, 2);
    CHECK_THROWS_AS(check_samplepath_dominance(a, b), ConfigError);
}

TEST_CASE("weak work-efficiency ordering") {
    SUBCASE("a trace is weakly more work-efficient than itself") {
        auto cc = basic_coupled(2, 0.5, 500.0, 11);
        cc.policies = {PolicySpec::parse("np-MAF-FCFS"), PolicySpec::parse("np-MAF-FCFS")};
        const auto traces = run_coupled(cc);
        const auto report = check_weak_work_efficiency(traces[0], traces[1]);
        CHECK(report.ok);
        CHECK(report.packets_checked > 0);
    }
    SUBCASE("light load passes vacuously") {
        auto cc = basic_coupled(1, 0.01, 2000.0, 12);
        cc.policies = {PolicySpec::parse("np-MAF-LGFS"), PolicySpec::parse("np-MAF-FCFS")};
        const auto traces = run_coupled(cc);
        const auto report = check_weak_work_efficiency(traces[0], traces[1]);
        CHECK(report.ok);
        CHECK(report.vacuous > 0);
    }
    SUBCASE("epoch-coupled non-preemptive pairs satisfy the ordering") {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            auto cc = basic_coupled(3, 0.4, 1000.0, 300 + seed);
            cc.policies = {PolicySpec::parse("np-MASIF-LGFS"),
                           PolicySpec::parse("np-RAND-FCFS")};
            const auto traces = run_coupled(cc);
            const auto report = check_weak_work_efficiency(traces[0], traces[1]);
            CHECK(report.ok);
        }
    }
    SUBCASE("preemptive traces are rejected") {
        auto cc = basic_coupled(2, 0.5, 200.0, 13);
        cc.policies = {PolicySpec::parse("prmp-MAF-LGFS"),
                       PolicySpec::parse("np-MAF-FCFS")};
        const auto traces = run_coupled(cc);
        CHECK_THROWS_AS(check_weak_work_efficiency(traces[0], traces[1]), ConfigError);
    }
    SUBCASE("mismatched schedules are rejected") {
        auto cc1 = basic_coupled(2, 0.5, 200.0, 14);
        cc1.policies = {PolicySpec::parse("np-MAF-FCFS")};
        auto cc2 = basic_coupled(2, 0.5, 200.0, 15);
        cc2.policies = {PolicySpec::parse("np-MAF-FCFS")};
        const auto a = run_coupled(cc1);
        const auto b = run_coupled(cc2);
        CHECK_THROWS_AS(check_weak_work_efficiency(a[0], b[0]), ConfigError);
    }
}

TEST_CASE("the work-efficiency checker reports fabricated violations") {
    // Hand-built pair: the other policy serves a packet over [1, 2] while the
    // "efficient" trace's queue stays occupied with no service start inside.
    SimTrace eff;
    eff.config = SystemConfig{1, 1, 0.0};
    eff.policy = "np-MAF-FCFS";
    eff.horizon = 10.0;
    eff.schedule_hash = 42;
    eff.arrived = 1;
    eff.events.push_back({0.5, TraceEventKind::arrival, 1, 1, -1, 1});
    eff.events.push_back({5.0, TraceEventKind::service_start, 1, 1, 0, 0});

    SimTrace other = eff;
    other.policy = "np-RAND-FCFS";
    PacketState served;
    served.flow = 1;
    served.seq = 1;
    served.gen_time = 0.5;
    served.arrival_time = 0.5;
    served.service_start = 1.0;
    served.delivery_time = 2.0;
    other.packets.push_back(served);

    const auto report = check_weak_work_efficiency(eff, other);
    CHECK(!report.ok);
    REQUIRE(report.first_failure.has_value());
    CHECK(report.first_failure->service_start == 1.0);
    CHECK(report.first_failure->completion == 2.0);
}

TEST_CASE("xi lower bound check") {
    const SystemConfig cfg{4, 2, 0.0};
    const auto service = ServiceDistribution::shifted_exponential(1.0 / 3.0, 1.5);
    std::vector<SimTrace> masif, self, rand_traces;
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const auto sched = poisson(0.3, 800.0, 700 + seed);
        masif.push_back(run(cfg, sched, service, PolicySpec::parse("np-MASIF-LGFS"),
                            800.0, 7000 + seed));
        rand_traces.push_back(run(cfg, sched, service,
                                  PolicySpec::parse("np-RAND-FCFS"), 800.0,
                                  8000 + seed));
    }
    self = masif;

    SUBCASE("against itself: pointwise Xi <= Delta makes it pass") {
        const auto report =
            check_xi_lower_bound(masif, self, PenaltyFunction::average(), 0.1);
        CHECK(report.ok);
        CHECK(report.max_violation <= 0.0);
    }
    SUBCASE("against a weaker comparator") {
        const auto report =
            check_xi_lower_bound(masif, rand_traces, PenaltyFunction::average(), 0.1);
        CHECK(report.ok);
    }
    SUBCASE("preemptive comparators are rejected") {
        std::vector<SimTrace> prmp;
        for (std::uint64_t seed = 0; seed < masif.size(); ++seed) {
            const auto sched = poisson(0.3, 800.0, 700 + seed);
            prmp.push_back(run(SystemConfig{4, 1, 0.0}, sched,
                               ServiceDistribution::exponential(1.0),
                               PolicySpec::parse("prmp-MAF-LGFS"), 800.0, seed));
        }
        CHECK_THROWS_AS(
            check_xi_lower_bound(masif, prmp, PenaltyFunction::average(), 0.1),
            ConfigError);
    }
    SUBCASE("the lower-bound side must be non-preemptive MASIF") {
        CHECK_THROWS_AS(
            check_xi_lower_bound(rand_traces, masif, PenaltyFunction::average(), 0.1),
            ConfigError);
    }
}

TEST_CASE("inductive delivery-jump comparison (unit oracle)") {
    RngStream rng(2024);
    std::size_t checked = 0;
    for (std::uint32_t n = 2; n <= 4; ++n) {
        for (int trial = 0; trial < 1000; ++trial) {
            const double floor_age = rng.next_uniform_co() * 5.0;
            // sorted pre-jump vectors with rankwise dominance, entries >= floor
            std::vector<double> ref(n), cmp(n);
            for (std::uint32_t i = 0; i < n; ++i) {
                ref[i] = floor_age + rng.next_uniform_co() * 10.0;
                cmp[i] = ref[i] + rng.next_uniform_co() * 5.0;
            }
            ref = test::sorted_desc(ref);
            cmp = test::sorted_desc(std::move(cmp));
            REQUIRE(sorted_dominates(ref, cmp));

            const auto ref_post = test::maf_delivery_jump(ref, floor_age);
            for (std::uint32_t flow = 0; flow < n; ++flow) {
                for (const double frac : {0.0, 0.37, 1.0}) {
                    const double new_value =
                        floor_age + frac * (cmp[flow] - floor_age);
                    const auto cmp_post =
                        test::comparator_delivery_jump(cmp, flow, new_value);
                    CHECK(sorted_dominates(ref_post, cmp_post));
                    ++checked;
                }
            }
        }
    }
    CHECK(checked > 0);
}

TEST_CASE("delivery-jump comparison fails without the dominance hypothesis") {
    const std::vector<double> ref = {10.0, 9.0};
    const std::vector<double> cmp = {5.0, 4.0};
    CHECK(!sorted_dominates(ref, cmp));
    const auto ref_post = test::maf_delivery_jump(ref, 0.5);          // (9.0, 0.5)
    const auto cmp_post = test::comparator_delivery_jump(cmp, 0, 0.5); // (0.5, 4.0)
    CHECK(!sorted_dominates(ref_post, cmp_post));
}

TEST_CASE("marginal law equivalence of the two completion modes (small)") {
    MarginalEquivalenceConfig cfg;
    cfg.seeds = 1200;
    cfg.horizon = 120.0;
    cfg.base_seed = 99;
    const auto outcome = run_marginal_equivalence(cfg);
    CHECK(outcome.ok);
    CHECK(outcome.ks_statistic < outcome.threshold);
}

TEST_CASE("statistical dominance over a non-work-conserving comparator") {
    // Server idling has no shared-epoch coupling; the comparison is
    // distributional: per-seed time-averaged penalties of the reference must
    // sit stochastically below the idling comparator's.
    const SystemConfig cfg{3, 1, 0.0};
    const auto service = ServiceDistribution::exponential(1.0);
    const auto penalty = PenaltyFunction::maximum();
    std::vector<double> ref_samples, lazy_samples;
    for (std::uint64_t seed = 0; seed < 150; ++seed) {
        const auto sched = poisson(1.0 / 3.0, 1500.0, 4000 + seed);
        const auto ref = run(cfg, sched, service, PolicySpec::parse("prmp-MAF-LGFS"),
                             1500.0, 5000 + seed);
        RunOptions lazy_opts;
        lazy_opts.idle_probability = 0.25;
        const auto lazy = run(cfg, sched, service, PolicySpec::parse("np-RAND-FCFS"),
                              1500.0, 6000 + seed, lazy_opts);
        ref_samples.push_back(time_average_penalty(ref, penalty, 150.0, 1500.0));
        lazy_samples.push_back(time_average_penalty(lazy, penalty, 150.0, 1500.0));
    }
    const auto report = empirical_st_order(ref_samples, lazy_samples);
    CHECK(report.ok);
    CHECK(report.max_violation <= 0.0); // clear separation, not just within DKW
}
