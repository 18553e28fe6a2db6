#include <cmath>
#include <doctest.h>

#include "aoisim/metrics.hpp"
#include "aoisim/traffic.hpp"
#include "support.hpp"

using namespace aoisim;

TEST_CASE("penalty evaluation") {
    const std::vector<double> ages = {2.0, 4.0, 6.0};
    CHECK(PenaltyFunction::average().evaluate(ages) == doctest::Approx(4.0));
    CHECK(PenaltyFunction::maximum().evaluate(ages) == doctest::Approx(6.0));
    CHECK(PenaltyFunction::mean_square().evaluate(ages) ==
          doctest::Approx((4.0 + 16.0 + 36.0) / 3.0));
    CHECK(PenaltyFunction::l_norm(2.0).evaluate(ages) ==
          doctest::Approx(std::sqrt(4.0 + 16.0 + 36.0)));

    // floor(2 * 0.6) + floor(2 * 1.3) = 1 + 2
    const std::vector<double> pair = {0.6, 1.3};
    CHECK(PenaltyFunction::sum_penalty(AgeCurve::stair(2.0)).evaluate(pair) == 3.0);
}

TEST_CASE("penalty validation") {
    CHECK_THROWS_AS(PenaltyFunction::l_norm(0.5), ConfigError);
    CHECK_THROWS_AS(PenaltyFunction::average().evaluate({{-1.0}}), ConfigError);
    CHECK_THROWS_AS(PenaltyFunction::average().evaluate({}), ConfigError);
    CHECK_THROWS_AS(AgeCurve::monotone_table({{0.0, 1.0}}), ConfigError);
    CHECK_THROWS_AS(AgeCurve::monotone_table({{0.0, 1.0}, {1.0, 0.5}}), ConfigError);
    CHECK_THROWS_AS(AgeCurve::monotone_table({{1.0, 0.0}, {1.0, 2.0}}), ConfigError);
}

TEST_CASE("monotone table interpolates and clamps") {
    const auto g = AgeCurve::monotone_table({{0.0, 0.0}, {2.0, 4.0}, {10.0, 4.0}});
    CHECK(g(1.0) == doctest::Approx(2.0));
    CHECK(g(-5.0) == 0.0);
    CHECK(g(100.0) == 4.0);
}

TEST_CASE("scheduled penalties switch parameters over time") {
    PenaltyParams max_params;
    max_params.kind = PenaltyKind::max;
    PenaltyParams avg_params;
    avg_params.kind = PenaltyKind::avg;
    const auto p = PenaltyFunction::scheduled({{0.0, avg_params}, {10.0, max_params}});
    const std::vector<double> ages = {2.0, 6.0};
    CHECK(p.evaluate(ages, 5.0) == doctest::Approx(4.0));
    CHECK(p.evaluate(ages, 10.0) == doctest::Approx(6.0));
    CHECK(p.time_dependent());

    CHECK_THROWS_AS(PenaltyFunction::scheduled({{1.0, avg_params}}), ConfigError);
    CHECK_THROWS_AS(
        PenaltyFunction::scheduled({{0.0, avg_params}, {0.0, max_params}}),
        ConfigError);
}

TEST_CASE("sorted_dominates") {
    CHECK(sorted_dominates(std::vector<double>{1.0, 3.0, 2.0},
                           std::vector<double>{2.0, 3.0, 4.0}));
    CHECK(!sorted_dominates(std::vector<double>{5.0, 0.0},
                            std::vector<double>{4.0, 4.0}));
    const std::vector<double> same = {3.0, 1.0, 2.0};
    CHECK(sorted_dominates(same, same)); // reflexive
    CHECK_THROWS_AS(sorted_dominates(std::vector<double>{1.0},
                                     std::vector<double>{1.0, 2.0}),
                    ConfigError);
}

TEST_CASE("empirical stochastic ordering") {
    std::vector<double> y(500);
    RngStream rng(4);
    for (auto& v : y) v = rng.next_uniform_co() * 10.0;

    SUBCASE("identical samples have zero violation") {
        const auto r = empirical_st_order(y, y);
        CHECK(r.max_violation <= 0.0);
        CHECK(r.ok);
    }
    SUBCASE("a downward shift is stochastically smaller") {
        std::vector<double> x = y;
        for (auto& v : x) v -= 1.0;
        CHECK(empirical_st_order(x, y).ok);
    }
    SUBCASE("a large upward shift is detected") {
        std::vector<double> x = y;
        for (auto& v : x) v += 5.0;
        CHECK(!empirical_st_order(x, y).ok);
    }
    SUBCASE("empty samples are rejected") {
        CHECK_THROWS_AS(empirical_st_order({}, y), ConfigError);
    }
}

TEST_CASE("penalty class membership validator") {
    const auto penalties = {
        PenaltyFunction::average(),        PenaltyFunction::maximum(),
        PenaltyFunction::mean_square(),    PenaltyFunction::l_norm(3.0),
        PenaltyFunction::sum_penalty(AgeCurve::stair(2.0)),
        PenaltyFunction::sum_penalty(AgeCurve::exponential(0.3)),
    };
    for (const auto& p : penalties) {
        const auto report = check_symmetric_nondecreasing(p, 6, 2000, 17);
        CHECK(report.ok);
    }
}

namespace {

// Minimal trace with the given per-flow age trajectories.
SimTrace make_trace(std::vector<SawtoothProcess> delta, double horizon) {
    SimTrace t;
    t.config.num_flows = static_cast<std::uint32_t>(delta.size());
    t.horizon = horizon;
    t.xi = delta; // unused by the delta-signal tests
    t.delta = std::move(delta);
    return t;
}

} // namespace

TEST_CASE("time averages of penalties over traces") {
    SUBCASE("one flow, no deliveries: avg age averages to T/2") {
        const auto trace =
            make_trace({SawtoothProcess::from_breakpoints({{0.0, 0.0}})}, 10.0);
        CHECK(time_average_penalty(trace, PenaltyFunction::average(), 0.0, 10.0) ==
              doctest::Approx(5.0));
    }
    SUBCASE("two flows, initial ages (0, 2): max ramps 2 -> 6 over [0,4]") {
        const auto trace = make_trace({SawtoothProcess::from_breakpoints({{0.0, 0.0}}),
                                       SawtoothProcess::from_breakpoints({{0.0, 2.0}})},
                                      4.0);
        CHECK(time_average_penalty(trace, PenaltyFunction::maximum(), 0.0, 4.0) ==
              doctest::Approx(4.0));
    }
    SUBCASE("interval outside the trace is rejected") {
        const auto trace =
            make_trace({SawtoothProcess::from_breakpoints({{0.0, 0.0}})}, 10.0);
        CHECK_THROWS_AS(
            time_average_penalty(trace, PenaltyFunction::average(), 0.0, 11.0),
            ConfigError);
        CHECK_THROWS_AS(
            time_average_penalty(trace, PenaltyFunction::average(), 5.0, 5.0),
            ConfigError);
    }
}

TEST_CASE("quadrature path matches grid integration on random traces") {
    RngStream rng(31);
    for (int rep = 0; rep < 4; ++rep) {
        std::vector<SawtoothProcess> procs;
        for (int n = 0; n < 3; ++n) procs.push_back(test::random_sawtooth(rng, 15.0));
        const auto trace = make_trace(std::move(procs), 15.0);

        std::vector<double> knots;
        for (const auto& proc : trace.delta)
            for (const auto& bp : proc.breakpoints()) knots.push_back(bp.time);

        const auto penalties = {
            PenaltyFunction::sum_penalty(AgeCurve::exponential(0.5)),
            PenaltyFunction::l_norm(2.5),
            PenaltyFunction::mean_square(),
            PenaltyFunction::maximum(),
            PenaltyFunction::average(),
        };
        for (const auto& p : penalties) {
            const double exact = time_average_penalty(trace, p, 0.5, 14.0);
            const double grid = test::trapezoid_average_with_knots(
                [&](double t) {
                    std::vector<double> ages;
                    for (const auto& proc : trace.delta)
                        ages.push_back(proc.value_at(t));
                    return p.evaluate(ages, t);
                },
                [&](double t) {
                    std::vector<double> ages;
                    for (const auto& proc : trace.delta)
                        ages.push_back(proc.value_at(t - 1e-9) + 1e-9);
                    return p.evaluate(ages, t);
                },
                0.5, 14.0, 1e-4, knots);
            CHECK(exact == doctest::Approx(grid).epsilon(1e-6));
        }
    }
}

TEST_CASE("stair penalties integrate to grid accuracy") {
    RngStream rng(77);
    std::vector<SawtoothProcess> procs;
    for (int n = 0; n < 2; ++n) procs.push_back(test::random_sawtooth(rng, 10.0));
    const auto trace = make_trace(std::move(procs), 10.0);
    const auto p = PenaltyFunction::sum_penalty(AgeCurve::stair(1.5));
    const double exact = time_average_penalty(trace, p, 0.0, 10.0);
    const double grid = test::trapezoid_average(
        [&](double t) {
            std::vector<double> ages;
            for (const auto& proc : trace.delta) ages.push_back(proc.value_at(t));
            return p.evaluate(ages, t);
        },
        0.0, 10.0, 2e-5);
    // discontinuous integrand: grid reference itself carries O(step) error
    CHECK(exact == doctest::Approx(grid).epsilon(1e-3));
}

TEST_CASE("scheduled penalty time averages split at the schedule boundary") {
    const auto trace = make_trace({SawtoothProcess::from_breakpoints({{0.0, 0.0}}),
                                   SawtoothProcess::from_breakpoints({{0.0, 2.0}})},
                                  8.0);
    PenaltyParams avg_params;
    avg_params.kind = PenaltyKind::avg;
    PenaltyParams max_params;
    max_params.kind = PenaltyKind::max;
    const auto p = PenaltyFunction::scheduled({{0.0, avg_params}, {4.0, max_params}});
    // avg over [0,4): mean of (t, t+2)/2 = t+1 -> 3; max over [4,8): t+2 -> 8
    const double got = time_average_penalty(trace, p, 0.0, 8.0);
    CHECK(got == doctest::Approx((3.0 * 4.0 + 8.0 * 4.0) / 8.0));
}

TEST_CASE("summary statistics") {
    const std::vector<double> xs = {1.0, 2.0, 3.0, 4.0};
    const auto s = summarize(xs);
    CHECK(s.n == 4);
    CHECK(s.mean == doctest::Approx(2.5));
    CHECK(s.stddev == doctest::Approx(std::sqrt(5.0 / 3.0)));
    CHECK(s.ci_half == doctest::Approx(1.96 * s.stddev / 2.0));
}

TEST_CASE("KS helpers") {
    CHECK(kolmogorov_critical_value(0.05) == doctest::Approx(1.358).epsilon(1e-3));
    CHECK(kolmogorov_critical_value(0.01) == doctest::Approx(1.628).epsilon(1e-3));

    RngStream rng(8);
    std::vector<double> x(4000), y(4000);
    for (auto& v : x) v = rng.next_exponential(1.0);
    for (auto& v : y) v = rng.next_exponential(1.0);
    const double same = ks_two_sample_statistic(x, y);
    const double thr = kolmogorov_critical_value(0.01) * std::sqrt(2.0 / 4000.0);
    CHECK(same < thr);

    for (auto& v : y) v += 1.0;
    CHECK(ks_two_sample_statistic(x, y) > thr);
}
