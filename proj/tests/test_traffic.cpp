#include <cmath>
#include <doctest.h>
#include <sstream>

#include "aoisim/traffic.hpp"

using namespace aoisim;

namespace {

TrafficConfig make_config(double rate, DelayModel delay, double horizon,
                          std::uint64_t seed) {
    TrafficConfig cfg;
    cfg.rate = rate;
    cfg.delay = delay;
    cfg.horizon = horizon;
    cfg.seed = seed;
    return cfg;
}

} // namespace

TEST_CASE("zero delay model gives arrival == generation") {
    const auto sched =
        generate_poisson_schedule(make_config(1.0, DelayModel::zero(), 1000.0, 42));
    REQUIRE(sched.size() > 100);
    for (const auto& e : sched.entries()) CHECK(e.arrival_time == e.gen_time);
}

TEST_CASE("bernoulli_half delays are 0 or 4/rate") {
    const auto sched = generate_poisson_schedule(
        make_config(0.5, DelayModel::bernoulli_half(), 5000.0, 11));
    std::size_t delayed = 0;
    for (const auto& e : sched.entries()) {
        const double d = e.arrival_time - e.gen_time;
        const bool valid = d == 0.0 || d == doctest::Approx(8.0);
        CHECK(valid);
        delayed += d > 0.0;
    }
    CHECK(delayed > 0);
    CHECK(delayed < sched.size());
}

TEST_CASE("delayed fraction is one half") {
    const auto sched = generate_poisson_schedule(
        make_config(1.0, DelayModel::bernoulli_half(), 1e5, 3));
    std::size_t delayed = 0;
    for (const auto& e : sched.entries()) delayed += e.arrival_time > e.gen_time;
    const double fraction =
        static_cast<double>(delayed) / static_cast<double>(sched.size());
    CHECK(fraction == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("mean generation gap obeys the law of large numbers") {
    const auto sched =
        generate_poisson_schedule(make_config(1.0, DelayModel::zero(), 1e5, 5));
    const double mean_gap =
        sched.entries().back().gen_time / static_cast<double>(sched.size());
    CHECK(mean_gap == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("schedules are bit-identical for a fixed seed") {
    const auto cfg = make_config(2.0, DelayModel::bernoulli_half(), 1000.0, 77);
    const auto a = generate_poisson_schedule(cfg);
    const auto b = generate_poisson_schedule(cfg);
    REQUIRE(a.size() == b.size());
    CHECK(a.hash() == b.hash());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].gen_time == b[i].gen_time);
        CHECK(a[i].arrival_time == b[i].arrival_time);
    }
}

TEST_CASE("delay model changes never perturb generation times") {
    const auto zero =
        generate_poisson_schedule(make_config(1.0, DelayModel::zero(), 2000.0, 9));
    const auto coin = generate_poisson_schedule(
        make_config(1.0, DelayModel::bernoulli_half(), 2000.0, 9));
    REQUIRE(zero.size() == coin.size());
    for (std::size_t i = 0; i < zero.size(); ++i)
        CHECK(zero[i].gen_time == coin[i].gen_time);
}

TEST_CASE("custom delay list cycles by generation index") {
    const auto sched = generate_poisson_schedule(
        make_config(1.0, DelayModel::custom({0.0, 2.0, 5.0}), 100.0, 1));
    for (std::size_t i = 0; i < sched.size(); ++i) {
        const double expected = std::vector<double>{0.0, 2.0, 5.0}[i % 3];
        CHECK(sched[i].arrival_time - sched[i].gen_time == doctest::Approx(expected));
    }
}

TEST_CASE("traffic config validation") {
    CHECK_THROWS_AS(
        generate_poisson_schedule(make_config(0.0, DelayModel::zero(), 10.0, 1)),
        ConfigError);
    CHECK_THROWS_AS(
        generate_poisson_schedule(make_config(1.0, DelayModel::zero(), 0.0, 1)),
        ConfigError);
    CHECK_THROWS_AS(
        generate_poisson_schedule(make_config(1.0, DelayModel::fixed(-1.0), 10.0, 1)),
        ConfigError);
    CHECK_THROWS_AS(
        generate_poisson_schedule(make_config(1.0, DelayModel::custom({}), 10.0, 1)),
        ConfigError);
}

TEST_CASE("traffic intensity formula") {
    CHECK(traffic_intensity(1.0, 3, 1, 1.0) == doctest::Approx(3.0));
    CHECK(traffic_intensity(0.02, 50, 3, 1.0) == doctest::Approx(1.0 / 3.0));
    CHECK_THROWS_AS(traffic_intensity(0.0, 3, 1, 1.0), ConfigError);
    CHECK_THROWS_AS(traffic_intensity(1.0, 3, 1, 0.0), ConfigError);
}

TEST_CASE("newest_arrived_by picks the freshest arrived generation") {
    const ArrivalSchedule sched({{1.0, 1.0}, {2.0, 6.0}});
    CHECK(newest_arrived_by(sched, 3.0) == 1.0);

    // out-of-order: the second generation reaches the queue first
    const ArrivalSchedule ooo({{1.0, 5.0}, {2.0, 3.0}});
    CHECK(newest_arrived_by(ooo, 4.0) == 2.0);

    const ArrivalSchedule empty;
    CHECK(!newest_arrived_by(empty, 10.0).has_value());
}

TEST_CASE("newest_arrived_by is non-decreasing in t") {
    const auto sched = generate_poisson_schedule(
        make_config(1.0, DelayModel::bernoulli_half(), 300.0, 21));
    double prev = -1.0;
    for (double t = 0.0; t < 320.0; t += 0.7) {
        const auto w = newest_arrived_by(sched, t);
        if (w) {
            CHECK(*w >= prev);
            prev = *w;
        }
    }
}

TEST_CASE("schedule csv round trip") {
    const auto sched = generate_poisson_schedule(
        make_config(1.5, DelayModel::bernoulli_half(), 100.0, 33));
    std::ostringstream out;
    write_schedule_csv(sched, out);
    std::istringstream in(out.str());
    const auto loaded = load_schedule_csv(in);
    REQUIRE(loaded.size() == sched.size());
    CHECK(loaded.hash() == sched.hash());
}

TEST_CASE("schedule csv validation errors carry line numbers") {
    std::istringstream bad_header("a,b,c\n1,0,0\n");
    CHECK_THROWS_AS(load_schedule_csv(bad_header), ConfigError);

    std::istringstream bad_seq("seq,gen_time,arrival_time\n2,0,0\n");
    CHECK_THROWS_WITH_AS(load_schedule_csv(bad_seq),
                         doctest::Contains("line 2"), ConfigError);

    std::istringstream bad_order("seq,gen_time,arrival_time\n1,5,3\n");
    CHECK_THROWS_AS(load_schedule_csv(bad_order), ConfigError);

    std::istringstream bad_field("seq,gen_time,arrival_time\n1,xyz,3\n");
    CHECK_THROWS_WITH_AS(load_schedule_csv(bad_field),
                         doctest::Contains("gen_time"), ConfigError);
}
