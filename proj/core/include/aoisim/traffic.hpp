#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "aoisim/core.hpp"

namespace aoisim {

enum class DelayModelKind { zero, bernoulli_half, fixed, custom };

/// How long a generation takes to reach the queue after being sampled.
/// bernoulli_half delays each generation by 0 or 4/rate with equal
/// probability, independently per generation.
struct DelayModel {
    DelayModelKind kind = DelayModelKind::zero;
    double fixed_delay = 0.0;
    std::vector<double> custom_delays; ///< cycled by generation index

    static DelayModel zero() { return {}; }
    static DelayModel bernoulli_half() { return {DelayModelKind::bernoulli_half, 0.0, {}}; }
    static DelayModel fixed(double d) { return {DelayModelKind::fixed, d, {}}; }
    static DelayModel custom(std::vector<double> delays) {
        return {DelayModelKind::custom, 0.0, std::move(delays)};
    }

    void validate() const;
    [[nodiscard]] std::string name() const;
};

/// Parameters for the synthetic generation process: Poisson generations at
/// the given rate over [0, horizon], with per-generation queueing delays.
struct TrafficConfig {
    double rate = 1.0; ///< generations per second
    DelayModel delay;
    double horizon = 1.0;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Draws a schedule with exponential generation gaps, truncated at the
/// horizon. Gap draws and delay draws come from separate sub-streams of the
/// seed, so changing the delay model leaves generation times untouched.
/// Bit-identical for a given config across runs.
ArrivalSchedule generate_poisson_schedule(const TrafficConfig& cfg);

/// Offered load rho = lambda * N * E[X] / M, written with an explicit service
/// rate mu = 1/E[X]. All inputs must be positive.
double traffic_intensity(double rate, std::uint32_t num_flows,
                         std::uint32_t num_servers, double service_rate);

/// Generation time of the freshest packet that has arrived by t:
/// max{ S_i : A_i <= t }, or nullopt when nothing has arrived yet.
std::optional<double> newest_arrived_by(const ArrivalSchedule& sched, double t);

/// CSV round-trip with columns (seq, gen_time, arrival_time). Loading
/// validates the header, sequential 1-based seq values, and every
/// ArrivalSchedule invariant, reporting the offending line.
ArrivalSchedule load_schedule_csv(std::istream& in);
ArrivalSchedule load_schedule_csv_file(const std::string& path);
void write_schedule_csv(const ArrivalSchedule& sched, std::ostream& out);
void write_schedule_csv_file(const ArrivalSchedule& sched, const std::string& path);

} // namespace aoisim
