#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "aoisim/rng.hpp"

namespace aoisim {

/// Thrown for invalid user-supplied configuration or inputs. Internal
/// invariant violations use std::logic_error instead.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Flow index, 1-based to match the usual n = 1..N subscripting.
using FlowId = std::uint32_t;

/// Index into a run's packet pool.
using PacketId = std::uint32_t;

/// One status-update packet and its lifecycle timestamps:
/// generated at gen_time, enters the queue at arrival_time, first assigned
/// to a server at service_start, handed to the destination at delivery_time.
struct Packet {
    FlowId flow_id = 1;
    std::uint64_t seq = 1; ///< generation index, 1-based
    double gen_time = 0.0;
    double arrival_time = 0.0;
    std::optional<double> service_start;
    std::optional<double> delivery_time;

    /// Checks 0 <= S <= A <= V <= D for whichever stages are set.
    void validate() const;
};

/// One generation shared by all flows: generated at gen_time, reaching the
/// queue at arrival_time.
struct ScheduleEntry {
    double gen_time = 0.0;
    double arrival_time = 0.0;
};

/// The exogenous generation/arrival process, identical for every flow and
/// for every policy being compared. Generation times are non-decreasing and
/// each arrival is at or after its generation; arrival order may invert
/// generation order (out-of-order arrivals are allowed).
class ArrivalSchedule {
public:
    ArrivalSchedule() = default;

    /// Validates and adopts the entries; throws ConfigError on violation.
    explicit ArrivalSchedule(std::vector<ScheduleEntry> entries);

    [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }
    [[nodiscard]] bool empty() const noexcept { return entries_.empty(); }

    /// Entry for generation index i+1 (0-based access).
    const ScheduleEntry& operator[](std::size_t i) const { return entries_[i]; }

    [[nodiscard]] std::span<const ScheduleEntry> entries() const noexcept {
        return entries_;
    }

    /// Stable content hash; used to assert that compared traces really did
    /// share one schedule.
    [[nodiscard]] std::uint64_t hash() const noexcept;

private:
    std::vector<ScheduleEntry> entries_;
};

/// Static system shape: N flows feeding one queue drained by M servers.
/// The initial age applies uniformly to all flows so that compared policies
/// start from the same state.
struct SystemConfig {
    std::uint32_t num_flows = 1;
    std::uint32_t num_servers = 1;
    double initial_age = 0.0;

    void validate() const;
};

/// Shortest round-trip decimal form of a double, via std::to_chars.
/// All CSV/JSON writers use this so that repeated runs emit identical bytes.
std::string format_double(double x);

struct Breakpoint {
    double time = 0.0;
    double value = 0.0; ///< value just after the breakpoint
};

/// Piecewise-linear record of an age trajectory: between breakpoints the
/// value grows at exactly unit rate; downward jumps happen only at
/// breakpoints. Stores the value just after each jump; the pre-jump peak is
/// the previous value plus the elapsed time.
class SawtoothProcess {
public:
    SawtoothProcess() = default;

    /// Builds from an explicit breakpoint list. Times must be strictly
    /// increasing, values non-negative, and each jump non-upward.
    static SawtoothProcess from_breakpoints(std::vector<Breakpoint> bps);

    /// Appends a breakpoint at time t with the given post-jump value.
    /// An append at exactly the last breakpoint's time replaces its value
    /// (the jump may only go further down).
    void append(double time, double value);

    [[nodiscard]] bool empty() const noexcept { return points_.empty(); }
    [[nodiscard]] std::span<const Breakpoint> breakpoints() const noexcept {
        return points_;
    }

    /// First recorded time; queries before it are invalid.
    [[nodiscard]] double origin() const;

    /// Right-continuous value at t: v_k + (t - t_k) for the last breakpoint
    /// at or before t. Throws ConfigError("before process origin") for
    /// queries before the first breakpoint.
    [[nodiscard]] double value_at(double t) const;

    /// Exact mean of the trajectory over [t0, t1], integrating each linear
    /// segment in closed form. Requires t0 < t1 and t0 >= origin().
    [[nodiscard]] double time_average(double t0, double t1) const;

    /// Exact mean of the squared trajectory over [t0, t1].
    [[nodiscard]] double time_average_square(double t0, double t1) const;

private:
    std::size_t segment_index(double t) const;

    std::vector<Breakpoint> points_;
};

} // namespace aoisim
