#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "aoisim/core.hpp"
#include "aoisim/distributions.hpp"
#include "aoisim/policies.hpp"

namespace aoisim {

inline constexpr std::uint32_t kNoServer = std::numeric_limits<std::uint32_t>::max();

enum class PacketStatus : std::uint8_t { future, queued, in_service, delivered };

struct PacketState {
    FlowId flow = 1;
    std::uint64_t seq = 1;
    double gen_time = 0.0;
    double arrival_time = 0.0;
    double service_start = -1.0;  ///< first assignment time; < 0 when unset
    double delivery_time = -1.0;  ///< < 0 when unset
    PacketStatus status = PacketStatus::future;
    std::uint32_t server = kNoServer;
    std::uint32_t preemptions = 0;

    [[nodiscard]] Packet to_packet() const;
};

struct ServerSlot {
    std::optional<PacketId> packet;
    /// Bumped on every assign/unseat/deliver so stale completion events can
    /// be recognized and dropped.
    std::uint64_t assignment_seq = 0;
};

/// Live simulation state: the waiting queue, the M server slots, and the
/// per-flow freshness trackers that define the age processes:
///   age(n)            = clock - freshest_delivered(n)
///   age_of_served(n)  = clock - freshest_served(n)
/// Since every delivered packet started service first, freshest_served >=
/// freshest_delivered always, which is exactly the age-of-served-information
/// lower bound on age.
class SystemState {
public:
    SystemState(const SystemConfig& cfg, PacketRule queue_order);

    [[nodiscard]] const SystemConfig& config() const noexcept { return cfg_; }
    [[nodiscard]] std::uint32_t num_flows() const noexcept { return cfg_.num_flows; }
    [[nodiscard]] std::uint32_t num_servers() const noexcept {
        return cfg_.num_servers;
    }
    [[nodiscard]] PacketRule queue_order() const noexcept { return order_; }
    [[nodiscard]] double clock() const noexcept { return clock_; }

    [[nodiscard]] double freshest_delivered(FlowId n) const {
        return freshest_delivered_[check_flow(n)];
    }
    [[nodiscard]] double freshest_served(FlowId n) const {
        return freshest_served_[check_flow(n)];
    }
    [[nodiscard]] double age(FlowId n) const {
        return clock_ - freshest_delivered_[check_flow(n)];
    }
    [[nodiscard]] double age_of_served(FlowId n) const {
        return clock_ - freshest_served_[check_flow(n)];
    }

    [[nodiscard]] bool flow_has_queued(FlowId n) const {
        return !queues_[check_flow(n)].empty();
    }
    [[nodiscard]] std::size_t queued_count() const noexcept { return queued_count_; }

    /// Best queued packet of the flow under the given rule; the rule must
    /// match the ordering this state was built with.
    [[nodiscard]] std::optional<PacketId> best_queued(FlowId n, PacketRule rule) const;

    /// Worst queued packet of the flow under the construction rule (the
    /// other end of the queue order).
    [[nodiscard]] std::optional<PacketId> worst_queued(FlowId n) const;

    [[nodiscard]] const PacketState& packet(PacketId id) const { return packets_[id]; }
    [[nodiscard]] std::span<const PacketState> packets() const noexcept {
        return packets_;
    }
    [[nodiscard]] std::span<const ServerSlot> servers() const noexcept {
        return servers_;
    }
    [[nodiscard]] std::size_t busy_server_count() const noexcept { return busy_; }

    [[nodiscard]] const SawtoothProcess& delta_tracker(FlowId n) const {
        return delta_[check_flow(n)];
    }
    [[nodiscard]] const SawtoothProcess& xi_tracker(FlowId n) const {
        return xi_[check_flow(n)];
    }

    // --- mutation, driven by the event loop (and by tests building states) ---

    void advance_clock(double t);

    /// Registers a not-yet-arrived packet; returns its id.
    PacketId add_packet(FlowId flow, std::uint64_t seq, double gen_time,
                        double arrival_time);

    /// Moves a future packet into the queue at time t.
    void mark_arrived(PacketId id, double t);

    /// Starts service of a queued packet on an idle server at time t. Records
    /// the first service start and lowers the flow's age of served
    /// information when the packet is fresher than anything served so far.
    void assign_to_server(PacketId id, std::uint32_t server, double t);

    /// Preempts the in-service packet on `server`, returning it to the queue.
    PacketId unseat(std::uint32_t server, double t);

    /// Delivers the in-service packet `id` at time t: the flow's age drops to
    /// t - gen_time when the packet is fresher than everything delivered so
    /// far; stale deliveries record no jump. Throws std::logic_error when the
    /// packet is not in service.
    void record_delivery(PacketId id, double t);

private:
    std::size_t check_flow(FlowId n) const;
    double queue_key(const PacketState& p) const noexcept;

    // Per-flow queue ordered ascending by ((key, seq)); key is gen_time for
    // LGFS (best = last element) and arrival_time for FCFS (best = first).
    using QueueSet = std::set<std::pair<std::pair<double, std::uint64_t>, PacketId>>;

    SystemConfig cfg_;
    PacketRule order_;
    double clock_ = 0.0;
    std::vector<PacketState> packets_;
    std::vector<QueueSet> queues_;
    std::size_t queued_count_ = 0;
    std::vector<ServerSlot> servers_;
    std::size_t busy_ = 0;
    std::vector<double> freshest_delivered_;
    std::vector<double> freshest_served_;
    std::vector<SawtoothProcess> delta_;
    std::vector<SawtoothProcess> xi_;
};

enum class TraceEventKind : std::uint8_t { arrival, service_start, preemption, delivery };

struct EventRecord {
    double time = 0.0;
    TraceEventKind kind = TraceEventKind::arrival;
    FlowId flow = 0;
    std::uint64_t seq = 0;
    std::int32_t server = -1;
    std::uint32_t queue_size = 0; ///< waiting packets after the event
};

/// A change of a flow's freshest delivered (or served) generation time:
/// from `time` on, the corresponding age equals t - stamp until the next
/// record. The exact stamps allow tolerance-free age comparisons.
struct ResetRecord {
    double time = 0.0;
    double stamp = 0.0;
};

/// Everything a finished run exposes: the per-flow age and age-of-served-
/// information trajectories (as sawtooth processes plus exact reset logs),
/// the packet log, the event log, and bookkeeping for coupled-run checks.
struct SimTrace {
    SystemConfig config;
    std::string policy;
    double horizon = 0.0;
    std::uint64_t seed = 0;
    bool epoch_driven = false;
    std::uint64_t schedule_hash = 0;
    std::uint64_t coupling_key = 0; ///< nonzero only for coupled runs

    std::vector<SawtoothProcess> delta;
    std::vector<SawtoothProcess> xi;
    std::vector<std::vector<ResetRecord>> delta_resets;
    std::vector<std::vector<ResetRecord>> xi_resets;

    std::vector<PacketState> packets;  ///< empty when packet logging is off
    std::vector<EventRecord> events;   ///< empty when event logging is off

    std::uint64_t arrived = 0;
    std::uint64_t delivered = 0;
    std::uint64_t queued_at_end = 0;
    std::uint64_t in_service_at_end = 0;
    std::uint32_t work_conservation_violations = 0;

    /// Exact age of flow n at time t, from the reset log (single subtraction
    /// from the recorded generation stamp).
    [[nodiscard]] double age_at(FlowId n, double t) const;
    [[nodiscard]] double age_of_served_at(FlowId n, double t) const;
};

struct RunOptions {
    /// Preemption resamples remaining service, which only preserves the
    /// service law for exponential times; anything else needs this override.
    bool allow_preemptive_non_exponential = false;
    /// Probability that an idle server skips an assignment opportunity;
    /// > 0 yields a deliberately non-work-conserving comparator policy.
    double idle_probability = 0.0;
    bool record_events = true;
    bool record_packets = true;
};

/// Runs one policy over one schedule for `horizon` seconds of simulated time.
/// Service times are sampled per assignment; a preempted packet's remaining
/// service is resampled fresh when it is reassigned. Deterministic given all
/// arguments.
SimTrace run(const SystemConfig& cfg, const ArrivalSchedule& schedule,
             const ServiceDistribution& service, const PolicySpec& policy,
             double horizon, std::uint64_t seed, const RunOptions& options = {});

/// Epoch-driven variant for coupled comparisons (single server only): no
/// service times are sampled; instead the in-service packet completes at
/// each of the given potential-completion epochs at which the server is
/// busy. With exponential service this has the same marginal law as `run`.
SimTrace run_with_epochs(const SystemConfig& cfg, const ArrivalSchedule& schedule,
                         const ServiceDistribution& service, const PolicySpec& policy,
                         double horizon, std::span<const double> epochs,
                         std::uint64_t seed, const RunOptions& options = {});

struct EpochAction {
    enum class Kind : std::uint8_t { assign, preempt } kind = Kind::assign;
    std::uint32_t server = 0;
    PacketId packet = 0;                ///< packet now in service
    std::optional<PacketId> displaced;  ///< set for preemptions
    std::uint64_t assignment_seq = 0;
};

/// One scheduling decision epoch: fills idle servers from the queue
/// (work-conserving unless the idle knob fires) and, on arrival-triggered
/// epochs of preemptive policies, repeatedly displaces the lowest-priority
/// in-service packet while a strictly higher-priority queued packet exists.
/// Mutates `state` and returns the applied actions in order.
std::vector<EpochAction> on_decision_epoch(SystemState& state, const PolicySpec& spec,
                                           RngStream& policy_stream,
                                           bool arrival_triggered,
                                           double idle_probability = 0.0,
                                           RngStream* idle_stream = nullptr);

/// Full-trace JSON document (config, events, packets, trackers).
std::string trace_to_json(const SimTrace& trace);

/// Breakpoint lists per flow as CSV rows (flow, tracker, time, value).
void write_trace_breakpoints_csv(const SimTrace& trace, std::ostream& out);

} // namespace aoisim
