#include "aoisim/engine.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <queue>
#include <sstream>

namespace aoisim {

Packet PacketState::to_packet() const {
    Packet p;
    p.flow_id = flow;
    p.seq = seq;
    p.gen_time = gen_time;
    p.arrival_time = arrival_time;
    if (service_start >= 0.0) p.service_start = service_start;
    if (delivery_time >= 0.0) p.delivery_time = delivery_time;
    return p;
}

SystemState::SystemState(const SystemConfig& cfg, PacketRule queue_order)
    : cfg_(cfg), order_(queue_order) {
    cfg_.validate();
    queues_.resize(cfg_.num_flows);
    servers_.resize(cfg_.num_servers);
    freshest_delivered_.assign(cfg_.num_flows, -cfg_.initial_age);
    freshest_served_.assign(cfg_.num_flows, -cfg_.initial_age);
    delta_.resize(cfg_.num_flows);
    xi_.resize(cfg_.num_flows);
    for (std::uint32_t n = 0; n < cfg_.num_flows; ++n) {
        delta_[n].append(0.0, cfg_.initial_age);
        xi_[n].append(0.0, cfg_.initial_age);
    }
}

std::size_t SystemState::check_flow(FlowId n) const {
    if (n < 1 || n > cfg_.num_flows) throw std::logic_error("flow id out of range");
    return n - 1;
}

double SystemState::queue_key(const PacketState& p) const noexcept {
    return order_ == PacketRule::lgfs ? p.gen_time : p.arrival_time;
}

std::optional<PacketId> SystemState::best_queued(FlowId n, PacketRule rule) const {
    if (rule != order_)
        throw std::logic_error("queue ordered for a different packet rule");
    const auto& q = queues_[check_flow(n)];
    if (q.empty()) return std::nullopt;
    // LGFS wants the newest generation (largest key); FCFS the earliest
    // arrival (smallest key).
    return order_ == PacketRule::lgfs ? q.rbegin()->second : q.begin()->second;
}

std::optional<PacketId> SystemState::worst_queued(FlowId n) const {
    const auto& q = queues_[check_flow(n)];
    if (q.empty()) return std::nullopt;
    return order_ == PacketRule::lgfs ? q.begin()->second : q.rbegin()->second;
}

void SystemState::advance_clock(double t) {
    if (t < clock_) throw std::logic_error("clock must not move backwards");
    clock_ = t;
}

PacketId SystemState::add_packet(FlowId flow, std::uint64_t seq, double gen_time,
                                 double arrival_time) {
    check_flow(flow);
    PacketState p;
    p.flow = flow;
    p.seq = seq;
    p.gen_time = gen_time;
    p.arrival_time = arrival_time;
    packets_.push_back(p);
    return static_cast<PacketId>(packets_.size() - 1);
}

void SystemState::mark_arrived(PacketId id, double t) {
    PacketState& p = packets_.at(id);
    if (p.status != PacketStatus::future)
        throw std::logic_error("packet arrived twice");
    p.status = PacketStatus::queued;
    queues_[p.flow - 1].insert({{queue_key(p), p.seq}, id});
    ++queued_count_;
    (void)t;
}

void SystemState::assign_to_server(PacketId id, std::uint32_t server, double t) {
    PacketState& p = packets_.at(id);
    if (p.status != PacketStatus::queued)
        throw std::logic_error("assigning a packet that is not queued");
    ServerSlot& slot = servers_.at(server);
    if (slot.packet) throw std::logic_error("assigning to a busy server");

    queues_[p.flow - 1].erase({{queue_key(p), p.seq}, id});
    --queued_count_;
    p.status = PacketStatus::in_service;
    p.server = server;
    if (p.service_start < 0.0) p.service_start = t;
    slot.packet = id;
    ++slot.assignment_seq;
    ++busy_;

    // Age of served information drops when this generation is fresher than
    // anything this flow has put into service before.
    const std::size_t f = p.flow - 1;
    if (p.gen_time > freshest_served_[f]) {
        freshest_served_[f] = p.gen_time;
        xi_[f].append(t, t - p.gen_time);
    }
}

PacketId SystemState::unseat(std::uint32_t server, double t) {
    ServerSlot& slot = servers_.at(server);
    if (!slot.packet) throw std::logic_error("unseating an idle server");
    const PacketId id = *slot.packet;
    PacketState& p = packets_.at(id);
    slot.packet.reset();
    ++slot.assignment_seq;
    --busy_;
    p.status = PacketStatus::queued;
    p.server = kNoServer;
    ++p.preemptions;
    queues_[p.flow - 1].insert({{queue_key(p), p.seq}, id});
    ++queued_count_;
    (void)t;
    return id;
}

void SystemState::record_delivery(PacketId id, double t) {
    PacketState& p = packets_.at(id);
    if (p.status != PacketStatus::in_service)
        throw std::logic_error("delivering a packet not in service");
    ServerSlot& slot = servers_.at(p.server);
    slot.packet.reset();
    ++slot.assignment_seq;
    --busy_;
    p.status = PacketStatus::delivered;
    p.delivery_time = t;
    p.server = kNoServer;

    // Stale deliveries (generation at or before the freshest delivered one)
    // change nothing; the age keeps growing through them.
    const std::size_t f = p.flow - 1;
    if (p.gen_time > freshest_delivered_[f]) {
        freshest_delivered_[f] = p.gen_time;
        delta_[f].append(t, t - p.gen_time);
    }
}

// ---------------------------------------------------------------------------
// Decision epochs
// ---------------------------------------------------------------------------

std::vector<EpochAction> on_decision_epoch(SystemState& state, const PolicySpec& spec,
                                           RngStream& policy_stream,
                                           bool arrival_triggered,
                                           double idle_probability,
                                           RngStream* idle_stream) {
    std::vector<EpochAction> actions;
    const double t = state.clock();

    // Work-conserving fill of idle servers.
    for (std::uint32_t s = 0; s < state.num_servers(); ++s) {
        if (state.queued_count() == 0) break;
        if (state.servers()[s].packet) continue;
        if (idle_probability > 0.0 && idle_stream &&
            idle_stream->next_uniform_co() < idle_probability)
            continue;
        const auto pick = select_next(state, spec, policy_stream);
        if (!pick) break;
        state.assign_to_server(*pick, s, t);
        actions.push_back({EpochAction::Kind::assign, s, *pick, std::nullopt,
                           state.servers()[s].assignment_seq});
    }

    if (arrival_triggered && spec.is_preemptive()) {
        std::vector<std::uint32_t> perm;
        if (spec.flow_rule == FlowRule::rand || spec.tie_break == TieBreak::random)
            perm = draw_flow_permutation(state.num_flows(), policy_stream);
        while (auto d = preemption_check(state, spec, perm)) {
            state.unseat(d->server_id, t);
            state.assign_to_server(d->replacement, d->server_id, t);
            actions.push_back({EpochAction::Kind::preempt, d->server_id,
                               d->replacement, d->displaced,
                               state.servers()[d->server_id].assignment_seq});
        }
    }
    return actions;
}

// ---------------------------------------------------------------------------
// Event loop
// ---------------------------------------------------------------------------

namespace {

enum : std::uint8_t { kArrival = 0, kCompletion = 1, kPotential = 2 };

struct Ev {
    double time;
    std::uint8_t kind;
    std::uint32_t server;
    std::uint64_t aux; ///< schedule index / assignment seq / epoch index
    std::uint64_t ctr; ///< insertion order, the final tiebreak
};

struct EvLater {
    bool operator()(const Ev& a, const Ev& b) const noexcept {
        if (a.time != b.time) return a.time > b.time;
        if (a.kind != b.kind) return a.kind > b.kind;
        return a.ctr > b.ctr;
    }
};

struct Recorder {
    bool enabled;
    std::vector<EventRecord>* out;

    void log(double t, TraceEventKind kind, const PacketState& p, std::int32_t server,
             std::size_t queue_size) const {
        if (!enabled) return;
        out->push_back({t, kind, p.flow, p.seq, server,
                        static_cast<std::uint32_t>(queue_size)});
    }
};

SimTrace run_impl(const SystemConfig& cfg, const ArrivalSchedule& schedule,
                  const ServiceDistribution& service, const PolicySpec& policy,
                  double horizon, std::uint64_t seed, const RunOptions& options,
                  std::span<const double> epochs, bool epoch_mode) {
    cfg.validate();
    if (!(horizon > 0.0)) throw ConfigError("run horizon must be > 0");
    if (options.idle_probability < 0.0 || options.idle_probability >= 1.0)
        throw ConfigError("idle_probability must be in [0, 1)");
    if (policy.is_preemptive() && !service.is_exponential() &&
        !options.allow_preemptive_non_exponential)
        throw ConfigError(
            "preemptive policies require exponential service times "
            "(set allow_preemptive_non_exponential to override)");
    if (epoch_mode && cfg.num_servers != 1)
        throw ConfigError("epoch-driven runs support a single server only");

    SystemState state(cfg, policy.packet_rule);
    RngStream service_stream(mix_seed(seed, stream_tag::service));
    RngStream policy_stream(mix_seed(seed, stream_tag::policy));
    RngStream idle_stream(mix_seed(seed, stream_tag::idle));

    std::priority_queue<Ev, std::vector<Ev>, EvLater> events;
    std::uint64_t ctr = 0;
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        if (schedule[i].arrival_time <= horizon)
            events.push({schedule[i].arrival_time, kArrival, 0, i, ctr++});
    }
    if (epoch_mode) {
        for (std::size_t k = 0; k < epochs.size(); ++k) {
            if (epochs[k] <= horizon)
                events.push({epochs[k], kPotential, 0, k, ctr++});
        }
    }

    SimTrace trace;
    trace.config = cfg;
    trace.policy = policy.name();
    trace.horizon = horizon;
    trace.seed = seed;
    trace.epoch_driven = epoch_mode;
    trace.schedule_hash = schedule.hash();
    trace.delta_resets.assign(cfg.num_flows, {{0.0, -cfg.initial_age}});
    trace.xi_resets.assign(cfg.num_flows, {{0.0, -cfg.initial_age}});
    Recorder rec{options.record_events, &trace.events};

    const auto deliver = [&](std::uint32_t server, double t) {
        const PacketId id = *state.servers()[server].packet;
        const PacketState& p = state.packet(id);
        const double before = state.freshest_delivered(p.flow);
        state.record_delivery(id, t);
        if (state.freshest_delivered(p.flow) > before)
            trace.delta_resets[p.flow - 1].push_back({t, p.gen_time});
        ++trace.delivered;
        rec.log(t, TraceEventKind::delivery, p, static_cast<std::int32_t>(server),
                state.queued_count());
    };

    while (!events.empty() && events.top().time <= horizon) {
        const double t = events.top().time;
        const std::uint8_t kind = events.top().kind;
        state.advance_clock(t);

        bool did_anything = false;
        while (!events.empty() && events.top().time == t && events.top().kind == kind) {
            const Ev ev = events.top();
            events.pop();
            switch (ev.kind) {
            case kArrival: {
                const auto& entry = schedule[ev.aux];
                for (FlowId n = 1; n <= cfg.num_flows; ++n) {
                    const PacketId id =
                        state.add_packet(n, ev.aux + 1, entry.gen_time, entry.arrival_time);
                    state.mark_arrived(id, t);
                    ++trace.arrived;
                    rec.log(t, TraceEventKind::arrival, state.packet(id), -1,
                            state.queued_count());
                }
                did_anything = true;
                break;
            }
            case kCompletion: {
                const ServerSlot& slot = state.servers()[ev.server];
                if (slot.packet && slot.assignment_seq == ev.aux) {
                    deliver(ev.server, t);
                    did_anything = true;
                }
                break;
            }
            case kPotential: {
                for (std::uint32_t s = 0; s < cfg.num_servers; ++s) {
                    if (state.servers()[s].packet) {
                        deliver(s, t);
                        did_anything = true;
                    }
                }
                break;
            }
            }
        }
        if (!did_anything) continue; // batch of stale completions only

        const auto actions =
            on_decision_epoch(state, policy, policy_stream, kind == kArrival,
                              options.idle_probability, &idle_stream);
        for (const auto& act : actions) {
            const PacketState& p = state.packet(act.packet);
            if (act.displaced) {
                const PacketState& gone = state.packet(*act.displaced);
                rec.log(t, TraceEventKind::preemption, gone,
                        static_cast<std::int32_t>(act.server), state.queued_count());
            }
            if (p.gen_time > trace.xi_resets[p.flow - 1].back().stamp)
                trace.xi_resets[p.flow - 1].push_back({t, p.gen_time});
            rec.log(t, TraceEventKind::service_start, p,
                    static_cast<std::int32_t>(act.server), state.queued_count());
            if (!epoch_mode) {
                const double done = t + service.sample(service_stream);
                if (done <= horizon)
                    events.push({done, kCompletion, act.server, act.assignment_seq,
                                 ctr++});
            }
        }

        if (options.idle_probability == 0.0 && state.queued_count() > 0 &&
            state.busy_server_count() < cfg.num_servers)
            ++trace.work_conservation_violations;
    }

    state.advance_clock(horizon);
    for (FlowId n = 1; n <= cfg.num_flows; ++n) {
        trace.delta.push_back(state.delta_tracker(n));
        trace.xi.push_back(state.xi_tracker(n));
    }
    for (const auto& p : state.packets()) {
        if (p.status == PacketStatus::queued) ++trace.queued_at_end;
        if (p.status == PacketStatus::in_service) ++trace.in_service_at_end;
    }
    if (options.record_packets)
        trace.packets.assign(state.packets().begin(), state.packets().end());
    return trace;
}

} // namespace

SimTrace run(const SystemConfig& cfg, const ArrivalSchedule& schedule,
             const ServiceDistribution& service, const PolicySpec& policy,
             double horizon, std::uint64_t seed, const RunOptions& options) {
    return run_impl(cfg, schedule, service, policy, horizon, seed, options, {}, false);
}

SimTrace run_with_epochs(const SystemConfig& cfg, const ArrivalSchedule& schedule,
                         const ServiceDistribution& service, const PolicySpec& policy,
                         double horizon, std::span<const double> epochs,
                         std::uint64_t seed, const RunOptions& options) {
    return run_impl(cfg, schedule, service, policy, horizon, seed, options, epochs,
                    true);
}

// ---------------------------------------------------------------------------
// Trace queries and export
// ---------------------------------------------------------------------------

namespace {

double stamp_at(const std::vector<ResetRecord>& resets, double t) {
    if (resets.empty() || t < resets.front().time)
        throw ConfigError("query before trace start");
    auto it = std::upper_bound(
        resets.begin(), resets.end(), t,
        [](double v, const ResetRecord& r) { return v < r.time; });
    return std::prev(it)->stamp;
}

} // namespace

double SimTrace::age_at(FlowId n, double t) const {
    return t - stamp_at(delta_resets.at(n - 1), t);
}

double SimTrace::age_of_served_at(FlowId n, double t) const {
    return t - stamp_at(xi_resets.at(n - 1), t);
}

namespace {

const char* kind_name(TraceEventKind k) {
    switch (k) {
    case TraceEventKind::arrival: return "arrival";
    case TraceEventKind::service_start: return "service_start";
    case TraceEventKind::preemption: return "preemption";
    case TraceEventKind::delivery: return "delivery";
    }
    return "?";
}

} // namespace

std::string trace_to_json(const SimTrace& trace) {
    std::ostringstream os;
    os << "{\"policy\":\"" << trace.policy << "\",";
    os << "\"num_flows\":" << trace.config.num_flows << ",";
    os << "\"num_servers\":" << trace.config.num_servers << ",";
    os << "\"initial_age\":" << format_double(trace.config.initial_age) << ",";
    os << "\"horizon\":" << format_double(trace.horizon) << ",";
    os << "\"seed\":" << trace.seed << ",";
    os << "\"epoch_driven\":" << (trace.epoch_driven ? "true" : "false") << ",";
    os << "\"arrived\":" << trace.arrived << ",";
    os << "\"delivered\":" << trace.delivered << ",";
    os << "\"events\":[";
    for (std::size_t i = 0; i < trace.events.size(); ++i) {
        const auto& e = trace.events[i];
        if (i) os << ',';
        os << "{\"t\":" << format_double(e.time) << ",\"kind\":\"" << kind_name(e.kind)
           << "\",\"flow\":" << e.flow << ",\"seq\":" << e.seq
           << ",\"server\":" << e.server << ",\"queue\":" << e.queue_size << "}";
    }
    os << "],\"packets\":[";
    for (std::size_t i = 0; i < trace.packets.size(); ++i) {
        const auto& p = trace.packets[i];
        if (i) os << ',';
        os << "{\"flow\":" << p.flow << ",\"seq\":" << p.seq
           << ",\"gen\":" << format_double(p.gen_time)
           << ",\"arrival\":" << format_double(p.arrival_time);
        if (p.service_start >= 0.0)
            os << ",\"service_start\":" << format_double(p.service_start);
        if (p.delivery_time >= 0.0)
            os << ",\"delivery\":" << format_double(p.delivery_time);
        os << ",\"preemptions\":" << p.preemptions << "}";
    }
    os << "],\"delta\":[";
    for (std::size_t n = 0; n < trace.delta.size(); ++n) {
        if (n) os << ',';
        os << '[';
        const auto bps = trace.delta[n].breakpoints();
        for (std::size_t k = 0; k < bps.size(); ++k) {
            if (k) os << ',';
            os << '[' << format_double(bps[k].time) << ',' << format_double(bps[k].value)
               << ']';
        }
        os << ']';
    }
    os << "],\"xi\":[";
    for (std::size_t n = 0; n < trace.xi.size(); ++n) {
        if (n) os << ',';
        os << '[';
        const auto bps = trace.xi[n].breakpoints();
        for (std::size_t k = 0; k < bps.size(); ++k) {
            if (k) os << ',';
            os << '[' << format_double(bps[k].time) << ',' << format_double(bps[k].value)
               << ']';
        }
        os << ']';
    }
    os << "]}";
    return os.str();
}

void write_trace_breakpoints_csv(const SimTrace& trace, std::ostream& out) {
    out << "flow,tracker,time,value\n";
    for (std::size_t n = 0; n < trace.delta.size(); ++n) {
        for (const auto& bp : trace.delta[n].breakpoints())
            out << (n + 1) << ",delta," << format_double(bp.time) << ','
                << format_double(bp.value) << '\n';
        for (const auto& bp : trace.xi[n].breakpoints())
            out << (n + 1) << ",xi," << format_double(bp.time) << ','
                << format_double(bp.value) << '\n';
    }
}

} // namespace aoisim
