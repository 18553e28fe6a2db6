#include "aoisim/coupling.hpp"

#include <algorithm>
#include <cmath>

namespace aoisim {

std::vector<SimTrace> run_coupled(const CoupledRunConfig& config) {
    config.system.validate();
    if (config.policies.empty())
        throw ConfigError("coupled run needs at least one policy");
    if (!(config.horizon > 0.0)) throw ConfigError("coupled run horizon must be > 0");

    std::vector<double> epochs;
    if (config.mode == CompletionMode::shared_epochs) {
        if (config.system.num_servers != 1)
            throw ConfigError("shared_epochs coupling requires a single server");
        if (!config.service.is_exponential() && !config.allow_non_exponential_epochs)
            throw ConfigError("shared_epochs coupling requires exponential service");
        const double mu = config.service.is_exponential()
                              ? config.service.exponential_rate()
                              : 1.0 / config.service.mean();
        RngStream stream(mix_seed(config.seed, stream_tag::epochs));
        double t = 0.0;
        for (;;) {
            t += stream.next_exponential(mu);
            if (t > config.horizon) break;
            epochs.push_back(t);
        }
    }

    const std::uint64_t coupling_key =
        mix_seed(mix_seed(config.schedule.hash(), hash_doubles(epochs)),
                 mix_seed(config.seed, static_cast<std::uint64_t>(config.mode)));

    std::vector<SimTrace> traces;
    traces.reserve(config.policies.size());
    for (std::size_t i = 0; i < config.policies.size(); ++i) {
        const std::uint64_t policy_seed = mix_seed(config.seed, i + 1);
        SimTrace trace =
            config.mode == CompletionMode::shared_epochs
                ? run_with_epochs(config.system, config.schedule, config.service,
                                  config.policies[i], config.horizon, epochs,
                                  policy_seed, config.options)
                : run(config.system, config.schedule, config.service,
                      config.policies[i], config.horizon, policy_seed,
                      config.options);
        trace.coupling_key = coupling_key;
        traces.push_back(std::move(trace));
    }
    return traces;
}

namespace {

// Walks a flow's reset log in time order, exposing the active stamp.
struct StampCursor {
    const std::vector<ResetRecord>* resets;
    std::size_t next = 0;
    double stamp = 0.0;

    void init(const std::vector<ResetRecord>& r) {
        resets = &r;
        next = 0;
        stamp = r.front().stamp;
    }
    void advance_to(double t) {
        while (next < resets->size() && (*resets)[next].time <= t)
            stamp = (*resets)[next++].stamp;
    }
};

std::vector<double> event_boundaries(const SimTrace& a, const SimTrace& b) {
    std::vector<double> times;
    times.reserve(a.events.size() + b.events.size() + 2);
    times.push_back(0.0);
    const auto add = [&](const SimTrace& t) {
        if (!t.events.empty()) {
            for (const auto& e : t.events) times.push_back(e.time);
        } else {
            // Age vectors change only at deliveries; the reset logs cover them.
            for (const auto& flow : t.delta_resets)
                for (const auto& r : flow) times.push_back(r.time);
        }
    };
    add(a);
    add(b);
    times.push_back(std::min(a.horizon, b.horizon));
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    return times;
}

} // namespace

DominanceReport check_samplepath_dominance(const SimTrace& reference,
                                           const SimTrace& comparator,
                                           std::span<const double> checkpoints) {
    if (reference.coupling_key == 0 || comparator.coupling_key == 0 ||
        reference.coupling_key != comparator.coupling_key)
        throw ConfigError("dominance check requires traces from one coupled run");
    if (reference.config.num_flows != comparator.config.num_flows)
        throw ConfigError("dominance check requires equal flow counts");

    std::vector<double> times;
    if (checkpoints.empty()) {
        times = event_boundaries(reference, comparator);
    } else {
        times.assign(checkpoints.begin(), checkpoints.end());
        std::sort(times.begin(), times.end());
    }
    checkpoints = times;

    const std::uint32_t n = reference.config.num_flows;
    std::vector<StampCursor> ref_cursor(n), cmp_cursor(n);
    for (std::uint32_t f = 0; f < n; ++f) {
        ref_cursor[f].init(reference.delta_resets[f]);
        cmp_cursor[f].init(comparator.delta_resets[f]);
    }

    DominanceReport report;
    std::vector<double> ref_ages(n), cmp_ages(n);
    for (double t : checkpoints) {
        for (std::uint32_t f = 0; f < n; ++f) {
            ref_cursor[f].advance_to(t);
            cmp_cursor[f].advance_to(t);
            ref_ages[f] = t - ref_cursor[f].stamp;
            cmp_ages[f] = t - cmp_cursor[f].stamp;
        }
        std::sort(ref_ages.begin(), ref_ages.end(), std::greater<>());
        std::sort(cmp_ages.begin(), cmp_ages.end(), std::greater<>());
        for (std::uint32_t r = 0; r < n; ++r) {
            if (ref_ages[r] > cmp_ages[r]) {
                ++report.violation_count;
                if (report.violations.size() < 64)
                    report.violations.push_back({t, r + 1, ref_ages[r], cmp_ages[r]});
            }
        }
        ++report.checked_boundaries;
    }
    report.ok = report.violation_count == 0;
    return report;
}

WorkEfficiencyReport check_weak_work_efficiency(const SimTrace& efficient,
                                                const SimTrace& other) {
    if (efficient.schedule_hash != other.schedule_hash)
        throw ConfigError("work-efficiency check: schedules differ");
    if (PolicySpec::parse(efficient.policy).is_preemptive() ||
        PolicySpec::parse(other.policy).is_preemptive())
        throw ConfigError("work-efficiency ordering is defined for non-preemptive "
                          "policies");
    if (efficient.events.empty() && efficient.arrived > 0)
        throw ConfigError("work-efficiency check needs the event log");
    if (other.packets.empty() && other.arrived > 0)
        throw ConfigError("work-efficiency check needs the packet log");

    // Queue-size step function and service-start times of the efficient trace.
    std::vector<double> q_times;
    std::vector<std::uint32_t> q_sizes;
    std::vector<double> starts;
    q_times.reserve(efficient.events.size());
    for (const auto& e : efficient.events) {
        q_times.push_back(e.time);
        q_sizes.push_back(e.queue_size);
        if (e.kind == TraceEventKind::service_start) starts.push_back(e.time);
    }

    const auto queue_nonempty_throughout = [&](double tau, double nu) {
        // right-continuous size at tau, then every change point in (tau, nu]
        auto it = std::upper_bound(q_times.begin(), q_times.end(), tau);
        std::size_t i = static_cast<std::size_t>(it - q_times.begin());
        const std::uint32_t at_tau = i == 0 ? 0 : q_sizes[i - 1];
        if (at_tau == 0) return false;
        for (; i < q_times.size() && q_times[i] <= nu; ++i)
            if (q_sizes[i] == 0) return false;
        return true;
    };

    WorkEfficiencyReport report;
    report.ok = true;
    for (const auto& p : other.packets) {
        if (p.service_start < 0.0 || p.delivery_time < 0.0) continue;
        const double tau = p.service_start;
        const double nu = p.delivery_time;
        ++report.packets_checked;
        if (!queue_nonempty_throughout(tau, nu)) {
            ++report.vacuous;
            continue;
        }
        const auto it = std::lower_bound(starts.begin(), starts.end(), tau);
        if (it == starts.end() || *it > nu) {
            report.ok = false;
            if (!report.first_failure)
                report.first_failure =
                    WorkEfficiencyCounterexample{p.flow, p.seq, tau, nu};
        }
    }
    return report;
}

StOrderReport check_xi_lower_bound(std::span<const SimTrace> masif_traces,
                                   std::span<const SimTrace> comparator_traces,
                                   const PenaltyFunction& penalty,
                                   double warmup_fraction) {
    if (masif_traces.empty() || masif_traces.size() != comparator_traces.size())
        throw ConfigError("xi lower bound check needs matched trace pairs");
    if (!(warmup_fraction >= 0.0 && warmup_fraction < 0.5))
        throw ConfigError("warmup_fraction must be in [0, 0.5)");

    std::vector<double> xi_avgs, delta_avgs;
    xi_avgs.reserve(masif_traces.size());
    delta_avgs.reserve(masif_traces.size());
    for (std::size_t i = 0; i < masif_traces.size(); ++i) {
        const SimTrace& m = masif_traces[i];
        const SimTrace& c = comparator_traces[i];
        const PolicySpec m_spec = PolicySpec::parse(m.policy);
        const PolicySpec c_spec = PolicySpec::parse(c.policy);
        if (m_spec.flow_rule != FlowRule::masif || m_spec.is_preemptive())
            throw ConfigError("lower-bound side must be non-preemptive MASIF");
        if (c_spec.is_preemptive())
            throw ConfigError("xi lower bound comparator must be non-preemptive");
        if (m.schedule_hash != c.schedule_hash)
            throw ConfigError("xi lower bound pair must share the arrival schedule");
        const double t0 = warmup_fraction * m.horizon;
        xi_avgs.push_back(
            time_average_penalty(m, penalty, t0, m.horizon, AgeSignal::xi));
        delta_avgs.push_back(
            time_average_penalty(c, penalty, t0, c.horizon, AgeSignal::delta));
    }
    return empirical_st_order(xi_avgs, delta_avgs);
}

} // namespace aoisim
