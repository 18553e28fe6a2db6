#include "aoisim/policies.hpp"

#include <algorithm>
#include <limits>

#include "aoisim/engine.hpp"

namespace aoisim {

std::string PolicySpec::name() const {
    std::string s = is_preemptive() ? "prmp-" : "np-";
    switch (flow_rule) {
    case FlowRule::maf: s += "MAF"; break;
    case FlowRule::masif: s += "MASIF"; break;
    case FlowRule::rand: s += "RAND"; break;
    }
    s += packet_rule == PacketRule::lgfs ? "-LGFS" : "-FCFS";
    return s;
}

PolicySpec PolicySpec::parse(std::string_view name) {
    PolicySpec spec;
    const auto fail = [&]() -> PolicySpec {
        throw ConfigError("unknown policy name: '" + std::string(name) +
                          "' (expected e.g. \"prmp-MAF-LGFS\", \"np-RAND-FCFS\")");
    };
    const auto dash1 = name.find('-');
    if (dash1 == std::string_view::npos) return fail();
    const auto dash2 = name.find('-', dash1 + 1);
    if (dash2 == std::string_view::npos) return fail();

    const auto mode = name.substr(0, dash1);
    const auto flow = name.substr(dash1 + 1, dash2 - dash1 - 1);
    const auto pkt = name.substr(dash2 + 1);

    if (mode == "prmp") spec.preemption = Preemption::preemptive;
    else if (mode == "np") spec.preemption = Preemption::non_preemptive;
    else return fail();

    if (flow == "MAF") spec.flow_rule = FlowRule::maf;
    else if (flow == "MASIF") spec.flow_rule = FlowRule::masif;
    else if (flow == "RAND") spec.flow_rule = FlowRule::rand;
    else return fail();

    if (pkt == "LGFS") spec.packet_rule = PacketRule::lgfs;
    else if (pkt == "FCFS") spec.packet_rule = PacketRule::fcfs;
    else return fail();

    return spec;
}

namespace {

// Flow selection criterion: the flow whose freshest relevant generation time
// is smallest has the largest age (they differ by the shared clock), so MAF
// and MASIF both reduce to an exact argmin over recorded stamps.
double flow_stamp(const SystemState& state, const PolicySpec& spec, FlowId n) {
    return spec.flow_rule == FlowRule::masif ? state.freshest_served(n)
                                             : state.freshest_delivered(n);
}

} // namespace

std::vector<std::uint32_t> draw_flow_permutation(std::uint32_t num_flows,
                                                 RngStream& stream) {
    std::vector<std::uint32_t> order(num_flows);
    for (std::uint32_t i = 0; i < num_flows; ++i) order[i] = i;
    for (std::uint32_t i = num_flows; i > 1; --i) {
        const auto j = static_cast<std::uint32_t>(stream.next_below(i));
        std::swap(order[i - 1], order[j]);
    }
    // order[k] = flow slot at rank k; invert to rank-per-flow.
    std::vector<std::uint32_t> rank(num_flows);
    for (std::uint32_t k = 0; k < num_flows; ++k) rank[order[k]] = k;
    return rank;
}

std::optional<PacketId> select_next(const SystemState& state, const PolicySpec& spec,
                                    RngStream& stream) {
    const std::uint32_t n_flows = state.num_flows();
    FlowId chosen = 0;

    if (spec.flow_rule == FlowRule::rand) {
        std::vector<FlowId> eligible;
        for (FlowId n = 1; n <= n_flows; ++n)
            if (state.flow_has_queued(n)) eligible.push_back(n);
        if (eligible.empty()) return std::nullopt;
        chosen = eligible[stream.next_below(eligible.size())];
    } else {
        double best = std::numeric_limits<double>::infinity();
        std::vector<FlowId> tied;
        for (FlowId n = 1; n <= n_flows; ++n) {
            if (!state.flow_has_queued(n)) continue;
            const double stamp = flow_stamp(state, spec, n);
            if (stamp < best) {
                best = stamp;
                tied.assign(1, n);
            } else if (stamp == best) {
                tied.push_back(n);
            }
        }
        if (tied.empty()) return std::nullopt;
        chosen = (spec.tie_break == TieBreak::random && tied.size() > 1)
                     ? tied[stream.next_below(tied.size())]
                     : tied.front();
    }
    return state.best_queued(chosen, spec.packet_rule);
}

namespace {

// Strict total priority order over flows for one decision epoch. Lower rank
// pair = higher priority. For MAF/MASIF the primary key is the live
// freshness stamp; RAND ranks purely by the drawn permutation.
struct FlowRanker {
    const SystemState& state;
    const PolicySpec& spec;
    std::span<const std::uint32_t> perm;

    std::pair<double, std::uint64_t> rank(FlowId n) const {
        if (spec.flow_rule == FlowRule::rand)
            return {static_cast<double>(perm[n - 1]), 0};
        const std::uint64_t tie = spec.tie_break == TieBreak::random
                                      ? perm[n - 1]
                                      : static_cast<std::uint64_t>(n);
        return {flow_stamp(state, spec, n), tie};
    }
};

// Within-flow key; larger = higher priority under the packet rule.
std::pair<double, std::uint64_t> packet_key(const PacketState& p, PacketRule rule) {
    if (rule == PacketRule::lgfs) return {p.gen_time, p.seq};
    // FCFS prefers the earliest arrival; negate the ordering.
    return {-p.arrival_time, std::numeric_limits<std::uint64_t>::max() - p.seq};
}

} // namespace

std::optional<PreemptionDecision>
preemption_check(const SystemState& state, const PolicySpec& spec,
                 std::span<const std::uint32_t> epoch_ranking) {
    if (!spec.is_preemptive()) return std::nullopt;
    const bool needs_perm =
        spec.flow_rule == FlowRule::rand || spec.tie_break == TieBreak::random;
    if (needs_perm && epoch_ranking.size() != state.num_flows())
        throw std::logic_error("preemption_check requires an epoch flow ranking");

    const FlowRanker ranker{state, spec, epoch_ranking};

    // Top-priority eligible packet: best queued packet of the best-ranked
    // flow that has queued packets.
    std::optional<FlowId> best_flow;
    std::pair<double, std::uint64_t> best_rank{};
    for (FlowId n = 1; n <= state.num_flows(); ++n) {
        if (!state.flow_has_queued(n)) continue;
        const auto r = ranker.rank(n);
        if (!best_flow || r < best_rank) {
            best_flow = n;
            best_rank = r;
        }
    }
    if (!best_flow) return std::nullopt;
    const PacketId candidate = *state.best_queued(*best_flow, spec.packet_rule);

    // Lowest-priority in-service packet.
    std::optional<std::uint32_t> worst_server;
    std::pair<double, std::uint64_t> worst_flow_rank{};
    std::pair<double, std::uint64_t> worst_pkt_key{};
    for (std::uint32_t s = 0; s < state.num_servers(); ++s) {
        const auto& slot = state.servers()[s];
        if (!slot.packet) continue;
        const PacketState& p = state.packet(*slot.packet);
        const auto fr = ranker.rank(p.flow);
        const auto pk = packet_key(p, spec.packet_rule);
        // Worse = larger flow rank, then (same flow rank implies same flow)
        // smaller packet key.
        if (!worst_server || fr > worst_flow_rank ||
            (fr == worst_flow_rank && pk < worst_pkt_key)) {
            worst_server = s;
            worst_flow_rank = fr;
            worst_pkt_key = pk;
        }
    }
    if (!worst_server) return std::nullopt;

    const PacketState& cand = state.packet(candidate);
    const auto cand_flow_rank = ranker.rank(cand.flow);
    const auto cand_key = packet_key(cand, spec.packet_rule);
    const bool strictly_higher =
        cand_flow_rank < worst_flow_rank ||
        (cand_flow_rank == worst_flow_rank && cand_key > worst_pkt_key);
    if (!strictly_higher) return std::nullopt;

    return PreemptionDecision{*worst_server,
                              *state.servers()[*worst_server].packet, candidate};
}

} // namespace aoisim
