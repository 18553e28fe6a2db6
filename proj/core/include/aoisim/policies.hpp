#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aoisim/core.hpp"
#include "aoisim/rng.hpp"

namespace aoisim {

class SystemState; // engine.hpp

enum class FlowRule { maf, masif, rand };
enum class PacketRule { lgfs, fcfs };
enum class Preemption { preemptive, non_preemptive };
enum class TieBreak { lowest_flow_index, random };

/// A scheduling policy as the triple (flow discipline, packet discipline,
/// preemption mode), e.g. "prmp-MAF-LGFS": serve the last generated packet of
/// the flow with the maximum age, preempting the server when a higher
/// priority packet shows up.
struct PolicySpec {
    FlowRule flow_rule = FlowRule::maf;
    PacketRule packet_rule = PacketRule::lgfs;
    Preemption preemption = Preemption::non_preemptive;
    TieBreak tie_break = TieBreak::lowest_flow_index;

    [[nodiscard]] bool is_preemptive() const noexcept {
        return preemption == Preemption::preemptive;
    }

    /// Canonical name: "prmp-MAF-LGFS", "np-MASIF-LGFS", "np-RAND-FCFS", ...
    [[nodiscard]] std::string name() const;

    /// Parses a canonical name; throws ConfigError on anything else.
    static PolicySpec parse(std::string_view name);
};

/// Picks the next packet to put into service: the best queued packet of the
/// flow chosen by the flow rule (max age for MAF, max age of served
/// information for MASIF, uniform over flows with queued packets for RAND),
/// then within that flow the last generated packet (LGFS) or the earliest
/// arrived one (FCFS). Returns nullopt when the queue is empty. RAND picks
/// and random tie-breaks draw from `stream`.
std::optional<PacketId> select_next(const SystemState& state, const PolicySpec& spec,
                                    RngStream& stream);

struct PreemptionDecision {
    std::uint32_t server_id = 0;
    PacketId displaced = 0;
    PacketId replacement = 0;
};

/// A uniformly random flow ranking (rank value per 1-based flow, lower is
/// higher priority), drawn once per decision epoch. RAND preemption and
/// random tie-breaking rank flows with it so that repeated preemption checks
/// within one epoch see one consistent order.
std::vector<std::uint32_t> draw_flow_permutation(std::uint32_t num_flows,
                                                 RngStream& stream);

/// Decides whether the policy's top-priority eligible (queued) packet should
/// unseat an in-service packet of strictly lower priority. Returns the
/// lowest-priority busy server together with the displaced and replacement
/// packets, or nullopt (always nullopt for non-preemptive specs).
/// `epoch_ranking` must be a permutation from draw_flow_permutation when the
/// spec uses RAND or random tie-breaking; it may be empty otherwise.
std::optional<PreemptionDecision>
preemption_check(const SystemState& state, const PolicySpec& spec,
                 std::span<const std::uint32_t> epoch_ranking);

} // namespace aoisim
