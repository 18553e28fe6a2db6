#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "aoisim/core.hpp"
#include "aoisim/distributions.hpp"
#include "aoisim/engine.hpp"
#include "aoisim/metrics.hpp"
#include "aoisim/policies.hpp"

namespace aoisim {

enum class CompletionMode {
    /// One exogenous Poisson stream of potential-completion epochs drives all
    /// policies: whatever packet a policy is serving at an epoch completes at
    /// that instant. Memorylessness keeps every policy's marginal law intact
    /// while synchronizing delivery times across policies during common busy
    /// stretches. Single server with exponential service only.
    shared_epochs,
    /// Shared arrival schedule, independent per-policy service samples.
    independent_draws,
};

struct CoupledRunConfig {
    SystemConfig system;
    ArrivalSchedule schedule; ///< shared by all policies
    ServiceDistribution service = ServiceDistribution::exponential(1.0);
    std::vector<PolicySpec> policies;
    CompletionMode mode = CompletionMode::shared_epochs;
    double horizon = 0.0;
    std::uint64_t seed = 0;
    RunOptions options;
    /// Drive shared epochs at rate 1/mean even for a non-exponential
    /// distribution. The coupling's marginal-law guarantee rests on
    /// memorylessness, so this is strictly an exploration knob.
    bool allow_non_exponential_epochs = false;
};

/// Runs every policy on common randomness; returns one trace per policy, in
/// the order given. All traces carry the same nonzero coupling key.
std::vector<SimTrace> run_coupled(const CoupledRunConfig& config);

struct DominanceViolation {
    double time = 0.0;
    std::uint32_t rank = 0; ///< 1-based sorted-age rank
    double lhs = 0.0;       ///< offending sorted age of the reference policy
    double rhs = 0.0;       ///< comparator's age at the same rank
};

struct DominanceReport {
    bool ok = false;
    std::size_t checked_boundaries = 0;
    std::size_t violation_count = 0;
    std::vector<DominanceViolation> violations; ///< first few, for diagnosis
};

/// Checks that the reference trace's sorted age vector is dominated by the
/// comparator's at every event boundary of either trace (or at the explicit
/// checkpoints when given). Ages come from the exact per-flow reset logs, so
/// the comparison needs no tolerance. Both traces must come from the same
/// shared-epochs coupled run.
DominanceReport check_samplepath_dominance(const SimTrace& reference,
                                           const SimTrace& comparator,
                                           std::span<const double> checkpoints = {});

struct WorkEfficiencyCounterexample {
    FlowId flow = 0;
    std::uint64_t seq = 0;
    double service_start = 0.0;
    double completion = 0.0;
};

struct WorkEfficiencyReport {
    bool ok = false;
    std::size_t packets_checked = 0;
    std::size_t vacuous = 0; ///< intervals during which the queue emptied
    std::optional<WorkEfficiencyCounterexample> first_failure;
};

/// Trace predicate for the weak work-efficiency ordering: for every packet
/// served over [tau, nu] in `other`, if `efficient`'s queue never empties on
/// [tau, nu] then some packet of `efficient` starts service inside [tau, nu].
/// Requires non-preemptive policies sharing one arrival schedule, with event
/// and packet logs recorded.
WorkEfficiencyReport check_weak_work_efficiency(const SimTrace& efficient,
                                                const SimTrace& other);

/// Statistical check behind the age lower bound: across per-seed trace pairs
/// (index-matched, each pair sharing its arrival schedule), the time-averaged
/// penalty of the MASIF-LGFS age-of-served-information must be stochastically
/// below the comparator's time-averaged age penalty. The comparator must be
/// non-preemptive. Averages run over [warmup_fraction * horizon, horizon].
StOrderReport check_xi_lower_bound(std::span<const SimTrace> masif_traces,
                                   std::span<const SimTrace> comparator_traces,
                                   const PenaltyFunction& penalty,
                                   double warmup_fraction = 0.0);

} // namespace aoisim
