#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "aoisim/coupling.hpp"
#include "aoisim/core.hpp"
#include "aoisim/distributions.hpp"
#include "aoisim/engine.hpp"
#include "aoisim/metrics.hpp"
#include "aoisim/policies.hpp"
#include "aoisim/traffic.hpp"

namespace aoisim {

/// One sweep: for every (policy, load) cell, `replications` independent runs
/// are summarized into a mean time-averaged penalty with a 95% CI. Loads are
/// given either as traffic intensities (rho) or as generation rates (lambda);
/// rho converts through lambda = rho * M / (N * E[X]).
struct ExperimentConfig {
    SystemConfig system;
    std::vector<double> rho_grid;    ///< exactly one of rho_grid/lambda_grid
    std::vector<double> lambda_grid;
    DelayModel delay = DelayModel::bernoulli_half();
    double horizon = 1e5;
    ServiceDistribution service = ServiceDistribution::exponential(1.0);
    std::vector<PolicySpec> policies;
    PenaltyFunction penalty = PenaltyFunction::average();
    std::uint32_t replications = 200;
    std::uint64_t base_seed = 1;
    double warmup_fraction = 0.1; ///< excluded from time averages, in [0, 0.5)
    RunOptions run_options;
    std::string output_dir = ".";
    bool dump_traces = false;

    void validate() const;

    /// Parses the JSON experiment file; collects every offending key into a
    /// single ConfigError message.
    static ExperimentConfig from_json_text(const std::string& text);
    static ExperimentConfig from_json_file(const std::string& path);
};

struct CellResult {
    std::string policy;
    double rho = 0.0;
    double lambda = 0.0;
    std::string penalty_kind;
    SampleSummary penalty_avg; ///< over replications
    /// Age-of-served-information average, the lower-bound curve; only for
    /// MASIF policies.
    std::optional<SampleSummary> lower_bound;
};

struct ExperimentResult {
    std::vector<CellResult> cells;
    std::uint64_t traces_run = 0;
    std::uint64_t xi_bound_violations = 0;       ///< age-of-served > age anywhere
    std::uint64_t work_conservation_violations = 0;
    std::string manifest_json;

    [[nodiscard]] std::string results_csv() const;
    [[nodiscard]] const CellResult& cell(const std::string& policy, double rho) const;
};

ExperimentResult run_experiment(const ExperimentConfig& config);

/// Runs the experiment and writes results.csv + manifest.json (and optional
/// trace dumps) under the output directory. Override order for the directory:
/// explicit argument, then AOISIM_OUTPUT_DIR, then the config value.
/// Returns the directory used.
std::string run_experiment_files(const ExperimentConfig& config,
                                 const std::optional<std::string>& output_dir);

/// Exact per-trace check that the age of served information never exceeds
/// the age, comparing the recorded freshness stamps directly.
bool xi_bounds_age(const SimTrace& trace);

// ---------------------------------------------------------------------------
// Verification experiments (the `verify` subcommands)
// ---------------------------------------------------------------------------

struct DominanceExperimentConfig {
    std::uint32_t num_flows = 3;
    ServiceDistribution service = ServiceDistribution::exponential(1.0);
    std::vector<double> rho = {0.5, 1.0, 1.5};
    std::vector<std::string> comparators = {"np-MAF-FCFS", "prmp-RAND-LGFS",
                                            "np-RAND-FCFS", "np-MAF-LGFS"};
    std::uint32_t seeds = 100;
    double horizon = 1e4;
    DelayModel delay = DelayModel::bernoulli_half();
    std::uint64_t base_seed = 2024;
    /// Run the epoch coupling with a non-exponential distribution anyway
    /// (1/mean epoch rate); the dominance guarantee may then fail.
    bool allow_non_exponential = false;
};

struct DominanceCell {
    double rho = 0.0;
    std::string comparator;
    std::size_t boundaries = 0;
    std::size_t violations = 0;
    std::vector<DominanceViolation> examples;
};

struct DominanceOutcome {
    bool ok = false;
    bool xi_pointwise_ok = true;
    std::size_t boundaries = 0;
    std::size_t violations = 0;
    std::vector<DominanceCell> cells;

    [[nodiscard]] std::string to_json() const;
};

/// Coupled sample-path dominance of preemptive MAF-LGFS over each comparator
/// at every event boundary, over rho x seeds.
DominanceOutcome run_dominance_experiment(const DominanceExperimentConfig& config);

struct XiBoundExperimentConfig {
    SystemConfig system{50, 3, 0.0};
    ServiceDistribution service =
        ServiceDistribution::shifted_exponential(1.0 / 3.0, 1.5);
    std::vector<double> rho = {0.3, 0.6, 0.9, 1.2};
    std::vector<std::string> comparators = {"np-MAF-LGFS", "np-RAND-LGFS",
                                            "np-RAND-FCFS"};
    std::uint32_t seeds = 200;
    double horizon = 1e5;
    double warmup_fraction = 0.1;
    DelayModel delay = DelayModel::bernoulli_half();
    std::uint64_t base_seed = 2024;
};

struct XiBoundComparatorResult {
    std::string comparator;
    StOrderReport order;          ///< xi-average of MASIF <=_st delta-average
    SampleSummary delta_avg;      ///< comparator's age penalty average
};

struct XiBoundCell {
    double rho = 0.0;
    SampleSummary masif_delta_avg;
    SampleSummary masif_xi_avg;
    SampleSummary gap; ///< per-seed (delta average - xi average) of MASIF
    bool gap_ok = false; ///< gap mean <= E[X] + CI half-width
    std::vector<XiBoundComparatorResult> comparators;
};

struct XiBoundOutcome {
    bool ok = false;
    bool gap_ok = false;
    bool order_ok = false;
    bool xi_pointwise_ok = true;
    double mean_service_time = 0.0;
    std::vector<XiBoundCell> cells;

    [[nodiscard]] std::string to_json() const;
};

/// The age-of-served-information lower-bound experiment: per (rho, seed) a
/// non-preemptive MASIF-LGFS run shares its arrival schedule with every
/// comparator run; checks the E[X] gap bound and the stochastic ordering of
/// per-seed averages.
XiBoundOutcome run_xi_bound_experiment(const XiBoundExperimentConfig& config);

struct WorkEfficiencyExperimentConfig {
    std::uint32_t num_flows = 3;
    double service_rate = 1.0; ///< exponential; epoch coupling needs it
    std::vector<double> rho = {0.5, 1.0};
    std::vector<std::pair<std::string, std::string>> pairs = {
        {"np-MASIF-LGFS", "np-RAND-FCFS"},
        {"np-MASIF-LGFS", "np-MAF-FCFS"},
    };
    std::uint32_t seeds = 100;
    double horizon = 2000.0;
    DelayModel delay = DelayModel::bernoulli_half();
    std::uint64_t base_seed = 2024;
};

struct WorkEfficiencyOutcome {
    bool ok = false;
    std::size_t packets_checked = 0;
    std::size_t vacuous = 0;
    std::size_t failures = 0;

    [[nodiscard]] std::string to_json() const;
};

/// Checks the weak work-efficiency trace predicate on epoch-coupled
/// non-preemptive pairs (single server, exponential service).
WorkEfficiencyOutcome
run_work_efficiency_experiment(const WorkEfficiencyExperimentConfig& config);

struct PenaltyPropsConfig {
    std::uint32_t dimension = 5;
    std::uint64_t trials = 10000;
    std::uint64_t seed = 2024;
};

struct PenaltyPropsOutcome {
    bool ok = false;
    std::vector<std::pair<std::string, SymmetryReport>> reports;

    [[nodiscard]] std::string to_json() const;
};

/// Symmetry, monotonicity and dominance transfer for every shipped penalty
/// kind.
PenaltyPropsOutcome run_penalty_props(const PenaltyPropsConfig& config);

struct NbuVerifyConfig {
    double grid_step = 0.01;
    double grid_max_multiplier = 10.0; ///< grid extends to this times the mean
};

struct NbuVerifyOutcome {
    bool ok = false;
    bool exponential_equality_ok = false; ///< |violation| tiny everywhere
    std::vector<std::pair<std::string, NbuReport>> reports;

    [[nodiscard]] std::string to_json() const;
};

/// verify_nbu over the shipped service distributions.
NbuVerifyOutcome run_nbu_verification(const NbuVerifyConfig& config);

struct MarginalEquivalenceConfig {
    std::uint32_t num_flows = 3;
    double service_rate = 1.0;
    double rho = 1.0;
    double horizon = 200.0;
    std::uint32_t seeds = 10000;
    std::string policy = "prmp-MAF-LGFS";
    double alpha = 0.01;
    DelayModel delay = DelayModel::bernoulli_half();
    std::uint64_t base_seed = 2024;
};

struct MarginalEquivalenceOutcome {
    bool ok = false;
    double ks_statistic = 0.0;            ///< time-average age samples
    double ks_statistic_deliveries = 0.0; ///< per-run delivery counts
    double threshold = 0.0;

    [[nodiscard]] std::string to_json() const;
};

/// Two-sample KS comparison of the time-average age distribution under
/// epoch-driven vs sampled completions; the coupling construction must not
/// disturb the per-policy marginal law.
MarginalEquivalenceOutcome
run_marginal_equivalence(const MarginalEquivalenceConfig& config);

/// Dispatch for the CLI `verify` subcommands: parses the JSON config for the
/// given subcommand, runs it, and returns (ok, report json).
struct VerifyResult {
    bool ok = false;
    std::string report_json;
};
VerifyResult run_verify(const std::string& subcommand,
                        const std::string& config_json_text);

} // namespace aoisim
