#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "aoisim/core.hpp"
#include "aoisim/engine.hpp"

namespace aoisim {

enum class PenaltyKind { avg, max, mean_square, l_norm, sum_penalty };

/// Per-flow penalty g for the sum-penalty kind: a non-decreasing map from a
/// single age to a dissatisfaction level.
struct AgeCurve {
    enum class Kind { stair, exponential, table } kind = Kind::stair;
    double a = 1.0; ///< stair: floor(a * age); exponential: e^{a * age}
    /// table: piecewise-linear through (age, value) points, strictly
    /// increasing ages and non-decreasing values; clamped outside the range.
    std::vector<std::pair<double, double>> table;

    static AgeCurve stair(double a);
    static AgeCurve exponential(double a);
    static AgeCurve monotone_table(std::vector<std::pair<double, double>> points);

    [[nodiscard]] double operator()(double age) const;
    [[nodiscard]] std::string name() const;
};

struct PenaltyParams {
    PenaltyKind kind = PenaltyKind::avg;
    double l = 2.0; ///< l-norm exponent, >= 1
    AgeCurve g;     ///< sum_penalty only
};

/// A symmetric, non-decreasing penalty of the age vector, optionally with a
/// piecewise-constant parameter schedule over time. Evaluation canonicalizes
/// the input by sorting, so symmetry holds exactly, not just up to float
/// rounding.
class PenaltyFunction {
public:
    static PenaltyFunction average();
    static PenaltyFunction maximum();
    static PenaltyFunction mean_square();
    static PenaltyFunction l_norm(double l);
    static PenaltyFunction sum_penalty(AgeCurve g);

    /// Time-dependent penalty: segments[(start_time, params)] with the first
    /// start at 0 and strictly increasing starts.
    static PenaltyFunction scheduled(std::vector<std::pair<double, PenaltyParams>> segments);

    /// Penalty of an age vector at time t (t selects the active schedule
    /// segment; irrelevant for time-invariant penalties). Ages must be
    /// non-negative.
    [[nodiscard]] double evaluate(std::span<const double> ages, double t = 0.0) const;

    [[nodiscard]] const PenaltyParams& params_at(double t) const;
    [[nodiscard]] std::span<const std::pair<double, PenaltyParams>> segments() const {
        return segments_;
    }
    [[nodiscard]] bool time_dependent() const noexcept { return segments_.size() > 1; }
    [[nodiscard]] std::string name() const;

private:
    explicit PenaltyFunction(std::vector<std::pair<double, PenaltyParams>> segs)
        : segments_(std::move(segs)) {}

    std::vector<std::pair<double, PenaltyParams>> segments_;
};

/// Which age trajectory of a trace to integrate.
enum class AgeSignal { delta, xi };

/// Mean of p(age vector(t)) over [t0, t1]. Average, maximum and mean-square
/// penalties integrate each inter-breakpoint segment in closed form (all
/// flows grow at unit slope between breakpoints); the rest use adaptive
/// quadrature to 1e-8 relative tolerance per segment.
double time_average_penalty(const SimTrace& trace, const PenaltyFunction& p,
                            double t0, double t1,
                            AgeSignal signal = AgeSignal::delta);

/// True iff the i-th largest of `a` is <= the i-th largest of `b` for all i.
bool sorted_dominates(std::span<const double> a, std::span<const double> b);

struct StOrderReport {
    double max_violation = 0.0; ///< max over grid of Pr(X>t) - Pr(Y>t)
    double worst_threshold = 0.0;
    double epsilon = 0.0; ///< DKW-style allowance at the given confidence
    bool ok = false;
    std::size_t grid_size = 0;
};

/// Pooled empirical quantiles at `levels` evenly spaced probabilities,
/// the default threshold grid for empirical_st_order.
std::vector<double> pooled_quantile_grid(std::span<const double> x,
                                         std::span<const double> y,
                                         std::size_t levels = 99);

/// Empirical check of X <=_st Y: at every grid threshold the empirical
/// Pr(X>t) may exceed Pr(Y>t) by at most epsilon, where epsilon combines
/// two one-sided DKW bounds at the given confidence level.
StOrderReport empirical_st_order(std::span<const double> samples_x,
                                 std::span<const double> samples_y,
                                 std::span<const double> grid = {},
                                 double confidence = 0.99);

struct SymmetryReport {
    bool ok = false;
    std::uint64_t trials = 0;
    std::uint64_t symmetry_failures = 0;
    std::uint64_t monotonicity_failures = 0;
    std::uint64_t dominance_failures = 0;
};

/// Membership validator for the symmetric non-decreasing penalty class:
/// random (vector, permutation, dominating vector) triples must satisfy
/// exact permutation invariance, exact monotonicity, and the dominance
/// transfer sorted_dominates(a, b) => p(a) <= p(b).
SymmetryReport check_symmetric_nondecreasing(const PenaltyFunction& p,
                                             std::uint32_t dimension,
                                             std::uint64_t trials,
                                             std::uint64_t seed);

// --- small statistics helpers used by the experiment harness and tests ---

struct SampleSummary {
    std::size_t n = 0;
    double mean = 0.0;
    double stddev = 0.0;   ///< sample standard deviation
    double ci_half = 0.0;  ///< 1.96 * stddev / sqrt(n)
};

SampleSummary summarize(std::span<const double> samples);

/// Two-sample Kolmogorov-Smirnov statistic sup |F_x - F_y|.
double ks_two_sample_statistic(std::vector<double> x, std::vector<double> y);

/// One-sample KS statistic against an explicit CDF.
double ks_one_sample_statistic(std::vector<double> samples,
                               const std::function<double(double)>& cdf);

/// Critical value c(alpha) of the asymptotic Kolmogorov distribution;
/// a two-sample test at level alpha rejects when
/// D > c(alpha) * sqrt((n + m) / (n * m)).
double kolmogorov_critical_value(double alpha);

} // namespace aoisim
