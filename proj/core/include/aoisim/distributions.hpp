#pragma once

#include <cstdint>
#include <string>

#include "aoisim/core.hpp"
#include "aoisim/rng.hpp"

namespace aoisim {

enum class ServiceKind {
    exponential,
    shifted_exponential,
    constant,
    erlang,
    hyperexponential, ///< not NBU; unchecked construction only
};

/// i.i.d. packet service time. Every factory-constructed kind satisfies the
/// NBU inequality Fbar(tau + t) <= Fbar(tau) * Fbar(t); the one distribution
/// that violates it (hyperexponential) can only be built through the
/// explicitly "unchecked" factory, for experiments that probe what happens
/// when the scheduling guarantees' preconditions fail.
class ServiceDistribution {
public:
    static ServiceDistribution exponential(double rate);
    static ServiceDistribution shifted_exponential(double shift, double rate);
    static ServiceDistribution constant(double value);
    static ServiceDistribution erlang(std::uint32_t shape, double rate);
    static ServiceDistribution hyperexponential_unchecked(double p_first,
                                                          double rate1,
                                                          double rate2);

    [[nodiscard]] ServiceKind kind() const noexcept { return kind_; }
    [[nodiscard]] bool is_exponential() const noexcept {
        return kind_ == ServiceKind::exponential;
    }
    [[nodiscard]] bool nbu_by_construction() const noexcept {
        return kind_ != ServiceKind::hyperexponential;
    }

    /// Rate of a plain exponential; throws for any other kind.
    [[nodiscard]] double exponential_rate() const;

    /// One i.i.d. draw; deterministic given the stream state.
    [[nodiscard]] double sample(RngStream& rng) const;

    /// Closed-form E[X].
    [[nodiscard]] double mean() const;

    /// Pr[X > x]. Negative x clamps to Fbar(0) = 1 by convention.
    [[nodiscard]] double ccdf(double x) const;

    /// CDF, 1 - ccdf; convenience for goodness-of-fit tests.
    [[nodiscard]] double cdf(double x) const { return 1.0 - ccdf(x); }

    /// e.g. "shifted_exponential(0.3333333333333333,1.5)"
    [[nodiscard]] std::string name() const;

private:
    ServiceDistribution(ServiceKind k, double a, double b, std::uint32_t n)
        : kind_(k), a_(a), b_(b), n_(n) {}

    ServiceKind kind_ = ServiceKind::exponential;
    double a_ = 1.0;      ///< rate / value / shift / mixing weight, by kind
    double b_ = 0.0;      ///< second parameter, by kind
    double rate2_ = 0.0;  ///< hyperexponential second rate
    std::uint32_t n_ = 0; ///< erlang shape
};

struct NbuReport {
    double max_violation = 0.0; ///< max of Fbar(tau+t) - Fbar(tau)*Fbar(t)
    double min_violation = 0.0; ///< min of the same difference (for detecting
                                ///< exact equality, i.e. memorylessness)
    double worst_tau = 0.0;
    double worst_t = 0.0;
    bool ok = false; ///< max_violation <= 1e-12
};

/// Grid check of the NBU inequality over (tau, t) in [0, grid_max]^2.
NbuReport verify_nbu(const ServiceDistribution& dist, double grid_step,
                     double grid_max);

} // namespace aoisim
