#include "aoisim/distributions.hpp"

#include <cmath>

namespace aoisim {

ServiceDistribution ServiceDistribution::exponential(double rate) {
    if (!(rate > 0.0)) throw ConfigError("exponential rate must be > 0");
    return {ServiceKind::exponential, rate, 0.0, 0};
}

ServiceDistribution ServiceDistribution::shifted_exponential(double shift,
                                                             double rate) {
    if (!(shift > 0.0)) throw ConfigError("shifted_exponential shift must be > 0");
    if (!(rate > 0.0)) throw ConfigError("shifted_exponential rate must be > 0");
    return {ServiceKind::shifted_exponential, shift, rate, 0};
}

ServiceDistribution ServiceDistribution::constant(double value) {
    if (!(value > 0.0)) throw ConfigError("constant service time must be > 0");
    return {ServiceKind::constant, value, 0.0, 0};
}

ServiceDistribution ServiceDistribution::erlang(std::uint32_t shape, double rate) {
    if (shape < 1) throw ConfigError("erlang shape must be >= 1");
    if (!(rate > 0.0)) throw ConfigError("erlang rate must be > 0");
    return {ServiceKind::erlang, rate, 0.0, shape};
}

ServiceDistribution ServiceDistribution::hyperexponential_unchecked(double p_first,
                                                                    double rate1,
                                                                    double rate2) {
    if (!(p_first > 0.0 && p_first < 1.0))
        throw ConfigError("hyperexponential mixing weight must be in (0,1)");
    if (!(rate1 > 0.0) || !(rate2 > 0.0))
        throw ConfigError("hyperexponential rates must be > 0");
    ServiceDistribution d{ServiceKind::hyperexponential, p_first, rate1, 0};
    d.rate2_ = rate2;
    return d;
}

double ServiceDistribution::exponential_rate() const {
    if (kind_ != ServiceKind::exponential)
        throw ConfigError("distribution is not exponential");
    return a_;
}

double ServiceDistribution::sample(RngStream& rng) const {
    switch (kind_) {
    case ServiceKind::exponential:
        return rng.next_exponential(a_);
    case ServiceKind::shifted_exponential:
        return a_ + rng.next_exponential(b_);
    case ServiceKind::constant:
        return a_;
    case ServiceKind::erlang: {
        double total = 0.0;
        for (std::uint32_t i = 0; i < n_; ++i) total += rng.next_exponential(a_);
        return total;
    }
    case ServiceKind::hyperexponential:
        return rng.next_uniform_co() < a_ ? rng.next_exponential(b_)
                                          : rng.next_exponential(rate2_);
    }
    throw std::logic_error("unknown service kind");
}

double ServiceDistribution::mean() const {
    switch (kind_) {
    case ServiceKind::exponential:
        return 1.0 / a_;
    case ServiceKind::shifted_exponential:
        return a_ + 1.0 / b_;
    case ServiceKind::constant:
        return a_;
    case ServiceKind::erlang:
        return static_cast<double>(n_) / a_;
    case ServiceKind::hyperexponential:
        return a_ / b_ + (1.0 - a_) / rate2_;
    }
    throw std::logic_error("unknown service kind");
}

double ServiceDistribution::ccdf(double x) const {
    if (x < 0.0) return 1.0;
    switch (kind_) {
    case ServiceKind::exponential:
        return std::exp(-a_ * x);
    case ServiceKind::shifted_exponential:
        return x < a_ ? 1.0 : std::exp(-b_ * (x - a_));
    case ServiceKind::constant:
        return x < a_ ? 1.0 : 0.0;
    case ServiceKind::erlang: {
        // e^{-rx} * sum_{j<k} (rx)^j / j!
        const double rx = a_ * x;
        double term = 1.0;
        double sum = 1.0;
        for (std::uint32_t j = 1; j < n_; ++j) {
            term *= rx / static_cast<double>(j);
            sum += term;
        }
        return std::exp(-rx) * sum;
    }
    case ServiceKind::hyperexponential:
        return a_ * std::exp(-b_ * x) + (1.0 - a_) * std::exp(-rate2_ * x);
    }
    throw std::logic_error("unknown service kind");
}

std::string ServiceDistribution::name() const {
    switch (kind_) {
    case ServiceKind::exponential:
        return "exponential(" + format_double(a_) + ")";
    case ServiceKind::shifted_exponential:
        return "shifted_exponential(" + format_double(a_) + "," + format_double(b_) +
               ")";
    case ServiceKind::constant:
        return "constant(" + format_double(a_) + ")";
    case ServiceKind::erlang:
        return "erlang(" + std::to_string(n_) + "," + format_double(a_) + ")";
    case ServiceKind::hyperexponential:
        return "hyperexponential(" + format_double(a_) + "," + format_double(b_) +
               "," + format_double(rate2_) + ")";
    }
    return "?";
}

NbuReport verify_nbu(const ServiceDistribution& dist, double grid_step,
                     double grid_max) {
    if (!(grid_step > 0.0)) throw ConfigError("verify_nbu grid_step must be > 0");
    if (!(grid_max > 0.0)) throw ConfigError("verify_nbu grid_max must be > 0");

    NbuReport report;
    report.max_violation = -1e300;
    report.min_violation = 1e300;
    const auto steps = static_cast<std::size_t>(grid_max / grid_step);
    for (std::size_t i = 0; i <= steps; ++i) {
        const double tau = static_cast<double>(i) * grid_step;
        const double ccdf_tau = dist.ccdf(tau);
        for (std::size_t j = i; j <= steps; ++j) { // inequality is symmetric in (tau, t)
            const double t = static_cast<double>(j) * grid_step;
            const double v = dist.ccdf(tau + t) - ccdf_tau * dist.ccdf(t);
            if (v > report.max_violation) {
                report.max_violation = v;
                report.worst_tau = tau;
                report.worst_t = t;
            }
            if (v < report.min_violation) report.min_violation = v;
        }
    }
    report.ok = report.max_violation <= 1e-12;
    return report;
}

} // namespace aoisim
