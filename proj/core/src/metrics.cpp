#include "aoisim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace aoisim {

// ---------------------------------------------------------------------------
// Penalty functions
// ---------------------------------------------------------------------------

AgeCurve AgeCurve::stair(double a) {
    if (!(a >= 0.0)) throw ConfigError("stair curve requires a >= 0");
    AgeCurve g;
    g.kind = Kind::stair;
    g.a = a;
    return g;
}

AgeCurve AgeCurve::exponential(double a) {
    if (!(a >= 0.0)) throw ConfigError("exponential curve requires a >= 0");
    AgeCurve g;
    g.kind = Kind::exponential;
    g.a = a;
    return g;
}

AgeCurve AgeCurve::monotone_table(std::vector<std::pair<double, double>> points) {
    if (points.size() < 2)
        throw ConfigError("monotone table needs at least two points");
    for (std::size_t i = 1; i < points.size(); ++i) {
        if (!(points[i - 1].first < points[i].first))
            throw ConfigError("monotone table ages must be strictly increasing");
        if (points[i].second < points[i - 1].second)
            throw ConfigError("monotone table values must be non-decreasing");
    }
    AgeCurve g;
    g.kind = Kind::table;
    g.table = std::move(points);
    return g;
}

double AgeCurve::operator()(double age) const {
    switch (kind) {
    case Kind::stair:
        return std::floor(a * age);
    case Kind::exponential:
        return std::exp(a * age);
    case Kind::table: {
        if (age <= table.front().first) return table.front().second;
        if (age >= table.back().first) return table.back().second;
        auto it = std::upper_bound(
            table.begin(), table.end(), age,
            [](double v, const std::pair<double, double>& p) { return v < p.first; });
        const auto& hi = *it;
        const auto& lo = *std::prev(it);
        const double w = (age - lo.first) / (hi.first - lo.first);
        return lo.second + w * (hi.second - lo.second);
    }
    }
    throw std::logic_error("unknown age curve kind");
}

std::string AgeCurve::name() const {
    switch (kind) {
    case Kind::stair: return "stair(" + format_double(a) + ")";
    case Kind::exponential: return "exp(" + format_double(a) + ")";
    case Kind::table: return "table";
    }
    return "?";
}

namespace {

PenaltyParams make_params(PenaltyKind kind) {
    PenaltyParams p;
    p.kind = kind;
    return p;
}

std::string params_name(const PenaltyParams& p) {
    switch (p.kind) {
    case PenaltyKind::avg: return "avg";
    case PenaltyKind::max: return "max";
    case PenaltyKind::mean_square: return "mean_square";
    case PenaltyKind::l_norm: return "l_norm(" + format_double(p.l) + ")";
    case PenaltyKind::sum_penalty: return "sum_penalty[" + p.g.name() + "]";
    }
    return "?";
}

// Penalty of a descending-sorted age vector.
double eval_sorted(const PenaltyParams& p, std::span<const double> sorted_desc) {
    const auto n = static_cast<double>(sorted_desc.size());
    switch (p.kind) {
    case PenaltyKind::avg: {
        double s = 0.0;
        for (double v : sorted_desc) s += v;
        return s / n;
    }
    case PenaltyKind::max:
        return sorted_desc.front();
    case PenaltyKind::mean_square: {
        double s = 0.0;
        for (double v : sorted_desc) s += v * v;
        return s / n;
    }
    case PenaltyKind::l_norm: {
        double s = 0.0;
        for (double v : sorted_desc) s += std::pow(v, p.l);
        return std::pow(s, 1.0 / p.l);
    }
    case PenaltyKind::sum_penalty: {
        double s = 0.0;
        for (double v : sorted_desc) s += p.g(v);
        return s;
    }
    }
    throw std::logic_error("unknown penalty kind");
}

} // namespace

PenaltyFunction PenaltyFunction::average() {
    return PenaltyFunction({{0.0, make_params(PenaltyKind::avg)}});
}
PenaltyFunction PenaltyFunction::maximum() {
    return PenaltyFunction({{0.0, make_params(PenaltyKind::max)}});
}
PenaltyFunction PenaltyFunction::mean_square() {
    return PenaltyFunction({{0.0, make_params(PenaltyKind::mean_square)}});
}
PenaltyFunction PenaltyFunction::l_norm(double l) {
    if (!(l >= 1.0)) throw ConfigError("l_norm requires l >= 1");
    PenaltyParams p = make_params(PenaltyKind::l_norm);
    p.l = l;
    return PenaltyFunction({{0.0, p}});
}
PenaltyFunction PenaltyFunction::sum_penalty(AgeCurve g) {
    PenaltyParams p = make_params(PenaltyKind::sum_penalty);
    p.g = std::move(g);
    return PenaltyFunction({{0.0, p}});
}

PenaltyFunction PenaltyFunction::scheduled(
    std::vector<std::pair<double, PenaltyParams>> segments) {
    if (segments.empty()) throw ConfigError("penalty schedule must be non-empty");
    if (segments.front().first != 0.0)
        throw ConfigError("penalty schedule must start at time 0");
    for (std::size_t i = 1; i < segments.size(); ++i) {
        if (!(segments[i - 1].first < segments[i].first))
            throw ConfigError("penalty schedule times must be strictly increasing");
    }
    for (const auto& [start, p] : segments) {
        if (p.kind == PenaltyKind::l_norm && !(p.l >= 1.0))
            throw ConfigError("l_norm requires l >= 1");
    }
    return PenaltyFunction(std::move(segments));
}

const PenaltyParams& PenaltyFunction::params_at(double t) const {
    auto it = std::upper_bound(
        segments_.begin(), segments_.end(), t,
        [](double v, const auto& seg) { return v < seg.first; });
    if (it == segments_.begin()) throw ConfigError("penalty queried before t=0");
    return std::prev(it)->second;
}

double PenaltyFunction::evaluate(std::span<const double> ages, double t) const {
    if (ages.empty()) throw ConfigError("penalty of an empty age vector");
    for (double v : ages)
        if (!(v >= 0.0)) throw ConfigError("ages must be non-negative");
    std::vector<double> sorted(ages.begin(), ages.end());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    return eval_sorted(params_at(t), sorted);
}

std::string PenaltyFunction::name() const {
    if (!time_dependent()) return params_name(segments_.front().second);
    std::string s = "scheduled[";
    for (std::size_t i = 0; i < segments_.size(); ++i) {
        if (i) s += ';';
        s += format_double(segments_[i].first) + ":" + params_name(segments_[i].second);
    }
    return s + "]";
}

// ---------------------------------------------------------------------------
// Time averages over traces
// ---------------------------------------------------------------------------

namespace {

// Adaptive Simpson quadrature with relative tolerance.
template <typename F>
double simpson_rec(const F& f, double a, double fa, double b, double fb, double m,
                   double fm, double whole, double tol, int depth) {
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return simpson_rec(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
           simpson_rec(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

template <typename F>
double adaptive_simpson(const F& f, double a, double b, double rel_tol) {
    const double fa = f(a);
    const double fb = f(b);
    const double m = 0.5 * (a + b);
    const double fm = f(m);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    const double tol =
        std::max(std::abs(whole) * rel_tol, 1e-14 * std::max(1.0, b - a));
    return simpson_rec(f, a, fa, b, fb, m, fm, whole, tol, 48);
}

// Integral of the penalty over [a, b] sweeping the union of all flows'
// breakpoints; within a segment every age grows at unit slope.
double sweep_integral(std::span<const SawtoothProcess> procs,
                      const PenaltyParams& params, double a, double b) {
    const std::size_t n = procs.size();
    std::vector<std::span<const Breakpoint>> bps(n);
    std::vector<std::size_t> idx(n);
    std::vector<double> base(n);
    for (std::size_t i = 0; i < n; ++i) {
        bps[i] = procs[i].breakpoints();
        auto it = std::upper_bound(
            bps[i].begin(), bps[i].end(), a,
            [](double v, const Breakpoint& bp) { return v < bp.time; });
        idx[i] = static_cast<std::size_t>(it - bps[i].begin()) - 1;
        base[i] = bps[i][idx[i]].value + (a - bps[i][idx[i]].time);
    }

    std::vector<double> scratch(n);
    double acc = 0.0;
    double cur = a;
    while (cur < b) {
        double next_t = b;
        for (std::size_t i = 0; i < n; ++i) {
            if (idx[i] + 1 < bps[i].size())
                next_t = std::min(next_t, bps[i][idx[i] + 1].time);
        }
        const double len = next_t - cur;
        if (len > 0.0) {
            switch (params.kind) {
            case PenaltyKind::avg: {
                double s = 0.0;
                for (double v : base) s += v;
                acc += (s / static_cast<double>(n)) * len + 0.5 * len * len;
                break;
            }
            case PenaltyKind::max: {
                const double mx = *std::max_element(base.begin(), base.end());
                acc += mx * len + 0.5 * len * len;
                break;
            }
            case PenaltyKind::mean_square: {
                double s = 0.0;
                for (double v : base)
                    s += v * v * len + v * len * len + len * len * len / 3.0;
                acc += s / static_cast<double>(n);
                break;
            }
            default: {
                const auto f = [&](double s) {
                    for (std::size_t i = 0; i < n; ++i) scratch[i] = base[i] + s;
                    std::sort(scratch.begin(), scratch.end(), std::greater<>());
                    return eval_sorted(params, scratch);
                };
                // A stair curve jumps wherever a*(base + s) crosses an
                // integer; quadrature needs those cuts or it can settle on a
                // wrong plateau.
                std::vector<double> cuts{0.0, len};
                if (params.kind == PenaltyKind::sum_penalty &&
                    params.g.kind == AgeCurve::Kind::stair && params.g.a > 0.0) {
                    for (double c : base) {
                        const double k0 = std::ceil(params.g.a * c);
                        const double k1 = std::floor(params.g.a * (c + len));
                        for (double k = k0; k <= k1; k += 1.0) {
                            const double s = k / params.g.a - c;
                            if (s > 0.0 && s < len) cuts.push_back(s);
                        }
                    }
                    std::sort(cuts.begin(), cuts.end());
                    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
                }
                for (std::size_t k = 0; k + 1 < cuts.size(); ++k)
                    acc += adaptive_simpson(f, cuts[k], cuts[k + 1], 1e-8);
                break;
            }
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (idx[i] + 1 < bps[i].size() && bps[i][idx[i] + 1].time <= next_t) {
                ++idx[i];
                base[i] = bps[i][idx[i]].value + (next_t - bps[i][idx[i]].time);
            } else {
                base[i] += len;
            }
        }
        cur = next_t;
    }
    return acc;
}

double span_integral(std::span<const SawtoothProcess> procs,
                     const PenaltyParams& params, double a, double b) {
    const auto n = static_cast<double>(procs.size());
    // avg and mean_square are separable across flows; integrate per flow in
    // closed form instead of sweeping the joint breakpoint set.
    switch (params.kind) {
    case PenaltyKind::avg: {
        double s = 0.0;
        for (const auto& proc : procs) s += proc.time_average(a, b);
        return s / n * (b - a);
    }
    case PenaltyKind::mean_square: {
        double s = 0.0;
        for (const auto& proc : procs) s += proc.time_average_square(a, b);
        return s / n * (b - a);
    }
    default:
        return sweep_integral(procs, params, a, b);
    }
}

} // namespace

double time_average_penalty(const SimTrace& trace, const PenaltyFunction& p,
                            double t0, double t1, AgeSignal signal) {
    if (!(t0 < t1)) throw ConfigError("time_average_penalty requires t0 < t1");
    if (t0 < 0.0 || t1 > trace.horizon)
        throw ConfigError("time_average_penalty interval outside the trace");
    const auto& procs = signal == AgeSignal::delta ? trace.delta : trace.xi;
    if (procs.empty()) throw ConfigError("trace has no age trackers");

    double acc = 0.0;
    double cur = t0;
    for (const auto& [start, params] : p.segments()) {
        (void)params;
        if (start > cur && start < t1) {
            acc += span_integral(procs, p.params_at(cur), cur, start);
            cur = start;
        }
    }
    acc += span_integral(procs, p.params_at(cur), cur, t1);
    return acc / (t1 - t0);
}

// ---------------------------------------------------------------------------
// Orderings
// ---------------------------------------------------------------------------

bool sorted_dominates(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw ConfigError("sorted_dominates requires equal-length vectors");
    std::vector<double> sa(a.begin(), a.end());
    std::vector<double> sb(b.begin(), b.end());
    std::sort(sa.begin(), sa.end(), std::greater<>());
    std::sort(sb.begin(), sb.end(), std::greater<>());
    for (std::size_t i = 0; i < sa.size(); ++i)
        if (sa[i] > sb[i]) return false;
    return true;
}

std::vector<double> pooled_quantile_grid(std::span<const double> x,
                                         std::span<const double> y,
                                         std::size_t levels) {
    std::vector<double> pooled;
    pooled.reserve(x.size() + y.size());
    pooled.insert(pooled.end(), x.begin(), x.end());
    pooled.insert(pooled.end(), y.begin(), y.end());
    std::sort(pooled.begin(), pooled.end());
    std::vector<double> grid;
    grid.reserve(levels);
    for (std::size_t k = 1; k <= levels; ++k) {
        const double q = static_cast<double>(k) / static_cast<double>(levels + 1);
        const auto i = static_cast<std::size_t>(q * static_cast<double>(pooled.size() - 1));
        grid.push_back(pooled[i]);
    }
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    return grid;
}

StOrderReport empirical_st_order(std::span<const double> samples_x,
                                 std::span<const double> samples_y,
                                 std::span<const double> grid, double confidence) {
    if (samples_x.empty() || samples_y.empty())
        throw ConfigError("empirical_st_order requires non-empty samples");
    if (!(confidence > 0.0 && confidence < 1.0))
        throw ConfigError("confidence must be in (0,1)");

    std::vector<double> default_grid;
    if (grid.empty()) {
        default_grid = pooled_quantile_grid(samples_x, samples_y);
        grid = default_grid;
    }

    const auto exceed_fraction = [](std::span<const double> s, double t) {
        std::size_t c = 0;
        for (double v : s) c += (v > t);
        return static_cast<double>(c) / static_cast<double>(s.size());
    };

    StOrderReport report;
    report.grid_size = grid.size();
    report.max_violation = -1e300;
    for (double t : grid) {
        const double v = exceed_fraction(samples_x, t) - exceed_fraction(samples_y, t);
        if (v > report.max_violation) {
            report.max_violation = v;
            report.worst_threshold = t;
        }
    }
    // DKW: Pr(sup |Fhat - F| > e) <= 2 exp(-2 n e^2); split the error budget
    // between the two samples.
    const double alpha = 1.0 - confidence;
    const auto dkw = [&](std::size_t n) {
        return std::sqrt(std::log(4.0 / alpha) / (2.0 * static_cast<double>(n)));
    };
    report.epsilon = dkw(samples_x.size()) + dkw(samples_y.size());
    report.ok = report.max_violation <= report.epsilon;
    return report;
}

SymmetryReport check_symmetric_nondecreasing(const PenaltyFunction& p,
                                             std::uint32_t dimension,
                                             std::uint64_t trials,
                                             std::uint64_t seed) {
    if (dimension < 1) throw ConfigError("dimension must be >= 1");
    RngStream rng(seed);
    SymmetryReport report;
    report.trials = trials;

    std::vector<double> v(dimension), perm(dimension), w(dimension);
    std::vector<double> ys(dimension), xs(dimension), x(dimension), y(dimension);
    for (std::uint64_t trial = 0; trial < trials; ++trial) {
        const double t = rng.next_uniform_co() * 100.0;
        for (auto& e : v)
            e = rng.next_uniform_co() < 0.1 ? 0.0 : rng.next_uniform_co() * 50.0;

        // symmetry: evaluate must be permutation-invariant, exactly
        perm = v;
        for (std::size_t i = perm.size(); i > 1; --i)
            std::swap(perm[i - 1], perm[rng.next_below(i)]);
        if (p.evaluate(v, t) != p.evaluate(perm, t)) ++report.symmetry_failures;

        // monotonicity: elementwise larger ages never lower the penalty
        for (std::size_t i = 0; i < dimension; ++i)
            w[i] = v[i] + rng.next_uniform_co() * 10.0;
        if (p.evaluate(v, t) > p.evaluate(w, t)) ++report.monotonicity_failures;

        // dominance transfer: sorted dominance carries over to the penalty
        for (auto& e : ys) e = rng.next_uniform_co() * 50.0;
        std::sort(ys.begin(), ys.end(), std::greater<>());
        for (std::size_t i = 0; i < dimension; ++i)
            xs[i] = ys[i] * rng.next_uniform_co();
        x = xs;
        y = ys;
        for (std::size_t i = x.size(); i > 1; --i)
            std::swap(x[i - 1], x[rng.next_below(i)]);
        for (std::size_t i = y.size(); i > 1; --i)
            std::swap(y[i - 1], y[rng.next_below(i)]);
        if (!sorted_dominates(x, y) || p.evaluate(x, t) > p.evaluate(y, t))
            ++report.dominance_failures;
    }
    report.ok = report.symmetry_failures == 0 && report.monotonicity_failures == 0 &&
                report.dominance_failures == 0;
    return report;
}

// ---------------------------------------------------------------------------
// Statistics helpers
// ---------------------------------------------------------------------------

SampleSummary summarize(std::span<const double> samples) {
    SampleSummary s;
    s.n = samples.size();
    if (s.n == 0) return s;
    s.mean = std::accumulate(samples.begin(), samples.end(), 0.0) /
             static_cast<double>(s.n);
    if (s.n > 1) {
        double ss = 0.0;
        for (double v : samples) ss += (v - s.mean) * (v - s.mean);
        s.stddev = std::sqrt(ss / static_cast<double>(s.n - 1));
        s.ci_half = 1.96 * s.stddev / std::sqrt(static_cast<double>(s.n));
    }
    return s;
}

double ks_two_sample_statistic(std::vector<double> x, std::vector<double> y) {
    if (x.empty() || y.empty())
        throw ConfigError("KS statistic requires non-empty samples");
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    const double nx = static_cast<double>(x.size());
    const double ny = static_cast<double>(y.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < x.size() && j < y.size()) {
        const double v = std::min(x[i], y[j]);
        while (i < x.size() && x[i] <= v) ++i;
        while (j < y.size() && y[j] <= v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / nx -
                                 static_cast<double>(j) / ny));
    }
    return d;
}

double ks_one_sample_statistic(std::vector<double> samples,
                               const std::function<double(double)>& cdf) {
    if (samples.empty()) throw ConfigError("KS statistic requires samples");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        d = std::max(d, std::abs(f - static_cast<double>(i) / n));
        d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
    }
    return d;
}

double kolmogorov_critical_value(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw ConfigError("alpha must be in (0,1)");
    const auto survival = [](double lambda) {
        double s = 0.0;
        for (int k = 1; k <= 100; ++k) {
            const double term =
                2.0 * std::pow(-1.0, k - 1) * std::exp(-2.0 * k * k * lambda * lambda);
            s += term;
            if (std::abs(term) < 1e-16) break;
        }
        return s;
    };
    double lo = 0.1, hi = 5.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (survival(mid) > alpha) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace aoisim
