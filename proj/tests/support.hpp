#pragma once

// Test-only oracles and trace fabrication helpers, kept independent of the
// engine code paths they are used to check.

#include <algorithm>
#include <vector>

#include "aoisim/engine.hpp"
#include "aoisim/rng.hpp"

namespace aoisim::test {

/// The scheduler's delivery jump on a descending-sorted age vector under a
/// single server: the maximum entry drops to floor_age (the age of the
/// freshest arrived generation), everything else keeps growing uninterrupted.
inline std::vector<double> maf_delivery_jump(std::vector<double> sorted_desc,
                                             double floor_age) {
    sorted_desc.erase(sorted_desc.begin());
    sorted_desc.push_back(floor_age);
    return sorted_desc;
}

/// A legal comparator delivery: some single flow's age drops to any value
/// between floor_age and its current age. Input/output are unsorted per-flow
/// vectors.
inline std::vector<double> comparator_delivery_jump(std::vector<double> ages,
                                                    std::size_t flow,
                                                    double new_value) {
    ages.at(flow) = new_value;
    return ages;
}

inline std::vector<double> sorted_desc(std::vector<double> v) {
    std::sort(v.begin(), v.end(), std::greater<>());
    return v;
}

/// Trapezoidal-rule reference for time averages of a piecewise function.
template <typename F>
double trapezoid_average(const F& f, double t0, double t1, double step) {
    double acc = 0.0;
    double prev = f(t0);
    double t = t0;
    while (t < t1) {
        const double next = std::min(t + step, t1);
        const double cur = f(next);
        acc += 0.5 * (prev + cur) * (next - t);
        prev = cur;
        t = next;
    }
    return acc / (t1 - t0);
}

/// Trapezoidal reference for integrands with known jump points: the grid is
/// refined with the jump locations and each jump is approached from the left
/// through `f_left`, so only the integration rule is independent of the
/// implementation under test.
template <typename FRight, typename FLeft>
double trapezoid_average_with_knots(const FRight& f_right, const FLeft& f_left,
                                    double t0, double t1, double step,
                                    std::vector<double> knots) {
    knots.erase(std::remove_if(knots.begin(), knots.end(),
                               [&](double k) { return k <= t0 || k >= t1; }),
                knots.end());
    std::sort(knots.begin(), knots.end());
    knots.push_back(t1);

    double acc = 0.0;
    double cur = t0;
    for (const double knot : knots) {
        double prev = f_right(cur);
        double t = cur;
        while (t < knot) {
            const double next = std::min(t + step, knot);
            const double val = next == knot ? f_left(next) : f_right(next);
            acc += 0.5 * (prev + val) * (next - t);
            prev = val;
            t = next;
        }
        cur = knot;
    }
    return acc / (t1 - t0);
}

/// Builds a random unit-slope sawtooth with jumps at random times.
inline SawtoothProcess random_sawtooth(RngStream& rng, double horizon) {
    SawtoothProcess p;
    double value = rng.next_uniform_co() * 3.0;
    p.append(0.0, value);
    double t = 0.0;
    for (;;) {
        t += 0.05 + rng.next_exponential(1.5);
        if (t > horizon) break;
        const double peak = p.value_at(t);
        p.append(t, rng.next_uniform_co() * peak);
    }
    return p;
}

} // namespace aoisim::test
