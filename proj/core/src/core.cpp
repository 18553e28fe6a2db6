#include "aoisim/core.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace aoisim {

std::string format_double(double x) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

void Packet::validate() const {
    if (flow_id < 1) throw ConfigError("packet flow_id must be >= 1");
    if (seq < 1) throw ConfigError("packet seq must be >= 1");
    if (!(gen_time >= 0.0)) throw ConfigError("packet gen_time must be >= 0");
    if (!(gen_time <= arrival_time))
        throw ConfigError("packet requires gen_time <= arrival_time");
    if (service_start && !(arrival_time <= *service_start))
        throw ConfigError("packet requires arrival_time <= service_start");
    if (delivery_time) {
        if (!service_start)
            throw ConfigError("delivered packet must have a service_start");
        if (!(*service_start <= *delivery_time))
            throw ConfigError("packet requires service_start <= delivery_time");
    }
}

ArrivalSchedule::ArrivalSchedule(std::vector<ScheduleEntry> entries)
    : entries_(std::move(entries)) {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const auto& e = entries_[i];
        if (!(e.gen_time >= 0.0) || std::isnan(e.arrival_time)) {
            std::ostringstream os;
            os << "schedule entry " << (i + 1) << ": gen_time must be >= 0";
            throw ConfigError(os.str());
        }
        if (!(e.gen_time <= e.arrival_time)) {
            std::ostringstream os;
            os << "schedule entry " << (i + 1)
               << ": requires gen_time <= arrival_time";
            throw ConfigError(os.str());
        }
        if (i > 0 && entries_[i - 1].gen_time > e.gen_time) {
            std::ostringstream os;
            os << "schedule entry " << (i + 1)
               << ": gen_time decreases from previous entry";
            throw ConfigError(os.str());
        }
    }
}

std::uint64_t ArrivalSchedule::hash() const noexcept {
    static_assert(sizeof(ScheduleEntry) == 2 * sizeof(double));
    return hash_bytes(reinterpret_cast<const unsigned char*>(entries_.data()),
                      entries_.size() * sizeof(ScheduleEntry));
}

void SystemConfig::validate() const {
    if (num_flows < 1) throw ConfigError("num_flows must be >= 1");
    if (num_servers < 1) throw ConfigError("num_servers must be >= 1");
    if (!(initial_age >= 0.0)) throw ConfigError("initial_age must be >= 0");
}

namespace {

// Non-upward jump check with a small absolute/relative slack for values the
// engine produces through rounded float arithmetic.
bool jump_is_downward(const Breakpoint& prev, double time, double value) {
    const double extrapolated = prev.value + (time - prev.time);
    const double slack = 1e-9 * std::max(1.0, std::abs(extrapolated));
    return value <= extrapolated + slack;
}

} // namespace

SawtoothProcess SawtoothProcess::from_breakpoints(std::vector<Breakpoint> bps) {
    SawtoothProcess p;
    for (const auto& bp : bps) p.append(bp.time, bp.value);
    return p;
}

void SawtoothProcess::append(double time, double value) {
    if (std::isnan(time) || std::isnan(value))
        throw ConfigError("sawtooth breakpoint must be finite");
    if (!(value >= 0.0))
        throw ConfigError("sawtooth breakpoint value must be >= 0");
    if (points_.empty()) {
        points_.push_back({time, value});
        return;
    }
    Breakpoint& last = points_.back();
    if (time < last.time)
        throw std::logic_error("sawtooth breakpoint times must be increasing");
    if (time == last.time) {
        // Coincident jumps collapse into one breakpoint, keeping the lowest
        // post-jump value.
        if (value > last.value)
            throw std::logic_error("coincident sawtooth jump must not raise value");
        last.value = value;
        return;
    }
    if (!jump_is_downward(last, time, value))
        throw ConfigError("sawtooth jump must not exceed unit-slope growth");
    points_.push_back({time, value});
}

double SawtoothProcess::origin() const {
    if (points_.empty()) throw std::logic_error("empty sawtooth process");
    return points_.front().time;
}

std::size_t SawtoothProcess::segment_index(double t) const {
    if (points_.empty()) throw std::logic_error("empty sawtooth process");
    if (t < points_.front().time) throw ConfigError("before process origin");
    // Last breakpoint with time <= t.
    auto it = std::upper_bound(points_.begin(), points_.end(), t,
                               [](double v, const Breakpoint& bp) { return v < bp.time; });
    return static_cast<std::size_t>(it - points_.begin()) - 1;
}

double SawtoothProcess::value_at(double t) const {
    const auto k = segment_index(t);
    return points_[k].value + (t - points_[k].time);
}

double SawtoothProcess::time_average(double t0, double t1) const {
    if (!(t0 < t1)) throw ConfigError("time_average requires t0 < t1");
    std::size_t k = segment_index(t0);
    double acc = 0.0;
    double cur = t0;
    while (cur < t1) {
        const double seg_end =
            (k + 1 < points_.size()) ? std::min(points_[k + 1].time, t1) : t1;
        const double v0 = points_[k].value + (cur - points_[k].time);
        const double len = seg_end - cur;
        acc += v0 * len + 0.5 * len * len;
        cur = seg_end;
        if (k + 1 < points_.size() && points_[k + 1].time <= cur) ++k;
    }
    return acc / (t1 - t0);
}

double SawtoothProcess::time_average_square(double t0, double t1) const {
    if (!(t0 < t1)) throw ConfigError("time_average requires t0 < t1");
    std::size_t k = segment_index(t0);
    double acc = 0.0;
    double cur = t0;
    while (cur < t1) {
        const double seg_end =
            (k + 1 < points_.size()) ? std::min(points_[k + 1].time, t1) : t1;
        const double v0 = points_[k].value + (cur - points_[k].time);
        const double len = seg_end - cur;
        // integral of (v0 + s)^2 over s in [0, len]
        acc += v0 * v0 * len + v0 * len * len + len * len * len / 3.0;
        cur = seg_end;
        if (k + 1 < points_.size() && points_[k + 1].time <= cur) ++k;
    }
    return acc / (t1 - t0);
}

} // namespace aoisim
