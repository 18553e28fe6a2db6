#include "aoisim/traffic.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

namespace aoisim {

void DelayModel::validate() const {
    switch (kind) {
    case DelayModelKind::zero:
    case DelayModelKind::bernoulli_half:
        return;
    case DelayModelKind::fixed:
        if (!(fixed_delay >= 0.0))
            throw ConfigError("fixed delay must be >= 0");
        return;
    case DelayModelKind::custom:
        if (custom_delays.empty())
            throw ConfigError("custom delay list must be non-empty");
        for (double d : custom_delays)
            if (!(d >= 0.0)) throw ConfigError("custom delays must be >= 0");
        return;
    }
    throw ConfigError("unknown delay model");
}

std::string DelayModel::name() const {
    switch (kind) {
    case DelayModelKind::zero: return "zero";
    case DelayModelKind::bernoulli_half: return "bernoulli_half";
    case DelayModelKind::fixed: return "fixed(" + format_double(fixed_delay) + ")";
    case DelayModelKind::custom: return "custom";
    }
    return "?";
}

void TrafficConfig::validate() const {
    if (!(rate > 0.0)) throw ConfigError("traffic rate must be > 0");
    if (!(horizon > 0.0)) throw ConfigError("traffic horizon must be > 0");
    delay.validate();
}

ArrivalSchedule generate_poisson_schedule(const TrafficConfig& cfg) {
    cfg.validate();
    RngStream gaps(mix_seed(cfg.seed, stream_tag::gaps));
    RngStream delays(mix_seed(cfg.seed, stream_tag::delays));

    std::vector<ScheduleEntry> entries;
    double s = 0.0;
    for (std::size_t i = 0;; ++i) {
        s += gaps.next_exponential(cfg.rate);
        if (s > cfg.horizon) break;
        double d = 0.0;
        switch (cfg.delay.kind) {
        case DelayModelKind::zero:
            break;
        case DelayModelKind::bernoulli_half:
            d = delays.next_coin() ? 4.0 / cfg.rate : 0.0;
            break;
        case DelayModelKind::fixed:
            d = cfg.delay.fixed_delay;
            break;
        case DelayModelKind::custom:
            d = cfg.delay.custom_delays[i % cfg.delay.custom_delays.size()];
            break;
        }
        entries.push_back({s, s + d});
    }
    return ArrivalSchedule(std::move(entries));
}

double traffic_intensity(double rate, std::uint32_t num_flows,
                         std::uint32_t num_servers, double service_rate) {
    if (!(rate > 0.0)) throw ConfigError("traffic_intensity: rate must be > 0");
    if (num_flows < 1) throw ConfigError("traffic_intensity: num_flows must be >= 1");
    if (num_servers < 1) throw ConfigError("traffic_intensity: num_servers must be >= 1");
    if (!(service_rate > 0.0))
        throw ConfigError("traffic_intensity: service rate must be > 0");
    return rate * static_cast<double>(num_flows) /
           (static_cast<double>(num_servers) * service_rate);
}

std::optional<double> newest_arrived_by(const ArrivalSchedule& sched, double t) {
    std::optional<double> best;
    for (const auto& e : sched.entries()) {
        if (e.arrival_time <= t && (!best || e.gen_time > *best)) best = e.gen_time;
    }
    return best;
}

namespace {

constexpr const char* kScheduleHeader = "seq,gen_time,arrival_time";

double parse_double_field(const std::string& field, std::size_t line_no,
                          const char* what) {
    double value = 0.0;
    const char* begin = field.data();
    const char* end = begin + field.size();
    const auto res = std::from_chars(begin, end, value);
    if (res.ec != std::errc{} || res.ptr != end) {
        std::ostringstream os;
        os << "schedule csv line " << line_no << ": bad " << what << " '" << field
           << "'";
        throw ConfigError(os.str());
    }
    return value;
}

} // namespace

ArrivalSchedule load_schedule_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line))
        throw ConfigError("schedule csv: empty input");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kScheduleHeader)
        throw ConfigError(std::string("schedule csv: expected header '") +
                          kScheduleHeader + "'");

    std::vector<ScheduleEntry> entries;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream fields(line);
        std::string seq_s, gen_s, arr_s, extra;
        if (!std::getline(fields, seq_s, ',') || !std::getline(fields, gen_s, ',') ||
            !std::getline(fields, arr_s, ',')) {
            std::ostringstream os;
            os << "schedule csv line " << line_no << ": expected 3 fields";
            throw ConfigError(os.str());
        }
        if (std::getline(fields, extra, ',')) {
            std::ostringstream os;
            os << "schedule csv line " << line_no << ": too many fields";
            throw ConfigError(os.str());
        }
        const double seq = parse_double_field(seq_s, line_no, "seq");
        if (seq != static_cast<double>(entries.size() + 1)) {
            std::ostringstream os;
            os << "schedule csv line " << line_no << ": seq must be "
               << (entries.size() + 1);
            throw ConfigError(os.str());
        }
        entries.push_back({parse_double_field(gen_s, line_no, "gen_time"),
                           parse_double_field(arr_s, line_no, "arrival_time")});
    }
    return ArrivalSchedule(std::move(entries));
}

ArrivalSchedule load_schedule_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open schedule file: " + path);
    return load_schedule_csv(in);
}

void write_schedule_csv(const ArrivalSchedule& sched, std::ostream& out) {
    out << kScheduleHeader << '\n';
    std::size_t seq = 0;
    for (const auto& e : sched.entries()) {
        out << ++seq << ',' << format_double(e.gen_time) << ','
            << format_double(e.arrival_time) << '\n';
    }
}

void write_schedule_csv_file(const ArrivalSchedule& sched, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open output file: " + path);
    write_schedule_csv(sched, out);
}

} // namespace aoisim
