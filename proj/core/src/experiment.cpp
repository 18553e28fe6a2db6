#include "aoisim/experiment.hpp"

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

namespace aoisim {

using nlohmann::json;

namespace {

// Runs fn(i) for i in [0, count) on a small worker pool. Each task writes
// only into its own result slot, so scheduling order never affects output.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers =
        std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

double lambda_for_rho(double rho, const SystemConfig& system, double mean_service) {
    return rho * static_cast<double>(system.num_servers) /
           (static_cast<double>(system.num_flows) * mean_service);
}

std::uint64_t cell_seed(std::uint64_t base, double load, std::uint64_t salt) {
    return mix_seed(mix_seed(base, hash_double(load)), salt);
}

} // namespace

bool xi_bounds_age(const SimTrace& trace) {
    for (std::size_t f = 0; f < trace.delta_resets.size(); ++f) {
        const auto& d = trace.delta_resets[f];
        const auto& x = trace.xi_resets[f];
        std::size_t di = 0, xi = 0;
        double d_stamp = d.front().stamp;
        double x_stamp = x.front().stamp;
        while (di < d.size() || xi < x.size()) {
            double t = 1e300;
            if (di < d.size()) t = std::min(t, d[di].time);
            if (xi < x.size()) t = std::min(t, x[xi].time);
            while (di < d.size() && d[di].time <= t) d_stamp = d[di++].stamp;
            while (xi < x.size() && x[xi].time <= t) x_stamp = x[xi++].stamp;
            // served freshness may never lag delivered freshness
            if (x_stamp < d_stamp) return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// Experiment config parsing
// ---------------------------------------------------------------------------

namespace {

struct KeyErrors {
    std::vector<std::string> errors;

    void add(const std::string& key, const std::string& what) {
        errors.push_back(key + ": " + what);
    }

    void expect_keys(const json& obj, const std::string& ctx,
                     std::initializer_list<const char*> allowed) {
        for (auto it = obj.begin(); it != obj.end(); ++it) {
            bool known = false;
            for (const char* k : allowed)
                if (it.key() == k) known = true;
            if (!known) add(ctx.empty() ? it.key() : ctx + "." + it.key(),
                            "unknown key");
        }
    }

    void throw_if_any() const {
        if (errors.empty()) return;
        std::string msg = "invalid config:";
        for (const auto& e : errors) msg += "\n  - " + e;
        throw ConfigError(msg);
    }
};

double require_number(const json& obj, const std::string& ctx, const char* key,
                      KeyErrors& errs, double fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number()) {
        errs.add(ctx + "." + key, "must be a number");
        return fallback;
    }
    return obj[key].get<double>();
}

std::uint64_t require_uint(const json& obj, const std::string& ctx, const char* key,
                           KeyErrors& errs, std::uint64_t fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number_unsigned() && !obj[key].is_number_integer()) {
        errs.add(ctx + "." + key, "must be a non-negative integer");
        return fallback;
    }
    const auto v = obj[key].get<std::int64_t>();
    if (v < 0) {
        errs.add(ctx + "." + key, "must be a non-negative integer");
        return fallback;
    }
    return static_cast<std::uint64_t>(v);
}

std::vector<double> number_list(const json& value, const std::string& ctx,
                                KeyErrors& errs) {
    std::vector<double> out;
    if (!value.is_array() || value.empty()) {
        errs.add(ctx, "must be a non-empty array of numbers");
        return out;
    }
    for (const auto& v : value) {
        if (!v.is_number()) {
            errs.add(ctx, "must contain only numbers");
            return {};
        }
        out.push_back(v.get<double>());
    }
    return out;
}

DelayModel parse_delay(const json& value, const std::string& ctx, KeyErrors& errs) {
    if (value.is_string()) {
        const auto s = value.get<std::string>();
        if (s == "zero") return DelayModel::zero();
        if (s == "bernoulli_half") return DelayModel::bernoulli_half();
        errs.add(ctx, "unknown delay model '" + s + "'");
        return DelayModel::zero();
    }
    if (value.is_object()) {
        if (value.contains("fixed")) {
            if (!value["fixed"].is_number()) {
                errs.add(ctx + ".fixed", "must be a number");
                return DelayModel::zero();
            }
            return DelayModel::fixed(value["fixed"].get<double>());
        }
        if (value.contains("custom"))
            return DelayModel::custom(number_list(value["custom"], ctx + ".custom", errs));
    }
    errs.add(ctx, "expected \"zero\", \"bernoulli_half\", {\"fixed\": d} or "
                  "{\"custom\": [...]}");
    return DelayModel::zero();
}

ServiceDistribution parse_service(const json& obj, const std::string& ctx,
                                  KeyErrors& errs) {
    auto fallback = ServiceDistribution::exponential(1.0);
    if (!obj.is_object() || !obj.contains("kind") || !obj["kind"].is_string()) {
        errs.add(ctx, "must be an object with a \"kind\"");
        return fallback;
    }
    const auto kind = obj["kind"].get<std::string>();
    try {
        if (kind == "exponential") {
            errs.expect_keys(obj, ctx, {"kind", "rate"});
            return ServiceDistribution::exponential(
                require_number(obj, ctx, "rate", errs, 1.0));
        }
        if (kind == "shifted_exponential") {
            errs.expect_keys(obj, ctx, {"kind", "shift", "rate"});
            return ServiceDistribution::shifted_exponential(
                require_number(obj, ctx, "shift", errs, 1.0),
                require_number(obj, ctx, "rate", errs, 1.0));
        }
        if (kind == "constant") {
            errs.expect_keys(obj, ctx, {"kind", "value"});
            return ServiceDistribution::constant(
                require_number(obj, ctx, "value", errs, 1.0));
        }
        if (kind == "erlang") {
            errs.expect_keys(obj, ctx, {"kind", "shape", "rate"});
            return ServiceDistribution::erlang(
                static_cast<std::uint32_t>(require_uint(obj, ctx, "shape", errs, 1)),
                require_number(obj, ctx, "rate", errs, 1.0));
        }
        if (kind == "hyperexponential") {
            errs.expect_keys(obj, ctx, {"kind", "p", "rate1", "rate2", "unchecked"});
            if (!obj.contains("unchecked") || obj["unchecked"] != true) {
                errs.add(ctx, "hyperexponential is not NBU; set \"unchecked\": true "
                              "to construct it anyway");
                return fallback;
            }
            return ServiceDistribution::hyperexponential_unchecked(
                require_number(obj, ctx, "p", errs, 0.5),
                require_number(obj, ctx, "rate1", errs, 1.0),
                require_number(obj, ctx, "rate2", errs, 1.0));
        }
    } catch (const ConfigError& e) {
        errs.add(ctx, e.what());
        return fallback;
    }
    errs.add(ctx + ".kind", "unknown service kind '" + kind + "'");
    return fallback;
}

AgeCurve parse_age_curve(const json& obj, const std::string& ctx, KeyErrors& errs) {
    auto fallback = AgeCurve::stair(1.0);
    if (!obj.is_object() || !obj.contains("kind") || !obj["kind"].is_string()) {
        errs.add(ctx, "must be an object with a \"kind\"");
        return fallback;
    }
    const auto kind = obj["kind"].get<std::string>();
    try {
        if (kind == "stair") {
            errs.expect_keys(obj, ctx, {"kind", "a"});
            return AgeCurve::stair(require_number(obj, ctx, "a", errs, 1.0));
        }
        if (kind == "exp") {
            errs.expect_keys(obj, ctx, {"kind", "a"});
            return AgeCurve::exponential(require_number(obj, ctx, "a", errs, 1.0));
        }
        if (kind == "table") {
            errs.expect_keys(obj, ctx, {"kind", "points"});
            std::vector<std::pair<double, double>> points;
            if (obj.contains("points") && obj["points"].is_array()) {
                for (const auto& p : obj["points"]) {
                    if (p.is_array() && p.size() == 2 && p[0].is_number() &&
                        p[1].is_number()) {
                        points.emplace_back(p[0].get<double>(), p[1].get<double>());
                    } else {
                        errs.add(ctx + ".points", "entries must be [age, value] pairs");
                        return fallback;
                    }
                }
            }
            return AgeCurve::monotone_table(std::move(points));
        }
    } catch (const ConfigError& e) {
        errs.add(ctx, e.what());
        return fallback;
    }
    errs.add(ctx + ".kind", "unknown curve kind '" + kind + "'");
    return fallback;
}

PenaltyParams parse_penalty_params(const json& obj, const std::string& ctx,
                                   KeyErrors& errs) {
    PenaltyParams params;
    if (!obj.is_object() || !obj.contains("kind") || !obj["kind"].is_string()) {
        errs.add(ctx, "must be an object with a \"kind\"");
        return params;
    }
    const auto kind = obj["kind"].get<std::string>();
    if (kind == "avg") {
        params.kind = PenaltyKind::avg;
    } else if (kind == "max") {
        params.kind = PenaltyKind::max;
    } else if (kind == "mean_square") {
        params.kind = PenaltyKind::mean_square;
    } else if (kind == "l_norm") {
        params.kind = PenaltyKind::l_norm;
        params.l = require_number(obj, ctx, "l", errs, 2.0);
        if (!(params.l >= 1.0)) errs.add(ctx + ".l", "must be >= 1");
    } else if (kind == "sum_penalty") {
        params.kind = PenaltyKind::sum_penalty;
        if (!obj.contains("g")) {
            errs.add(ctx + ".g", "sum_penalty requires a \"g\" curve");
        } else {
            params.g = parse_age_curve(obj["g"], ctx + ".g", errs);
        }
    } else {
        errs.add(ctx + ".kind", "unknown penalty kind '" + kind + "'");
    }
    return params;
}

PenaltyFunction parse_penalty(const json& obj, const std::string& ctx,
                              KeyErrors& errs) {
    auto fallback = PenaltyFunction::average();
    if (obj.is_object() && obj.contains("kind") && obj["kind"] == "scheduled") {
        errs.expect_keys(obj, ctx, {"kind", "segments"});
        if (!obj.contains("segments") || !obj["segments"].is_array() ||
            obj["segments"].empty()) {
            errs.add(ctx + ".segments", "must be a non-empty array");
            return fallback;
        }
        std::vector<std::pair<double, PenaltyParams>> segments;
        std::size_t i = 0;
        for (const auto& seg : obj["segments"]) {
            const std::string seg_ctx = ctx + ".segments[" + std::to_string(i++) + "]";
            const double start = require_number(seg, seg_ctx, "start", errs, 0.0);
            segments.emplace_back(start, parse_penalty_params(seg, seg_ctx, errs));
        }
        try {
            return PenaltyFunction::scheduled(std::move(segments));
        } catch (const ConfigError& e) {
            errs.add(ctx, e.what());
            return fallback;
        }
    }
    const PenaltyParams params = parse_penalty_params(obj, ctx, errs);
    try {
        switch (params.kind) {
        case PenaltyKind::avg: return PenaltyFunction::average();
        case PenaltyKind::max: return PenaltyFunction::maximum();
        case PenaltyKind::mean_square: return PenaltyFunction::mean_square();
        case PenaltyKind::l_norm: return PenaltyFunction::l_norm(params.l);
        case PenaltyKind::sum_penalty: return PenaltyFunction::sum_penalty(params.g);
        }
    } catch (const ConfigError& e) {
        errs.add(ctx, e.what());
    }
    return fallback;
}

json parse_json_text(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
}

} // namespace

void ExperimentConfig::validate() const {
    system.validate();
    delay.validate();
    if (rho_grid.empty() == lambda_grid.empty())
        throw ConfigError("exactly one of traffic.rho / traffic.lambda is required");
    for (double v : rho_grid)
        if (!(v > 0.0)) throw ConfigError("rho values must be > 0");
    for (double v : lambda_grid)
        if (!(v > 0.0)) throw ConfigError("lambda values must be > 0");
    if (!(horizon > 0.0)) throw ConfigError("horizon must be > 0");
    if (policies.empty()) throw ConfigError("at least one policy is required");
    if (replications < 1) throw ConfigError("replications must be >= 1");
    if (!(warmup_fraction >= 0.0 && warmup_fraction < 0.5))
        throw ConfigError("warmup_fraction must be in [0, 0.5)");
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
    const json root = parse_json_text(text);
    KeyErrors errs;
    if (!root.is_object()) throw ConfigError("config root must be a JSON object");
    errs.expect_keys(root, "",
                     {"system", "traffic", "service", "policies", "penalty",
                      "replications", "base_seed", "warmup_fraction", "tie_break",
                      "run_options", "output"});

    ExperimentConfig cfg;
    if (root.contains("system")) {
        const auto& s = root["system"];
        errs.expect_keys(s, "system", {"num_flows", "num_servers", "initial_age"});
        cfg.system.num_flows =
            static_cast<std::uint32_t>(require_uint(s, "system", "num_flows", errs, 1));
        cfg.system.num_servers = static_cast<std::uint32_t>(
            require_uint(s, "system", "num_servers", errs, 1));
        cfg.system.initial_age = require_number(s, "system", "initial_age", errs, 0.0);
    } else {
        errs.add("system", "required section missing");
    }

    if (root.contains("traffic")) {
        const auto& t = root["traffic"];
        errs.expect_keys(t, "traffic", {"rho", "lambda", "delay_model", "horizon"});
        if (t.contains("rho")) cfg.rho_grid = number_list(t["rho"], "traffic.rho", errs);
        if (t.contains("lambda"))
            cfg.lambda_grid = number_list(t["lambda"], "traffic.lambda", errs);
        if (t.contains("rho") == t.contains("lambda"))
            errs.add("traffic", "exactly one of \"rho\" / \"lambda\" is required");
        if (t.contains("delay_model"))
            cfg.delay = parse_delay(t["delay_model"], "traffic.delay_model", errs);
        cfg.horizon = require_number(t, "traffic", "horizon", errs, cfg.horizon);
    } else {
        errs.add("traffic", "required section missing");
    }

    if (root.contains("service"))
        cfg.service = parse_service(root["service"], "service", errs);
    else
        errs.add("service", "required section missing");

    if (root.contains("policies") && root["policies"].is_array() &&
        !root["policies"].empty()) {
        TieBreak tie = TieBreak::lowest_flow_index;
        if (root.contains("tie_break")) {
            if (root["tie_break"] == "random") tie = TieBreak::random;
            else if (root["tie_break"] != "lowest_flow_index")
                errs.add("tie_break", "must be \"lowest_flow_index\" or \"random\"");
        }
        for (const auto& name : root["policies"]) {
            if (!name.is_string()) {
                errs.add("policies", "must be an array of policy names");
                break;
            }
            try {
                PolicySpec spec = PolicySpec::parse(name.get<std::string>());
                spec.tie_break = tie;
                cfg.policies.push_back(spec);
            } catch (const ConfigError& e) {
                errs.add("policies", e.what());
            }
        }
    } else {
        errs.add("policies", "required non-empty array missing");
    }

    if (root.contains("penalty"))
        cfg.penalty = parse_penalty(root["penalty"], "penalty", errs);
    else
        errs.add("penalty", "required section missing");

    cfg.replications = static_cast<std::uint32_t>(
        require_uint(root, "", "replications", errs, cfg.replications));
    if (root.contains("replications") && cfg.replications == 0)
        errs.add("replications", "must be >= 1");
    cfg.base_seed = require_uint(root, "", "base_seed", errs, cfg.base_seed);
    cfg.warmup_fraction =
        require_number(root, "", "warmup_fraction", errs, cfg.warmup_fraction);
    if (!(cfg.warmup_fraction >= 0.0 && cfg.warmup_fraction < 0.5))
        errs.add("warmup_fraction", "must be in [0, 0.5)");

    if (root.contains("run_options")) {
        const auto& r = root["run_options"];
        errs.expect_keys(r, "run_options",
                         {"allow_preemptive_non_exponential", "idle_probability"});
        if (r.contains("allow_preemptive_non_exponential"))
            cfg.run_options.allow_preemptive_non_exponential =
                r["allow_preemptive_non_exponential"] == true;
        cfg.run_options.idle_probability =
            require_number(r, "run_options", "idle_probability", errs, 0.0);
    }

    if (root.contains("output")) {
        const auto& o = root["output"];
        errs.expect_keys(o, "output", {"dir", "dump_traces"});
        if (o.contains("dir") && o["dir"].is_string())
            cfg.output_dir = o["dir"].get<std::string>();
        if (o.contains("dump_traces"))
            cfg.dump_traces = o["dump_traces"] == true;
    }

    errs.throw_if_any();
    cfg.validate();
    return cfg;
}

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str());
}

// ---------------------------------------------------------------------------
// Experiment sweep
// ---------------------------------------------------------------------------

namespace {

json run_options_json(const RunOptions& o) {
    return json{{"allow_preemptive_non_exponential", o.allow_preemptive_non_exponential},
                {"idle_probability", o.idle_probability}};
}

json experiment_manifest(const ExperimentConfig& cfg,
                         const std::vector<double>& lambdas,
                         const std::vector<double>& rhos) {
    json m;
    m["system"] = {{"num_flows", cfg.system.num_flows},
                   {"num_servers", cfg.system.num_servers},
                   {"initial_age", cfg.system.initial_age}};
    m["traffic"] = {{"delay_model", cfg.delay.name()},
                    {"horizon", cfg.horizon},
                    {"rho", rhos},
                    {"lambda", lambdas},
                    {"grid_given_as", cfg.rho_grid.empty() ? "lambda" : "rho"}};
    m["service"] = {{"name", cfg.service.name()}, {"mean", cfg.service.mean()}};
    json pol = json::array();
    for (const auto& p : cfg.policies) pol.push_back(p.name());
    m["policies"] = pol;
    m["penalty"] = cfg.penalty.name();
    m["replications"] = cfg.replications;
    m["base_seed"] = cfg.base_seed;
    m["warmup_fraction"] = cfg.warmup_fraction;
    m["run_options"] = run_options_json(cfg.run_options);
    m["output"] = {{"dir", cfg.output_dir}, {"dump_traces", cfg.dump_traces}};
    m["generator"] = {{"name", "aoisim"}, {"version", "0.1.0"}};
    return m;
}

std::string sanitize_for_filename(std::string s) {
    for (char& c : s)
        if (c == '.' || c == '/' || c == ' ') c = '_';
    return s;
}

} // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
    config.validate();
    const double mean_service = config.service.mean();

    std::vector<double> lambdas, rhos;
    if (!config.rho_grid.empty()) {
        rhos = config.rho_grid;
        for (double r : rhos)
            lambdas.push_back(lambda_for_rho(r, config.system, mean_service));
    } else {
        lambdas = config.lambda_grid;
        for (double l : lambdas)
            rhos.push_back(traffic_intensity(l, config.system.num_flows,
                                             config.system.num_servers,
                                             1.0 / mean_service));
    }

    const std::size_t n_policies = config.policies.size();
    const std::size_t n_loads = lambdas.size();
    const std::size_t n_reps = config.replications;

    std::vector<double> penalty_samples(n_policies * n_loads * n_reps, 0.0);
    std::vector<double> xi_samples(n_policies * n_loads * n_reps, 0.0);
    std::vector<char> has_xi(n_policies, 0);
    for (std::size_t p = 0; p < n_policies; ++p)
        has_xi[p] = config.policies[p].flow_rule == FlowRule::masif;

    std::atomic<std::uint64_t> xi_violations{0};
    std::atomic<std::uint64_t> wc_violations{0};

    std::filesystem::path trace_dir;
    if (config.dump_traces) {
        trace_dir = std::filesystem::path(config.output_dir) / "traces";
        std::filesystem::create_directories(trace_dir);
    }

    const double t0 = config.warmup_fraction * config.horizon;
    parallel_for(n_policies * n_loads * n_reps, [&](std::size_t task) {
        const std::size_t p = task / (n_loads * n_reps);
        const std::size_t l = (task / n_reps) % n_loads;
        const std::size_t k = task % n_reps;
        const PolicySpec& policy = config.policies[p];

        TrafficConfig traffic;
        traffic.rate = lambdas[l];
        traffic.delay = config.delay;
        traffic.horizon = config.horizon;
        traffic.seed = cell_seed(config.base_seed, lambdas[l],
                                 mix_seed(k + 1, stream_tag::schedule));
        const ArrivalSchedule schedule = generate_poisson_schedule(traffic);

        RunOptions opts = config.run_options;
        opts.record_events = config.dump_traces;
        opts.record_packets = config.dump_traces;
        const std::uint64_t engine_seed = cell_seed(
            config.base_seed, lambdas[l], mix_seed(k + 1, hash_string(policy.name())));
        const SimTrace trace = run(config.system, schedule, config.service, policy,
                                   config.horizon, engine_seed, opts);

        if (!xi_bounds_age(trace)) xi_violations.fetch_add(1);
        wc_violations.fetch_add(trace.work_conservation_violations);

        penalty_samples[task] =
            time_average_penalty(trace, config.penalty, t0, config.horizon);
        if (has_xi[p])
            xi_samples[task] = time_average_penalty(trace, config.penalty, t0,
                                                    config.horizon, AgeSignal::xi);
        if (config.dump_traces) {
            std::ostringstream name;
            name << "trace_" << sanitize_for_filename(policy.name()) << "_rho"
                 << sanitize_for_filename(format_double(rhos[l])) << "_rep" << k
                 << ".json";
            std::ofstream out(trace_dir / name.str());
            out << trace_to_json(trace);
        }
    });

    ExperimentResult result;
    result.traces_run = n_policies * n_loads * n_reps;
    result.xi_bound_violations = xi_violations.load();
    result.work_conservation_violations = wc_violations.load();
    for (std::size_t p = 0; p < n_policies; ++p) {
        for (std::size_t l = 0; l < n_loads; ++l) {
            CellResult cell;
            cell.policy = config.policies[p].name();
            cell.rho = rhos[l];
            cell.lambda = lambdas[l];
            cell.penalty_kind = config.penalty.name();
            const auto begin = penalty_samples.begin() +
                               static_cast<std::ptrdiff_t>((p * n_loads + l) * n_reps);
            cell.penalty_avg = summarize({&*begin, n_reps});
            if (has_xi[p]) {
                const auto xb = xi_samples.begin() +
                                static_cast<std::ptrdiff_t>((p * n_loads + l) * n_reps);
                cell.lower_bound = summarize({&*xb, n_reps});
            }
            result.cells.push_back(std::move(cell));
        }
    }
    result.manifest_json = experiment_manifest(config, lambdas, rhos).dump(2);
    return result;
}

std::string ExperimentResult::results_csv() const {
    std::ostringstream os;
    os << "policy,rho,penalty_kind,mean,ci_half,n_seeds,lower_bound_mean\n";
    for (const auto& c : cells) {
        os << c.policy << ',' << format_double(c.rho) << ',' << c.penalty_kind << ','
           << format_double(c.penalty_avg.mean) << ','
           << format_double(c.penalty_avg.ci_half) << ',' << c.penalty_avg.n << ',';
        if (c.lower_bound) os << format_double(c.lower_bound->mean);
        os << '\n';
    }
    return os.str();
}

const CellResult& ExperimentResult::cell(const std::string& policy, double rho) const {
    for (const auto& c : cells)
        if (c.policy == policy && std::abs(c.rho - rho) < 1e-12) return c;
    throw ConfigError("no such experiment cell: " + policy + " at rho " +
                      format_double(rho));
}

std::string run_experiment_files(const ExperimentConfig& config,
                                 const std::optional<std::string>& output_dir) {
    ExperimentConfig cfg = config;
    if (const char* env = std::getenv("AOISIM_OUTPUT_DIR"); env && *env)
        cfg.output_dir = env;
    if (output_dir) cfg.output_dir = *output_dir;

    std::filesystem::create_directories(cfg.output_dir);
    const ExperimentResult result = run_experiment(cfg);

    const auto dir = std::filesystem::path(cfg.output_dir);
    {
        std::ofstream out(dir / "results.csv", std::ios::binary);
        if (!out) throw ConfigError("cannot write results.csv under " + cfg.output_dir);
        out << result.results_csv();
    }
    {
        std::ofstream out(dir / "manifest.json", std::ios::binary);
        out << result.manifest_json << '\n';
    }
    return cfg.output_dir;
}

// ---------------------------------------------------------------------------
// Verification experiments
// ---------------------------------------------------------------------------

DominanceOutcome run_dominance_experiment(const DominanceExperimentConfig& config) {
    if (!config.service.is_exponential() && !config.allow_non_exponential)
        throw ConfigError("dominance verification requires exponential service "
                          "(set allow_non_exponential to explore anyway)");
    if (config.rho.empty() || config.comparators.empty() || config.seeds == 0)
        throw ConfigError("dominance verification needs rho values, comparators "
                          "and seeds");

    const SystemConfig system{config.num_flows, 1, 0.0};
    const double mean_service = config.service.mean();

    std::vector<PolicySpec> policies{PolicySpec::parse("prmp-MAF-LGFS")};
    for (const auto& name : config.comparators)
        policies.push_back(PolicySpec::parse(name));

    struct TaskResult {
        std::vector<DominanceReport> reports;
        bool xi_ok = true;
    };
    const std::size_t tasks = config.rho.size() * config.seeds;
    std::vector<TaskResult> results(tasks);

    parallel_for(tasks, [&](std::size_t task) {
        const std::size_t r = task / config.seeds;
        const std::size_t k = task % config.seeds;
        const double rho = config.rho[r];

        TrafficConfig traffic;
        traffic.rate = lambda_for_rho(rho, system, mean_service);
        traffic.delay = config.delay;
        traffic.horizon = config.horizon;
        traffic.seed = cell_seed(config.base_seed, rho,
                                 mix_seed(k + 1, stream_tag::schedule));

        CoupledRunConfig cc;
        cc.system = system;
        cc.schedule = generate_poisson_schedule(traffic);
        cc.service = config.service;
        cc.policies = policies;
        cc.mode = CompletionMode::shared_epochs;
        cc.horizon = config.horizon;
        cc.seed = cell_seed(config.base_seed, rho, mix_seed(k + 1, 0xD0));
        cc.options.record_packets = false;
        cc.allow_non_exponential_epochs = config.allow_non_exponential;
        cc.options.allow_preemptive_non_exponential = config.allow_non_exponential;

        const auto traces = run_coupled(cc);
        TaskResult& out = results[task];
        for (const auto& t : traces)
            if (!xi_bounds_age(t)) out.xi_ok = false;
        for (std::size_t c = 1; c < traces.size(); ++c)
            out.reports.push_back(check_samplepath_dominance(traces[0], traces[c]));
    });

    DominanceOutcome outcome;
    outcome.cells.reserve(config.rho.size() * config.comparators.size());
    for (std::size_t r = 0; r < config.rho.size(); ++r) {
        for (std::size_t c = 0; c < config.comparators.size(); ++c) {
            DominanceCell cell;
            cell.rho = config.rho[r];
            cell.comparator = config.comparators[c];
            for (std::size_t k = 0; k < config.seeds; ++k) {
                const auto& rep = results[r * config.seeds + k].reports[c];
                cell.boundaries += rep.checked_boundaries;
                cell.violations += rep.violation_count;
                for (const auto& v : rep.violations)
                    if (cell.examples.size() < 8) cell.examples.push_back(v);
            }
            outcome.boundaries += cell.boundaries;
            outcome.violations += cell.violations;
            outcome.cells.push_back(std::move(cell));
        }
    }
    for (const auto& t : results)
        if (!t.xi_ok) outcome.xi_pointwise_ok = false;
    outcome.ok = outcome.violations == 0 && outcome.xi_pointwise_ok;
    return outcome;
}

std::string DominanceOutcome::to_json() const {
    json j;
    j["ok"] = ok;
    j["xi_pointwise_ok"] = xi_pointwise_ok;
    j["boundaries_checked"] = boundaries;
    j["violations"] = violations;
    json cells_json = json::array();
    for (const auto& c : cells) {
        json ex = json::array();
        for (const auto& v : c.examples)
            ex.push_back({{"time", v.time},
                          {"rank", v.rank},
                          {"reference_age", v.lhs},
                          {"comparator_age", v.rhs}});
        cells_json.push_back({{"rho", c.rho},
                              {"comparator", c.comparator},
                              {"boundaries", c.boundaries},
                              {"violations", c.violations},
                              {"examples", ex}});
    }
    j["cells"] = cells_json;
    return j.dump(2);
}

XiBoundOutcome run_xi_bound_experiment(const XiBoundExperimentConfig& config) {
    if (config.rho.empty() || config.seeds == 0)
        throw ConfigError("xi-bound verification needs rho values and seeds");
    if (!(config.warmup_fraction >= 0.0 && config.warmup_fraction < 0.5))
        throw ConfigError("warmup_fraction must be in [0, 0.5)");

    const double mean_service = config.service.mean();
    const PolicySpec masif = PolicySpec::parse("np-MASIF-LGFS");
    std::vector<PolicySpec> comparators;
    for (const auto& name : config.comparators) {
        PolicySpec spec = PolicySpec::parse(name);
        if (spec.is_preemptive())
            throw ConfigError("xi-bound comparators must be non-preemptive: " + name);
        comparators.push_back(spec);
    }

    struct SeedResult {
        double masif_delta = 0.0;
        double masif_xi = 0.0;
        std::vector<double> comp_delta;
        bool xi_ok = true;
    };
    const std::size_t tasks = config.rho.size() * config.seeds;
    std::vector<SeedResult> results(tasks);

    const double t0 = config.warmup_fraction * config.horizon;
    const PenaltyFunction penalty = PenaltyFunction::average();
    RunOptions opts;
    opts.record_events = false;
    opts.record_packets = false;

    parallel_for(tasks, [&](std::size_t task) {
        const std::size_t r = task / config.seeds;
        const std::size_t k = task % config.seeds;
        const double rho = config.rho[r];

        TrafficConfig traffic;
        traffic.rate = lambda_for_rho(rho, config.system, mean_service);
        traffic.delay = config.delay;
        traffic.horizon = config.horizon;
        traffic.seed = cell_seed(config.base_seed, rho,
                                 mix_seed(k + 1, stream_tag::schedule));
        const ArrivalSchedule schedule = generate_poisson_schedule(traffic);

        SeedResult& out = results[task];
        const auto engine_seed = [&](const PolicySpec& p) {
            return cell_seed(config.base_seed, rho,
                             mix_seed(k + 1, hash_string(p.name())));
        };

        const SimTrace masif_trace = run(config.system, schedule, config.service,
                                         masif, config.horizon, engine_seed(masif),
                                         opts);
        out.xi_ok = xi_bounds_age(masif_trace);
        out.masif_delta =
            time_average_penalty(masif_trace, penalty, t0, config.horizon);
        out.masif_xi = time_average_penalty(masif_trace, penalty, t0, config.horizon,
                                            AgeSignal::xi);
        for (const auto& comp : comparators) {
            const SimTrace trace = run(config.system, schedule, config.service, comp,
                                       config.horizon, engine_seed(comp), opts);
            if (!xi_bounds_age(trace)) out.xi_ok = false;
            out.comp_delta.push_back(
                time_average_penalty(trace, penalty, t0, config.horizon));
        }
    });

    XiBoundOutcome outcome;
    outcome.mean_service_time = mean_service;
    outcome.gap_ok = true;
    outcome.order_ok = true;
    for (std::size_t r = 0; r < config.rho.size(); ++r) {
        XiBoundCell cell;
        cell.rho = config.rho[r];
        std::vector<double> masif_delta(config.seeds), masif_xi(config.seeds),
            gaps(config.seeds);
        for (std::size_t k = 0; k < config.seeds; ++k) {
            const auto& s = results[r * config.seeds + k];
            masif_delta[k] = s.masif_delta;
            masif_xi[k] = s.masif_xi;
            gaps[k] = s.masif_delta - s.masif_xi;
            if (!s.xi_ok) outcome.xi_pointwise_ok = false;
        }
        cell.masif_delta_avg = summarize(masif_delta);
        cell.masif_xi_avg = summarize(masif_xi);
        cell.gap = summarize(gaps);
        cell.gap_ok = cell.gap.mean <= mean_service + cell.gap.ci_half;
        if (!cell.gap_ok) outcome.gap_ok = false;
        for (std::size_t c = 0; c < comparators.size(); ++c) {
            XiBoundComparatorResult comp_result;
            comp_result.comparator = comparators[c].name();
            std::vector<double> comp_delta(config.seeds);
            for (std::size_t k = 0; k < config.seeds; ++k)
                comp_delta[k] = results[r * config.seeds + k].comp_delta[c];
            comp_result.delta_avg = summarize(comp_delta);
            comp_result.order = empirical_st_order(masif_xi, comp_delta);
            if (!comp_result.order.ok) outcome.order_ok = false;
            cell.comparators.push_back(std::move(comp_result));
        }
        outcome.cells.push_back(std::move(cell));
    }
    outcome.ok = outcome.gap_ok && outcome.order_ok && outcome.xi_pointwise_ok;
    return outcome;
}

std::string XiBoundOutcome::to_json() const {
    json j;
    j["ok"] = ok;
    j["gap_ok"] = gap_ok;
    j["order_ok"] = order_ok;
    j["xi_pointwise_ok"] = xi_pointwise_ok;
    j["mean_service_time"] = mean_service_time;
    json cells_json = json::array();
    for (const auto& c : cells) {
        json comps = json::array();
        for (const auto& comp : c.comparators)
            comps.push_back({{"comparator", comp.comparator},
                             {"delta_avg_mean", comp.delta_avg.mean},
                             {"delta_avg_ci_half", comp.delta_avg.ci_half},
                             {"st_order_ok", comp.order.ok},
                             {"st_order_max_violation", comp.order.max_violation},
                             {"st_order_epsilon", comp.order.epsilon}});
        cells_json.push_back({{"rho", c.rho},
                              {"masif_delta_mean", c.masif_delta_avg.mean},
                              {"masif_delta_ci_half", c.masif_delta_avg.ci_half},
                              {"masif_xi_mean", c.masif_xi_avg.mean},
                              {"masif_xi_ci_half", c.masif_xi_avg.ci_half},
                              {"gap_mean", c.gap.mean},
                              {"gap_ci_half", c.gap.ci_half},
                              {"gap_ok", c.gap_ok},
                              {"comparators", comps}});
    }
    j["cells"] = cells_json;
    return j.dump(2);
}

WorkEfficiencyOutcome
run_work_efficiency_experiment(const WorkEfficiencyExperimentConfig& config) {
    if (config.pairs.empty() || config.rho.empty() || config.seeds == 0)
        throw ConfigError("work-efficiency verification needs pairs, rho and seeds");

    const SystemConfig system{config.num_flows, 1, 0.0};
    const auto service = ServiceDistribution::exponential(config.service_rate);

    struct TaskResult {
        std::size_t checked = 0, vacuous = 0, failures = 0;
    };
    const std::size_t tasks = config.pairs.size() * config.rho.size() * config.seeds;
    std::vector<TaskResult> results(tasks);

    parallel_for(tasks, [&](std::size_t task) {
        const std::size_t pair_idx = task / (config.rho.size() * config.seeds);
        const std::size_t r = (task / config.seeds) % config.rho.size();
        const std::size_t k = task % config.seeds;
        const auto& [p_name, pi_name] = config.pairs[pair_idx];
        const double rho = config.rho[r];

        TrafficConfig traffic;
        traffic.rate = lambda_for_rho(rho, system, service.mean());
        traffic.delay = config.delay;
        traffic.horizon = config.horizon;
        traffic.seed = cell_seed(config.base_seed, rho,
                                 mix_seed(k + 1, stream_tag::schedule));

        CoupledRunConfig cc;
        cc.system = system;
        cc.schedule = generate_poisson_schedule(traffic);
        cc.service = service;
        cc.policies = {PolicySpec::parse(p_name), PolicySpec::parse(pi_name)};
        cc.mode = CompletionMode::shared_epochs;
        cc.horizon = config.horizon;
        cc.seed = cell_seed(config.base_seed, rho, mix_seed(k + 1, 0xE0 + pair_idx));

        const auto traces = run_coupled(cc);
        const auto report = check_weak_work_efficiency(traces[0], traces[1]);
        results[task] = {report.packets_checked, report.vacuous,
                         report.ok ? std::size_t{0} : std::size_t{1}};
    });

    WorkEfficiencyOutcome outcome;
    for (const auto& t : results) {
        outcome.packets_checked += t.checked;
        outcome.vacuous += t.vacuous;
        outcome.failures += t.failures;
    }
    outcome.ok = outcome.failures == 0;
    return outcome;
}

std::string WorkEfficiencyOutcome::to_json() const {
    json j;
    j["ok"] = ok;
    j["packets_checked"] = packets_checked;
    j["vacuous_intervals"] = vacuous;
    j["failing_trace_pairs"] = failures;
    return j.dump(2);
}

PenaltyPropsOutcome run_penalty_props(const PenaltyPropsConfig& config) {
    std::vector<std::pair<std::string, PenaltyFunction>> penalties;
    penalties.emplace_back("avg", PenaltyFunction::average());
    penalties.emplace_back("max", PenaltyFunction::maximum());
    penalties.emplace_back("mean_square", PenaltyFunction::mean_square());
    penalties.emplace_back("l_norm(2)", PenaltyFunction::l_norm(2.0));
    penalties.emplace_back("l_norm(3.5)", PenaltyFunction::l_norm(3.5));
    penalties.emplace_back("sum_penalty[stair(2)]",
                           PenaltyFunction::sum_penalty(AgeCurve::stair(2.0)));
    penalties.emplace_back("sum_penalty[exp(0.5)]",
                           PenaltyFunction::sum_penalty(AgeCurve::exponential(0.5)));
    penalties.emplace_back(
        "sum_penalty[table]",
        PenaltyFunction::sum_penalty(AgeCurve::monotone_table(
            {{0.0, 0.0}, {1.0, 0.5}, {5.0, 3.0}, {20.0, 3.0}, {50.0, 10.0}})));

    PenaltyPropsOutcome outcome;
    outcome.ok = true;
    std::uint64_t salt = 0;
    for (const auto& [name, p] : penalties) {
        const auto report = check_symmetric_nondecreasing(
            p, config.dimension, config.trials, mix_seed(config.seed, ++salt));
        if (!report.ok) outcome.ok = false;
        outcome.reports.emplace_back(name, report);
    }
    return outcome;
}

std::string PenaltyPropsOutcome::to_json() const {
    json j;
    j["ok"] = ok;
    json reports_json = json::array();
    for (const auto& [name, r] : reports)
        reports_json.push_back({{"penalty", name},
                                {"ok", r.ok},
                                {"trials", r.trials},
                                {"symmetry_failures", r.symmetry_failures},
                                {"monotonicity_failures", r.monotonicity_failures},
                                {"dominance_failures", r.dominance_failures}});
    j["penalties"] = reports_json;
    return j.dump(2);
}

NbuVerifyOutcome run_nbu_verification(const NbuVerifyConfig& config) {
    const std::vector<ServiceDistribution> dists = {
        ServiceDistribution::exponential(1.0),
        ServiceDistribution::shifted_exponential(1.0 / 3.0, 1.5),
        ServiceDistribution::constant(1.0),
        ServiceDistribution::erlang(2, 2.0),
    };
    NbuVerifyOutcome outcome;
    outcome.ok = true;
    for (const auto& d : dists) {
        const auto report =
            verify_nbu(d, config.grid_step, config.grid_max_multiplier * d.mean());
        if (!report.ok) outcome.ok = false;
        if (d.is_exponential())
            outcome.exponential_equality_ok = report.max_violation <= 1e-12 &&
                                              report.min_violation >= -1e-12;
        outcome.reports.emplace_back(d.name(), report);
    }
    outcome.ok = outcome.ok && outcome.exponential_equality_ok;
    return outcome;
}

std::string NbuVerifyOutcome::to_json() const {
    json j;
    j["ok"] = ok;
    j["exponential_equality_ok"] = exponential_equality_ok;
    json reports_json = json::array();
    for (const auto& [name, r] : reports)
        reports_json.push_back({{"distribution", name},
                                {"ok", r.ok},
                                {"max_violation", r.max_violation},
                                {"min_violation", r.min_violation},
                                {"worst_tau", r.worst_tau},
                                {"worst_t", r.worst_t}});
    j["distributions"] = reports_json;
    return j.dump(2);
}

MarginalEquivalenceOutcome
run_marginal_equivalence(const MarginalEquivalenceConfig& config) {
    if (config.seeds < 2) throw ConfigError("marginal equivalence needs seeds >= 2");
    const SystemConfig system{config.num_flows, 1, 0.0};
    const auto service = ServiceDistribution::exponential(config.service_rate);
    const PolicySpec policy = PolicySpec::parse(config.policy);
    const PenaltyFunction penalty = PenaltyFunction::average();
    const double lambda = lambda_for_rho(config.rho, system, service.mean());

    // Disjoint seed ranges per mode: the KS test wants two independent
    // samples of the same marginal distribution.
    std::vector<double> sampled(config.seeds), epoch_driven(config.seeds);
    std::vector<double> sampled_deliveries(config.seeds),
        epoch_deliveries(config.seeds);
    RunOptions opts;
    opts.record_events = false;
    opts.record_packets = false;

    parallel_for(2 * config.seeds, [&](std::size_t task) {
        const bool epochs_mode = task >= config.seeds;
        const std::size_t k = task % config.seeds;
        const std::uint64_t salt = epochs_mode ? 2 * k + 1 : 2 * k;

        TrafficConfig traffic;
        traffic.rate = lambda;
        traffic.delay = config.delay;
        traffic.horizon = config.horizon;
        traffic.seed = mix_seed(mix_seed(config.base_seed, salt), stream_tag::schedule);
        const ArrivalSchedule schedule = generate_poisson_schedule(traffic);
        const std::uint64_t engine_seed = mix_seed(mix_seed(config.base_seed, salt), 0xAB);

        SimTrace trace;
        if (epochs_mode) {
            std::vector<double> epochs;
            RngStream stream(
                mix_seed(mix_seed(config.base_seed, salt), stream_tag::epochs));
            double t = 0.0;
            for (;;) {
                t += stream.next_exponential(config.service_rate);
                if (t > config.horizon) break;
                epochs.push_back(t);
            }
            trace = run_with_epochs(system, schedule, service, policy, config.horizon,
                                    epochs, engine_seed, opts);
        } else {
            trace = run(system, schedule, service, policy, config.horizon, engine_seed,
                        opts);
        }
        const double avg = time_average_penalty(trace, penalty, 0.0, config.horizon);
        (epochs_mode ? epoch_driven : sampled)[k] = avg;
        (epochs_mode ? epoch_deliveries : sampled_deliveries)[k] =
            static_cast<double>(trace.delivered);
    });

    MarginalEquivalenceOutcome outcome;
    outcome.ks_statistic = ks_two_sample_statistic(sampled, epoch_driven);
    outcome.ks_statistic_deliveries =
        ks_two_sample_statistic(sampled_deliveries, epoch_deliveries);
    const double n = config.seeds;
    outcome.threshold =
        kolmogorov_critical_value(config.alpha) * std::sqrt((n + n) / (n * n));
    // the delivery-count comparison is discrete, so the KS threshold is
    // conservative there
    outcome.ok = outcome.ks_statistic <= outcome.threshold &&
                 outcome.ks_statistic_deliveries <= outcome.threshold;
    return outcome;
}

std::string MarginalEquivalenceOutcome::to_json() const {
    json j;
    j["ok"] = ok;
    j["ks_statistic"] = ks_statistic;
    j["ks_statistic_deliveries"] = ks_statistic_deliveries;
    j["threshold"] = threshold;
    return j.dump(2);
}

// ---------------------------------------------------------------------------
// verify subcommand dispatch
// ---------------------------------------------------------------------------

namespace {

DominanceExperimentConfig parse_dominance_config(const json& root) {
    KeyErrors errs;
    errs.expect_keys(root, "",
                     {"num_flows", "service", "rho", "comparators", "seeds",
                      "horizon", "delay_model", "base_seed", "allow_non_exponential"});
    DominanceExperimentConfig cfg;
    cfg.num_flows =
        static_cast<std::uint32_t>(require_uint(root, "", "num_flows", errs, 3));
    if (root.contains("service")) cfg.service = parse_service(root["service"], "service", errs);
    if (root.contains("rho")) cfg.rho = number_list(root["rho"], "rho", errs);
    if (root.contains("comparators")) {
        cfg.comparators.clear();
        for (const auto& c : root["comparators"]) {
            if (c.is_string()) cfg.comparators.push_back(c.get<std::string>());
            else errs.add("comparators", "must be an array of policy names");
        }
    }
    cfg.seeds = static_cast<std::uint32_t>(require_uint(root, "", "seeds", errs, 100));
    cfg.horizon = require_number(root, "", "horizon", errs, cfg.horizon);
    if (root.contains("delay_model"))
        cfg.delay = parse_delay(root["delay_model"], "delay_model", errs);
    cfg.base_seed = require_uint(root, "", "base_seed", errs, cfg.base_seed);
    if (root.contains("allow_non_exponential"))
        cfg.allow_non_exponential = root["allow_non_exponential"] == true;
    errs.throw_if_any();
    return cfg;
}

XiBoundExperimentConfig parse_xi_bound_config(const json& root) {
    KeyErrors errs;
    errs.expect_keys(root, "",
                     {"num_flows", "num_servers", "service", "rho", "comparators",
                      "seeds", "horizon", "warmup_fraction", "delay_model",
                      "base_seed"});
    XiBoundExperimentConfig cfg;
    cfg.system.num_flows =
        static_cast<std::uint32_t>(require_uint(root, "", "num_flows", errs, 50));
    cfg.system.num_servers =
        static_cast<std::uint32_t>(require_uint(root, "", "num_servers", errs, 3));
    if (root.contains("service")) cfg.service = parse_service(root["service"], "service", errs);
    if (root.contains("rho")) cfg.rho = number_list(root["rho"], "rho", errs);
    if (root.contains("comparators")) {
        cfg.comparators.clear();
        for (const auto& c : root["comparators"]) {
            if (c.is_string()) cfg.comparators.push_back(c.get<std::string>());
            else errs.add("comparators", "must be an array of policy names");
        }
    }
    cfg.seeds = static_cast<std::uint32_t>(require_uint(root, "", "seeds", errs, 200));
    cfg.horizon = require_number(root, "", "horizon", errs, cfg.horizon);
    cfg.warmup_fraction =
        require_number(root, "", "warmup_fraction", errs, cfg.warmup_fraction);
    if (root.contains("delay_model"))
        cfg.delay = parse_delay(root["delay_model"], "delay_model", errs);
    cfg.base_seed = require_uint(root, "", "base_seed", errs, cfg.base_seed);
    errs.throw_if_any();
    return cfg;
}

WorkEfficiencyExperimentConfig parse_work_efficiency_config(const json& root) {
    KeyErrors errs;
    errs.expect_keys(root, "",
                     {"num_flows", "service_rate", "rho", "pairs", "seeds", "horizon",
                      "delay_model", "base_seed"});
    WorkEfficiencyExperimentConfig cfg;
    cfg.num_flows =
        static_cast<std::uint32_t>(require_uint(root, "", "num_flows", errs, 3));
    cfg.service_rate = require_number(root, "", "service_rate", errs, 1.0);
    if (root.contains("rho")) cfg.rho = number_list(root["rho"], "rho", errs);
    if (root.contains("pairs")) {
        cfg.pairs.clear();
        for (const auto& p : root["pairs"]) {
            if (p.is_array() && p.size() == 2 && p[0].is_string() && p[1].is_string())
                cfg.pairs.emplace_back(p[0].get<std::string>(), p[1].get<std::string>());
            else
                errs.add("pairs", "must be an array of [efficient, other] name pairs");
        }
    }
    cfg.seeds = static_cast<std::uint32_t>(require_uint(root, "", "seeds", errs, 100));
    cfg.horizon = require_number(root, "", "horizon", errs, cfg.horizon);
    if (root.contains("delay_model"))
        cfg.delay = parse_delay(root["delay_model"], "delay_model", errs);
    cfg.base_seed = require_uint(root, "", "base_seed", errs, cfg.base_seed);
    errs.throw_if_any();
    return cfg;
}

} // namespace

VerifyResult run_verify(const std::string& subcommand,
                        const std::string& config_json_text) {
    const json root =
        config_json_text.empty() ? json::object() : parse_json_text(config_json_text);
    VerifyResult out;
    if (subcommand == "dominance") {
        const auto outcome = run_dominance_experiment(parse_dominance_config(root));
        out.ok = outcome.ok;
        out.report_json = outcome.to_json();
    } else if (subcommand == "nbu") {
        KeyErrors errs;
        errs.expect_keys(root, "", {"grid_step", "grid_max_multiplier"});
        NbuVerifyConfig cfg;
        cfg.grid_step = require_number(root, "", "grid_step", errs, cfg.grid_step);
        cfg.grid_max_multiplier =
            require_number(root, "", "grid_max_multiplier", errs, cfg.grid_max_multiplier);
        errs.throw_if_any();
        const auto outcome = run_nbu_verification(cfg);
        out.ok = outcome.ok;
        out.report_json = outcome.to_json();
    } else if (subcommand == "xi-bound") {
        const auto outcome = run_xi_bound_experiment(parse_xi_bound_config(root));
        out.ok = outcome.ok;
        out.report_json = outcome.to_json();
    } else if (subcommand == "work-efficiency") {
        const auto outcome =
            run_work_efficiency_experiment(parse_work_efficiency_config(root));
        out.ok = outcome.ok;
        out.report_json = outcome.to_json();
    } else if (subcommand == "penalty-props") {
        KeyErrors errs;
        errs.expect_keys(root, "", {"dimension", "trials", "seed"});
        PenaltyPropsConfig cfg;
        cfg.dimension =
            static_cast<std::uint32_t>(require_uint(root, "", "dimension", errs, 5));
        cfg.trials = require_uint(root, "", "trials", errs, cfg.trials);
        cfg.seed = require_uint(root, "", "seed", errs, cfg.seed);
        errs.throw_if_any();
        const auto outcome = run_penalty_props(cfg);
        out.ok = outcome.ok;
        out.report_json = outcome.to_json();
    } else {
        throw ConfigError("unknown verify subcommand: '" + subcommand +
                          "' (expected dominance | nbu | xi-bound | "
                          "work-efficiency | penalty-props)");
    }
    return out;
}

} // namespace aoisim
