// aoisim: multi-flow status-update queueing simulator and verification runner.
//
//   aoisim simulate <config.json> [--output-dir DIR]
//   aoisim verify <subcommand> <config.json>
//   aoisim schedule gen <out.csv> --rate R --horizon H [--seed S] [--delay ...]
//   aoisim schedule validate <file.csv>

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "aoisim/experiment.hpp"
#include "aoisim/traffic.hpp"

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw aoisim::ConfigError("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

aoisim::DelayModel parse_delay_flag(const std::string& text, double rate) {
    (void)rate;
    if (text == "zero") return aoisim::DelayModel::zero();
    if (text == "bernoulli_half") return aoisim::DelayModel::bernoulli_half();
    if (text.rfind("fixed:", 0) == 0)
        return aoisim::DelayModel::fixed(std::stod(text.substr(6)));
    throw aoisim::ConfigError(
        "unknown delay model '" + text +
        "' (expected zero | bernoulli_half | fixed:<seconds>)");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-flow, multi-server status-update scheduling simulator"};
    app.require_subcommand(1);

    // simulate
    std::string sim_config;
    std::string output_dir;
    auto* simulate = app.add_subcommand("simulate", "Run a sweep experiment");
    simulate->add_option("config", sim_config, "experiment config (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    simulate->add_option("--output-dir", output_dir,
                         "output directory (overrides config and "
                         "AOISIM_OUTPUT_DIR)");

    // verify
    std::string verify_sub, verify_config;
    auto* verify = app.add_subcommand("verify", "Run a verification experiment");
    verify
        ->add_option("subcommand", verify_sub,
                     "dominance | nbu | xi-bound | work-efficiency | penalty-props")
        ->required();
    verify->add_option("config", verify_config, "verification config (JSON)")
        ->check(CLI::ExistingFile);

    // schedule gen / validate
    auto* schedule = app.add_subcommand("schedule", "Generate or validate schedules");
    schedule->require_subcommand(1);
    std::string gen_out;
    double gen_rate = 1.0, gen_horizon = 1000.0;
    std::uint64_t gen_seed = 1;
    std::string gen_delay = "zero";
    auto* gen = schedule->add_subcommand("gen", "Generate a Poisson schedule CSV");
    gen->add_option("out", gen_out, "output CSV path")->required();
    gen->add_option("--rate", gen_rate, "generations per second")->required();
    gen->add_option("--horizon", gen_horizon, "schedule horizon (seconds)")
        ->required();
    gen->add_option("--seed", gen_seed, "random seed");
    gen->add_option("--delay", gen_delay,
                    "delay model: zero | bernoulli_half | fixed:<seconds>");

    std::string validate_path;
    auto* validate = schedule->add_subcommand("validate", "Validate a schedule CSV");
    validate->add_option("file", validate_path, "schedule CSV path")
        ->required()
        ->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*simulate) {
            const auto cfg = aoisim::ExperimentConfig::from_json_file(sim_config);
            const auto dir = aoisim::run_experiment_files(
                cfg, output_dir.empty() ? std::nullopt
                                        : std::optional<std::string>(output_dir));
            std::cout << "results written to " << dir << "\n";
            return 0;
        }
        if (*verify) {
            const std::string text =
                verify_config.empty() ? std::string("{}") : slurp(verify_config);
            const auto result = aoisim::run_verify(verify_sub, text);
            std::cout << result.report_json << "\n";
            std::cout << (result.ok ? "PASS" : "FAIL") << "\n";
            return result.ok ? 0 : 1;
        }
        if (*gen) {
            aoisim::TrafficConfig cfg;
            cfg.rate = gen_rate;
            cfg.horizon = gen_horizon;
            cfg.seed = gen_seed;
            cfg.delay = parse_delay_flag(gen_delay, gen_rate);
            const auto sched = aoisim::generate_poisson_schedule(cfg);
            aoisim::write_schedule_csv_file(sched, gen_out);
            std::cout << "wrote " << sched.size() << " generations to " << gen_out
                      << "\n";
            return 0;
        }
        if (*validate) {
            const auto sched = aoisim::load_schedule_csv_file(validate_path);
            std::cout << "valid schedule: " << sched.size() << " generations\n";
            return 0;
        }
    } catch (const aoisim::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
