// Command-line driver: exact-solve an MDP file, run an experiment sweep, turn
// sweep records into plot-ready series, or dump a raw trajectory.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "pessiq/pessiq.hpp"

namespace {

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

pessiq::RhoSpec parse_rho(const std::string& preset, std::size_t point_state) {
    pessiq::RhoSpec rho;
    if (preset == "uniform") {
        rho.preset = pessiq::RhoPreset::uniform;
    } else if (preset == "point") {
        rho.preset = pessiq::RhoPreset::point;
        rho.point_state = point_state;
    } else if (preset == "mu_star") {
        rho.preset = pessiq::RhoPreset::mu_star;
    } else {
        throw CLI::ValidationError("--rho", "expected uniform, point, or mu_star");
    }
    return rho;
}

int cmd_solve(const std::string& path, const std::string& rho_preset, std::size_t point_state) {
    const pessiq::TabularMdp mdp = pessiq::load_mdp(path);
    const pessiq::StochasticPolicy behavior =
        pessiq::uniform_policy(mdp.num_states, mdp.num_actions);
    const std::vector<double> rho =
        pessiq::resolve_rho(parse_rho(rho_preset, point_state), mdp);

    const pessiq::ExactSolution exact = pessiq::value_iteration(mdp);
    const pessiq::OccupancyMeasure d_star = pessiq::occupancy(mdp, exact.pi_star, rho);
    const pessiq::ChainDiagnostics diag =
        pessiq::make_chain_diagnostics(mdp, behavior, d_star);

    double v_star_rho = 0.0;
    for (std::size_t s = 0; s < mdp.num_states; ++s) v_star_rho += rho[s] * exact.v_star[s];

    std::cout << "instance: " << path << "\n";
    std::cout << "states: " << mdp.num_states << "  actions: " << mdp.num_actions
              << "  discount: " << fmt(mdp.discount) << "\n";
    std::cout << "V*:";
    for (double v : exact.v_star) std::cout << ' ' << fmt(v);
    std::cout << "\n";
    std::cout << "pi*:";
    for (std::size_t s = 0; s < mdp.num_states; ++s) std::cout << ' ' << exact.pi_star(s);
    std::cout << "\n";
    std::cout << "V*(rho): " << fmt(v_star_rho) << "\n";
    std::cout << "C* (uniform behavior): " << fmt(diag.concentrability) << "\n";
    std::cout << "mu_min: " << fmt(diag.mu_min) << "\n";
    std::cout << "t_mix(1/4): " << diag.t_mix_quarter << "\n";
    return 0;
}

int cmd_run(const std::string& spec_path, const std::string& output_override,
            std::optional<std::uint64_t> seed_override, std::size_t workers, bool timing) {
    pessiq::ExperimentSpec spec = pessiq::load_spec(spec_path);
    if (!output_override.empty()) spec.output_path = output_override;
    if (seed_override) spec.seeds = {*seed_override};

    pessiq::SweepOptions options;
    options.timing = timing;
    options.workers = workers;
    if (workers == 0) {
        if (const char* env = std::getenv("PESSIQ_WORKERS"))
            options.workers = static_cast<std::size_t>(std::strtoull(env, nullptr, 10));
    }

    const std::vector<pessiq::RunRecord> records = pessiq::run_sweep(spec, options);
    std::size_t failed = 0;
    for (const auto& r : records)
        if (!r.ok()) ++failed;

    if (spec.output_path.empty())
        pessiq::write_records_csv(std::cout, spec, records, options.timing);
    else
        std::cerr << "wrote " << records.size() << " rows (" << failed << " failed) to "
                  << spec.output_path << "\n";
    return failed == records.size() && !records.empty() ? 1 : 0;
}

int cmd_plotdata(const std::string& records_path, const std::string& output_path) {
    std::ifstream in(records_path);
    if (!in) throw std::runtime_error("cannot open records file: " + records_path);
    const std::vector<pessiq::GapSample> samples = pessiq::parse_records_csv(in);
    if (output_path.empty()) {
        pessiq::emit_plot_data(samples, std::cout);
    } else {
        std::ofstream out(output_path);
        if (!out) throw std::runtime_error("cannot write plot file: " + output_path);
        pessiq::emit_plot_data(samples, out);
    }
    return 0;
}

int cmd_sample(const std::string& path, std::size_t steps, std::uint64_t seed,
               std::size_t initial_state, const std::string& mode) {
    const pessiq::TabularMdp mdp = pessiq::load_mdp(path);
    const pessiq::StochasticPolicy behavior =
        pessiq::uniform_policy(mdp.num_states, mdp.num_actions);
    pessiq::SamplerConfig cfg;
    cfg.initial_state = initial_state;
    cfg.seed = seed;
    cfg.total = steps;
    if (mode == "markovian") {
        cfg.mode = pessiq::SamplerMode::markovian;
        pessiq::TrajectorySampler sampler(mdp, behavior, cfg);
        pessiq::dump_trajectory_tsv(sampler, steps, std::cout);
    } else if (mode == "iid") {
        cfg.mode = pessiq::SamplerMode::iid;
        const pessiq::SaTable<double> mu = pessiq::stationary_distribution(mdp, behavior);
        pessiq::TrajectorySampler sampler(mdp, behavior, cfg, mu);
        pessiq::dump_trajectory_tsv(sampler, steps, std::cout);
    } else {
        throw CLI::ValidationError("--mode", "expected markovian or iid");
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "pessiq - pessimistic asynchronous Q-learning engine with exact MDP oracles"};
    app.require_subcommand(1);

    std::string mdp_path, rho_preset = "uniform";
    std::size_t point_state = 0;
    auto* solve = app.add_subcommand("solve", "Exactly solve an MDP file and print oracles");
    solve->add_option("mdp-file", mdp_path, "MDP instance (JSON)")->required();
    solve->add_option("--rho", rho_preset, "initial distribution: uniform, point, mu_star");
    solve->add_option("--point-state", point_state, "state for --rho point");

    std::string spec_path, output_override;
    std::uint64_t seed_override_value = 0;
    std::size_t workers = 0;
    bool timing = false;
    auto* run = app.add_subcommand("run", "Run the sweep described by a spec file");
    run->add_option("spec-file", spec_path, "experiment spec (JSON)")->required();
    run->add_option("--output", output_override, "write records CSV here instead");
    auto* seed_flag = run->add_option("--seed-override", seed_override_value,
                                      "replace the spec's seed list with this one seed");
    run->add_option("--workers", workers,
                    "worker threads (default: PESSIQ_WORKERS env or hardware)");
    run->add_flag("--timing", timing, "emit wall_time_ms (breaks byte-identical reruns)");

    std::string records_path, plot_output;
    auto* plot = app.add_subcommand("plotdata", "Aggregate a records CSV into plot series");
    plot->add_option("records-csv", records_path, "sweep output file")->required();
    plot->add_option("--output", plot_output, "write plot CSV here instead of stdout");

    std::string sample_path, sample_mode = "markovian";
    std::size_t sample_steps = 10, sample_initial = 0;
    std::uint64_t sample_seed = 0;
    auto* sample = app.add_subcommand("sample", "Dump a trajectory as TSV for diffing");
    sample->add_option("mdp-file", sample_path, "MDP instance (JSON)")->required();
    sample->add_option("--steps", sample_steps, "number of transitions");
    sample->add_option("--seed", sample_seed, "stream seed");
    sample->add_option("--initial-state", sample_initial, "markovian start state");
    sample->add_option("--mode", sample_mode, "markovian or iid");

    CLI11_PARSE(app, argc, argv);

    try {
        if (solve->parsed()) return cmd_solve(mdp_path, rho_preset, point_state);
        if (run->parsed())
            return cmd_run(spec_path, output_override,
                           seed_flag->count() ? std::optional<std::uint64_t>(seed_override_value)
                                              : std::nullopt,
                           workers, timing);
        if (plot->parsed()) return cmd_plotdata(records_path, plot_output);
        if (sample->parsed())
            return cmd_sample(sample_path, sample_steps, sample_seed, sample_initial,
                              sample_mode);
    } catch (const std::exception& e) {
        std::cerr << "pessiq: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
