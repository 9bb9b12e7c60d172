#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "pessiq/agent_lcb.hpp"
#include "pessiq/agent_vr.hpp"
#include "pessiq/evaluation.hpp"
#include "pessiq/instances.hpp"
#include "pessiq/sampling.hpp"

namespace pessiq {

inline constexpr std::array<const char*, 3> kAgentNames = {"vanilla", "lcb", "vr_lcb"};

inline std::size_t agent_id(const std::string& name) {
    for (std::size_t i = 0; i < kAgentNames.size(); ++i)
        if (name == kAgentNames[i]) return i;
    throw std::invalid_argument("unknown agent \"" + name +
                                "\" (expected vanilla, lcb, or vr_lcb)");
}

struct ExperimentSpec {
    InstanceSpec instance;
    std::vector<std::string> agents;
    std::vector<std::size_t> budgets;  // strictly ascending T values
    std::vector<std::uint64_t> seeds;
    double delta = 0.1;
    double c_b = 1.0;
    RhoSpec rho;
    SamplerMode sampler_mode = SamplerMode::markovian;
    std::size_t initial_state = 0;
    std::string output_path;
};

inline void validate(const ExperimentSpec& spec) {
    if (spec.agents.empty()) throw std::invalid_argument("spec: agents must be nonempty");
    for (const auto& a : spec.agents) agent_id(a);
    if (spec.budgets.empty()) throw std::invalid_argument("spec: budgets must be nonempty");
    for (std::size_t i = 1; i < spec.budgets.size(); ++i)
        if (spec.budgets[i] <= spec.budgets[i - 1])
            throw std::invalid_argument("spec: budgets must be strictly ascending");
    if (spec.seeds.empty()) throw std::invalid_argument("spec: seeds must be nonempty");
    if (!(spec.delta > 0.0) || !(spec.delta < 1.0))
        throw std::invalid_argument("spec: delta must lie in (0,1)");
    if (spec.c_b < 0.0) throw std::invalid_argument("spec: c_b must be nonnegative");
}

namespace detail {

inline InstanceSpec instance_from_json(const nlohmann::json& j) {
    InstanceSpec inst;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "file") {
        inst.kind = InstanceSpec::Kind::file;
        inst.path = j.at("path").get<std::string>();
    } else if (kind == "random") {
        inst.kind = InstanceSpec::Kind::random;
        inst.num_states = j.at("num_states").get<std::size_t>();
        inst.num_actions = j.at("num_actions").get<std::size_t>();
        inst.discount = j.at("discount").get<double>();
        inst.seed = j.at("seed").get<std::uint64_t>();
    } else if (kind == "near_expert") {
        inst.kind = InstanceSpec::Kind::near_expert;
        inst.num_states = j.at("num_states").get<std::size_t>();
        inst.num_actions = j.at("num_actions").get<std::size_t>();
        inst.discount = j.at("discount").get<double>();
        inst.expert_mix = j.at("expert_mix").get<double>();
        inst.seed = j.at("seed").get<std::uint64_t>();
    } else if (kind == "chain") {
        inst.kind = InstanceSpec::Kind::chain;
        inst.num_states = j.at("num_states").get<std::size_t>();
        inst.discount = j.at("discount").get<double>();
    } else {
        throw std::invalid_argument("spec: unknown instance kind \"" + kind + "\"");
    }
    return inst;
}

inline nlohmann::json instance_to_json(const InstanceSpec& inst) {
    nlohmann::json j;
    switch (inst.kind) {
        case InstanceSpec::Kind::file:
            j["kind"] = "file";
            j["path"] = inst.path;
            break;
        case InstanceSpec::Kind::random:
            j["kind"] = "random";
            j["num_states"] = inst.num_states;
            j["num_actions"] = inst.num_actions;
            j["discount"] = inst.discount;
            j["seed"] = inst.seed;
            break;
        case InstanceSpec::Kind::near_expert:
            j["kind"] = "near_expert";
            j["num_states"] = inst.num_states;
            j["num_actions"] = inst.num_actions;
            j["discount"] = inst.discount;
            j["expert_mix"] = inst.expert_mix;
            j["seed"] = inst.seed;
            break;
        case InstanceSpec::Kind::chain:
            j["kind"] = "chain";
            j["num_states"] = inst.num_states;
            j["discount"] = inst.discount;
            break;
    }
    return j;
}

inline RhoSpec rho_from_json(const nlohmann::json& j) {
    RhoSpec rho;
    const std::string preset = j.at("preset").get<std::string>();
    if (preset == "uniform") {
        rho.preset = RhoPreset::uniform;
    } else if (preset == "point") {
        rho.preset = RhoPreset::point;
        rho.point_state = j.at("state").get<std::size_t>();
    } else if (preset == "mu_star") {
        rho.preset = RhoPreset::mu_star;
    } else {
        throw std::invalid_argument("spec: unknown rho preset \"" + preset + "\"");
    }
    return rho;
}

inline nlohmann::json rho_to_json(const RhoSpec& rho) {
    nlohmann::json j;
    switch (rho.preset) {
        case RhoPreset::uniform: j["preset"] = "uniform"; break;
        case RhoPreset::point:
            j["preset"] = "point";
            j["state"] = rho.point_state;
            break;
        case RhoPreset::mu_star: j["preset"] = "mu_star"; break;
    }
    return j;
}

inline std::string format_full(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

}  // namespace detail

inline ExperimentSpec spec_from_json(const nlohmann::json& j) {
    ExperimentSpec spec;
    try {
        spec.instance = detail::instance_from_json(j.at("instance"));
        if (j.contains("agents"))
            spec.agents = j.at("agents").get<std::vector<std::string>>();
        else
            spec.agents = {j.at("agent").get<std::string>()};
        spec.budgets = j.at("budgets").get<std::vector<std::size_t>>();
        spec.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        if (j.contains("delta")) spec.delta = j.at("delta").get<double>();
        if (j.contains("c_b")) spec.c_b = j.at("c_b").get<double>();
        if (j.contains("rho")) spec.rho = detail::rho_from_json(j.at("rho"));
        if (j.contains("sampler_mode")) {
            const std::string mode = j.at("sampler_mode").get<std::string>();
            if (mode == "markovian")
                spec.sampler_mode = SamplerMode::markovian;
            else if (mode == "iid")
                spec.sampler_mode = SamplerMode::iid;
            else
                throw std::invalid_argument("spec: unknown sampler_mode \"" + mode + "\"");
        }
        if (j.contains("initial_state"))
            spec.initial_state = j.at("initial_state").get<std::size_t>();
        if (j.contains("output_path")) spec.output_path = j.at("output_path").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("spec: malformed document: ") + e.what());
    }
    validate(spec);
    return spec;
}

inline ExperimentSpec load_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open spec file: " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(path + ": " + e.what());
    }
    try {
        return spec_from_json(j);
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(path + ": " + e.what());
    }
}

inline nlohmann::json spec_to_json(const ExperimentSpec& spec) {
    nlohmann::json j;
    j["instance"] = detail::instance_to_json(spec.instance);
    j["agents"] = spec.agents;
    j["budgets"] = spec.budgets;
    j["seeds"] = spec.seeds;
    j["delta"] = spec.delta;
    j["c_b"] = spec.c_b;
    j["rho"] = detail::rho_to_json(spec.rho);
    j["sampler_mode"] = spec.sampler_mode == SamplerMode::markovian ? "markovian" : "iid";
    j["initial_state"] = spec.initial_state;
    j["output_path"] = spec.output_path;
    return j;
}

struct RunRecord {
    std::string agent;
    std::string instance;
    std::size_t budget = 0;
    std::uint64_t seed = 0;
    GapReport report;
    double wall_time_ms = 0.0;
    std::string error;  // empty on success; failed cells keep their row

    bool ok() const { return error.empty(); }
};

struct SweepOptions {
    std::size_t workers = 0;  // 0 = one per hardware thread, capped by cell count
    bool timing = false;      // emit measured wall_time_ms (breaks byte-identical reruns)
};

// Per-cell stream seed. Components are folded in a fixed order so existing
// cells keep their streams when agents, budgets, or seeds are appended.
// Budget and seed enter by value, not list position.
inline std::uint64_t cell_seed(std::uint64_t instance_seed, std::size_t agent,
                               std::size_t budget, std::uint64_t seed) {
    std::uint64_t h = fold_seed(instance_seed, agent);
    h = fold_seed(h, budget);
    return fold_seed(h, seed);
}

namespace detail {

struct SweepContext {
    const ExperimentSpec& spec;
    const Instance& inst;
    const ExactSolution& exact;
    const ChainDiagnostics& diag;
};

inline RunRecord run_cell(const SweepContext& ctx, const std::string& agent, std::size_t budget,
                          std::uint64_t seed) {
    RunRecord rec;
    rec.agent = agent;
    rec.instance = ctx.inst.descriptor;
    rec.budget = budget;
    rec.seed = seed;
    const auto start = std::chrono::steady_clock::now();
    try {
        SamplerConfig scfg;
        scfg.mode = ctx.spec.sampler_mode;
        scfg.initial_state = ctx.spec.initial_state;
        scfg.seed = cell_seed(ctx.spec.instance.seed, agent_id(agent), budget, seed);
        scfg.total = budget;
        TrajectorySampler sampler =
            scfg.mode == SamplerMode::markovian
                ? TrajectorySampler(ctx.inst.mdp, ctx.inst.behavior, scfg)
                : TrajectorySampler(ctx.inst.mdp, ctx.inst.behavior, scfg, ctx.diag.stationary);

        const double c_b = agent == "vanilla" ? 0.0 : ctx.spec.c_b;
        const LcbConfig cfg = LcbConfig::make(ctx.inst.mdp.num_states, budget, ctx.spec.delta,
                                              c_b, ctx.inst.mdp.discount);
        DeterministicPolicy pi_hat;
        if (agent == "vr_lcb")
            pi_hat = run_vr(ctx.inst.mdp, sampler, cfg).pi_hat;
        else
            pi_hat = run_lcb(ctx.inst.mdp, sampler, cfg).pi_hat;

        rec.report = evaluate_policy(ctx.inst.mdp, pi_hat, ctx.inst.rho, ctx.exact, ctx.diag,
                                     {seed, budget});
    } catch (const std::exception& e) {
        rec.error = sanitize_csv(e.what());
    }
    rec.wall_time_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count();
    return rec;
}

}  // namespace detail

inline std::string records_csv_header() {
    return "agent,instance,total_samples,seed,v_star_rho,v_pihat_rho,gap,c_star,mu_min,t_mix,"
           "wall_time_ms,error";
}

inline void write_records_csv(std::ostream& out, const ExperimentSpec& spec,
                              const std::vector<RunRecord>& records, bool timing) {
    // The header documents the experiment, not the destination: dropping
    // output_path keeps the bytes identical no matter where they are written.
    ExperimentSpec header_spec = spec;
    header_spec.output_path.clear();
    out << "# pessiq sweep results\n";
    out << "# spec: " << spec_to_json(header_spec).dump() << "\n";
    out << records_csv_header() << "\n";
    for (const RunRecord& r : records) {
        out << r.agent << ',' << r.instance << ',' << r.budget << ',' << r.seed << ',';
        if (r.ok()) {
            out << detail::format_full(r.report.v_star_rho) << ','
                << detail::format_full(r.report.v_pihat_rho) << ','
                << detail::format_full(r.report.gap) << ','
                << detail::format_full(r.report.c_star) << ','
                << detail::format_full(r.report.mu_min) << ',' << r.report.t_mix << ',';
        } else {
            out << ",,,,,,";
        }
        if (timing) out << detail::format_full(r.wall_time_ms);
        out << ',' << r.error << "\n";
    }
}

// Runs every (agent, budget, seed) cell of the sweep. Cells execute on a
// worker pool but land in a preallocated slot per cell, so the output order
// (agent-major, then budget, then seed) never depends on scheduling. A
// failing cell records its error message and leaves every other cell alone.
inline std::vector<RunRecord> run_sweep(const ExperimentSpec& spec,
                                        const SweepOptions& options = {}) {
    validate(spec);
    const Instance inst = generate_instance(spec.instance, spec.rho);
    const ExactSolution exact = value_iteration(inst.mdp);
    const OccupancyMeasure d_star = occupancy(inst.mdp, exact.pi_star, inst.rho);
    const ChainDiagnostics diag = make_chain_diagnostics(inst.mdp, inst.behavior, d_star);
    const detail::SweepContext ctx{spec, inst, exact, diag};

    struct Cell {
        std::size_t agent_idx, budget_idx, seed_idx;
    };
    std::vector<Cell> cells;
    for (std::size_t a = 0; a < spec.agents.size(); ++a)
        for (std::size_t b = 0; b < spec.budgets.size(); ++b)
            for (std::size_t s = 0; s < spec.seeds.size(); ++s) cells.push_back({a, b, s});

    std::vector<RunRecord> records(cells.size());
    const auto run_one = [&](std::size_t i) {
        const Cell& c = cells[i];
        records[i] = detail::run_cell(ctx, spec.agents[c.agent_idx], spec.budgets[c.budget_idx],
                                      spec.seeds[c.seed_idx]);
    };

    std::size_t workers = options.workers;
    if (workers == 0) workers = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    workers = std::min(workers, cells.size());

    if (workers <= 1) {
        for (std::size_t i = 0; i < cells.size(); ++i) run_one(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < cells.size(); i = next.fetch_add(1))
                    run_one(i);
            });
        for (auto& t : pool) t.join();
    }

    if (!spec.output_path.empty()) {
        std::ofstream out(spec.output_path);
        if (!out) throw std::runtime_error("cannot write results file: " + spec.output_path);
        write_records_csv(out, spec, records, options.timing);
    }
    return records;
}

// A minimal view of one record for plot aggregation: (agent, T, gap) plus a
// validity flag so error rows still mark their group as present.
struct GapSample {
    std::string agent;
    std::size_t budget = 0;
    bool ok = false;
    double gap = 0.0;
};

inline std::vector<GapSample> as_gap_samples(const std::vector<RunRecord>& records) {
    std::vector<GapSample> out;
    out.reserve(records.size());
    for (const RunRecord& r : records) out.push_back({r.agent, r.budget, r.ok(), r.report.gap});
    return out;
}

// Reads back a results CSV written by write_records_csv. Comment lines are
// skipped; columns are located by header name so added columns never break
// old files.
inline std::vector<GapSample> parse_records_csv(std::istream& in) {
    std::string line;
    std::vector<std::string> header;
    std::vector<GapSample> out;
    auto split = [](const std::string& text) {
        std::vector<std::string> fields;
        std::string field;
        std::istringstream ss(text);
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (!text.empty() && text.back() == ',') fields.push_back("");
        return fields;
    };
    std::ptrdiff_t col_agent = -1, col_budget = -1, col_gap = -1, col_error = -1;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const std::vector<std::string> fields = split(line);
        if (header.empty()) {
            header = fields;
            for (std::size_t i = 0; i < header.size(); ++i) {
                if (header[i] == "agent") col_agent = static_cast<std::ptrdiff_t>(i);
                if (header[i] == "total_samples") col_budget = static_cast<std::ptrdiff_t>(i);
                if (header[i] == "gap") col_gap = static_cast<std::ptrdiff_t>(i);
                if (header[i] == "error") col_error = static_cast<std::ptrdiff_t>(i);
            }
            if (col_agent < 0 || col_budget < 0 || col_gap < 0)
                throw std::invalid_argument(
                    "records csv: header must contain agent, total_samples, gap");
            continue;
        }
        GapSample sample;
        sample.agent = fields.at(static_cast<std::size_t>(col_agent));
        sample.budget = std::stoull(fields.at(static_cast<std::size_t>(col_budget)));
        const std::string& gap = fields.at(static_cast<std::size_t>(col_gap));
        const bool has_error = col_error >= 0 &&
                               static_cast<std::size_t>(col_error) < fields.size() &&
                               !fields[static_cast<std::size_t>(col_error)].empty();
        if (!gap.empty() && !has_error) {
            sample.ok = true;
            sample.gap = std::strtod(gap.c_str(), nullptr);
        }
        out.push_back(std::move(sample));
    }
    return out;
}

// Nearest-rank quantile on a sorted sample: the ceil(q*n)-th smallest value.
inline double nearest_rank(const std::vector<double>& sorted, double q) {
    const auto n = sorted.size();
    std::size_t rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)));
    rank = std::clamp<std::size_t>(rank, 1, n);
    return sorted[rank - 1];
}

// Aggregates records into one gap-vs-T series per agent: x = T ascending,
// y = median gap, y_lo/y_hi = 25th/75th percentiles, all nearest-rank over
// the seeds of the (agent, T) group. Groups whose every run failed are
// reported as warning comments instead of rows.
inline void emit_plot_data(const std::vector<GapSample>& samples, std::ostream& out) {
    if (samples.empty()) throw std::invalid_argument("emit_plot_data: no records");
    std::vector<std::string> agents;
    for (const GapSample& s : samples)
        if (std::find(agents.begin(), agents.end(), s.agent) == agents.end())
            agents.push_back(s.agent);

    out << "# pessiq plot data\n";
    out << "agent,total_samples,runs,gap_median,gap_q25,gap_q75\n";
    for (const std::string& agent : agents) {
        std::vector<std::size_t> budgets;
        for (const GapSample& s : samples)
            if (s.agent == agent &&
                std::find(budgets.begin(), budgets.end(), s.budget) == budgets.end())
                budgets.push_back(s.budget);
        std::sort(budgets.begin(), budgets.end());
        for (const std::size_t budget : budgets) {
            std::vector<double> gaps;
            for (const GapSample& s : samples)
                if (s.agent == agent && s.budget == budget && s.ok) gaps.push_back(s.gap);
            if (gaps.empty()) {
                out << "# warning: no successful runs for agent=" << agent << " T=" << budget
                    << "\n";
                continue;
            }
            std::sort(gaps.begin(), gaps.end());
            out << agent << ',' << budget << ',' << gaps.size() << ','
                << detail::format_full(nearest_rank(gaps, 0.5)) << ','
                << detail::format_full(nearest_rank(gaps, 0.25)) << ','
                << detail::format_full(nearest_rank(gaps, 0.75)) << "\n";
        }
    }
}

}  // namespace pessiq
