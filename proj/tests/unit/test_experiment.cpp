#include <catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pessiq/experiment.hpp"

using namespace pessiq;

namespace {

ExperimentSpec small_spec() {
    ExperimentSpec spec;
    spec.instance.kind = InstanceSpec::Kind::chain;
    spec.instance.num_states = 3;
    spec.instance.discount = 0.8;
    spec.agents = {"lcb"};
    spec.budgets = {100};
    spec.seeds = {1};
    return spec;
}

std::vector<std::string> split_lines(const std::string& text) {
    std::istringstream in(text);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

std::size_t count_fields(const std::string& line) {
    return static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
}

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name) : path("/tmp/pessiq_test_" + name) {}
    ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("experiment specs survive the JSON round trip", "[experiment]") {
    ExperimentSpec spec;
    spec.instance.kind = InstanceSpec::Kind::near_expert;
    spec.instance.num_states = 5;
    spec.instance.num_actions = 4;
    spec.instance.discount = 0.85;
    spec.instance.expert_mix = 0.1;
    spec.instance.seed = 99;
    spec.agents = {"vanilla", "vr_lcb"};
    spec.budgets = {10, 100, 1000};
    spec.seeds = {7, 8};
    spec.delta = 0.05;
    spec.c_b = 2.5;
    spec.rho.preset = RhoPreset::point;
    spec.rho.point_state = 3;
    spec.sampler_mode = SamplerMode::iid;
    spec.initial_state = 2;
    spec.output_path = "out.csv";

    const ExperimentSpec back = spec_from_json(spec_to_json(spec));
    CHECK(back.instance.kind == spec.instance.kind);
    CHECK(back.instance.num_states == 5);
    CHECK(back.instance.num_actions == 4);
    CHECK(back.instance.discount == 0.85);
    CHECK(back.instance.expert_mix == 0.1);
    CHECK(back.instance.seed == 99);
    CHECK(back.agents == spec.agents);
    CHECK(back.budgets == spec.budgets);
    CHECK(back.seeds == spec.seeds);
    CHECK(back.delta == 0.05);
    CHECK(back.c_b == 2.5);
    CHECK(back.rho.preset == RhoPreset::point);
    CHECK(back.rho.point_state == 3);
    CHECK(back.sampler_mode == SamplerMode::iid);
    CHECK(back.initial_state == 2);
    CHECK(back.output_path == "out.csv");
}

TEST_CASE("a singular agent key is accepted as a one-element list", "[experiment]") {
    nlohmann::json j;
    j["instance"] = {{"kind", "chain"}, {"num_states", 2}, {"discount", 0.5}};
    j["agent"] = "lcb";
    j["budgets"] = {10};
    j["seeds"] = {1};
    const ExperimentSpec spec = spec_from_json(j);
    CHECK(spec.agents == std::vector<std::string>{"lcb"});
    CHECK(spec.delta == 0.1);
    CHECK(spec.c_b == 1.0);
    CHECK(spec.sampler_mode == SamplerMode::markovian);
}

TEST_CASE("spec validation pinpoints each broken invariant", "[experiment]") {
    const ExperimentSpec good = small_spec();
    CHECK_NOTHROW(validate(good));

    ExperimentSpec bad = good;
    bad.agents = {};
    CHECK_THROWS_AS(validate(bad), std::invalid_argument);

    bad = good;
    bad.agents = {"sarsa"};
    CHECK_THROWS_WITH(validate(bad), Catch::Matchers::ContainsSubstring("sarsa"));

    bad = good;
    bad.budgets = {100, 100};
    CHECK_THROWS_WITH(validate(bad), Catch::Matchers::ContainsSubstring("ascending"));

    bad = good;
    bad.budgets = {200, 100};
    CHECK_THROWS_AS(validate(bad), std::invalid_argument);

    bad = good;
    bad.seeds = {};
    CHECK_THROWS_AS(validate(bad), std::invalid_argument);

    bad = good;
    bad.delta = 1.0;
    CHECK_THROWS_AS(validate(bad), std::invalid_argument);

    bad = good;
    bad.c_b = -0.5;
    CHECK_THROWS_AS(validate(bad), std::invalid_argument);

    nlohmann::json j;
    j["instance"] = {{"kind", "chain"}, {"num_states", 2}, {"discount", 0.5}};
    CHECK_THROWS_WITH(spec_from_json(j), Catch::Matchers::ContainsSubstring("malformed"));
}

TEST_CASE("cell seeds depend on values, not list positions", "[experiment]") {
    std::set<std::uint64_t> seen;
    for (std::size_t agent = 0; agent < 3; ++agent)
        for (std::size_t budget : {100, 200, 400})
            for (std::uint64_t seed : {1, 2, 3})
                seen.insert(cell_seed(17, agent, budget, seed));
    CHECK(seen.size() == 27);

    // The derivation is a pure function of the component values, so growing
    // any list elsewhere in the spec cannot move an existing cell's stream.
    CHECK(cell_seed(17, 1, 100, 2) == cell_seed(17, 1, 100, 2));
    CHECK(cell_seed(17, 1, 100, 2) != cell_seed(18, 1, 100, 2));
    CHECK(cell_seed(17, 1, 100, 2) != cell_seed(17, 2, 100, 2));
    CHECK(cell_seed(17, 1, 100, 2) != cell_seed(17, 1, 101, 2));
    CHECK(cell_seed(17, 1, 100, 2) != cell_seed(17, 1, 2, 100));
}

TEST_CASE("a one-cell sweep yields exactly one well-formed row", "[experiment]") {
    const std::vector<RunRecord> records = run_sweep(small_spec());
    REQUIRE(records.size() == 1);
    const RunRecord& r = records[0];
    CHECK(r.ok());
    CHECK(r.agent == "lcb");
    CHECK(r.instance == "chain(S=3;gamma=0.8)");
    CHECK(r.budget == 100);
    CHECK(r.seed == 1);
    CHECK(r.report.total_samples == 100);
    CHECK(r.report.gap >= -kGapSlack);
    CHECK(r.report.gap <= 5.0 + kGapSlack);
    CHECK(r.report.t_mix >= 1);
    CHECK(r.report.mu_min > 0.0);

    std::ostringstream out;
    write_records_csv(out, small_spec(), records, false);
    const std::vector<std::string> lines = split_lines(out.str());
    REQUIRE(lines.size() == 4);
    CHECK(lines[0] == "# pessiq sweep results");
    CHECK(lines[1].rfind("# spec: ", 0) == 0);
    CHECK(lines[1].find("\"agents\"") != std::string::npos);
    CHECK(lines[2] == records_csv_header());
    CHECK(count_fields(lines[2]) == 12);
    CHECK(count_fields(lines[3]) == 12);
    CHECK(lines[3].rfind("lcb,chain(S=3;gamma=0.8),100,1,", 0) == 0);
}

TEST_CASE("sweeps are byte-identical across reruns and worker counts", "[experiment]") {
    ExperimentSpec spec = small_spec();
    spec.agents = {"vanilla", "lcb", "vr_lcb"};
    spec.budgets = {50, 100};
    spec.seeds = {1, 2};

    SweepOptions serial;
    serial.workers = 1;
    SweepOptions parallel;
    parallel.workers = 4;

    std::ostringstream a, b, c;
    write_records_csv(a, spec, run_sweep(spec, serial), false);
    write_records_csv(b, spec, run_sweep(spec, serial), false);
    write_records_csv(c, spec, run_sweep(spec, parallel), false);
    CHECK(a.str() == b.str());
    CHECK(a.str() == c.str());

    const std::vector<std::string> lines = split_lines(a.str());
    CHECK(lines.size() == 3 + 3 * 2 * 2);
}

TEST_CASE("rows come out agent-major, then budget, then seed", "[experiment]") {
    ExperimentSpec spec = small_spec();
    spec.agents = {"vanilla", "lcb"};
    spec.budgets = {50, 100};
    spec.seeds = {5, 6};

    const std::vector<RunRecord> records = run_sweep(spec);
    REQUIRE(records.size() == 8);
    std::size_t i = 0;
    for (const std::string& agent : spec.agents)
        for (const std::size_t budget : spec.budgets)
            for (const std::uint64_t seed : spec.seeds) {
                CHECK(records[i].agent == agent);
                CHECK(records[i].budget == budget);
                CHECK(records[i].seed == seed);
                ++i;
            }
}

TEST_CASE("one failing cell never disturbs the others", "[experiment]") {
    ExperimentSpec spec = small_spec();
    spec.agents = {"lcb", "vr_lcb"};
    spec.budgets = {4, 100};  // 4 is too small for any variance-reduced epoch
    spec.seeds = {1, 2};

    const std::vector<RunRecord> records = run_sweep(spec);
    REQUIRE(records.size() == 8);
    std::size_t failed = 0;
    for (const RunRecord& r : records) {
        if (r.agent == "vr_lcb" && r.budget == 4) {
            CHECK_FALSE(r.ok());
            CHECK(r.error.find("budget too small") != std::string::npos);
            CHECK(r.error.find(',') == std::string::npos);
            ++failed;
        } else {
            CHECK(r.ok());
        }
    }
    CHECK(failed == 2);

    std::ostringstream out;
    write_records_csv(out, spec, records, false);
    for (const std::string& line : split_lines(out.str()))
        if (line[0] != '#') CHECK(count_fields(line) == 12);
}

TEST_CASE("the timing flag fills the wall-time column", "[experiment]") {
    const std::vector<RunRecord> records = run_sweep(small_spec());

    std::ostringstream plain, timed;
    write_records_csv(plain, small_spec(), records, false);
    write_records_csv(timed, small_spec(), records, true);

    const std::string plain_row = split_lines(plain.str())[3];
    const std::string timed_row = split_lines(timed.str())[3];
    CHECK(plain_row.substr(plain_row.size() - 2) == ",,");
    CHECK(count_fields(timed_row) == 12);
    CHECK(timed_row.size() > plain_row.size());
}

TEST_CASE("the sweep writes its results file on request", "[experiment]") {
    const TempFile tmp("sweep_output.csv");
    ExperimentSpec spec = small_spec();
    spec.output_path = tmp.path;
    const std::vector<RunRecord> records = run_sweep(spec);

    std::ifstream in(tmp.path);
    REQUIRE(in.good());
    std::stringstream file_content;
    file_content << in.rdbuf();

    std::ostringstream expect;
    write_records_csv(expect, spec, records, false);
    CHECK(file_content.str() == expect.str());

    spec.output_path = "/nonexistent_dir/out.csv";
    CHECK_THROWS_AS(run_sweep(spec), std::runtime_error);
}

TEST_CASE("an iid-mode sweep runs against the stationary marginal", "[experiment]") {
    ExperimentSpec spec = small_spec();
    spec.sampler_mode = SamplerMode::iid;
    const std::vector<RunRecord> records = run_sweep(spec);
    REQUIRE(records.size() == 1);
    CHECK(records[0].ok());
}

TEST_CASE("records round-trip through the CSV reader", "[experiment]") {
    ExperimentSpec spec = small_spec();
    spec.agents = {"lcb", "vr_lcb"};
    spec.budgets = {4, 100};
    spec.seeds = {1};
    const std::vector<RunRecord> records = run_sweep(spec);

    std::stringstream io;
    write_records_csv(io, spec, records, false);
    const std::vector<GapSample> parsed = parse_records_csv(io);
    const std::vector<GapSample> direct = as_gap_samples(records);
    REQUIRE(parsed.size() == direct.size());
    for (std::size_t i = 0; i < parsed.size(); ++i) {
        CHECK(parsed[i].agent == direct[i].agent);
        CHECK(parsed[i].budget == direct[i].budget);
        CHECK(parsed[i].ok == direct[i].ok);
        if (parsed[i].ok) CHECK(parsed[i].gap == direct[i].gap);
    }

    std::istringstream missing("foo,bar\n1,2\n");
    CHECK_THROWS_AS(parse_records_csv(missing), std::invalid_argument);
}

TEST_CASE("nearest-rank quantiles use the ceil(qn)-th order statistic", "[experiment]") {
    const std::vector<double> sorted = {1.0, 2.0, 3.0, 4.0};
    CHECK(nearest_rank(sorted, 0.5) == 2.0);
    CHECK(nearest_rank(sorted, 0.25) == 1.0);
    CHECK(nearest_rank(sorted, 0.75) == 3.0);
    CHECK(nearest_rank(sorted, 1.0) == 4.0);
    CHECK(nearest_rank(sorted, 0.0) == 1.0);
    CHECK(nearest_rank({7.5}, 0.5) == 7.5);
}

TEST_CASE("plot data reduces each agent-budget group to its quartiles", "[experiment]") {
    SECTION("a single record collapses to one flat row") {
        const std::vector<GapSample> samples = {{"lcb", 100, true, 0.25}};
        std::ostringstream out;
        emit_plot_data(samples, out);
        const std::vector<std::string> lines = split_lines(out.str());
        REQUIRE(lines.size() == 3);
        CHECK(lines[1] == "agent,total_samples,runs,gap_median,gap_q25,gap_q75");
        CHECK(lines[2] == "lcb,100,1,0.25,0.25,0.25");
    }

    SECTION("twenty seeds pick ranks 10, 5, and 15") {
        std::vector<GapSample> samples;
        for (int g = 20; g >= 1; --g)
            samples.push_back({"lcb", 100, true, static_cast<double>(g)});
        std::ostringstream out;
        emit_plot_data(samples, out);
        CHECK(split_lines(out.str())[2] == "lcb,100,20,10,5,15");
    }

    SECTION("series keep first-appearance agent order and ascending budgets") {
        const std::vector<GapSample> samples = {
            {"vr_lcb", 200, true, 0.5}, {"lcb", 200, true, 0.5},
            {"vr_lcb", 100, true, 1.0}, {"lcb", 100, true, 1.0}};
        std::ostringstream out;
        emit_plot_data(samples, out);
        const std::vector<std::string> lines = split_lines(out.str());
        REQUIRE(lines.size() == 6);
        CHECK(lines[2].rfind("vr_lcb,100,", 0) == 0);
        CHECK(lines[3].rfind("vr_lcb,200,", 0) == 0);
        CHECK(lines[4].rfind("lcb,100,", 0) == 0);
        CHECK(lines[5].rfind("lcb,200,", 0) == 0);
    }

    SECTION("all-failed groups become a warning comment") {
        const std::vector<GapSample> samples = {{"vr_lcb", 4, false, 0.0},
                                                {"vr_lcb", 100, true, 0.125}};
        std::ostringstream out;
        emit_plot_data(samples, out);
        const std::vector<std::string> lines = split_lines(out.str());
        REQUIRE(lines.size() == 4);
        CHECK(lines[2] == "# warning: no successful runs for agent=vr_lcb T=4");
        CHECK(lines[3] == "vr_lcb,100,1,0.125,0.125,0.125");
    }

    SECTION("no records at all is an error") {
        std::ostringstream out;
        CHECK_THROWS_AS(emit_plot_data({}, out), std::invalid_argument);
    }
}
