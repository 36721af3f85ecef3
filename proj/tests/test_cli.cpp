#include "comsens/cli/commands.hpp"

#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <sys/wait.h>

using namespace comsens;
using namespace comsens::cli;
namespace fs = std::filesystem;

namespace {

const char* kSmallConfig = R"(# small scenario for fast runs
[scenario]
n_t = 2
n_r = 2
b = 8

[design]
k = 2        ; shorter zone
max_outer = 300
runs = 2

[output]
format = csv
)";

struct TempDir {
    fs::path path;
    TempDir()
    {
        std::string tmpl = (fs::temp_directory_path() / "comsens-test-XXXXXX").string();
        path = mkdtemp(tmpl.data());
    }
    ~TempDir() { fs::remove_all(path); }
};

fs::path write_config(const TempDir& dir, const std::string& text, const char* name = "run.ini")
{
    const fs::path p = dir.path / name;
    write_file(p, text);
    return p;
}

int run_cli(const std::string& args)
{
    const std::string cmd = std::string(COMSENS_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::size_t count_lines(const std::string& text)
{
    return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

} // namespace

TEST_CASE("parse_config: defaults and overrides")
{
    const RunConfig d = parse_config("");
    CHECK(d.n_t == 4);
    CHECK(d.b == 8);
    CHECK(d.design.k == 4);
    CHECK(d.runs == 50);
    CHECK(d.format == OutputFormat::csv);

    const RunConfig c = parse_config(kSmallConfig);
    CHECK(c.n_t == 2);
    CHECK(c.design.k == 2);
    CHECK(c.design.max_outer == 300);
    CHECK(c.runs == 2);

    const RunConfig t = parse_config("[scenario]\ntheta_rt_pi = 0.5\nuplink_gamma = 3\n[design]\nlags_from_one = yes\n"
                                     "init = gaussian\n[timing]\nd_object = 40000\n[output]\nformat = JSON\n");
    CHECK(t.covariance.theta_rt == 0.5 * std::numbers::pi);
    CHECK(t.uplink_gamma == 3.0);
    CHECK(t.design.lags_from_one);
    CHECK(t.design.init == InitStrategy::gaussian);
    CHECK(t.timing.d_object == 40000.0);
    CHECK(t.format == OutputFormat::json);
}

TEST_CASE("parse_config: errors name their location")
{
    auto message = [](const std::string& text) {
        try {
            parse_config(text, "my.ini");
        } catch (const ConfigError& e) {
            return std::string(e.what());
        }
        return std::string("no error");
    };
    CHECK_THAT(message("[design]\nfoo = 1\n"), Catch::Matchers::ContainsSubstring("my.ini: [design] foo"));
    CHECK_THAT(message("[nope]\nk = 1\n"), Catch::Matchers::ContainsSubstring("unknown section [nope]"));
    CHECK_THAT(message("[design]\nk = four\n"), Catch::Matchers::ContainsSubstring("[design] k"));
    CHECK_THAT(message("[design]\nlags_from_one = maybe\n"), Catch::Matchers::ContainsSubstring("boolean"));
    CHECK_THAT(message("[design]\nk = 8\n"), Catch::Matchers::ContainsSubstring("k = 8"));
    CHECK_THAT(message("[scenario]\nrho_rt = 1.5\n"), Catch::Matchers::ContainsSubstring("rho_rt"));
    CHECK_THAT(message("[output]\nformat = xml\n"), Catch::Matchers::ContainsSubstring("csv or json"));
}

TEST_CASE("load_config: missing file names the path")
{
    CHECK_THROWS_WITH(load_config("/nonexistent/comsens.ini"),
                      Catch::Matchers::ContainsSubstring("/nonexistent/comsens.ini"));

    CommandOptions opts;
    opts.config = "/nonexistent/comsens.ini";
    std::ostringstream out, err;
    CHECK(cmd_design(opts, out, err) == kConfigError);
    CHECK_THAT(err.str(), Catch::Matchers::ContainsSubstring("/nonexistent/comsens.ini"));
}

TEST_CASE("config_hash: stable and sensitive")
{
    CHECK(config_hash("") == "cbf29ce484222325");
    CHECK(config_hash("a") == "af63dc4c8601ec8c");
    CHECK(config_hash("[design]\nk = 2\n") != config_hash("[design]\nk = 3\n"));
}

TEST_CASE("archive: bit-exact round trip")
{
    const RunConfig cfg = parse_config(kSmallConfig);
    const ChannelScenario dl = cfg.downlink();
    const DesignResult result = design_pilots(dl, cfg.uplink(dl), cfg.design);
    const PilotArchive a = make_archive(result, cfg.design, cfg.source_text, "2026-01-01T00:00:00Z");
    const PilotArchive b = parse_archive(dump_archive(a));
    CHECK(b.pair.X == result.pair.X);
    CHECK(b.pair.Y == result.pair.Y);
    CHECK(b.mse_total == result.trace.mse.back());
    CHECK(b.config_hash == config_hash(kSmallConfig));
    CHECK(b.k == 2);
    CHECK(b.created_utc == "2026-01-01T00:00:00Z");
    CHECK(dump_archive(b) == dump_archive(a));
}

TEST_CASE("archive: tampered input names the field")
{
    PilotArchive a;
    a.k = 1;
    a.pair.X = PilotMatrix::Ones(4, 2);
    a.pair.Y = PilotMatrix::Ones(4, 2);
    nlohmann::json j = to_json(a);

    nlohmann::json bad_dims = j;
    bad_dims["X"]["rows"] = 5;
    CHECK_THROWS_WITH(archive_from_json(bad_dims), Catch::Matchers::ContainsSubstring("'X'"));

    nlohmann::json mismatch = j;
    mismatch["Y"] = {{"rows", 3}, {"cols", 1}, {"data", {{1.0, 0.0}, {1.0, 0.0}, {1.0, 0.0}}}};
    CHECK_THROWS_WITH(archive_from_json(mismatch), Catch::Matchers::ContainsSubstring("'Y'"));

    nlohmann::json missing = j;
    missing.erase("final_mse");
    CHECK_THROWS_WITH(archive_from_json(missing), Catch::Matchers::ContainsSubstring("final_mse"));

    nlohmann::json bad_k = j;
    bad_k["design"]["k"] = 4;
    CHECK_THROWS_WITH(archive_from_json(bad_k), Catch::Matchers::ContainsSubstring("design.k"));

    CHECK_THROWS_AS(parse_archive("{not json"), ArchiveError);
}

TEST_CASE("cmd_design: outputs are deterministic apart from timestamps")
{
    TempDir dir;
    const fs::path config = write_config(dir, kSmallConfig);
    std::ostringstream out, err;

    CommandOptions first;
    first.config = config;
    first.out = dir.path / "a";
    REQUIRE(cmd_design(first, out, err) == kOk);
    CommandOptions second = first;
    second.out = dir.path / "b";
    REQUIRE(cmd_design(second, out, err) == kOk);

    CHECK(read_file(dir.path / "a" / "trace.csv") == read_file(dir.path / "b" / "trace.csv"));
    auto a = nlohmann::json::parse(read_file(dir.path / "a" / "pilots.json"));
    auto b = nlohmann::json::parse(read_file(dir.path / "b" / "pilots.json"));
    a["metadata"].erase("timestamps");
    b["metadata"].erase("timestamps");
    CHECK(a == b);
    CHECK(a["X"]["rows"] == 8);
    CHECK(a["X"]["cols"] == 2);

    const std::string trace = read_file(dir.path / "a" / "trace.csv");
    CHECK(trace.rfind("iteration,mse,", 0) == 0);
    CHECK(count_lines(trace) == static_cast<std::size_t>(a["outer_iterations"].get<int>()) + 2);

    CommandOptions json = first;
    json.out = dir.path / "c";
    json.format = OutputFormat::json;
    REQUIRE(cmd_design(json, out, err) == kOk);
    CHECK(fs::exists(dir.path / "c" / "trace.json"));
}

TEST_CASE("cmd_design: non-convergence and invalid config exit codes")
{
    TempDir dir;
    std::ostringstream out, err;
    CommandOptions capped;
    capped.out = dir.path / "capped";
    // max_outer = 1 with a tiny eta cannot converge
    capped.config = write_config(dir, "[scenario]\nn_t = 2\nn_r = 2\n[design]\nk = 2\nmax_outer = 1\neta = 1e-300\n",
                                 "capped.ini");
    CHECK(cmd_design(capped, out, err) == kNotConverged);

    CommandOptions invalid;
    invalid.config = write_config(dir, "[design]\nbogus = 1\n", "bad.ini");
    invalid.out = dir.path / "invalid";
    CHECK(cmd_design(invalid, out, err) == kConfigError);
    CHECK_FALSE(fs::exists(dir.path / "invalid"));
}

TEST_CASE("cmd_analyze: row counts and lag validation")
{
    TempDir dir;
    std::ostringstream out, err;
    CommandOptions design;
    design.config = write_config(dir, kSmallConfig);
    design.out = dir.path;
    REQUIRE(cmd_design(design, out, err) == kOk);

    CommandOptions analyze;
    analyze.archive = dir.path / "pilots.json";
    analyze.max_lag = 5;
    REQUIRE(cmd_analyze(analyze, out, err) == kOk);
    const std::string csv = read_file(dir.path / "correlation.csv");
    // n_t auto series and n_t * n_r cross series, 2 * 5 + 1 lags each, plus the header
    CHECK(count_lines(csv) == (2 + 2 * 2) * 11 + 1);
    CHECK(csv.rfind("kind,q,l,lag,re,im,mag_db\n", 0) == 0);

    analyze.max_lag = 8;
    CHECK(cmd_analyze(analyze, out, err) == kConfigError);

    CommandOptions missing;
    missing.archive = dir.path / "nope.json";
    CHECK(cmd_analyze(missing, out, err) == kIoError);

    write_file(dir.path / "broken.json", "{\"format\": \"comsens-pilot-archive\"}");
    CommandOptions broken;
    broken.archive = dir.path / "broken.json";
    std::ostringstream broken_err;
    CHECK(cmd_analyze(broken, out, broken_err) == kConfigError);
    CHECK_THAT(broken_err.str(), Catch::Matchers::ContainsSubstring("metadata"));
}

TEST_CASE("cmd_montecarlo: one run matches cmd_design")
{
    TempDir dir;
    std::ostringstream out, err;
    CommandOptions design;
    design.config = write_config(dir, kSmallConfig);
    design.out = dir.path / "design";
    REQUIRE(cmd_design(design, out, err) == kOk);

    CommandOptions mc = design;
    mc.out = dir.path / "mc";
    mc.runs = 1;
    REQUIRE(cmd_montecarlo(mc, out, err) == kOk);

    const std::string trace = read_file(dir.path / "design" / "trace.csv");
    const std::string mean = read_file(dir.path / "mc" / "montecarlo.csv");
    std::istringstream t(trace), m(mean);
    std::string tl, ml;
    std::getline(t, tl);
    std::getline(m, ml);
    std::size_t rows = 0;
    while (std::getline(t, tl) && std::getline(m, ml)) {
        // iteration,mse,... versus iteration,mean_mse,std_mse
        const auto tc = tl.find(',', tl.find(',') + 1);
        const auto mc_end = ml.find(',', ml.find(',') + 1);
        CHECK(tl.substr(0, tc) == ml.substr(0, mc_end));
        ++rows;
    }
    CHECK(rows + 1 == count_lines(trace));
    CHECK(count_lines(mean) == count_lines(trace));
    CHECK(count_lines(read_file(dir.path / "mc" / "montecarlo_runs.csv")) == 2);
}

TEST_CASE("cmd_range and cmd_validate")
{
    TempDir dir;
    std::ostringstream out, err;
    CommandOptions opts;
    opts.out = dir.path;
    REQUIRE(cmd_range(opts, out, err) == kOk);
    CHECK_THAT(out.str(), Catch::Matchers::ContainsSubstring("max object range: 43750 m"));

    opts.config = write_config(dir, "[timing]\nd_object = 50000\n[output]\nformat = json\n");
    std::ostringstream far;
    REQUIRE(cmd_range(opts, far, err) == kOk);
    CHECK_THAT(far.str(), Catch::Matchers::ContainsSubstring("infeasible"));
    const auto report = nlohmann::json::parse(read_file(dir.path / "range.json"));
    CHECK(report["feasible"] == false);
    CHECK(report["max_object_range_m"] == 43750.0);

    CommandOptions validate;
    validate.out = dir.path;
    validate.trials = 4000;
    std::ostringstream vout;
    CHECK(cmd_validate(validate, vout, err) == kOk);
    CHECK_THAT(vout.str(), Catch::Matchers::ContainsSubstring("PASS"));
    CHECK(fs::exists(dir.path / "validate.csv"));

    validate.trials = 1;
    CHECK(cmd_validate(validate, vout, err) == kCheckFailed);
}

TEST_CASE("comsens binary: exit codes")
{
    TempDir dir;
    CHECK(run_cli("range") == kOk);
    CHECK(run_cli("--help") == kOk);
    CHECK(run_cli("frobnicate") == kConfigError);
    CHECK(run_cli("design --config /nonexistent/x.ini") == kConfigError);
    CHECK(run_cli("analyze") == kConfigError);
    CHECK(run_cli("range --out " + dir.path.string() + " --format json") == kOk);
    CHECK(fs::exists(dir.path / "range.json"));
}
