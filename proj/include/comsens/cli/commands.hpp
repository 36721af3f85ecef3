// Subcommands of the comsens tool. Each returns a process exit code.

#pragma once

#include "comsens/analysis.hpp"
#include "comsens/cli/archive.hpp"
#include "comsens/cli/config.hpp"
#include "comsens/timing.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace comsens::cli {

enum ExitCode : int {
    kOk = 0,
    kCheckFailed = 1, ///< validate: empirical MSE outside the 3-stderr band
    kConfigError = 2,
    kNotConverged = 3,
    kIoError = 4,
};

struct CommandOptions {
    std::optional<std::filesystem::path> config;
    std::optional<std::filesystem::path> archive;
    std::optional<std::filesystem::path> out;
    std::optional<std::uint64_t> seed;
    std::optional<int> runs;
    std::optional<int> trials;
    std::optional<Index> max_lag;
    std::optional<OutputFormat> format;
    std::optional<unsigned> threads;
    bool literal_transpose = false;
    bool lags_from_one = false;
    bool literal_direction = false;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Full-precision decimal for CSV columns.
inline std::string format_double(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string utc_now()
{
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Writes through a temporary file and renames, so readers never see a partial file.
inline void write_file(const std::filesystem::path& path, const std::string& contents)
{
    std::error_code ec;
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec)
            throw IoError("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
    }
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw IoError("cannot open '" + tmp.string() + "' for writing");
        out << contents;
        if (!out)
            throw IoError("write to '" + tmp.string() + "' failed");
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec)
        throw IoError("cannot move '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
}

inline std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot read '" + path.string() + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return text.str();
}

// ---- report serializers ----------------------------------------------------------------------

inline std::string trace_csv(const DesignTrace& t)
{
    std::ostringstream out;
    out << "iteration,mse,mse_downlink,mse_uplink,max_cross,max_auto,max_power\n";
    for (std::size_t i = 0; i < t.size(); ++i)
        out << i << ',' << format_double(t.mse[i]) << ',' << format_double(t.mse_downlink[i]) << ','
            << format_double(t.mse_uplink[i]) << ',' << format_double(t.max_cross[i]) << ','
            << format_double(t.max_auto[i]) << ',' << format_double(t.max_power[i]) << '\n';
    return out.str();
}

inline nlohmann::json trace_json(const DesignTrace& t)
{
    return {{"mse", t.mse},         {"mse_downlink", t.mse_downlink}, {"mse_uplink", t.mse_uplink},
            {"max_cross", t.max_cross}, {"max_auto", t.max_auto},     {"max_power", t.max_power}};
}

inline std::string correlation_csv(const CorrelationReport& report)
{
    std::ostringstream out;
    out << "kind,q,l,lag,re,im,mag_db\n";
    for (const auto& e : report.entries())
        out << to_string(e.kind) << ',' << e.q << ',' << e.l << ',' << e.lag << ',' << format_double(e.value.real())
            << ',' << format_double(e.value.imag()) << ',' << format_double(e.magnitude_db) << '\n';
    return out.str();
}

inline nlohmann::json correlation_json(const CorrelationReport& report)
{
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& e : report.entries())
        rows.push_back({{"kind", to_string(e.kind)},
                        {"q", e.q},
                        {"l", e.l},
                        {"lag", e.lag},
                        {"re", e.value.real()},
                        {"im", e.value.imag()},
                        {"mag_db", e.magnitude_db}});
    return {{"max_lag", report.max_lag()}, {"entries", rows}};
}

inline std::string montecarlo_csv(const MonteCarloSummary& s)
{
    std::ostringstream out;
    out << "iteration,mean_mse,std_mse\n";
    for (std::size_t i = 0; i < s.mse_mean_per_iteration.size(); ++i)
        out << i << ',' << format_double(s.mse_mean_per_iteration[i]) << ','
            << format_double(s.mse_std_per_iteration[i]) << '\n';
    return out.str();
}

inline std::string montecarlo_runs_csv(const MonteCarloSummary& s)
{
    std::ostringstream out;
    out << "run,seed,final_mse,converged,outer_iterations,max_cross,max_auto\n";
    for (std::size_t r = 0; r < s.results.size(); ++r) {
        const auto& res = s.results[r];
        out << r << ',' << res.seed << ',' << format_double(res.trace.mse.back()) << ',' << (res.converged ? 1 : 0)
            << ',' << res.outer_iterations << ',' << format_double(res.trace.max_cross.back()) << ','
            << format_double(res.trace.max_auto.back()) << '\n';
    }
    return out.str();
}

inline nlohmann::json montecarlo_json(const MonteCarloSummary& s)
{
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& res : s.results)
        runs.push_back({{"seed", res.seed},
                        {"final_mse", res.trace.mse.back()},
                        {"converged", res.converged},
                        {"outer_iterations", res.outer_iterations}});
    return {{"runs", s.runs},
            {"failed_runs", s.failed_runs},
            {"converged_runs", s.converged_runs},
            {"mean_mse", s.mse_mean_per_iteration},
            {"std_mse", s.mse_std_per_iteration},
            {"per_run", runs}};
}

// ---- command plumbing --------------------------------------------------------------------------

namespace detail {

inline RunConfig resolve_config(const CommandOptions& opts)
{
    RunConfig cfg = opts.config ? load_config(*opts.config) : parse_config("", "<defaults>");
    if (opts.out)
        cfg.output_dir = *opts.out;
    if (opts.seed)
        cfg.design.seed = *opts.seed;
    if (opts.runs)
        cfg.runs = *opts.runs;
    if (opts.trials)
        cfg.trials = *opts.trials;
    if (opts.format)
        cfg.format = *opts.format;
    if (opts.threads)
        cfg.threads = *opts.threads;
    if (opts.literal_transpose)
        cfg.design.literal_transpose = true;
    if (opts.lags_from_one)
        cfg.design.lags_from_one = true;
    if (opts.literal_direction)
        cfg.literal_direction = true;
    cfg.validate();
    return cfg;
}

/// Maps exceptions to exit codes; `body` does the actual work.
template <class Body>
int guarded(std::ostream& err, Body&& body)
{
    try {
        return body();
    } catch (const ConfigFileMissing& e) {
        err << "error: " << e.what() << '\n';
        return kConfigError;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const ArchiveError& e) {
        err << "archive error: " << e.what() << '\n';
        return kConfigError;
    } catch (const IoError& e) {
        err << "io error: " << e.what() << '\n';
        return kIoError;
    } catch (const std::invalid_argument& e) {
        err << "invalid input: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kNotConverged;
    }
}

} // namespace detail

/// Designs one pilot pair; writes pilots.json and trace.csv (or trace.json).
inline int cmd_design(const CommandOptions& opts, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    return detail::guarded(err, [&] {
        const RunConfig cfg = detail::resolve_config(opts);
        const ChannelScenario dl = cfg.downlink();
        const ChannelScenario ul = cfg.uplink(dl);
        const DesignResult result = design_pilots(dl, ul, cfg.design);

        const PilotArchive archive = make_archive(result, cfg.design, cfg.source_text, utc_now());
        write_file(cfg.output_dir / "pilots.json", dump_archive(archive));
        if (cfg.format == OutputFormat::csv)
            write_file(cfg.output_dir / "trace.csv", trace_csv(result.trace));
        else
            write_file(cfg.output_dir / "trace.json", trace_json(result.trace).dump(2) + "\n");

        out << "design: " << (result.converged ? "converged" : "NOT converged") << " after "
            << result.outer_iterations << " outer iterations\n"
            << "  mse total " << format_double(result.trace.mse.back()) << " (downlink "
            << format_double(result.trace.mse_downlink.back()) << ", uplink "
            << format_double(result.trace.mse_uplink.back()) << ")\n"
            << "  max cross-correlation " << format_double(result.trace.max_cross.back()) << '\n'
            << "  max autocorrelation sidelobe " << format_double(result.trace.max_auto.back()) << '\n';
        if (result.status.degenerate_columns > 0)
            err << "warning: " << result.status.degenerate_columns
                << " column projections were degenerate (constraints span the whole space)\n";
        if (result.status.unconverged_columns > 0)
            err << "warning: " << result.status.unconverged_columns << " column projections did not converge\n";
        return result.converged ? kOk : kNotConverged;
    });
}

/// Correlation report of an archived pilot pair; writes correlation.csv (or .json).
inline int cmd_analyze(const CommandOptions& opts, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    return detail::guarded(err, [&] {
        if (!opts.archive)
            throw ConfigError("analyze requires --archive PATH");
        const PilotArchive archive = parse_archive(read_file(*opts.archive));
        const Index b = archive.pair.X.rows();
        const Index max_lag = opts.max_lag.value_or(b - 1);
        if (max_lag < 0 || max_lag >= b)
            throw ConfigError("--max-lag " + std::to_string(max_lag) + " must satisfy 0 <= max-lag < B = " +
                              std::to_string(b));
        const bool literal = archive.literal_transpose || opts.literal_transpose;
        const auto convention = literal ? CorrelationConvention::literal_transpose : CorrelationConvention::hermitian;
        const CorrelationReport report = correlation_report(archive.pair, max_lag, convention);

        const std::filesystem::path dir = opts.out.value_or(opts.archive->has_parent_path()
                                                                ? opts.archive->parent_path()
                                                                : std::filesystem::path("."));
        const OutputFormat format = opts.format.value_or(OutputFormat::csv);
        if (format == OutputFormat::csv)
            write_file(dir / "correlation.csv", correlation_csv(report));
        else
            write_file(dir / "correlation.json", correlation_json(report).dump(2) + "\n");

        const auto lags = cross_lag_set(archive.k, archive.lags_from_one);
        const double zone = report.max_cross_magnitude(lags.front(), std::min(lags.back(), max_lag));
        out << "analyze: " << report.entries().size() << " correlation values, lags -" << max_lag << ".."
            << max_lag << '\n'
            << "  max |cross| inside the zone " << format_double(zone) << '\n';
        const auto levels = sidelobe_levels_db(report, archive.k);
        for (std::size_t q = 0; q < levels.size(); ++q)
            out << "  antenna " << q << " peak sidelobe (lags 1.." << archive.k << ") "
                << format_double(levels[q]) << " dB\n";
        return kOk;
    });
}

/// Repeated designs over consecutive seeds; writes montecarlo.csv and montecarlo_runs.csv.
inline int cmd_montecarlo(const CommandOptions& opts, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    return detail::guarded(err, [&] {
        const RunConfig cfg = detail::resolve_config(opts);
        const ChannelScenario dl = cfg.downlink();
        const ChannelScenario ul = cfg.uplink(dl);
        const MonteCarloSummary summary = monte_carlo_design(dl, ul, cfg.design, cfg.runs, cfg.threads);

        if (cfg.format == OutputFormat::csv) {
            write_file(cfg.output_dir / "montecarlo.csv", montecarlo_csv(summary));
            write_file(cfg.output_dir / "montecarlo_runs.csv", montecarlo_runs_csv(summary));
        } else {
            write_file(cfg.output_dir / "montecarlo.json", montecarlo_json(summary).dump(2) + "\n");
        }
        out << "montecarlo: " << summary.runs << " runs, " << summary.converged_runs << " converged, "
            << summary.failed_runs << " failed\n";
        if (!summary.mse_mean_per_iteration.empty())
            out << "  mean final mse " << format_double(summary.mse_mean_per_iteration.back()) << '\n';
        for (const auto& f : summary.failures)
            err << "run failed: " << f << '\n';
        return summary.failed_runs == 0 && summary.converged_runs == summary.runs ? kOk : kNotConverged;
    });
}

/// Radar range budget; prints it and writes range.json when the format is json.
inline int cmd_range(const CommandOptions& opts, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    return detail::guarded(err, [&] {
        const RunConfig cfg = detail::resolve_config(opts);
        const TimingScenario& t = cfg.timing;
        const double range = max_object_range(t);
        nlohmann::json report = {{"max_object_range_m", range},
                                 {"d_user_m", t.d_user},
                                 {"symbol_time_s", t.symbol_time},
                                 {"t_pr_symbols", t.t_pr},
                                 {"t_pr_s", t.t_pr * t.symbol_time},
                                 {"k_symbols", t.k},
                                 {"nu_m_per_s", t.nu},
                                 {"t_mod_symbols", t.t_mod},
                                 {"user_delay_symbols", delay_symbols(t.d_user, t.symbol_time, t.nu)}};
        out << "max object range: " << format_double(range) << " m\n";
        if (t.d_object) {
            const Feasibility f = is_sensing_feasible(t, cfg.literal_direction);
            report["d_object_m"] = *t.d_object;
            report["feasible"] = f.feasible;
            report["slack_symbols"] = f.slack_symbols;
            report["slack_s"] = f.slack_symbols * t.symbol_time;
            report["object_delay_symbols"] = f.object_delay;
            report["t1_symbols"] = f.t1;
            report["t2_symbols"] = f.t2;
            out << "object at " << format_double(*t.d_object) << " m: " << (f.feasible ? "feasible" : "infeasible")
                << ", slack " << format_double(f.slack_symbols) << " symbols\n";
        }
        if (cfg.format == OutputFormat::json)
            write_file(cfg.output_dir / "range.json", report.dump(2) + "\n");
        return kOk;
    });
}

/// Monte-Carlo check of the analytic MSE for a random full-energy pilot on the downlink.
inline int cmd_validate(const CommandOptions& opts, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    return detail::guarded(err, [&] {
        const RunConfig cfg = detail::resolve_config(opts);
        const ChannelScenario dl = cfg.downlink();
        std::mt19937_64 rng(cfg.validate_seed);
        PilotMatrix pilot = comsens::detail::gaussian_pilot(dl.b, dl.n_t, rng);
        pilot *= std::sqrt(dl.gamma) / pilot.norm();

        const double analytic = channel_mse_lemma(pilot, dl);
        const EmpiricalMse empirical = empirical_mse(pilot, dl, cfg.trials, cfg.validate_seed + 1);
        const double z = empirical.stderr_defined && empirical.stderr_ > 0.0
                             ? (empirical.mean - analytic) / empirical.stderr_
                             : 0.0;
        const bool pass = empirical.stderr_defined && std::abs(z) <= 3.0;

        if (cfg.format == OutputFormat::csv) {
            std::ostringstream csv;
            csv << "trials,analytic_mse,empirical_mse,stderr,z,pass\n"
                << empirical.trials << ',' << format_double(analytic) << ',' << format_double(empirical.mean) << ','
                << format_double(empirical.stderr_) << ',' << format_double(z) << ',' << (pass ? 1 : 0) << '\n';
            write_file(cfg.output_dir / "validate.csv", csv.str());
        } else {
            const nlohmann::json j = {{"trials", empirical.trials},     {"analytic_mse", analytic},
                                      {"empirical_mse", empirical.mean}, {"stderr", empirical.stderr_},
                                      {"stderr_defined", empirical.stderr_defined}, {"z", z},
                                      {"pass", pass}};
            write_file(cfg.output_dir / "validate.json", j.dump(2) + "\n");
        }
        out << "validate: analytic " << format_double(analytic) << ", empirical " << format_double(empirical.mean)
            << " +- " << format_double(empirical.stderr_) << " over " << empirical.trials << " trials (z = "
            << format_double(z) << ") " << (pass ? "PASS" : "FAIL") << '\n';
        if (!empirical.stderr_defined)
            err << "warning: standard error is undefined for a single trial\n";
        return pass ? kOk : kCheckFailed;
    });
}

} // namespace comsens::cli
