// comsens: pilot design, correlation analysis, Monte-Carlo statistics and radar-range budget.

#include "comsens/cli/commands.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>

int main(int argc, char** argv)
{
    using namespace comsens::cli;

    CLI::App app{"Paired uplink/downlink MIMO pilot design for joint communication and sensing"};
    app.set_version_flag("--version", COMSENS_VERSION);
    app.require_subcommand(1);

    CommandOptions opts;
    std::string config_path;
    std::string archive_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    int runs = 0;
    int trials = 0;
    comsens::Index max_lag = 0;
    unsigned threads = 0;
    OutputFormat format = OutputFormat::csv;
    const std::map<std::string, OutputFormat> formats{{"csv", OutputFormat::csv}, {"json", OutputFormat::json}};

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "INI run configuration");
        sub->add_option("--out", out_dir, "Output directory");
        sub->add_option("--format", format, "Report format")->transform(CLI::CheckedTransformer(formats, CLI::ignore_case));
    };
    auto add_design_flags = [&](CLI::App* sub) {
        sub->add_option("--seed", seed, "Base random seed");
        sub->add_flag("--literal-transpose", opts.literal_transpose, "Correlate with x^T J y instead of x^H J y");
        sub->add_flag("--lags-from-one", opts.lags_from_one, "Constrain cross-correlation lags 1..k only");
    };

    CLI::App* design = app.add_subcommand("design", "Design one pilot pair");
    add_common(design);
    add_design_flags(design);

    CLI::App* analyze = app.add_subcommand("analyze", "Auto/cross-correlation report of an archived pilot pair");
    analyze->add_option("--archive", archive_path, "Pilot archive written by 'design'")->required();
    analyze->add_option("--out", out_dir, "Output directory (default: next to the archive)");
    analyze->add_option("--format", format, "Report format")->transform(CLI::CheckedTransformer(formats, CLI::ignore_case));
    analyze->add_option("--max-lag", max_lag, "Largest |lag| to report (default B - 1)");
    analyze->add_flag("--literal-transpose", opts.literal_transpose, "Correlate with x^T J y");

    CLI::App* montecarlo = app.add_subcommand("montecarlo", "Average MSE traces over random initializations");
    add_common(montecarlo);
    add_design_flags(montecarlo);
    montecarlo->add_option("--runs", runs, "Number of designs");
    montecarlo->add_option("--threads", threads, "Worker threads (0 = hardware concurrency)");

    CLI::App* range = app.add_subcommand("range", "Maximum radar range and separation feasibility");
    add_common(range);
    range->add_flag("--literal-direction", opts.literal_direction, "Bound user-minus-object delay");

    CLI::App* validate = app.add_subcommand("validate", "Monte-Carlo check of the analytic channel MSE");
    add_common(validate);
    validate->add_option("--trials", trials, "Number of simulated training blocks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    auto set_common = [&](CLI::App* sub) {
        auto given = [sub](const char* name) {
            const CLI::Option* opt = sub->get_option_no_throw(name);
            return opt != nullptr && opt->count() > 0;
        };
        if (given("--config"))
            opts.config = config_path;
        if (given("--out"))
            opts.out = out_dir;
        if (given("--format"))
            opts.format = format;
        if (given("--seed"))
            opts.seed = seed;
    };

    if (design->parsed()) {
        set_common(design);
        return cmd_design(opts);
    }
    if (analyze->parsed()) {
        set_common(analyze);
        opts.archive = archive_path;
        if (analyze->count("--max-lag"))
            opts.max_lag = max_lag;
        return cmd_analyze(opts);
    }
    if (montecarlo->parsed()) {
        set_common(montecarlo);
        if (montecarlo->count("--runs"))
            opts.runs = runs;
        if (montecarlo->count("--threads"))
            opts.threads = threads;
        return cmd_montecarlo(opts);
    }
    if (range->parsed()) {
        set_common(range);
        return cmd_range(opts);
    }
    if (validate->parsed()) {
        set_common(validate);
        if (validate->count("--trials"))
            opts.trials = trials;
        return cmd_validate(opts);
    }
    return kConfigError;
}
