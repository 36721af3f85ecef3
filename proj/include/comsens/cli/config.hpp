// Run configuration: an INI file with [scenario], [design], [timing], [validate] and [output]
// sections. Every key is optional; unknown sections or keys are rejected.

#pragma once

#include "comsens/covariance.hpp"
#include "comsens/designer.hpp"
#include "comsens/timing.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>

namespace comsens::cli {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class OutputFormat { csv, json };

struct RunConfig {
    Index n_t = 4;
    Index n_r = 4;
    Index b = 8;
    CovarianceParams covariance;
    std::optional<std::uint64_t> phase_seed; ///< draw random phases instead of the fixed triple
    std::optional<double> uplink_gamma;

    DesignConfig design;
    int runs = 50;
    unsigned threads = 0;

    TimingScenario timing;
    bool literal_direction = false;

    int trials = 10000;
    std::uint64_t validate_seed = 7;

    std::filesystem::path output_dir = "out";
    OutputFormat format = OutputFormat::csv;

    std::string source_text; ///< raw config contents, hashed into archives

    ChannelScenario downlink() const
    {
        CovarianceParams params = phase_seed ? CovarianceParams::with_random_phases(*phase_seed) : covariance;
        if (phase_seed) {
            params.rho_rt = covariance.rho_rt;
            params.rho_rr = covariance.rho_rr;
            params.rho_mt = covariance.rho_mt;
            params.gamma = covariance.gamma;
        }
        return build_scenario(n_t, n_r, b, params);
    }

    ChannelScenario uplink(const ChannelScenario& dl) const
    {
        ChannelScenario ul = reciprocal_scenario(dl);
        if (uplink_gamma)
            ul.gamma = *uplink_gamma;
        return ul;
    }

    /// Everything that can be checked without running a solver.
    void validate() const
    {
        try {
            const ChannelScenario dl = downlink();
            (void)uplink(dl);
            design.validate(b);
            timing.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
        if (uplink_gamma && !(*uplink_gamma > 0.0))
            throw ConfigError("[scenario] uplink_gamma must be > 0");
        if (runs < 1)
            throw ConfigError("[design] runs must be >= 1");
        if (trials < 1)
            throw ConfigError("[validate] trials must be >= 1");
    }
};

namespace detail {

inline std::string lower(std::string s)
{
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

template <class T>
T parse_number(const std::string& text, const std::string& where)
{
    T value{};
    const char* first = text.data();
    const char* last = text.data() + text.size();
    const std::from_chars_result res = std::from_chars(first, last, value);
    if (res.ec != std::errc() || res.ptr != last)
        throw ConfigError(where + ": cannot parse '" + text + "' as a number");
    return value;
}

inline bool parse_bool(const std::string& text, const std::string& where)
{
    const std::string v = lower(text);
    if (v == "true" || v == "1" || v == "yes" || v == "on")
        return true;
    if (v == "false" || v == "0" || v == "no" || v == "off")
        return false;
    throw ConfigError(where + ": expected a boolean, got '" + text + "'");
}

// CLI11 keeps inline comments as extra tokens; drop them before parsing.
inline std::string strip_comments(const std::string& text)
{
    std::istringstream in(text);
    std::ostringstream out;
    std::string line;
    while (std::getline(in, line)) {
        const auto cut = line.find_first_of("#;");
        out << (cut == std::string::npos ? line : line.substr(0, cut)) << '\n';
    }
    return out.str();
}

} // namespace detail

/// Parses INI text. `origin` names the source in error messages.
inline RunConfig parse_config(const std::string& text, const std::string& origin = "<config>")
{
    RunConfig cfg;
    cfg.source_text = text;

    using Setter = std::function<void(const std::string&, const std::string&)>;
    auto real = [](double& field) -> Setter {
        return [&field](const std::string& v, const std::string& w) { field = detail::parse_number<double>(v, w); };
    };
    auto optional_real = [](std::optional<double>& field) -> Setter {
        return [&field](const std::string& v, const std::string& w) { field = detail::parse_number<double>(v, w); };
    };
    auto count = [](Index& field) -> Setter {
        return [&field](const std::string& v, const std::string& w) { field = detail::parse_number<Index>(v, w); };
    };
    auto integer = [](int& field) -> Setter {
        return [&field](const std::string& v, const std::string& w) { field = detail::parse_number<int>(v, w); };
    };
    auto flag = [](bool& field) -> Setter {
        return [&field](const std::string& v, const std::string& w) { field = detail::parse_bool(v, w); };
    };
    auto seed = [](std::uint64_t& field) -> Setter {
        return [&field](const std::string& v, const std::string& w) {
            field = detail::parse_number<std::uint64_t>(v, w);
        };
    };
    auto in_pi = [](double& field) -> Setter {
        return [&field](const std::string& v, const std::string& w) {
            field = detail::parse_number<double>(v, w) * std::numbers::pi;
        };
    };

    std::map<std::string, std::map<std::string, Setter>> keys;
    keys["scenario"] = {
        {"n_t", count(cfg.n_t)},
        {"n_r", count(cfg.n_r)},
        {"b", count(cfg.b)},
        {"rho_rt", real(cfg.covariance.rho_rt)},
        {"rho_rr", real(cfg.covariance.rho_rr)},
        {"rho_mt", real(cfg.covariance.rho_mt)},
        {"theta_rt_pi", in_pi(cfg.covariance.theta_rt)},
        {"theta_rr_pi", in_pi(cfg.covariance.theta_rr)},
        {"theta_mt_pi", in_pi(cfg.covariance.theta_mt)},
        {"gamma", optional_real(cfg.covariance.gamma)},
        {"uplink_gamma", optional_real(cfg.uplink_gamma)},
        {"phase_seed",
         [&cfg](const std::string& v, const std::string& w) {
             cfg.phase_seed = detail::parse_number<std::uint64_t>(v, w);
         }},
    };
    keys["design"] = {
        {"k", count(cfg.design.k)},
        {"p_downlink", optional_real(cfg.design.p_downlink)},
        {"p_uplink", optional_real(cfg.design.p_uplink)},
        {"epsilon", real(cfg.design.epsilon)},
        {"eta", real(cfg.design.eta)},
        {"mu", integer(cfg.design.mu)},
        {"max_outer", integer(cfg.design.max_outer)},
        {"inner_tol", real(cfg.design.inner_tol)},
        {"seed", seed(cfg.design.seed)},
        {"lags_from_one", flag(cfg.design.lags_from_one)},
        {"literal_transpose", flag(cfg.design.literal_transpose)},
        {"init",
         [&cfg](const std::string& v, const std::string& w) {
             const std::string s = detail::lower(v);
             if (s == "time_split")
                 cfg.design.init = InitStrategy::time_split;
             else if (s == "gaussian")
                 cfg.design.init = InitStrategy::gaussian;
             else
                 throw ConfigError(w + ": expected time_split or gaussian, got '" + v + "'");
         }},
        {"runs", integer(cfg.runs)},
        {"threads",
         [&cfg](const std::string& v, const std::string& w) { cfg.threads = detail::parse_number<unsigned>(v, w); }},
    };
    keys["timing"] = {
        {"d_user", real(cfg.timing.d_user)},
        {"d_object", optional_real(cfg.timing.d_object)},
        {"symbol_time", real(cfg.timing.symbol_time)},
        {"t_pr", real(cfg.timing.t_pr)},
        {"k", real(cfg.timing.k)},
        {"nu", real(cfg.timing.nu)},
        {"t_mod", real(cfg.timing.t_mod)},
        {"literal_direction", flag(cfg.literal_direction)},
    };
    keys["validate"] = {
        {"trials", integer(cfg.trials)},
        {"seed", seed(cfg.validate_seed)},
    };
    keys["output"] = {
        {"dir", [&cfg](const std::string& v, const std::string&) { cfg.output_dir = v; }},
        {"format",
         [&cfg](const std::string& v, const std::string& w) {
             const std::string s = detail::lower(v);
             if (s == "csv")
                 cfg.format = OutputFormat::csv;
             else if (s == "json")
                 cfg.format = OutputFormat::json;
             else
                 throw ConfigError(w + ": expected csv or json, got '" + v + "'");
         }},
    };

    std::istringstream stream(detail::strip_comments(text));
    std::vector<CLI::ConfigItem> items;
    try {
        items = CLI::ConfigINI().from_config(stream);
    } catch (const CLI::Error& e) {
        throw ConfigError(origin + ": " + e.what());
    }

    for (const auto& item : items) {
        if (item.name == "++" || item.name == "--")
            continue;
        const std::string section = item.parents.empty() ? std::string() : detail::lower(item.parents.front());
        const std::string key = detail::lower(item.name);
        const std::string where = origin + ": [" + section + "] " + key;
        if (item.parents.size() > 1)
            throw ConfigError(where + ": nested sections are not supported");
        const auto sec = keys.find(section);
        if (sec == keys.end())
            throw ConfigError(section.empty() ? origin + ": key '" + key + "' outside any section"
                                              : origin + ": unknown section [" + section + "]");
        const auto setter = sec->second.find(key);
        if (setter == sec->second.end())
            throw ConfigError(where + ": unknown key");
        if (item.inputs.size() != 1)
            throw ConfigError(where + ": expected exactly one value");
        setter->second(item.inputs.front(), where);
    }
    cfg.validate();
    return cfg;
}

class ConfigFileMissing : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline RunConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigFileMissing("cannot read config file '" + path.string() + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str(), path.string());
}

/// Stable hex digest of the config text (FNV-1a, 64 bit).
inline std::string config_hash(const std::string& text)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace comsens::cli
