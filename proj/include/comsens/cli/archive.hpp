// Pilot archive: designed (X, Y) plus the metadata needed to analyze them later.
//
// Matrices are stored row-major as [[re, im], ...] with explicit "rows"/"cols". Doubles are written
// with shortest round-trip formatting, so reading an archive back gives bit-identical entries.

#pragma once

#include "comsens/analysis.hpp"
#include "comsens/cli/config.hpp"
#include "comsens/designer.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#ifndef COMSENS_VERSION
#define COMSENS_VERSION "0.0.0"
#endif

namespace comsens::cli {

class ArchiveError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct PilotArchive {
    // metadata
    std::string tool_version = COMSENS_VERSION;
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string created_utc;
    double wall_time_seconds = 0.0;

    // design settings needed to interpret the pilots
    Index k = 0;
    bool lags_from_one = false;
    bool literal_transpose = false;
    double p_downlink = 0.0;
    double p_uplink = 0.0;
    double epsilon = 0.0;

    PilotPair pair;
    double mse_total = 0.0;
    double mse_downlink = 0.0;
    double mse_uplink = 0.0;
    double max_cross = 0.0;
    double max_auto = 0.0;
    double max_power = 0.0;
    bool converged = false;
    int outer_iterations = 0;
};

inline const char* kArchiveFormat = "comsens-pilot-archive";

namespace detail {

inline nlohmann::json matrix_to_json(const ComplexMatrix& m)
{
    nlohmann::json data = nlohmann::json::array();
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j)
            data.push_back({m(i, j).real(), m(i, j).imag()});
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

inline ComplexMatrix matrix_from_json(const nlohmann::json& j, const std::string& field)
{
    if (!j.is_object() || !j.contains("rows") || !j.contains("cols") || !j.contains("data"))
        throw ArchiveError("archive field '" + field + "' must have rows, cols and data");
    const auto rows = j.at("rows").get<Index>();
    const auto cols = j.at("cols").get<Index>();
    const auto& data = j.at("data");
    if (rows < 1 || cols < 1 || !data.is_array() || static_cast<Index>(data.size()) != rows * cols)
        throw ArchiveError("archive field '" + field + "': data length does not match rows x cols");
    ComplexMatrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index c = 0; c < cols; ++c) {
            const auto& e = data.at(static_cast<std::size_t>(i * cols + c));
            if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
                throw ArchiveError("archive field '" + field + "': entries must be [re, im] pairs");
            m(i, c) = cplx(e[0].get<double>(), e[1].get<double>());
        }
    return m;
}

} // namespace detail

inline PilotArchive make_archive(const DesignResult& result, const DesignConfig& cfg, const std::string& config_text,
                                 const std::string& created_utc)
{
    PilotArchive a;
    a.config_hash = config_hash(config_text);
    a.seed = cfg.seed;
    a.created_utc = created_utc;
    a.wall_time_seconds = result.trace.wall_time_seconds;
    a.k = cfg.k;
    a.lags_from_one = cfg.lags_from_one;
    a.literal_transpose = cfg.literal_transpose;
    a.p_downlink = result.p_downlink;
    a.p_uplink = result.p_uplink;
    a.epsilon = cfg.epsilon;
    a.pair = result.pair;
    a.mse_total = result.trace.mse.back();
    a.mse_downlink = result.trace.mse_downlink.back();
    a.mse_uplink = result.trace.mse_uplink.back();
    a.max_cross = result.trace.max_cross.back();
    a.max_auto = result.trace.max_auto.back();
    a.max_power = result.trace.max_power.back();
    a.converged = result.converged;
    a.outer_iterations = result.outer_iterations;
    return a;
}

inline nlohmann::json to_json(const PilotArchive& a)
{
    nlohmann::json j;
    j["format"] = kArchiveFormat;
    j["metadata"] = {{"tool_version", a.tool_version},
                     {"config_hash", a.config_hash},
                     {"seed", a.seed},
                     {"timestamps", {{"created_utc", a.created_utc}, {"wall_time_seconds", a.wall_time_seconds}}}};
    j["design"] = {{"k", a.k},
                   {"lags_from_one", a.lags_from_one},
                   {"literal_transpose", a.literal_transpose},
                   {"p_downlink", a.p_downlink},
                   {"p_uplink", a.p_uplink},
                   {"epsilon", a.epsilon}};
    j["X"] = detail::matrix_to_json(a.pair.X);
    j["Y"] = detail::matrix_to_json(a.pair.Y);
    j["final_mse"] = {{"total", a.mse_total}, {"downlink", a.mse_downlink}, {"uplink", a.mse_uplink}};
    j["residuals"] = {{"max_cross", a.max_cross}, {"max_auto", a.max_auto}, {"max_power", a.max_power}};
    j["converged"] = a.converged;
    j["outer_iterations"] = a.outer_iterations;
    return j;
}

inline PilotArchive archive_from_json(const nlohmann::json& j)
{
    auto need = [&j](const char* field) -> const nlohmann::json& {
        if (!j.contains(field))
            throw ArchiveError(std::string("archive is missing field '") + field + "'");
        return j.at(field);
    };
    PilotArchive a;
    try {
        if (need("format") != kArchiveFormat)
            throw ArchiveError("archive field 'format' is not " + std::string(kArchiveFormat));
        const auto& meta = need("metadata");
        a.tool_version = meta.at("tool_version").get<std::string>();
        a.config_hash = meta.at("config_hash").get<std::string>();
        a.seed = meta.at("seed").get<std::uint64_t>();
        a.created_utc = meta.at("timestamps").at("created_utc").get<std::string>();
        a.wall_time_seconds = meta.at("timestamps").at("wall_time_seconds").get<double>();
        const auto& design = need("design");
        a.k = design.at("k").get<Index>();
        a.lags_from_one = design.at("lags_from_one").get<bool>();
        a.literal_transpose = design.at("literal_transpose").get<bool>();
        a.p_downlink = design.at("p_downlink").get<double>();
        a.p_uplink = design.at("p_uplink").get<double>();
        a.epsilon = design.at("epsilon").get<double>();
        a.pair.X = detail::matrix_from_json(need("X"), "X");
        a.pair.Y = detail::matrix_from_json(need("Y"), "Y");
        const auto& mse = need("final_mse");
        a.mse_total = mse.at("total").get<double>();
        a.mse_downlink = mse.at("downlink").get<double>();
        a.mse_uplink = mse.at("uplink").get<double>();
        const auto& res = need("residuals");
        a.max_cross = res.at("max_cross").get<double>();
        a.max_auto = res.at("max_auto").get<double>();
        a.max_power = res.at("max_power").get<double>();
        a.converged = need("converged").get<bool>();
        a.outer_iterations = need("outer_iterations").get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw ArchiveError(std::string("malformed archive: ") + e.what());
    }
    if (a.pair.X.rows() != a.pair.Y.rows())
        throw ArchiveError("archive field 'Y': rows (" + std::to_string(a.pair.Y.rows()) +
                           ") differ from X rows (" + std::to_string(a.pair.X.rows()) + ")");
    if (a.k < 0 || a.k >= a.pair.X.rows())
        throw ArchiveError("archive field 'design.k' is out of range for B = " + std::to_string(a.pair.X.rows()));
    return a;
}

inline std::string dump_archive(const PilotArchive& a)
{
    return to_json(a).dump(2) + "\n";
}

inline PilotArchive parse_archive(const std::string& text)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ArchiveError(std::string("archive is not valid JSON: ") + e.what());
    }
    return archive_from_json(j);
}

} // namespace comsens::cli
