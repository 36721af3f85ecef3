// Correlation reports, Monte-Carlo design statistics and empirical MSE checks.

#pragma once

#include "comsens/correlation.hpp"
#include "comsens/designer.hpp"
#include "comsens/estimation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace comsens {

/// dB floor used for exact zeros.
inline constexpr double kZeroDb = -300.0;

inline double magnitude_db(double magnitude)
{
    if (!(magnitude > 0.0))
        return kZeroDb;
    return std::max(kZeroDb, 20.0 * std::log10(magnitude));
}

enum class CorrelationKind { autocorrelation, crosscorrelation };

inline const char* to_string(CorrelationKind kind)
{
    return kind == CorrelationKind::autocorrelation ? "auto" : "cross";
}

struct CorrelationEntry {
    CorrelationKind kind;
    Index q;   ///< downlink (X) column
    Index l;   ///< uplink (Y) column for cross entries, equal to q for auto entries
    Index lag;
    cplx value;
    double magnitude_db;
};

/// Auto-correlations x_q^H J_i x_q and cross-correlations x_q^H J_i y_l for |i| <= max_lag.
class CorrelationReport {
public:
    CorrelationReport(Index n_t, Index n_r, Index max_lag, CorrelationConvention convention)
        : n_t_(n_t), n_r_(n_r), max_lag_(max_lag), convention_(convention)
    {
    }

    Index n_t() const { return n_t_; }
    Index n_r() const { return n_r_; }
    Index max_lag() const { return max_lag_; }
    CorrelationConvention convention() const { return convention_; }
    const std::vector<CorrelationEntry>& entries() const { return entries_; }

    cplx autocorr(Index q, Index lag) const { return entries_.at(auto_index(q, lag)).value; }
    cplx crosscorr(Index q, Index l, Index lag) const { return entries_.at(cross_index(q, l, lag)).value; }

    /// Largest |cross| over lags in [from, to].
    double max_cross_magnitude(Index from, Index to) const
    {
        double worst = 0.0;
        for (const auto& e : entries_)
            if (e.kind == CorrelationKind::crosscorrelation && e.lag >= from && e.lag <= to)
                worst = std::max(worst, std::abs(e.value));
        return worst;
    }

    void push(CorrelationEntry e) { entries_.push_back(e); }

private:
    std::size_t lag_slot(Index lag) const { return static_cast<std::size_t>(lag + max_lag_); }
    std::size_t span() const { return static_cast<std::size_t>(2 * max_lag_ + 1); }
    std::size_t auto_index(Index q, Index lag) const
    {
        check(q, 0, lag);
        return static_cast<std::size_t>(q) * span() + lag_slot(lag);
    }
    std::size_t cross_index(Index q, Index l, Index lag) const
    {
        check(q, l, lag);
        return static_cast<std::size_t>(n_t_) * span() + (static_cast<std::size_t>(q * n_r_ + l)) * span() +
               lag_slot(lag);
    }
    void check(Index q, Index l, Index lag) const
    {
        if (q < 0 || q >= n_t_ || l < 0 || l >= n_r_ || lag < -max_lag_ || lag > max_lag_)
            throw std::out_of_range("CorrelationReport: index out of range");
    }

    Index n_t_;
    Index n_r_;
    Index max_lag_;
    CorrelationConvention convention_;
    std::vector<CorrelationEntry> entries_;
};

/// Entries are ordered: all auto series (q, lag ascending), then all cross series (q, l, lag ascending).
inline CorrelationReport correlation_report(const PilotPair& pair, Index max_lag,
                                            CorrelationConvention convention = CorrelationConvention::hermitian)
{
    const Index b = pair.X.rows();
    if (pair.Y.rows() != b)
        throw DimensionError("correlation_report: X and Y have different training lengths");
    if (max_lag < 0 || max_lag >= b)
        throw std::invalid_argument("correlation_report: max_lag = " + std::to_string(max_lag) +
                                    " must satisfy 0 <= max_lag < B = " + std::to_string(b));
    CorrelationReport report(pair.X.cols(), pair.Y.cols(), max_lag, convention);
    for (Index q = 0; q < pair.X.cols(); ++q)
        for (Index lag = -max_lag; lag <= max_lag; ++lag) {
            const cplx v = correlate(pair.X.col(q), lag, pair.X.col(q), convention);
            report.push({CorrelationKind::autocorrelation, q, q, lag, v, magnitude_db(std::abs(v))});
        }
    for (Index q = 0; q < pair.X.cols(); ++q)
        for (Index l = 0; l < pair.Y.cols(); ++l)
            for (Index lag = -max_lag; lag <= max_lag; ++lag) {
                const cplx v = correlate(pair.X.col(q), lag, pair.Y.col(l), convention);
                report.push({CorrelationKind::crosscorrelation, q, l, lag, v, magnitude_db(std::abs(v))});
            }
    return report;
}

/// Per-antenna sidelobe level: max over lags 1..k of |r(lag)| / r(0), in dB. -300 dB for a zero column.
inline std::vector<double> sidelobe_levels_db(const CorrelationReport& report, Index k)
{
    std::vector<double> levels;
    for (Index q = 0; q < report.n_t(); ++q) {
        const double main = std::abs(report.autocorr(q, 0));
        double worst = 0.0;
        for (Index lag = 1; lag <= std::min(k, report.max_lag()); ++lag)
            worst = std::max(worst, std::abs(report.autocorr(q, lag)));
        levels.push_back(main > 0.0 ? magnitude_db(worst / main) : kZeroDb);
    }
    return levels;
}

struct MonteCarloSummary {
    int runs = 0;
    int failed_runs = 0;
    int converged_runs = 0;
    std::vector<double> mse_mean_per_iteration;
    std::vector<double> mse_std_per_iteration;
    std::vector<double> per_run_final_mse;
    std::vector<DesignResult> results; ///< successful runs, in seed order
    std::vector<std::string> failures;
};

namespace detail {

// Pairwise summation keeps the aggregate independent of how runs were scheduled.
inline double pairwise_sum(const double* data, std::size_t n)
{
    if (n == 0)
        return 0.0;
    if (n <= 8) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            acc += data[i];
        return acc;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(data, half) + pairwise_sum(data + half, n - half);
}

} // namespace detail

/// Runs design_pilots with seeds cfg.seed + 0 .. runs - 1 and aggregates the MSE traces.
///
/// Traces shorter than the longest one are padded with their final value.
inline MonteCarloSummary monte_carlo_design(const ChannelScenario& dl, const ChannelScenario& ul,
                                            const DesignConfig& cfg, int runs, unsigned threads = 0)
{
    if (runs < 1)
        throw std::invalid_argument("monte_carlo_design: runs must be >= 1");
    cfg.validate(dl.b);
    if (threads == 0)
        threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(runs));

    std::vector<std::optional<DesignResult>> slots(static_cast<std::size_t>(runs));
    std::vector<std::string> errors(static_cast<std::size_t>(runs));
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int i = next++; i < runs; i = next++) {
            DesignConfig run_cfg = cfg;
            run_cfg.seed = cfg.seed + static_cast<std::uint64_t>(i);
            try {
                slots[static_cast<std::size_t>(i)] = design_pilots(dl, ul, run_cfg);
            } catch (const std::exception& e) {
                errors[static_cast<std::size_t>(i)] = e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < threads; ++t)
        pool.emplace_back(worker);
    worker();
    for (auto& t : pool)
        t.join();

    MonteCarloSummary summary;
    summary.runs = runs;
    for (int i = 0; i < runs; ++i) {
        auto& slot = slots[static_cast<std::size_t>(i)];
        if (!slot) {
            ++summary.failed_runs;
            summary.failures.push_back("seed " + std::to_string(cfg.seed + static_cast<std::uint64_t>(i)) + ": " +
                                       errors[static_cast<std::size_t>(i)]);
            continue;
        }
        summary.converged_runs += slot->converged ? 1 : 0;
        summary.per_run_final_mse.push_back(slot->trace.mse.back());
        summary.results.push_back(std::move(*slot));
    }
    if (summary.results.empty())
        return summary;

    std::size_t length = 0;
    for (const auto& r : summary.results)
        length = std::max(length, r.trace.mse.size());
    const std::size_t n = summary.results.size();
    std::vector<double> column(n);
    std::vector<double> deviations(n);
    for (std::size_t it = 0; it < length; ++it) {
        for (std::size_t r = 0; r < n; ++r) {
            const auto& mse = summary.results[r].trace.mse;
            column[r] = it < mse.size() ? mse[it] : mse.back();
        }
        const double mean = detail::pairwise_sum(column.data(), n) / static_cast<double>(n);
        for (std::size_t r = 0; r < n; ++r)
            deviations[r] = (column[r] - mean) * (column[r] - mean);
        const double var = n > 1 ? detail::pairwise_sum(deviations.data(), n) / static_cast<double>(n - 1) : 0.0;
        summary.mse_mean_per_iteration.push_back(mean);
        summary.mse_std_per_iteration.push_back(std::sqrt(var));
    }
    return summary;
}

struct EmpiricalMse {
    double mean = 0.0;
    double stderr_ = 0.0;
    bool stderr_defined = false; ///< false for a single trial, where stderr_ is reported as 0
    int trials = 0;
};

/// Average of ||H^ - H||_F^2 over simulated training blocks.
inline EmpiricalMse empirical_mse(const PilotMatrix& p, const ChannelScenario& s, int trials, std::uint64_t seed)
{
    if (trials < 1)
        throw std::invalid_argument("empirical_mse: trials must be >= 1");
    const TrainingSimulator simulator(s);
    const ComplexMatrix gain = mmse_gain(p, s);
    std::mt19937_64 rng(seed);
    std::vector<double> errors(static_cast<std::size_t>(trials));
    for (int t = 0; t < trials; ++t) {
        const TrainingRealization draw = simulator.draw(p, rng);
        const ComplexVector estimate = gain * draw.Yrx.reshaped();
        errors[static_cast<std::size_t>(t)] = (estimate - draw.H.reshaped()).squaredNorm();
    }
    EmpiricalMse out;
    out.trials = trials;
    out.mean = detail::pairwise_sum(errors.data(), errors.size()) / trials;
    if (trials > 1) {
        for (double& e : errors)
            e = (e - out.mean) * (e - out.mean);
        const double var = detail::pairwise_sum(errors.data(), errors.size()) / (trials - 1);
        out.stderr_ = std::sqrt(var / trials);
        out.stderr_defined = true;
    }
    return out;
}

} // namespace comsens
