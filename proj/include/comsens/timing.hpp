// TDD timing budget and radar range of the shared pilot scheme.
//
// The base station hears the user's reply at t1 = t_mod + 2 t_user + t_pr and the object echo at
// t2 = t_mod + 2 t_object (symbols). The echo stays separable while t2 - t1 <= k, which gives
//   t_object - t_user <= (t_pr + k) / 2   and   d_object <= d_user + nu T_s (t_pr + k) / 2.
// t_mod cancels and is carried for reporting only.

#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace comsens {

struct TimingScenario {
    double d_user = 25e3;            ///< meters
    std::optional<double> d_object;  ///< meters
    double symbol_time = 25e-6;      ///< T_s, seconds
    double t_pr = 1.0;               ///< processing time, symbols
    double k = 4.0;                  ///< zero-correlation-zone depth, symbols
    double nu = 3e8;                 ///< propagation speed, m/s
    double t_mod = 0.0;              ///< modulation/transmission time, symbols

    void validate() const
    {
        if (!(d_user > 0.0) || !(symbol_time > 0.0) || !(nu > 0.0))
            throw std::invalid_argument("TimingScenario: d_user, symbol_time and nu must be > 0");
        if (!(t_pr >= 0.0) || !(k >= 0.0) || !(t_mod >= 0.0))
            throw std::invalid_argument("TimingScenario: t_pr, k and t_mod must be >= 0");
        if (d_object && !(*d_object > 0.0))
            throw std::invalid_argument("TimingScenario: d_object must be > 0");
    }
};

/// One-way propagation delay in symbols.
inline double delay_symbols(double distance, double symbol_time, double nu)
{
    if (!(distance > 0.0) || !(symbol_time > 0.0) || !(nu > 0.0))
        throw std::invalid_argument("delay_symbols: distance, symbol time and speed must be > 0");
    return distance / (nu * symbol_time);
}

inline double max_object_range(const TimingScenario& s)
{
    s.validate();
    return s.d_user + s.nu * s.symbol_time * (s.t_pr + s.k) / 2.0;
}

struct Feasibility {
    bool feasible = false;
    double slack_symbols = 0.0; ///< (t_pr + k) / 2 minus the bounded delay difference
    double user_delay = 0.0;
    double object_delay = 0.0;
    double t1 = 0.0; ///< user reply arrival, symbols
    double t2 = 0.0; ///< echo arrival, symbols
};

/// Checks the echo/reply separation condition.
///
/// By default bounds object-minus-user delay, the direction consistent with the range formula;
/// literal_direction bounds user-minus-object instead.
inline Feasibility is_sensing_feasible(const TimingScenario& s, bool literal_direction = false)
{
    s.validate();
    if (!s.d_object)
        throw std::invalid_argument("is_sensing_feasible: d_object is required");
    Feasibility f;
    f.user_delay = delay_symbols(s.d_user, s.symbol_time, s.nu);
    f.object_delay = delay_symbols(*s.d_object, s.symbol_time, s.nu);
    f.t1 = s.t_mod + 2.0 * f.user_delay + s.t_pr;
    f.t2 = s.t_mod + 2.0 * f.object_delay;
    const double difference = literal_direction ? f.user_delay - f.object_delay : f.object_delay - f.user_delay;
    f.slack_symbols = (s.t_pr + s.k) / 2.0 - difference;
    f.feasible = f.slack_symbols >= -1e-12;
    return f;
}

} // namespace comsens
