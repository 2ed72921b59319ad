#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "resgrid/common.hpp"
#include "resgrid/rng.hpp"

namespace resgrid {

// ---------------------------------------------------------------------------
// Model parameter sets
// ---------------------------------------------------------------------------

/// Electrical and thermal characteristics of the PV installation.
struct PvPanelSpec {
    double ambient_temp_c = 30.0;
    double nominal_op_temp_c = 43.0;
    double volt_temp_coeff = 0.0144;  // V/degC
    double curr_temp_coeff = 0.00122; // A/degC
    double short_circuit_current = 5.32; // A
    double open_circuit_voltage = 21.98; // V
    double mpp_current = 4.76; // A
    double mpp_voltage = 17.32; // V
    int module_count = 1;

    double fill_factor() const {
        return (mpp_voltage * mpp_current) / (open_circuit_voltage * short_circuit_current);
    }

    void validate() const {
        if (short_circuit_current <= 0 || open_circuit_voltage <= 0 ||
            mpp_current <= 0 || mpp_voltage <= 0)
            throw ConfigError("pv_panel: electrical parameters must be > 0");
        if (mpp_current > short_circuit_current)
            throw ConfigError("pv_panel: mpp_current must not exceed short_circuit_current");
        if (mpp_voltage > open_circuit_voltage)
            throw ConfigError("pv_panel: mpp_voltage must not exceed open_circuit_voltage");
        if (module_count < 1)
            throw ConfigError("pv_panel: module_count must be a positive integer");
        double ff = fill_factor();
        if (!(ff > 0.0 && ff <= 1.0))
            throw ConfigError("pv_panel: fill factor outside (0, 1]");
    }
};

/// Beta-distributed solar irradiance fraction on [0, 1].
struct SolarModel {
    double alpha = 2.0;
    double beta = 2.0;

    void validate() const {
        if (!(alpha > 0.0) || !(beta > 0.0))
            throw ConfigError("solar: alpha and beta must be > 0");
    }
};

/// Power performance curve of the wind turbine.
struct WindTurbineSpec {
    double cut_in_speed = 4.0;   // m/s
    double rated_speed = 14.0;   // m/s
    double cut_off_speed = 25.0; // m/s
    double rated_power_kw = 1.0;

    void validate() const {
        if (!(cut_in_speed >= 0.0 && cut_in_speed < rated_speed && rated_speed < cut_off_speed))
            throw ConfigError("wind_turbine: require 0 <= cut_in < rated < cut_off");
        if (!(rated_power_kw > 0.0))
            throw ConfigError("wind_turbine: rated_power_kw must be > 0");
    }
};

/// Rayleigh-distributed wind speed; scale c = 1.128 * mean speed.
struct WindModel {
    double mean_speed = 6.0; // m/s

    double scale() const { return 1.128 * mean_speed; }

    void validate() const {
        if (!(mean_speed > 0.0))
            throw ConfigError("wind: mean_speed_mps must be > 0");
    }
};

/// Half-open interval [lo, hi); hi may be +inf for the last wind state.
struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double midpoint() const { return 0.5 * (lo + hi); }
};

/// One combined solar+wind generation state.
struct GenerationState {
    double power_kw = 0.0;
    double probability = 0.0;
};

/// Discretized joint generation states with probabilities summing to one.
struct GenerationStateTable {
    std::vector<GenerationState> states;
    double s_max_kw = 0.0;

    void validate() const {
        double total = 0.0;
        for (const auto& st : states) {
            if (st.power_kw < 0.0) throw ConfigError("state table: negative power");
            if (st.probability < 0.0) throw ConfigError("state table: negative probability");
            total += st.probability;
        }
        if (std::abs(total - 1.0) > 1e-6)
            throw ConfigError("state table: probabilities sum to " + std::to_string(total));
    }
};

// ---------------------------------------------------------------------------
// Densities and state probabilities
// ---------------------------------------------------------------------------

/// Standard Beta(alpha, beta) density over the open unit interval;
/// zero outside (0, 1).
inline double beta_pdf(double s, const SolarModel& model) {
    if (!std::isfinite(s)) throw std::domain_error("beta_pdf: non-finite irradiance fraction");
    if (s <= 0.0 || s >= 1.0) return 0.0;
    double log_norm = std::lgamma(model.alpha + model.beta) -
                      std::lgamma(model.alpha) - std::lgamma(model.beta);
    return std::exp(log_norm + (model.alpha - 1.0) * std::log(s) +
                    (model.beta - 1.0) * std::log(1.0 - s));
}

namespace detail {

// Adaptive Simpson with absolute tolerance. The integrand is evaluated at
// interval endpoints as given; a density that is singular at 0 or 1 must
// return a finite stand-in there (beta_pdf returns 0), and the recursion
// then resolves the boundary mass by subdivision.
template <typename F>
double adaptive_simpson_rec(const F& f, double a, double fa, double b, double fb,
                            double m, double fm, double whole, double tol, int depth) {
    double lm = 0.5 * (a + m);
    double rm = 0.5 * (m + b);
    double flm = f(lm);
    double frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return adaptive_simpson_rec(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson_rec(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

template <typename F>
double adaptive_simpson(const F& f, double a, double b, double tol) {
    if (b <= a) return 0.0;
    double m = 0.5 * (a + b);
    double fa = f(a);
    double fb = f(b);
    double fm = f(m);
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson_rec(f, a, fa, b, fb, m, fm, whole, tol, 60);
}

} // namespace detail

/// Probability that the irradiance fraction falls in [s1, s2], by adaptive
/// Simpson quadrature of the Beta density (absolute error <= 1e-8). A shape
/// parameter below one makes the density singular at the matching endpoint;
/// that side is integrated in the substituted variable u = s^alpha (resp.
/// v = (1-s)^beta), which turns the singular factor into the measure and
/// leaves a bounded integrand.
inline double solar_state_prob(double s1, double s2, const SolarModel& model) {
    if (!std::isfinite(s1) || std::isnan(s2))
        throw std::domain_error("solar_state_prob: non-finite bound");
    if (s1 > s2) throw std::domain_error("solar_state_prob: s1 > s2");
    double lo = std::max(s1, 0.0);
    double hi = std::min(s2, 1.0);
    if (hi <= lo) return 0.0;

    const double tol = 1e-9;
    double norm = std::exp(std::lgamma(model.alpha + model.beta) - std::lgamma(model.alpha) -
                           std::lgamma(model.beta));
    auto pdf = [&](double s) { return beta_pdf(s, model); };

    double total = 0.0;
    double left_hi = std::min(hi, 0.5);
    if (left_hi > lo) {
        if (model.alpha < 1.0) {
            double inv = 1.0 / model.alpha;
            auto regular = [&](double u) {
                return norm * inv * std::pow(1.0 - std::pow(u, inv), model.beta - 1.0);
            };
            total += detail::adaptive_simpson(regular, std::pow(lo, model.alpha),
                                              std::pow(left_hi, model.alpha), tol);
        } else {
            total += detail::adaptive_simpson(pdf, lo, left_hi, tol);
        }
    }
    double right_lo = std::max(lo, 0.5);
    if (hi > right_lo) {
        if (model.beta < 1.0) {
            double inv = 1.0 / model.beta;
            auto regular = [&](double v) {
                return norm * inv * std::pow(1.0 - std::pow(v, inv), model.alpha - 1.0);
            };
            total += detail::adaptive_simpson(regular, std::pow(1.0 - hi, model.beta),
                                              std::pow(1.0 - right_lo, model.beta), tol);
        } else {
            total += detail::adaptive_simpson(pdf, right_lo, hi, tol);
        }
    }
    return total;
}

/// Probability that the wind speed falls in [v1, v2]; closed-form Rayleigh CDF.
inline double rayleigh_state_prob(double v1, double v2, const WindModel& model) {
    if (std::isnan(v1) || std::isnan(v2) || v1 < 0.0)
        throw std::domain_error("rayleigh_state_prob: bad speed bound");
    if (v1 > v2) throw std::domain_error("rayleigh_state_prob: v1 > v2");
    double c = model.scale();
    double lo = v1 / c;
    double upper = std::isinf(v2) ? 0.0 : std::exp(-(v2 / c) * (v2 / c));
    return std::exp(-lo * lo) - upper;
}

// ---------------------------------------------------------------------------
// Device power conversion
// ---------------------------------------------------------------------------

/// PV output at the state's average irradiance fraction. The cell heats with
/// irradiance, current scales with irradiance and temperature, voltage drops
/// with temperature; module volt-amp output is converted to kW and clamped
/// at zero (a panel never sinks power).
inline double pv_output_power(double s_ay, const PvPanelSpec& spec) {
    if (!(s_ay >= 0.0)) throw std::domain_error("pv_output_power: irradiance must be >= 0");
    double cell_temp = spec.ambient_temp_c + s_ay * (spec.nominal_op_temp_c - 20.0) / 0.8;
    double current = s_ay * (spec.short_circuit_current +
                             spec.curr_temp_coeff * (cell_temp - 25.0));
    double voltage = spec.open_circuit_voltage - spec.volt_temp_coeff * cell_temp;
    double watts = spec.module_count * spec.fill_factor() * voltage * current;
    return std::max(watts, 0.0) / 1000.0;
}

/// Turbine power curve: zero below cut-in, linear ramp to rated, flat to
/// cut-off, zero beyond.
inline double wind_output_power(double v_aw, const WindTurbineSpec& spec) {
    if (!(v_aw >= 0.0)) throw std::domain_error("wind_output_power: speed must be >= 0");
    if (v_aw < spec.cut_in_speed) return 0.0;
    if (v_aw <= spec.rated_speed)
        return spec.rated_power_kw * (v_aw - spec.cut_in_speed) /
               (spec.rated_speed - spec.cut_in_speed);
    if (v_aw <= spec.cut_off_speed) return spec.rated_power_kw;
    return 0.0;
}

// ---------------------------------------------------------------------------
// Joint state table and the supply process
// ---------------------------------------------------------------------------

namespace detail {

inline void check_partition(const std::vector<Interval>& bounds, double lo, double hi,
                            bool open_tail, const char* what) {
    if (bounds.empty()) throw ConfigError(std::string(what) + ": empty state bounds");
    const double tol = 1e-12;
    if (std::abs(bounds.front().lo - lo) > tol)
        throw ConfigError(std::string(what) + ": first interval must start at " + std::to_string(lo));
    for (std::size_t i = 0; i < bounds.size(); ++i) {
        bool last = (i + 1 == bounds.size());
        double exp_hi = last ? hi : bounds[i + 1].lo;
        if (!(bounds[i].hi > bounds[i].lo))
            throw ConfigError(std::string(what) + ": intervals must have positive width");
        if (last && open_tail) {
            if (!std::isinf(bounds[i].hi))
                throw ConfigError(std::string(what) + ": final interval must be open to +inf");
        } else if (std::abs(bounds[i].hi - exp_hi) > tol) {
            throw ConfigError(std::string(what) + ": intervals do not form a partition");
        }
    }
}

} // namespace detail

/// Build the joint solar x wind state table. Solar and wind states are
/// independent, so each pair's probability is the product of the marginals;
/// the pair's power is the sum of the two device outputs at the state
/// midpoints. Probabilities are renormalized to absorb quadrature error.
inline GenerationStateTable build_state_table(const std::vector<Interval>& solar_bounds,
                                              const std::vector<Interval>& wind_bounds,
                                              const SolarModel& solar, const WindModel& wind,
                                              const PvPanelSpec& pv, const WindTurbineSpec& turbine,
                                              double s_max_kw) {
    solar.validate();
    wind.validate();
    pv.validate();
    turbine.validate();
    detail::check_partition(solar_bounds, 0.0, 1.0, false, "solar_bounds");
    detail::check_partition(wind_bounds, 0.0,
                            std::numeric_limits<double>::infinity(), true, "wind_bounds");

    std::vector<double> solar_prob, solar_power;
    for (const auto& iv : solar_bounds) {
        solar_prob.push_back(solar_state_prob(iv.lo, iv.hi, solar));
        solar_power.push_back(pv_output_power(iv.midpoint(), pv));
    }
    std::vector<double> wind_prob, wind_power;
    for (const auto& iv : wind_bounds) {
        wind_prob.push_back(rayleigh_state_prob(iv.lo, iv.hi, wind));
        // The open tail has no finite midpoint; any speed beyond cut-off
        // yields zero power, so a nominal point just past cut-off stands in.
        double mid = std::isinf(iv.hi) ? turbine.cut_off_speed + 1.0 : iv.midpoint();
        wind_power.push_back(wind_output_power(mid, turbine));
    }

    GenerationStateTable table;
    table.s_max_kw = s_max_kw;
    double total = 0.0;
    for (std::size_t y = 0; y < solar_bounds.size(); ++y) {
        for (std::size_t w = 0; w < wind_bounds.size(); ++w) {
            GenerationState st;
            st.probability = solar_prob[y] * wind_prob[w];
            st.power_kw = solar_power[y] + wind_power[w];
            total += st.probability;
            table.states.push_back(st);
        }
    }
    if (!(total > 0.0))
        throw ConfigError("state table: total probability is zero");
    for (auto& st : table.states) st.probability /= total;
    table.validate();
    return table;
}

enum class SupplyMode { expected, sampled };

/// Renewable supply for one slot: either the probability-weighted mean of
/// the state powers, or one state drawn by inverse-CDF. Clamped to
/// [0, s_max_kw].
inline double supply(const GenerationStateTable& table, SupplyMode mode, Rng& rng) {
    double value = 0.0;
    if (mode == SupplyMode::expected) {
        for (const auto& st : table.states) value += st.power_kw * st.probability;
    } else {
        double u = uniform01(rng);
        double cum = 0.0;
        value = table.states.empty() ? 0.0 : table.states.back().power_kw;
        for (const auto& st : table.states) {
            cum += st.probability;
            if (u < cum) {
                value = st.power_kw;
                break;
            }
        }
    }
    return std::min(std::max(value, 0.0), table.s_max_kw);
}

/// Intervals from a sorted edge list; appends the open (last, +inf) tail
/// when requested (wind partitions).
inline std::vector<Interval> intervals_from_edges(const std::vector<double>& edges,
                                                  bool open_tail) {
    if (edges.size() < 2) throw ConfigError("state_bounds: need at least two edges");
    std::vector<Interval> out;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i)
        out.push_back({edges[i], edges[i + 1]});
    if (open_tail)
        out.push_back({edges.back(), std::numeric_limits<double>::infinity()});
    return out;
}

} // namespace resgrid
