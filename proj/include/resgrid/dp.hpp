#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "resgrid/common.hpp"
#include "resgrid/lyapunov.hpp"

namespace resgrid {

// ---------------------------------------------------------------------------
// Discretization
// ---------------------------------------------------------------------------

/// Discretization of the perfect-information problem: queue levels with
/// uniform step q_step, controls on a u_step grid. q_cap <= 0 means size the
/// level range from the trace (start level plus all arrivals).
struct DpGrid {
    double q_step = 0.25;
    double u_step = 0.25;
    double q_cap = -1.0;
    int horizon = 1;

    void validate() const {
        if (!(q_step > 0.0)) throw ConfigError("dp.q_step must be > 0");
        if (!(u_step > 0.0)) throw ConfigError("dp.u_step must be > 0");
        if (horizon < 1) throw ConfigError("dp.horizon must be >= 1");
    }
};

struct DpControl {
    double grid_shiftable = 0.0;
    double renew_shiftable = 0.0;
};

/// Cost-to-go per (slot, queue level) plus the argmin control per cell.
/// cost_to_go has horizon+1 slices; slice [horizon] is the terminal penalty.
struct ValueTable {
    std::vector<double> q_levels;
    double q_step = 1.0;
    std::vector<std::vector<double>> cost_to_go;
    std::vector<std::vector<DpControl>> best;
    double terminal_penalty_rate = 0.0; // cents per kWh of unserved backlog

    double initial_cost(double q0) const;
};

namespace dpdetail {

inline std::size_t level_count(const std::vector<SlotObservation>& trace, const DpGrid& grid,
                               double q0) {
    double cap = grid.q_cap;
    if (cap <= 0.0) {
        cap = std::max(q0, 0.0);
        for (const auto& obs : trace) cap += obs.arrivals;
    }
    return static_cast<std::size_t>(std::floor(cap / grid.q_step + 1e-9)) + 1;
}

/// Nearest queue level, ties toward zero, clamped to the table range.
inline std::size_t queue_index(double q, double q_step, std::size_t n_levels) {
    double r = q / q_step;
    double lo = std::floor(r);
    double frac = r - lo;
    double idx = (frac > 0.5 + 1e-9) ? lo + 1.0 : lo;
    if (idx <= 0.0) return 0;
    std::size_t i = static_cast<std::size_t>(idx);
    return i >= n_levels ? n_levels - 1 : i;
}

/// Slot cost for a fixed essential split and queue controls. Both the DP
/// recursion and the enumeration oracle must call this exact expression so
/// that their results agree bitwise on exactly representable instances.
inline double slot_cost(const SlotObservation& obs, const EssentialSplit& split,
                        double grid_shift, double renew_shift) {
    return obs.buy_price * (split.grid + grid_shift) -
           obs.sell_price * (obs.supply - split.renew - renew_shift);
}

inline void check_trace_feasible(const std::vector<SlotObservation>& trace) {
    for (std::size_t t = 0; t < trace.size(); ++t) {
        const auto& obs = trace[t];
        if (obs.essential > obs.supply + obs.grid_cap + kBalanceTol)
            throw InfeasibleScenarioError(
                static_cast<int>(t),
                "slot " + std::to_string(t) + ": essential demand exceeds supply plus grid cap");
    }
}

struct SlotControls {
    EssentialSplit split;
    long grid_steps = 0;  // grid_shiftable in {0..grid_steps} * u_step
    long renew_steps = 0; // renew_shiftable in {0..renew_steps} * u_step
};

inline SlotControls slot_controls(const SlotObservation& obs, const DpGrid& grid) {
    SlotControls sc;
    sc.split = stage1_essential(obs);
    Residuals res = stage2_residuals(obs, sc.split);
    sc.grid_steps = static_cast<long>(std::floor(res.grid_avail / grid.u_step + 1e-9));
    sc.renew_steps = static_cast<long>(std::floor(res.renew_avail / grid.u_step + 1e-9));
    return sc;
}

} // namespace dpdetail

inline double ValueTable::initial_cost(double q0) const {
    return cost_to_go.front()[dpdetail::queue_index(q0, q_step, q_levels.size())];
}

// ---------------------------------------------------------------------------
// Backward recursion
// ---------------------------------------------------------------------------

/// Backward sweep over the realized trace. State is the queue level; per
/// slot the essential split is the stage-I closed form (separable, exact),
/// so only the queue controls are searched. Service never exceeds the
/// backlog, and cost for a given total served is minimized at an endpoint
/// split between grid and renewable, so only the two endpoint splits per
/// served amount are candidates. Terminal backlog is charged at the highest
/// buy price seen in the trace.
inline ValueTable solve_backward(const std::vector<SlotObservation>& trace, const DpGrid& grid,
                                 double q0 = 0.0, double terminal_rate = -1.0) {
    grid.validate();
    if (trace.empty()) throw std::invalid_argument("solve_backward: empty trace");
    if (static_cast<std::size_t>(grid.horizon) != trace.size())
        throw std::invalid_argument("solve_backward: grid.horizon does not match trace length");
    dpdetail::check_trace_feasible(trace);

    const std::size_t horizon = trace.size();
    const std::size_t n_levels = dpdetail::level_count(trace, grid, q0);

    ValueTable table;
    table.q_step = grid.q_step;
    table.q_levels.resize(n_levels);
    for (std::size_t i = 0; i < n_levels; ++i) table.q_levels[i] = grid.q_step * i;
    if (terminal_rate >= 0.0) {
        table.terminal_penalty_rate = terminal_rate;
    } else {
        // default: unserved backlog is charged at the trace's highest buy price
        for (const auto& obs : trace)
            table.terminal_penalty_rate = std::max(table.terminal_penalty_rate, obs.buy_price);
    }

    table.cost_to_go.assign(horizon + 1, std::vector<double>(n_levels, 0.0));
    table.best.assign(horizon, std::vector<DpControl>(n_levels));
    for (std::size_t i = 0; i < n_levels; ++i)
        table.cost_to_go[horizon][i] = table.terminal_penalty_rate * table.q_levels[i];

    for (std::size_t t = horizon; t-- > 0;) {
        const SlotObservation& obs = trace[t];
        const auto sc = dpdetail::slot_controls(obs, grid);
        const std::vector<double>& next = table.cost_to_go[t + 1];
        std::vector<double>& cur = table.cost_to_go[t];
        std::vector<DpControl>& arg = table.best[t];
        for (std::size_t qi = 0; qi < n_levels; ++qi) {
            const double q = table.q_levels[qi];
            const long served_cap = static_cast<long>(std::floor(q / grid.u_step + 1e-9));
            const long max_served = std::min(served_cap, sc.grid_steps + sc.renew_steps);
            double best_value = std::numeric_limits<double>::infinity();
            DpControl best_u;
            // descending service keeps the largest equal-cost service amount,
            // so a slot that is indifferent between serving now and later
            // drains the queue instead of deferring forever
            for (long j = max_served; j >= 0; --j) {
                double served = grid.u_step * j;
                std::size_t ni = dpdetail::queue_index(
                    std::max(q - served, 0.0) + obs.arrivals, grid.q_step, n_levels);
                double tail = next[ni];
                // endpoint splits of j units between grid and renewable
                long a_lo = std::max(0L, j - sc.renew_steps);
                long a_hi = std::min(j, sc.grid_steps);
                for (long a : {a_lo, a_hi}) {
                    double g = grid.u_step * a;
                    double s = grid.u_step * (j - a);
                    double value = dpdetail::slot_cost(obs, sc.split, g, s) + tail;
                    if (value < best_value) {
                        best_value = value;
                        best_u = {g, s};
                    }
                    if (a_lo == a_hi) break;
                }
            }
            cur[qi] = best_value;
            arg[qi] = best_u;
        }
    }
    return table;
}

// ---------------------------------------------------------------------------
// Exhaustive enumeration oracle
// ---------------------------------------------------------------------------

namespace dpdetail {

inline double enumerate_rec(const std::vector<SlotObservation>& trace,
                            const std::vector<SlotControls>& controls, const DpGrid& grid,
                            const std::vector<double>& q_levels, double terminal_rate,
                            std::size_t t, std::size_t qi) {
    if (t == trace.size()) return terminal_rate * q_levels[qi];
    const SlotObservation& obs = trace[t];
    const SlotControls& sc = controls[t];
    const double q = q_levels[qi];
    double best = std::numeric_limits<double>::infinity();
    for (long a = 0; a <= sc.grid_steps; ++a) {
        for (long b = 0; b <= sc.renew_steps; ++b) {
            double g = grid.u_step * a;
            double s = grid.u_step * b;
            if (g + s > q + kBalanceTol) break; // service cannot exceed backlog
            std::size_t ni = queue_index(std::max(q - (grid.u_step * (a + b)), 0.0) + obs.arrivals,
                                         grid.q_step, q_levels.size());
            double value = slot_cost(obs, sc.split, g, s) +
                           enumerate_rec(trace, controls, grid, q_levels, terminal_rate, t + 1, ni);
            if (value < best) best = value;
        }
    }
    return best;
}

} // namespace dpdetail

/// Brute-force minimum over every discretized control sequence, with the
/// same transition, service-cap and terminal rules as solve_backward.
/// Intended for tiny validation instances only.
inline double enumerate_oracle(const std::vector<SlotObservation>& trace, const DpGrid& grid,
                               double q0 = 0.0, double terminal_rate = -1.0) {
    grid.validate();
    if (trace.empty()) throw std::invalid_argument("enumerate_oracle: empty trace");
    if (trace.size() > 5)
        throw std::length_error("enumerate_oracle: horizon exceeds 5 slots");
    dpdetail::check_trace_feasible(trace);

    std::vector<dpdetail::SlotControls> controls;
    double combos = 1.0;
    for (const auto& obs : trace) {
        controls.push_back(dpdetail::slot_controls(obs, grid));
        combos *= static_cast<double>(controls.back().grid_steps + 1) *
                  static_cast<double>(controls.back().renew_steps + 1);
    }
    if (combos > 1e7)
        throw std::length_error("enumerate_oracle: control combinations exceed 1e7");

    const std::size_t n_levels = dpdetail::level_count(trace, grid, q0);
    std::vector<double> q_levels(n_levels);
    for (std::size_t i = 0; i < n_levels; ++i) q_levels[i] = grid.q_step * i;
    if (terminal_rate < 0.0) {
        terminal_rate = 0.0;
        for (const auto& obs : trace) terminal_rate = std::max(terminal_rate, obs.buy_price);
    }

    std::size_t q0i = dpdetail::queue_index(q0, grid.q_step, n_levels);
    return dpdetail::enumerate_rec(trace, controls, grid, q_levels, terminal_rate, 0, q0i);
}

// ---------------------------------------------------------------------------
// Forward rollout of the DP policy
// ---------------------------------------------------------------------------

struct RolloutStep {
    Dispatch dispatch;
    double queue_after = 0.0; // grid-level backlog after service and arrivals
    double cost = 0.0;
};

struct RolloutResult {
    std::vector<RolloutStep> steps;
    double total_cost = 0.0;          // plain sum of slot costs
    double cost_with_terminal = 0.0;  // total_cost + terminal backlog penalty
    double terminal_backlog = 0.0;
    bool queue_clamped = false;       // backlog hit the top grid level
};

/// Apply the DP argmin controls forward along the trace from q0. The queue
/// follows the same grid-rounded dynamics as the recursion, so
/// cost_with_terminal reproduces the table's initial cost-to-go up to
/// floating-point summation order.
inline RolloutResult rollout(const ValueTable& table, const std::vector<SlotObservation>& trace,
                             const DpGrid& grid, double q0 = 0.0) {
    if (trace.size() != table.best.size())
        throw std::invalid_argument("rollout: trace length does not match value table");
    RolloutResult out;
    std::size_t qi = dpdetail::queue_index(q0, grid.q_step, table.q_levels.size());
    for (std::size_t t = 0; t < trace.size(); ++t) {
        const SlotObservation& obs = trace[t];
        EssentialSplit split = stage1_essential(obs);
        DpControl u = table.best[t][qi];
        RolloutStep step;
        step.dispatch.grid_essential = split.grid;
        step.dispatch.renew_essential = split.renew;
        step.dispatch.grid_shiftable = u.grid_shiftable;
        step.dispatch.renew_shiftable = u.renew_shiftable;
        step.dispatch.renew_sold = obs.supply - split.renew - u.renew_shiftable;
        step.cost = dpdetail::slot_cost(obs, split, u.grid_shiftable, u.renew_shiftable);
        check_dispatch(step.dispatch, obs);

        double q = table.q_levels[qi];
        double next_q = std::max(q - (u.grid_shiftable + u.renew_shiftable), 0.0) + obs.arrivals;
        if (next_q > table.q_levels.back() + 0.5 * grid.q_step) out.queue_clamped = true;
        qi = dpdetail::queue_index(next_q, grid.q_step, table.q_levels.size());
        step.queue_after = table.q_levels[qi];
        out.total_cost += step.cost;
        out.steps.push_back(step);
    }
    out.terminal_backlog = table.q_levels[qi];
    out.cost_with_terminal = out.total_cost + table.terminal_penalty_rate * out.terminal_backlog;
    return out;
}

} // namespace resgrid
