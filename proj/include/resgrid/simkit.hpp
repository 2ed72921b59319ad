#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "resgrid/common.hpp"
#include "resgrid/dp.hpp"
#include "resgrid/lyapunov.hpp"
#include "resgrid/market.hpp"
#include "resgrid/renewgen.hpp"
#include "resgrid/rng.hpp"

namespace resgrid {

enum class Policy { bts_lo, bts_dp, pos };

inline const char* to_string(Policy p) {
    switch (p) {
        case Policy::bts_lo: return "bts_lo";
        case Policy::bts_dp: return "bts_dp";
        case Policy::pos: return "pos";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Scenario
// ---------------------------------------------------------------------------

struct ScenarioConfig {
    int n_households = 1;
    int horizon = 24;
    std::uint64_t seed = 1;
    double grid_cap = 10.0;   // G_max, kWh per slot
    double supply_cap = 5.0;  // S_max, kWh per slot
    SupplyMode supply_mode = SupplyMode::sampled;
    LyapunovParams params;
    PriceSchedule prices;
    SolarModel solar;
    WindModel wind;
    PvPanelSpec pv;
    WindTurbineSpec turbine;
    std::vector<Interval> solar_bounds;
    std::vector<Interval> wind_bounds;
    std::vector<Household> households; // already replicated per household
    DpGrid dp; // horizon filled in at run time

    void validate() const {
        if (n_households < 1) throw ConfigError("scenario.n_households must be >= 1");
        if (horizon < 1) throw ConfigError("scenario.horizon_slots must be >= 1");
        if (!(grid_cap > 0.0)) throw ConfigError("scenario.g_max_kwh must be > 0");
        if (supply_cap < 0.0) throw ConfigError("scenario.s_max_kwh must be >= 0");
        params.validate();
        prices.validate();
        for (const auto& hh : households) hh.validate();
    }

    /// Mean aggregate shiftable arrival rate; the default virtual-queue
    /// growth rate when none is configured.
    double mean_arrival_rate() const {
        double rate = 0.0;
        for (const auto& hh : households) rate += 0.5 * hh.shiftable_max_per_slot;
        return rate;
    }
};

/// Seeded per-slot inputs shared by every policy on the same scenario+seed.
struct Trace {
    std::vector<SlotObservation> slots;
    GenerationStateTable table;
    DemandTrace demand;
};

// sub-stream tags for the master seed
inline constexpr std::uint64_t kSupplyStream = 1;
inline constexpr std::uint64_t kArrivalStream = 2;

inline Trace build_trace(const ScenarioConfig& config) {
    config.validate();
    Trace trace;
    trace.table = build_state_table(config.solar_bounds, config.wind_bounds, config.solar,
                                    config.wind, config.pv, config.turbine, config.supply_cap);
    Rng supply_rng = make_stream(config.seed, kSupplyStream);
    Rng arrival_rng = make_stream(config.seed, kArrivalStream);
    trace.demand = build_demand(config.households, config.horizon, arrival_rng);
    trace.slots.reserve(static_cast<std::size_t>(config.horizon));
    for (int t = 0; t < config.horizon; ++t) {
        SlotPrices prices = price_at(t, config.prices);
        SlotObservation obs;
        obs.buy_price = prices.buy;
        obs.sell_price = prices.sell;
        obs.supply = supply(trace.table, config.supply_mode, supply_rng);
        obs.essential = trace.demand.essential[static_cast<std::size_t>(t)];
        obs.arrivals = trace.demand.shiftable[static_cast<std::size_t>(t)];
        obs.grid_cap = config.grid_cap;
        obs.supply_cap = config.supply_cap;
        trace.slots.push_back(obs);
    }
    return trace;
}

// ---------------------------------------------------------------------------
// Purchasing-only baseline
// ---------------------------------------------------------------------------

/// POS: consume renewable first for essential then queued load, buy the
/// remainder from the grid, never sell. Surplus renewable is curtailed.
inline Dispatch pos_policy(const SlotObservation& obs, double backlog) {
    if (obs.essential > obs.supply + obs.grid_cap + kBalanceTol)
        throw InfeasibleScenarioError(-1, "essential demand exceeds supply plus grid capacity");
    Dispatch d;
    d.renew_essential = std::min(obs.supply, obs.essential);
    d.renew_shiftable = std::min(obs.supply - d.renew_essential, backlog);
    d.grid_essential = obs.essential - d.renew_essential;
    d.grid_shiftable = std::min(backlog - d.renew_shiftable, obs.grid_cap - d.grid_essential);
    d.renew_sold = 0.0;
    d.curtailed = obs.supply - d.renew_essential - d.renew_shiftable;
    return d;
}

// ---------------------------------------------------------------------------
// FIFO delay tracking
// ---------------------------------------------------------------------------

/// Tracks every arrived kWh unit individually; a unit's delay is the slot in
/// which its last fraction is served minus its arrival slot.
class FifoDelayTracker {
public:
    void arrive(int slot, double amount) {
        while (amount > 1.0 - 1e-12) {
            queue_.push_back({slot, 1.0});
            amount -= 1.0;
        }
        if (amount > 1e-12) queue_.push_back({slot, amount});
    }

    void serve(int slot, double amount) {
        while (amount > 1e-12 && !queue_.empty()) {
            Granule& g = queue_.front();
            double take = std::min(g.remaining, amount);
            g.remaining -= take;
            amount -= take;
            if (g.remaining <= 1e-12) {
                long delay = slot - g.arrival_slot;
                delays_.push_back(delay);
                worst_ = std::max(worst_, delay);
                queue_.pop_front();
            }
        }
    }

    long worst_delay() const { return worst_; }
    const std::vector<long>& unit_delays() const { return delays_; }
    std::size_t pending_units() const { return queue_.size(); }

private:
    struct Granule {
        int arrival_slot;
        double remaining;
    };
    std::deque<Granule> queue_;
    std::vector<long> delays_;
    long worst_ = 0;
};

// ---------------------------------------------------------------------------
// Run loop and metrics
// ---------------------------------------------------------------------------

struct SlotRecord {
    int t = 0;
    SlotObservation obs;
    Dispatch dispatch;
    QueueState queues_after;
    double cost = 0.0;
    DecisionCase regime = DecisionCase::sell_all;
};

struct RunSummary {
    Policy policy = Policy::bts_lo;
    std::uint64_t seed = 0;
    double v = 0.0;
    double epsilon = 0.0;
    std::vector<SlotRecord> records;
    std::vector<double> cumulative_cost;
    double total_cost = 0.0;
    double time_avg_backlog = 0.0; // mean post-update backlog
    double max_backlog = 0.0;
    double max_virtual = 0.0;
    long worst_delay = 0;            // over served units
    long delay_bound_slots = 0;      // ceil((Z_max + Q_max) / epsilon)
    std::vector<long> unit_delays;
};

namespace detail {

inline void append_slot(RunSummary& summary, FifoDelayTracker& fifo, QueueState& queues,
                        int t, const SlotObservation& obs, const Dispatch& dispatch,
                        DecisionCase regime, double epsilon, double queue_override = -1.0) {
    check_dispatch(dispatch, obs);
    double served = dispatch.served_shiftable();
    fifo.serve(t, served);
    fifo.arrive(t, obs.arrivals);
    queues = update_queues(queues, served, obs.arrivals, epsilon);
    if (queue_override >= 0.0) queues.backlog = queue_override; // DP grid dynamics

    SlotRecord rec;
    rec.t = t;
    rec.obs = obs;
    rec.dispatch = dispatch;
    rec.queues_after = queues;
    rec.cost = instantaneous_cost(dispatch, obs);
    rec.regime = regime;
    summary.total_cost += rec.cost;
    summary.cumulative_cost.push_back(summary.total_cost);
    summary.max_backlog = std::max(summary.max_backlog, queues.backlog);
    summary.max_virtual = std::max(summary.max_virtual, queues.virtual_q);
    summary.records.push_back(rec);
}

} // namespace detail

/// Simulate one policy over the scenario's seeded trace. For the same
/// config and seed every policy consumes the identical trace.
inline RunSummary run_policy_on_trace(const ScenarioConfig& config, Policy policy,
                                      const Trace& trace) {
    const int horizon = config.horizon;
    LyapunovParams params = config.params;

    RunSummary summary;
    summary.policy = policy;
    summary.seed = config.seed;
    summary.v = params.v;
    summary.epsilon = params.epsilon;
    summary.records.reserve(static_cast<std::size_t>(horizon));

    QueueState queues;
    FifoDelayTracker fifo;

    try {
        if (policy == Policy::bts_dp) {
            DpGrid grid = config.dp;
            grid.horizon = horizon;
            ValueTable table = solve_backward(trace.slots, grid, 0.0);
            RolloutResult rolled = rollout(table, trace.slots, grid, 0.0);
            if (rolled.queue_clamped)
                throw ConfigError(
                    "scenario.dp.q_cap_kwh is too small: the backlog saturated the "
                    "discretized queue range");
            for (int t = 0; t < horizon; ++t) {
                const auto& step = rolled.steps[static_cast<std::size_t>(t)];
                detail::append_slot(summary, fifo, queues, t,
                                    trace.slots[static_cast<std::size_t>(t)], step.dispatch,
                                    DecisionCase::dp, 0.0, step.queue_after);
            }
        } else {
            for (int t = 0; t < horizon; ++t) {
                const SlotObservation& obs = trace.slots[static_cast<std::size_t>(t)];
                if (policy == Policy::bts_lo) {
                    SlotDecision decision = decide_slot(obs, queues, params);
                    detail::append_slot(summary, fifo, queues, t, obs, decision.dispatch,
                                        decision.regime, params.epsilon);
                } else {
                    Dispatch d = pos_policy(obs, queues.backlog);
                    detail::append_slot(summary, fifo, queues, t, obs, d, DecisionCase::pos, 0.0);
                }
            }
        }
    } catch (const InfeasibleScenarioError& e) {
        // attach the slot index where the run aborted, if not already known
        int slot = e.slot >= 0 ? e.slot : static_cast<int>(summary.records.size());
        throw InfeasibleScenarioError(slot, e.what());
    }

    double backlog_sum = 0.0;
    for (const auto& rec : summary.records) backlog_sum += rec.queues_after.backlog;
    summary.time_avg_backlog = backlog_sum / static_cast<double>(horizon);
    summary.worst_delay = fifo.worst_delay();
    summary.unit_delays = fifo.unit_delays();
    summary.delay_bound_slots =
        delay_bound(summary.max_virtual, summary.max_backlog, params.epsilon);
    return summary;
}

inline RunSummary run_policy(const ScenarioConfig& config, Policy policy) {
    Trace trace = build_trace(config);
    return run_policy_on_trace(config, policy, trace);
}

// ---------------------------------------------------------------------------
// Comparison and sweeps
// ---------------------------------------------------------------------------

/// Aligned per-slot series for a set of runs on the same scenario and seed.
struct ComparisonReport {
    std::uint64_t seed = 0;
    std::vector<Policy> policies;
    std::vector<std::vector<double>> cumulative_cost; // [policy][t]
    std::vector<std::vector<double>> log_backlog;     // [policy][t], log10(max(Q,1))
    std::vector<double> total_cost;                    // [policy]
    std::vector<double> time_avg_backlog;              // [policy]
};

inline ComparisonReport compare_runs(const std::vector<RunSummary>& summaries) {
    if (summaries.empty()) throw ComparisonError("compare_runs: no runs given");
    ComparisonReport report;
    report.seed = summaries.front().seed;
    std::size_t horizon = summaries.front().records.size();
    for (const auto& s : summaries) {
        if (s.seed != report.seed)
            throw ComparisonError("compare_runs: runs do not share a seed");
        if (s.records.size() != horizon)
            throw ComparisonError("compare_runs: runs do not share a horizon");
        report.policies.push_back(s.policy);
        report.cumulative_cost.push_back(s.cumulative_cost);
        std::vector<double> logq;
        logq.reserve(horizon);
        for (const auto& rec : s.records)
            logq.push_back(std::log10(std::max(rec.queues_after.backlog, 1.0)));
        report.log_backlog.push_back(std::move(logq));
        report.total_cost.push_back(s.total_cost);
        report.time_avg_backlog.push_back(s.time_avg_backlog);
    }
    return report;
}

/// One row of the cost/delay tradeoff table.
struct TradeoffRow {
    double v = 0.0;
    double epsilon = 0.0;
    std::uint64_t seed = 0;
    double total_cost = 0.0;
    double time_avg_backlog = 0.0;
    long worst_delay = 0;
    long delay_bound_slots = 0;
};

inline TradeoffRow tradeoff_row(const RunSummary& s) {
    return {s.v, s.epsilon, s.seed, s.total_cost, s.time_avg_backlog, s.worst_delay,
            s.delay_bound_slots};
}

} // namespace resgrid
