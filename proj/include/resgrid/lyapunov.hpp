#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "resgrid/common.hpp"

namespace resgrid {

// ---------------------------------------------------------------------------
// Per-slot state
// ---------------------------------------------------------------------------

/// Everything the online controller sees in one slot.
struct SlotObservation {
    double buy_price = 0.0;        // cents/kWh
    double sell_price = 0.0;       // cents/kWh
    double supply = 0.0;           // renewable kWh available this slot
    double essential = 0.0;        // essential demand kWh (must be served now)
    double arrivals = 0.0;         // shiftable demand kWh arriving this slot
    double grid_cap = 0.0;         // max kWh purchasable per slot
    double supply_cap = 0.0;       // plant output limit
};

/// Real backlog of shiftable demand plus the delay-aware virtual queue.
struct QueueState {
    double backlog = 0.0;  // Q: unserved shiftable kWh
    double virtual_q = 0.0; // Z: grows while backlog waits, bounding delay
};

/// V trades cost against backlog; epsilon sets the virtual queue growth and
/// thereby the delay bound.
struct LyapunovParams {
    double v = 10.0;
    double epsilon = 1.0;

    void validate() const {
        if (!(v > 0.0)) throw ConfigError("control.v must be > 0");
        if (!(epsilon > 0.0)) throw ConfigError("control.epsilon must be > 0");
    }
};

/// Full decision vector for one slot. All quantities in kWh.
/// Invariants: renew_essential + renew_shiftable + renew_sold + curtailed
/// equals supply; grid_essential + renew_essential equals essential demand;
/// grid_essential + grid_shiftable <= grid_cap.
struct Dispatch {
    double grid_essential = 0.0;  // bought for essential load
    double grid_shiftable = 0.0;  // bought for queued load
    double renew_essential = 0.0; // renewable to essential load
    double renew_shiftable = 0.0; // renewable to queued load
    double renew_sold = 0.0;      // renewable sold to the grid
    double curtailed = 0.0;       // renewable discarded (sell-forbidden policies)

    double grid_total() const { return grid_essential + grid_shiftable; }
    double served_shiftable() const { return grid_shiftable + renew_shiftable; }
};

inline void check_dispatch(const Dispatch& d, const SlotObservation& obs) {
    double renew_sum = d.renew_essential + d.renew_shiftable + d.renew_sold + d.curtailed;
    if (std::abs(renew_sum - obs.supply) > kBalanceTol)
        throw std::logic_error("dispatch: renewable split does not sum to supply");
    if (std::abs(d.grid_essential + d.renew_essential - obs.essential) > kBalanceTol)
        throw std::logic_error("dispatch: essential demand not exactly covered");
    if (d.grid_total() > obs.grid_cap + kBalanceTol)
        throw std::logic_error("dispatch: grid purchase exceeds cap");
    if (d.grid_essential < -kBalanceTol || d.grid_shiftable < -kBalanceTol ||
        d.renew_essential < -kBalanceTol || d.renew_shiftable < -kBalanceTol ||
        d.renew_sold < -kBalanceTol || d.curtailed < -kBalanceTol)
        throw std::logic_error("dispatch: negative component");
}

/// Net cost of the slot in cents: purchases minus sell-back revenue.
inline double instantaneous_cost(const Dispatch& d, const SlotObservation& obs) {
    return obs.buy_price * d.grid_total() - obs.sell_price * d.renew_sold;
}

// ---------------------------------------------------------------------------
// Stage I: essential load
// ---------------------------------------------------------------------------

struct EssentialSplit {
    double grid = 0.0;  // grid_essential
    double renew = 0.0; // renew_essential
};

/// Closed-form split of the essential demand. Buying is cheaper than the
/// value of selling renewable when buy < sell, so grid is maxed first in
/// that branch; otherwise renewable covers as much as it can.
inline EssentialSplit stage1_essential(const SlotObservation& obs) {
    if (obs.essential > obs.supply + obs.grid_cap + kBalanceTol)
        throw InfeasibleScenarioError(
            -1, "essential demand exceeds supply plus grid capacity");
    EssentialSplit split;
    if (obs.buy_price < obs.sell_price) {
        split.grid = std::min(obs.grid_cap, obs.essential);
        split.renew = std::max(obs.essential - split.grid, 0.0);
    } else {
        split.renew = std::min(obs.supply, obs.essential);
        split.grid = std::max(obs.essential - split.renew, 0.0);
    }
    return split;
}

// ---------------------------------------------------------------------------
// Stage II: shiftable load
// ---------------------------------------------------------------------------

/// Capacity left for the queue after stage I.
struct Residuals {
    double renew_avail = 0.0; // S~max
    double grid_avail = 0.0;  // G~max
};

inline Residuals stage2_residuals(const SlotObservation& obs, const EssentialSplit& split) {
    return {std::max(obs.supply - split.renew, 0.0),
            std::max(obs.grid_cap - split.grid, 0.0)};
}

/// Threshold regime of the stage-II decision. Weight W = backlog + virtual
/// queue is compared against V*buy and V*sell.
enum class DecisionCase {
    sell_all,        // W below both thresholds: sell the whole residual
    serve_renewable, // between thresholds: serve queue from renewable only
    serve_full,      // W above both: renewable first, then grid, up to backlog
    pos,             // purchasing-only baseline (no threshold logic)
    dp,              // perfect-information oracle
};

inline const char* to_string(DecisionCase c) {
    switch (c) {
        case DecisionCase::sell_all: return "sell_all";
        case DecisionCase::serve_renewable: return "serve_renewable";
        case DecisionCase::serve_full: return "serve_full";
        case DecisionCase::pos: return "pos";
        case DecisionCase::dp: return "dp";
    }
    return "?";
}

struct ShiftableDecision {
    double grid = 0.0;  // grid_shiftable
    double renew = 0.0; // renew_shiftable
    double sold = 0.0;  // renew_sold
    DecisionCase regime = DecisionCase::sell_all;
};

/// Threshold policy for the queue. Ties (V*price == W) fall on the serving
/// side: at equality the objective is indifferent and serving reduces
/// future backlog.
inline ShiftableDecision stage2_shiftable(const SlotObservation& obs, const QueueState& queues,
                                          const LyapunovParams& params, const Residuals& res) {
    double weight = queues.backlog + queues.virtual_q;
    double buy_threshold = params.v * obs.buy_price;
    double sell_threshold = params.v * obs.sell_price;
    ShiftableDecision out;
    if (buy_threshold > weight && sell_threshold > weight) {
        out.regime = DecisionCase::sell_all;
        out.sold = res.renew_avail;
        return out;
    }
    if (buy_threshold > weight) { // sell_threshold <= weight
        out.regime = DecisionCase::serve_renewable;
        out.renew = std::min(res.renew_avail, queues.backlog);
        out.sold = std::max(res.renew_avail - out.renew, 0.0);
        return out;
    }
    // buy_threshold <= weight from here on
    if (obs.buy_price < obs.sell_price)
        throw PricingViolationError(
            "scheduler reached a buy-from-grid-to-sell regime; "
            "price schedule must keep buy >= sell");
    out.regime = DecisionCase::serve_full;
    out.renew = std::min(res.renew_avail, queues.backlog);
    out.grid = std::min(queues.backlog - out.renew, res.grid_avail);
    out.sold = std::max(res.renew_avail - out.renew, 0.0);
    return out;
}

// ---------------------------------------------------------------------------
// Composed per-slot decision
// ---------------------------------------------------------------------------

struct SlotDecision {
    Dispatch dispatch;
    DecisionCase regime = DecisionCase::sell_all;
};

inline SlotDecision decide_slot(const SlotObservation& obs, const QueueState& queues,
                                const LyapunovParams& params) {
    EssentialSplit split = stage1_essential(obs);
    Residuals res = stage2_residuals(obs, split);
    ShiftableDecision shift = stage2_shiftable(obs, queues, params, res);
    SlotDecision decision;
    decision.regime = shift.regime;
    decision.dispatch.grid_essential = split.grid;
    decision.dispatch.renew_essential = split.renew;
    decision.dispatch.grid_shiftable = shift.grid;
    decision.dispatch.renew_shiftable = shift.renew;
    decision.dispatch.renew_sold = shift.sold;
    check_dispatch(decision.dispatch, obs);
    return decision;
}

/// The quantity the per-slot decision minimizes: V times the slot cost minus
/// the queue weight times the amount of backlog served.
inline double drift_penalty_objective(const Dispatch& d, const SlotObservation& obs,
                                      const QueueState& queues, const LyapunovParams& params) {
    return params.v * instantaneous_cost(d, obs) -
           (queues.backlog + queues.virtual_q) * d.served_shiftable();
}

// ---------------------------------------------------------------------------
// Queue dynamics and the delay bound
// ---------------------------------------------------------------------------

/// One slot of queue dynamics. The virtual queue has the same service rate
/// as the real one but gains epsilon whenever backlog was left waiting.
inline QueueState update_queues(const QueueState& queues, double served, double arrivals,
                                double epsilon) {
    if (served < 0.0 || arrivals < 0.0)
        throw std::domain_error("update_queues: served and arrivals must be >= 0");
    QueueState next;
    next.backlog = std::max(queues.backlog - served, 0.0) + arrivals;
    double growth = queues.backlog > 0.0 ? epsilon : 0.0;
    next.virtual_q = std::max(queues.virtual_q - served + growth, 0.0);
    return next;
}

/// Worst-case FIFO service delay in slots when both queues stay below the
/// given maxima.
inline long delay_bound(double z_max, double q_max, double epsilon) {
    if (!(epsilon > 0.0)) throw std::domain_error("delay_bound: epsilon must be > 0");
    return static_cast<long>(std::ceil((z_max + q_max) / epsilon));
}

/// Scalar congestion measure of the queue pair; diagnostic only.
inline double lyapunov_value(const QueueState& queues) {
    return 0.5 * (queues.virtual_q * queues.virtual_q + queues.backlog * queues.backlog);
}

} // namespace resgrid
