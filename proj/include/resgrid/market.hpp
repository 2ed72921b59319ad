#pragma once

#include <set>
#include <string>
#include <utility>
#include <vector>

#include "resgrid/common.hpp"
#include "resgrid/rng.hpp"

namespace resgrid {

// ---------------------------------------------------------------------------
// Two-tier price schedule
// ---------------------------------------------------------------------------

/// Day/night buy and sell prices in cents/kWh. Slots map to hours as
/// t mod 24; the day window is [day_start_hour, day_end_hour).
struct PriceSchedule {
    double day_buy = 0.3;
    double night_buy = 0.1;
    double day_sell = 0.2;
    double night_sell = 0.1;
    int day_start_hour = 8;
    int day_end_hour = 24;
    bool rational_pricing = true; // enforce buy >= sell at every hour

    void validate() const {
        if (day_buy < 0 || night_buy < 0 || day_sell < 0 || night_sell < 0)
            throw ConfigError("prices: all prices must be >= 0");
        if (!(0 <= day_start_hour && day_start_hour < day_end_hour && day_end_hour <= 24))
            throw ConfigError("prices: require 0 <= day_start_hour < day_end_hour <= 24");
        if (rational_pricing && (day_buy < day_sell || night_buy < night_sell))
            throw ConfigError("prices: rational pricing requires buy >= sell in every window");
    }
};

struct SlotPrices {
    double buy = 0.0;
    double sell = 0.0;
};

inline SlotPrices price_at(int t, const PriceSchedule& schedule) {
    int hour = t % 24;
    bool day = hour >= schedule.day_start_hour && hour < schedule.day_end_hour;
    return day ? SlotPrices{schedule.day_buy, schedule.day_sell}
               : SlotPrices{schedule.night_buy, schedule.night_sell};
}

// ---------------------------------------------------------------------------
// Households and demand
// ---------------------------------------------------------------------------

enum class ApplianceKind { essential, shiftable };

struct Appliance {
    std::string name;
    ApplianceKind kind = ApplianceKind::essential;
    double daily_energy_kwh = 0.0;
    std::set<int> active_hours; // hour-of-day indices in [0, 24)

    void validate() const {
        if (daily_energy_kwh < 0)
            throw ConfigError("appliance '" + name + "': daily_kwh must be >= 0");
        if (active_hours.empty())
            throw ConfigError("appliance '" + name + "': active_hours must be nonempty");
        for (int h : active_hours)
            if (h < 0 || h >= 24)
                throw ConfigError("appliance '" + name + "': active hour outside [0, 24)");
    }
};

struct Household {
    int id = 0;
    std::vector<Appliance> appliances;
    int shiftable_max_per_slot = 0; // upper end of the uniform integer arrival draw

    void validate() const {
        if (shiftable_max_per_slot < 0)
            throw ConfigError("household: a_s_max must be >= 0");
        for (const auto& a : appliances) a.validate();
    }
};

/// Aggregate per-slot essential and shiftable load across all households.
struct DemandTrace {
    std::vector<double> essential;
    std::vector<double> shiftable;
};

/// Essential load profile: each essential appliance spreads its daily energy
/// uniformly over its active hours, every day of the horizon. Deterministic.
inline std::vector<double> essential_profile(const std::vector<Household>& households, int horizon) {
    if (horizon < 1) throw std::domain_error("essential_profile: horizon must be >= 1");
    double per_hour[24] = {};
    for (const auto& hh : households) {
        for (const auto& app : hh.appliances) {
            if (app.kind != ApplianceKind::essential) continue;
            double share = app.daily_energy_kwh / static_cast<double>(app.active_hours.size());
            for (int h : app.active_hours) per_hour[h] += share;
        }
    }
    std::vector<double> out(static_cast<std::size_t>(horizon));
    for (int t = 0; t < horizon; ++t) out[static_cast<std::size_t>(t)] = per_hour[t % 24];
    return out;
}

/// Shiftable arrivals: per household per slot an independent uniform integer
/// in {0, ..., a_s_max}, summed across households. Reproducible for a seed.
inline std::vector<double> shiftable_arrivals(const std::vector<Household>& households,
                                              int horizon, Rng& rng) {
    if (horizon < 1) throw std::domain_error("shiftable_arrivals: horizon must be >= 1");
    std::vector<double> out(static_cast<std::size_t>(horizon), 0.0);
    for (int t = 0; t < horizon; ++t) {
        double total = 0.0;
        for (const auto& hh : households)
            total += uniform_int(rng, hh.shiftable_max_per_slot);
        out[static_cast<std::size_t>(t)] = total;
    }
    return out;
}

inline DemandTrace build_demand(const std::vector<Household>& households, int horizon, Rng& rng) {
    DemandTrace trace;
    trace.essential = essential_profile(households, horizon);
    trace.shiftable = shiftable_arrivals(households, horizon, rng);
    return trace;
}

} // namespace resgrid
