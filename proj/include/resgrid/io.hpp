#pragma once

#include <charconv>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "resgrid/common.hpp"
#include "resgrid/dp.hpp"
#include "resgrid/renewgen.hpp"
#include "resgrid/simkit.hpp"

namespace resgrid {

/// Shortest round-trip decimal form; locale-free, so identical runs produce
/// byte-identical files.
inline std::string format_double(double value) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

namespace iodetail {

inline std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary); // binary keeps '\n' on every platform
    if (!out) throw std::runtime_error("cannot open output file '" + path + "'");
    return out;
}

} // namespace iodetail

// ---------------------------------------------------------------------------
// Per-slot decision log
// ---------------------------------------------------------------------------

inline constexpr const char* kSlotLogHeader =
    "t,p,gamma,S,A_e,A_s,g_e,g_s,s_e,s_s,s_p,Q,Z,cost,case_label";

inline void write_slot_log_csv(const std::string& path, const RunSummary& summary) {
    auto out = iodetail::open_out(path);
    out << kSlotLogHeader << '\n';
    for (const auto& rec : summary.records) {
        out << rec.t << ',' << format_double(rec.obs.buy_price) << ','
            << format_double(rec.obs.sell_price) << ',' << format_double(rec.obs.supply) << ','
            << format_double(rec.obs.essential) << ',' << format_double(rec.obs.arrivals) << ','
            << format_double(rec.dispatch.grid_essential) << ','
            << format_double(rec.dispatch.grid_shiftable) << ','
            << format_double(rec.dispatch.renew_essential) << ','
            << format_double(rec.dispatch.renew_shiftable) << ','
            << format_double(rec.dispatch.renew_sold) << ','
            << format_double(rec.queues_after.backlog) << ','
            << format_double(rec.queues_after.virtual_q) << ',' << format_double(rec.cost) << ','
            << to_string(rec.regime) << '\n';
    }
}

inline nlohmann::json summary_json(const RunSummary& summary) {
    return nlohmann::json{{"policy", to_string(summary.policy)},
                          {"seed", summary.seed},
                          {"v", summary.v},
                          {"epsilon", summary.epsilon},
                          {"horizon_slots", summary.records.size()},
                          {"total_cost", summary.total_cost},
                          {"time_avg_q", summary.time_avg_backlog},
                          {"max_q", summary.max_backlog},
                          {"max_z", summary.max_virtual},
                          {"worst_delay_slots", summary.worst_delay},
                          {"delay_bound_slots", summary.delay_bound_slots},
                          {"served_units", summary.unit_delays.size()}};
}

inline void write_summary_json(const std::string& path, const RunSummary& summary) {
    auto out = iodetail::open_out(path);
    out << summary_json(summary).dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Optional input exports
// ---------------------------------------------------------------------------

inline void write_state_table_csv(const std::string& path, const GenerationStateTable& table) {
    auto out = iodetail::open_out(path);
    out << "state_index,power_kW,probability\n";
    for (std::size_t i = 0; i < table.states.size(); ++i)
        out << i << ',' << format_double(table.states[i].power_kw) << ','
            << format_double(table.states[i].probability) << '\n';
}

inline void write_demand_csv(const std::string& path, const DemandTrace& demand) {
    auto out = iodetail::open_out(path);
    out << "slot,A_e,A_s\n";
    for (std::size_t t = 0; t < demand.essential.size(); ++t)
        out << t << ',' << format_double(demand.essential[t]) << ','
            << format_double(demand.shiftable[t]) << '\n';
}

inline void write_value_table_csv(const std::string& path, const ValueTable& table) {
    auto out = iodetail::open_out(path);
    out << "t,q_level,J,g_s,s_s\n";
    for (std::size_t t = 0; t < table.best.size(); ++t)
        for (std::size_t qi = 0; qi < table.q_levels.size(); ++qi)
            out << t << ',' << format_double(table.q_levels[qi]) << ','
                << format_double(table.cost_to_go[t][qi]) << ','
                << format_double(table.best[t][qi].grid_shiftable) << ','
                << format_double(table.best[t][qi].renew_shiftable) << '\n';
}

// ---------------------------------------------------------------------------
// Comparison series and sweep table
// ---------------------------------------------------------------------------

/// One row per (seed, slot); per policy a cumulative-cost column and a
/// log10(max(Q,1)) column, aligned on the shared trace.
inline void write_compare_series_csv(const std::string& path,
                                     const std::vector<ComparisonReport>& reports) {
    if (reports.empty()) throw ComparisonError("write_compare_series_csv: no reports");
    auto out = iodetail::open_out(path);
    out << "seed,t";
    for (Policy p : reports.front().policies)
        out << ",cum_cost_" << to_string(p) << ",logq_" << to_string(p);
    out << '\n';
    for (const auto& rep : reports) {
        std::size_t horizon = rep.cumulative_cost.empty() ? 0 : rep.cumulative_cost.front().size();
        for (std::size_t t = 0; t < horizon; ++t) {
            out << rep.seed << ',' << t;
            for (std::size_t p = 0; p < rep.policies.size(); ++p)
                out << ',' << format_double(rep.cumulative_cost[p][t]) << ','
                    << format_double(rep.log_backlog[p][t]);
            out << '\n';
        }
    }
}

inline nlohmann::json compare_summary_json(const std::vector<ComparisonReport>& reports) {
    nlohmann::json per_seed = nlohmann::json::array();
    std::vector<double> mean_cost, mean_avg_q;
    if (!reports.empty()) {
        mean_cost.assign(reports.front().policies.size(), 0.0);
        mean_avg_q.assign(reports.front().policies.size(), 0.0);
    }
    for (const auto& rep : reports) {
        nlohmann::json row{{"seed", rep.seed}};
        for (std::size_t p = 0; p < rep.policies.size(); ++p) {
            std::string name = to_string(rep.policies[p]);
            row["total_cost_" + name] = rep.total_cost[p];
            row["time_avg_q_" + name] = rep.time_avg_backlog[p];
            mean_cost[p] += rep.total_cost[p] / static_cast<double>(reports.size());
            mean_avg_q[p] += rep.time_avg_backlog[p] / static_cast<double>(reports.size());
        }
        per_seed.push_back(row);
    }
    nlohmann::json means;
    for (std::size_t p = 0; !reports.empty() && p < reports.front().policies.size(); ++p) {
        std::string name = to_string(reports.front().policies[p]);
        means["mean_total_cost_" + name] = mean_cost[p];
        means["mean_time_avg_q_" + name] = mean_avg_q[p];
    }
    return nlohmann::json{{"seeds", per_seed}, {"means", means}};
}

inline void write_sweep_csv(const std::string& path, const std::vector<TradeoffRow>& rows) {
    auto out = iodetail::open_out(path);
    out << "v,epsilon,seed,total_cost,time_avg_q,worst_delay,delay_bound\n";
    for (const auto& r : rows)
        out << format_double(r.v) << ',' << format_double(r.epsilon) << ',' << r.seed << ','
            << format_double(r.total_cost) << ',' << format_double(r.time_avg_backlog) << ','
            << r.worst_delay << ',' << r.delay_bound_slots << '\n';
}

} // namespace resgrid
