#pragma once

#include <cstdint>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "resgrid/common.hpp"
#include "resgrid/simkit.hpp"

namespace resgrid {

/// Appliance set replicated across all households of the scenario.
struct HouseholdTemplate {
    int a_s_max = 0;
    std::vector<Appliance> appliances;
};

struct SweepSpec {
    std::vector<double> v_values;
    std::vector<double> epsilon_values;
    std::vector<std::uint64_t> seeds;
};

/// Everything a config file describes: the scenario, which policies to run,
/// sweep lists and output location.
struct CliConfig {
    ScenarioConfig scenario;
    HouseholdTemplate household;
    std::vector<Policy> policies{Policy::bts_lo, Policy::bts_dp, Policy::pos};
    SweepSpec sweep;
    std::string out_dir = "out";
};

inline constexpr int kSchemaVersion = 1;

namespace cfgdetail {

using nlohmann::json;

inline std::string join(const std::string& ctx, const std::string& key) {
    return ctx.empty() ? key : ctx + "." + key;
}

/// Unknown keys are rejected so typos in scenario studies fail loudly.
inline void check_keys(const json& obj, const std::set<std::string>& allowed,
                       const std::string& ctx) {
    if (!obj.is_object()) throw ConfigError(ctx + " must be an object");
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key()))
            throw ConfigError("unknown key '" + join(ctx, it.key()) + "'");
}

inline const json& require(const json& obj, const std::string& key, const std::string& ctx) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ConfigError("missing key '" + join(ctx, key) + "'");
    return *it;
}

inline double get_number(const json& obj, const std::string& key, const std::string& ctx) {
    const json& v = require(obj, key, ctx);
    if (!v.is_number()) throw ConfigError("'" + join(ctx, key) + "' must be a number");
    return v.get<double>();
}

inline double get_number_or(const json& obj, const std::string& key, const std::string& ctx,
                            double fallback) {
    if (!obj.contains(key)) return fallback;
    return get_number(obj, key, ctx);
}

inline int get_int(const json& obj, const std::string& key, const std::string& ctx) {
    const json& v = require(obj, key, ctx);
    if (!v.is_number_integer()) throw ConfigError("'" + join(ctx, key) + "' must be an integer");
    return v.get<int>();
}

inline bool get_bool_or(const json& obj, const std::string& key, const std::string& ctx,
                        bool fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_boolean()) throw ConfigError("'" + join(ctx, key) + "' must be a boolean");
    return v.get<bool>();
}

inline std::string get_string(const json& obj, const std::string& key, const std::string& ctx) {
    const json& v = require(obj, key, ctx);
    if (!v.is_string()) throw ConfigError("'" + join(ctx, key) + "' must be a string");
    return v.get<std::string>();
}

inline std::vector<double> get_number_list(const json& obj, const std::string& key,
                                           const std::string& ctx) {
    const json& v = require(obj, key, ctx);
    if (!v.is_array()) throw ConfigError("'" + join(ctx, key) + "' must be an array");
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number()) throw ConfigError("'" + join(ctx, key) + "' entries must be numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

inline Appliance parse_appliance(const json& obj, const std::string& ctx) {
    check_keys(obj, {"name", "kind", "daily_kwh", "active_hours"}, ctx);
    Appliance app;
    app.name = get_string(obj, "name", ctx);
    std::string kind = get_string(obj, "kind", ctx);
    if (kind == "essential") app.kind = ApplianceKind::essential;
    else if (kind == "shiftable") app.kind = ApplianceKind::shiftable;
    else throw ConfigError("'" + join(ctx, "kind") + "' must be 'essential' or 'shiftable'");
    app.daily_energy_kwh = get_number(obj, "daily_kwh", ctx);
    const json& hours = require(obj, "active_hours", ctx);
    if (!hours.is_array()) throw ConfigError("'" + join(ctx, "active_hours") + "' must be an array");
    for (const auto& h : hours) {
        if (!h.is_number_integer())
            throw ConfigError("'" + join(ctx, "active_hours") + "' entries must be integers");
        app.active_hours.insert(h.get<int>());
    }
    app.validate();
    return app;
}

inline Policy parse_policy(const std::string& name) {
    if (name == "bts_lo") return Policy::bts_lo;
    if (name == "bts_dp") return Policy::bts_dp;
    if (name == "pos") return Policy::pos;
    throw ConfigError("unknown policy '" + name + "' (expected bts_lo, bts_dp or pos)");
}

} // namespace cfgdetail

// ---------------------------------------------------------------------------
// Parse + validate
// ---------------------------------------------------------------------------

inline CliConfig parse_config(const nlohmann::json& root) {
    using namespace cfgdetail;
    check_keys(root, {"schema_version", "scenario", "policies", "sweep", "output"}, "");
    if (get_int(root, "schema_version", "") != kSchemaVersion)
        throw ConfigError("schema_version must be " + std::to_string(kSchemaVersion));

    CliConfig cfg;
    const json& sc = require(root, "scenario", "");
    check_keys(sc,
               {"n_households", "horizon_slots", "seed", "g_max_kwh", "s_max_kwh", "supply_mode",
                "control", "prices", "solar", "wind", "pv_panel", "wind_turbine",
                "household_template", "dp"},
               "scenario");

    ScenarioConfig& s = cfg.scenario;
    s.n_households = get_int(sc, "n_households", "scenario");
    s.horizon = get_int(sc, "horizon_slots", "scenario");
    double seed = get_number(sc, "seed", "scenario");
    if (seed < 0) throw ConfigError("'scenario.seed' must be >= 0");
    s.seed = static_cast<std::uint64_t>(seed);
    s.grid_cap = get_number(sc, "g_max_kwh", "scenario");
    s.supply_cap = get_number(sc, "s_max_kwh", "scenario");

    if (sc.contains("supply_mode")) {
        std::string mode = get_string(sc, "supply_mode", "scenario");
        if (mode == "sampled") s.supply_mode = SupplyMode::sampled;
        else if (mode == "expected") s.supply_mode = SupplyMode::expected;
        else throw ConfigError("'scenario.supply_mode' must be 'sampled' or 'expected'");
    }

    const json& prices = require(sc, "prices", "scenario");
    check_keys(prices,
               {"day_buy", "night_buy", "day_sell", "night_sell", "day_start_hour",
                "day_end_hour", "rational_pricing"},
               "scenario.prices");
    s.prices.day_buy = get_number(prices, "day_buy", "scenario.prices");
    s.prices.night_buy = get_number(prices, "night_buy", "scenario.prices");
    s.prices.day_sell = get_number(prices, "day_sell", "scenario.prices");
    s.prices.night_sell = get_number(prices, "night_sell", "scenario.prices");
    s.prices.day_start_hour = get_int(prices, "day_start_hour", "scenario.prices");
    s.prices.day_end_hour = get_int(prices, "day_end_hour", "scenario.prices");
    s.prices.rational_pricing = get_bool_or(prices, "rational_pricing", "scenario.prices", true);

    const json& solar = require(sc, "solar", "scenario");
    check_keys(solar, {"alpha", "beta", "state_bounds"}, "scenario.solar");
    s.solar.alpha = get_number(solar, "alpha", "scenario.solar");
    s.solar.beta = get_number(solar, "beta", "scenario.solar");
    s.solar_bounds = intervals_from_edges(get_number_list(solar, "state_bounds", "scenario.solar"),
                                          /*open_tail=*/false);

    const json& wind = require(sc, "wind", "scenario");
    check_keys(wind, {"mean_speed_mps", "state_bounds"}, "scenario.wind");
    s.wind.mean_speed = get_number(wind, "mean_speed_mps", "scenario.wind");
    s.wind_bounds = intervals_from_edges(get_number_list(wind, "state_bounds", "scenario.wind"),
                                         /*open_tail=*/true);

    const json& pv = require(sc, "pv_panel", "scenario");
    check_keys(pv,
               {"ambient_temp_c", "nominal_op_temp_c", "volt_temp_coeff_v_per_c",
                "curr_temp_coeff_a_per_c", "short_circuit_current_a", "open_circuit_voltage_v",
                "mpp_current_a", "mpp_voltage_v", "module_count"},
               "scenario.pv_panel");
    s.pv.ambient_temp_c = get_number(pv, "ambient_temp_c", "scenario.pv_panel");
    s.pv.nominal_op_temp_c = get_number(pv, "nominal_op_temp_c", "scenario.pv_panel");
    s.pv.volt_temp_coeff = get_number(pv, "volt_temp_coeff_v_per_c", "scenario.pv_panel");
    s.pv.curr_temp_coeff = get_number(pv, "curr_temp_coeff_a_per_c", "scenario.pv_panel");
    s.pv.short_circuit_current = get_number(pv, "short_circuit_current_a", "scenario.pv_panel");
    s.pv.open_circuit_voltage = get_number(pv, "open_circuit_voltage_v", "scenario.pv_panel");
    s.pv.mpp_current = get_number(pv, "mpp_current_a", "scenario.pv_panel");
    s.pv.mpp_voltage = get_number(pv, "mpp_voltage_v", "scenario.pv_panel");
    s.pv.module_count = get_int(pv, "module_count", "scenario.pv_panel");

    const json& turbine = require(sc, "wind_turbine", "scenario");
    check_keys(turbine, {"cut_in_speed_mps", "rated_speed_mps", "cut_off_speed_mps", "rated_power_kw"},
               "scenario.wind_turbine");
    s.turbine.cut_in_speed = get_number(turbine, "cut_in_speed_mps", "scenario.wind_turbine");
    s.turbine.rated_speed = get_number(turbine, "rated_speed_mps", "scenario.wind_turbine");
    s.turbine.cut_off_speed = get_number(turbine, "cut_off_speed_mps", "scenario.wind_turbine");
    s.turbine.rated_power_kw = get_number(turbine, "rated_power_kw", "scenario.wind_turbine");

    const json& hh = require(sc, "household_template", "scenario");
    check_keys(hh, {"a_s_max", "appliances"}, "scenario.household_template");
    cfg.household.a_s_max = get_int(hh, "a_s_max", "scenario.household_template");
    if (cfg.household.a_s_max < 0)
        throw ConfigError("'scenario.household_template.a_s_max' must be >= 0");
    const json& apps = require(hh, "appliances", "scenario.household_template");
    if (!apps.is_array())
        throw ConfigError("'scenario.household_template.appliances' must be an array");
    for (std::size_t i = 0; i < apps.size(); ++i)
        cfg.household.appliances.push_back(cfgdetail::parse_appliance(
            apps[i], "scenario.household_template.appliances[" + std::to_string(i) + "]"));

    if (s.n_households < 1) throw ConfigError("'scenario.n_households' must be >= 1");
    for (int i = 0; i < s.n_households; ++i) {
        Household home;
        home.id = i;
        home.appliances = cfg.household.appliances;
        home.shiftable_max_per_slot = cfg.household.a_s_max;
        s.households.push_back(home);
    }

    const json& control = require(sc, "control", "scenario");
    check_keys(control, {"v", "epsilon"}, "scenario.control");
    s.params.v = get_number(control, "v", "scenario.control");
    s.params.epsilon = get_number_or(control, "epsilon", "scenario.control",
                                     s.mean_arrival_rate());
    if (!(s.params.v > 0.0)) throw ConfigError("'scenario.control.v' must be > 0");
    if (!(s.params.epsilon > 0.0)) throw ConfigError("'scenario.control.epsilon' must be > 0");

    if (sc.contains("dp")) {
        const json& dp = sc.at("dp");
        check_keys(dp, {"q_step", "u_step", "q_cap_kwh"}, "scenario.dp");
        s.dp.q_step = get_number_or(dp, "q_step", "scenario.dp", 0.25);
        s.dp.u_step = get_number_or(dp, "u_step", "scenario.dp", 0.25);
        s.dp.q_cap = get_number_or(dp, "q_cap_kwh", "scenario.dp", -1.0);
        if (!(s.dp.q_step > 0.0)) throw ConfigError("'scenario.dp.q_step' must be > 0");
        if (!(s.dp.u_step > 0.0)) throw ConfigError("'scenario.dp.u_step' must be > 0");
    }

    if (root.contains("policies")) {
        const json& pols = root.at("policies");
        if (!pols.is_array()) throw ConfigError("'policies' must be an array");
        cfg.policies.clear();
        for (const auto& p : pols) {
            if (!p.is_string()) throw ConfigError("'policies' entries must be strings");
            cfg.policies.push_back(cfgdetail::parse_policy(p.get<std::string>()));
        }
        if (cfg.policies.empty()) throw ConfigError("'policies' must not be empty");
    }

    if (root.contains("sweep")) {
        const json& sw = root.at("sweep");
        check_keys(sw, {"v_values", "epsilon_values", "seeds"}, "sweep");
        if (sw.contains("v_values")) cfg.sweep.v_values = get_number_list(sw, "v_values", "sweep");
        if (sw.contains("epsilon_values"))
            cfg.sweep.epsilon_values = get_number_list(sw, "epsilon_values", "sweep");
        if (sw.contains("seeds")) {
            for (double d : get_number_list(sw, "seeds", "sweep")) {
                if (d < 0) throw ConfigError("'sweep.seeds' entries must be >= 0");
                cfg.sweep.seeds.push_back(static_cast<std::uint64_t>(d));
            }
        }
        for (double v : cfg.sweep.v_values)
            if (!(v > 0.0)) throw ConfigError("'sweep.v_values' entries must be > 0");
        for (double e : cfg.sweep.epsilon_values)
            if (!(e > 0.0)) throw ConfigError("'sweep.epsilon_values' entries must be > 0");
    }

    if (root.contains("output")) {
        const json& out = root.at("output");
        check_keys(out, {"out_dir"}, "output");
        if (out.contains("out_dir")) cfg.out_dir = get_string(out, "out_dir", "output");
    }

    cfg.scenario.validate();
    // construct the state table once to surface partition errors at load time
    build_state_table(s.solar_bounds, s.wind_bounds, s.solar, s.wind, s.pv, s.turbine,
                      s.supply_cap);
    return cfg;
}

inline CliConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config is not valid JSON: " + std::string(e.what()));
    }
    return parse_config(root);
}

// ---------------------------------------------------------------------------
// Effective-config serialization (round-trip stable)
// ---------------------------------------------------------------------------

inline nlohmann::json effective_json(const CliConfig& cfg) {
    using nlohmann::json;
    const ScenarioConfig& s = cfg.scenario;

    json apps = json::array();
    for (const auto& a : cfg.household.appliances) {
        json hours = json::array();
        for (int h : a.active_hours) hours.push_back(h);
        apps.push_back({{"name", a.name},
                        {"kind", a.kind == ApplianceKind::essential ? "essential" : "shiftable"},
                        {"daily_kwh", a.daily_energy_kwh},
                        {"active_hours", hours}});
    }

    auto edges_of = [](const std::vector<Interval>& ivs, bool open_tail) {
        json edges = json::array();
        for (const auto& iv : ivs) edges.push_back(iv.lo);
        if (!open_tail) edges.push_back(ivs.back().hi);
        return edges;
    };

    json pols = json::array();
    for (Policy p : cfg.policies) pols.push_back(to_string(p));

    return json{
        {"schema_version", kSchemaVersion},
        {"scenario",
         {{"n_households", s.n_households},
          {"horizon_slots", s.horizon},
          {"seed", s.seed},
          {"g_max_kwh", s.grid_cap},
          {"s_max_kwh", s.supply_cap},
          {"supply_mode", s.supply_mode == SupplyMode::sampled ? "sampled" : "expected"},
          {"control", {{"v", s.params.v}, {"epsilon", s.params.epsilon}}},
          {"prices",
           {{"day_buy", s.prices.day_buy},
            {"night_buy", s.prices.night_buy},
            {"day_sell", s.prices.day_sell},
            {"night_sell", s.prices.night_sell},
            {"day_start_hour", s.prices.day_start_hour},
            {"day_end_hour", s.prices.day_end_hour},
            {"rational_pricing", s.prices.rational_pricing}}},
          {"solar",
           {{"alpha", s.solar.alpha},
            {"beta", s.solar.beta},
            {"state_bounds", edges_of(s.solar_bounds, false)}}},
          {"wind",
           {{"mean_speed_mps", s.wind.mean_speed},
            {"state_bounds", edges_of(s.wind_bounds, true)}}},
          {"pv_panel",
           {{"ambient_temp_c", s.pv.ambient_temp_c},
            {"nominal_op_temp_c", s.pv.nominal_op_temp_c},
            {"volt_temp_coeff_v_per_c", s.pv.volt_temp_coeff},
            {"curr_temp_coeff_a_per_c", s.pv.curr_temp_coeff},
            {"short_circuit_current_a", s.pv.short_circuit_current},
            {"open_circuit_voltage_v", s.pv.open_circuit_voltage},
            {"mpp_current_a", s.pv.mpp_current},
            {"mpp_voltage_v", s.pv.mpp_voltage},
            {"module_count", s.pv.module_count}}},
          {"wind_turbine",
           {{"cut_in_speed_mps", s.turbine.cut_in_speed},
            {"rated_speed_mps", s.turbine.rated_speed},
            {"cut_off_speed_mps", s.turbine.cut_off_speed},
            {"rated_power_kw", s.turbine.rated_power_kw}}},
          {"household_template", {{"a_s_max", cfg.household.a_s_max}, {"appliances", apps}}},
          {"dp", {{"q_step", s.dp.q_step}, {"u_step", s.dp.u_step}, {"q_cap_kwh", s.dp.q_cap}}}}},
        {"policies", pols},
        {"sweep",
         {{"v_values", cfg.sweep.v_values},
          {"epsilon_values", cfg.sweep.epsilon_values},
          {"seeds", cfg.sweep.seeds}}},
        {"output", {{"out_dir", cfg.out_dir}}}};
}

} // namespace resgrid
