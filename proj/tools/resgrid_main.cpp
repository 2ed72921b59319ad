// resgrid command-line front end: runs scheduling policies on configured
// scenarios and writes plot-ready CSV/JSON outputs.

#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "resgrid/config.hpp"
#include "resgrid/io.hpp"
#include "resgrid/simkit.hpp"

namespace {

using namespace resgrid;

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitBadConfig = 2;
constexpr int kExitInfeasible = 3;

struct Overrides {
    std::string out_dir;
    std::int64_t seed = -1;
    double v = -1.0;
    double epsilon = -1.0;
};

void apply_overrides(CliConfig& cfg, const Overrides& ov) {
    if (!ov.out_dir.empty()) cfg.out_dir = ov.out_dir;
    if (ov.seed >= 0) {
        cfg.scenario.seed = static_cast<std::uint64_t>(ov.seed);
        cfg.sweep.seeds = {cfg.scenario.seed};
    }
    if (ov.v > 0.0) cfg.scenario.params.v = ov.v;
    if (ov.epsilon > 0.0) cfg.scenario.params.epsilon = ov.epsilon;
    cfg.scenario.params.validate();
}

std::vector<std::uint64_t> run_seeds(const CliConfig& cfg) {
    return cfg.sweep.seeds.empty() ? std::vector<std::uint64_t>{cfg.scenario.seed}
                                   : cfg.sweep.seeds;
}

/// Run fn(0..n-1) on a small worker pool; results land in caller-owned slots
/// indexed by i, so output order is independent of scheduling.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    unsigned workers = std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            std::size_t i;
            while ((i = next.fetch_add(1)) < n) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

std::string seed_tag(std::uint64_t seed) { return "seed" + std::to_string(seed); }

int cmd_simulate(CliConfig cfg, const std::string& policy_name, bool export_inputs,
                 bool export_value_table) {
    Policy policy = cfgdetail::parse_policy(policy_name);
    std::filesystem::create_directories(cfg.out_dir);
    Trace trace = build_trace(cfg.scenario);
    RunSummary summary = run_policy_on_trace(cfg.scenario, policy, trace);

    std::string stem = cfg.out_dir + "/" + std::string(to_string(policy)) + "_" +
                       seed_tag(cfg.scenario.seed);
    write_slot_log_csv(stem + "_slots.csv", summary);
    write_summary_json(stem + "_summary.json", summary);

    if (export_inputs) {
        write_state_table_csv(cfg.out_dir + "/state_table.csv", trace.table);
        write_demand_csv(cfg.out_dir + "/demand_trace.csv", trace.demand);
    }
    if (export_value_table) {
        DpGrid grid = cfg.scenario.dp;
        grid.horizon = cfg.scenario.horizon;
        write_value_table_csv(cfg.out_dir + "/value_table.csv",
                              solve_backward(trace.slots, grid, 0.0));
    }
    std::cout << "wrote " << stem << "_slots.csv and " << stem << "_summary.json\n";
    return kExitOk;
}

int cmd_compare(CliConfig cfg) {
    if (cfg.policies.size() < 2)
        throw ConfigError("compare needs at least two entries in 'policies'");
    std::filesystem::create_directories(cfg.out_dir);
    std::vector<std::uint64_t> seeds = run_seeds(cfg);

    std::vector<ComparisonReport> reports(seeds.size());
    parallel_for(seeds.size(), [&](std::size_t i) {
        ScenarioConfig scenario = cfg.scenario;
        scenario.seed = seeds[i];
        Trace trace = build_trace(scenario);
        std::vector<RunSummary> runs;
        for (Policy p : cfg.policies)
            runs.push_back(run_policy_on_trace(scenario, p, trace));
        reports[i] = compare_runs(runs);
    });

    write_compare_series_csv(cfg.out_dir + "/compare_series.csv", reports);
    auto out = std::ofstream(cfg.out_dir + "/compare_summary.json", std::ios::binary);
    out << compare_summary_json(reports).dump(2) << '\n';
    std::cout << "wrote " << cfg.out_dir << "/compare_series.csv and "
              << cfg.out_dir << "/compare_summary.json\n";
    return kExitOk;
}

int cmd_sweep(CliConfig cfg) {
    std::filesystem::create_directories(cfg.out_dir);
    std::vector<double> v_values =
        cfg.sweep.v_values.empty() ? std::vector<double>{cfg.scenario.params.v}
                                   : cfg.sweep.v_values;
    std::vector<double> eps_values = cfg.sweep.epsilon_values.empty()
                                         ? std::vector<double>{cfg.scenario.params.epsilon}
                                         : cfg.sweep.epsilon_values;
    std::vector<std::uint64_t> seeds = run_seeds(cfg);
    std::sort(v_values.begin(), v_values.end());
    std::sort(eps_values.begin(), eps_values.end());
    std::sort(seeds.begin(), seeds.end());

    struct Combo {
        double v, epsilon;
        std::uint64_t seed;
    };
    std::vector<Combo> combos;
    for (double v : v_values)
        for (double eps : eps_values)
            for (std::uint64_t seed : seeds) combos.push_back({v, eps, seed});

    std::vector<TradeoffRow> rows(combos.size());
    parallel_for(combos.size(), [&](std::size_t i) {
        ScenarioConfig scenario = cfg.scenario;
        scenario.params.v = combos[i].v;
        scenario.params.epsilon = combos[i].epsilon;
        scenario.seed = combos[i].seed;
        rows[i] = tradeoff_row(run_policy(scenario, Policy::bts_lo));
    });

    write_sweep_csv(cfg.out_dir + "/sweep.csv", rows);
    std::cout << "wrote " << cfg.out_dir << "/sweep.csv (" << rows.size() << " rows)\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"residential smart-grid scheduling simulator"};
    app.require_subcommand(1);

    std::string config_path;
    std::string policy_name = "bts_lo";
    bool export_inputs = false;
    bool export_value_table = false;
    Overrides ov;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "scenario config file (JSON)")->required();
        sub->add_option("--seed", ov.seed, "override the scenario seed");
        sub->add_option("--out-dir", ov.out_dir, "override the output directory");
        sub->add_option("--v", ov.v, "override the cost/delay tradeoff weight V");
        sub->add_option("--epsilon", ov.epsilon, "override the virtual-queue growth epsilon");
    };

    CLI::App* simulate = app.add_subcommand("simulate", "run one policy, write slot log + summary");
    add_common(simulate);
    simulate->add_option("--policy", policy_name, "bts_lo | bts_dp | pos");
    simulate->add_flag("--export-inputs", export_inputs,
                       "also write state_table.csv and demand_trace.csv");
    simulate->add_flag("--export-value-table", export_value_table,
                       "also write the backward-recursion value table");

    CLI::App* compare = app.add_subcommand("compare", "run all configured policies on shared traces");
    add_common(compare);

    CLI::App* sweep = app.add_subcommand("sweep", "cross-product of (V, epsilon, seed) tradeoff runs");
    add_common(sweep);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitBadConfig;
    }

    try {
        CliConfig cfg = load_config_file(config_path);
        apply_overrides(cfg, ov);
        if (simulate->parsed()) return cmd_simulate(std::move(cfg), policy_name, export_inputs,
                                                    export_value_table);
        if (compare->parsed()) return cmd_compare(std::move(cfg));
        if (sweep->parsed()) return cmd_sweep(std::move(cfg));
        std::cerr << "error: no subcommand\n";
        return kExitBadConfig;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitBadConfig;
    } catch (const PricingViolationError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitBadConfig;
    } catch (const InfeasibleScenarioError& e) {
        std::cerr << "infeasible scenario at slot " << e.slot << ": " << e.what() << '\n';
        return kExitInfeasible;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInternal;
    }
}
