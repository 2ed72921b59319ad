#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "resgrid/dp.hpp"
#include "resgrid/rng.hpp"

using namespace resgrid;

namespace {

SlotObservation slot(double p, double gamma, double supply, double essential, double arrivals,
                     double grid_cap) {
    SlotObservation obs;
    obs.buy_price = p;
    obs.sell_price = gamma;
    obs.supply = supply;
    obs.essential = essential;
    obs.arrivals = arrivals;
    obs.grid_cap = grid_cap;
    obs.supply_cap = supply;
    return obs;
}

// Random toy instance with dyadic prices and integer quantities so every
// intermediate sum is exactly representable.
std::vector<SlotObservation> random_toy(Rng& rng, int horizon) {
    std::vector<SlotObservation> trace;
    for (int t = 0; t < horizon; ++t) {
        double gamma = 0.25 * (1 + uniform_int(rng, 3));          // 0.25 .. 1.0
        double p = gamma + 0.25 * uniform_int(rng, 3);            // p >= gamma
        double supply = uniform_int(rng, 4);
        double grid_cap = 1.0 + uniform_int(rng, 4);
        double essential = uniform_int(
            rng, static_cast<int>(std::min(supply + grid_cap, 4.0)));
        double arrivals = uniform_int(rng, 3);
        trace.push_back(slot(p, gamma, supply, essential, arrivals, grid_cap));
    }
    return trace;
}

DpGrid unit_grid(int horizon) {
    DpGrid grid;
    grid.q_step = 1.0;
    grid.u_step = 1.0;
    grid.q_cap = -1.0;
    grid.horizon = horizon;
    return grid;
}

} // namespace

TEST_CASE("single slot with empty queue reduces to the myopic essential optimum") {
    auto trace = std::vector<SlotObservation>{slot(0.5, 0.25, 3.0, 2.0, 0.0, 5.0)};
    auto table = solve_backward(trace, unit_grid(1));
    // stage-1 split, residual sold, nothing queued
    EssentialSplit split = stage1_essential(trace[0]);
    double expected = trace[0].buy_price * split.grid -
                      trace[0].sell_price * (trace[0].supply - split.renew);
    CHECK(table.initial_cost(0.0) == expected);
}

TEST_CASE("all-zero trace costs nothing") {
    std::vector<SlotObservation> trace(3, slot(0.5, 0.25, 0.0, 0.0, 0.0, 2.0));
    auto table = solve_backward(trace, unit_grid(3));
    CHECK(table.initial_cost(0.0) == 0.0);
    CHECK(enumerate_oracle(trace, unit_grid(3)) == 0.0);
}

TEST_CASE("backward recursion equals exhaustive enumeration on a toy corpus") {
    Rng rng(31337);
    int checked = 0;
    for (int instance = 0; instance < 30; ++instance) {
        int horizon = 1 + instance % 3;
        auto trace = random_toy(rng, horizon);
        double q0 = uniform_int(rng, 3);
        DpGrid grid = unit_grid(horizon);
        auto table = solve_backward(trace, grid, q0);
        double brute = enumerate_oracle(trace, grid, q0);
        REQUIRE(table.initial_cost(q0) == brute); // exact, including bit pattern
        ++checked;
    }
    CHECK(checked >= 20);
}

TEST_CASE("terminal penalty is inactive when the optimum clears the backlog") {
    // cheap night-style service: serving is always cheaper than the penalty
    std::vector<SlotObservation> trace{slot(0.25, 0.25, 2.0, 0.0, 1.0, 6.0),
                                       slot(0.25, 0.25, 2.0, 0.0, 0.0, 6.0),
                                       slot(0.25, 0.25, 2.0, 0.0, 0.0, 6.0)};
    DpGrid grid = unit_grid(3);
    auto base = solve_backward(trace, grid, 2.0, 1.0);
    auto doubled = solve_backward(trace, grid, 2.0, 2.0);
    auto rolled = rollout(base, trace, grid, 2.0);
    REQUIRE(rolled.terminal_backlog == 0.0);
    CHECK(base.initial_cost(2.0) == doubled.initial_cost(2.0));
}

TEST_CASE("raising the grid cap never raises the optimum") {
    Rng rng(99);
    for (int instance = 0; instance < 10; ++instance) {
        auto trace = random_toy(rng, 3);
        DpGrid grid = unit_grid(3);
        auto tight = solve_backward(trace, grid, 2.0);
        for (auto& obs : trace) obs.grid_cap += 2.0;
        auto relaxed = solve_backward(trace, grid, 2.0);
        CHECK(relaxed.initial_cost(2.0) <= tight.initial_cost(2.0) + 1e-12);
    }
}

TEST_CASE("grid refinement stays within one discretization-error bound") {
    Rng rng(7);
    for (int instance = 0; instance < 10; ++instance) {
        auto trace = random_toy(rng, 3);
        DpGrid coarse = unit_grid(3);
        DpGrid fine = coarse;
        fine.q_step = 0.5;
        fine.u_step = 0.5;
        double p_max = 0.0;
        for (const auto& obs : trace) p_max = std::max(p_max, obs.buy_price);
        double bound = coarse.q_step * p_max * 3;
        double j_coarse = solve_backward(trace, coarse, 1.0).initial_cost(1.0);
        double j_fine = solve_backward(trace, fine, 1.0).initial_cost(1.0);
        CHECK(j_fine <= j_coarse + bound + 1e-12);
    }
}

TEST_CASE("rollout reproduces the cost-to-go and keeps the balance identities") {
    Rng rng(55);
    for (int instance = 0; instance < 10; ++instance) {
        auto trace = random_toy(rng, 3);
        DpGrid grid = unit_grid(3);
        double q0 = uniform_int(rng, 2);
        auto table = solve_backward(trace, grid, q0);
        auto rolled = rollout(table, trace, grid, q0);
        REQUIRE(rolled.steps.size() == trace.size());
        CHECK(rolled.cost_with_terminal == table.initial_cost(q0)); // dyadic, exact
        for (std::size_t t = 0; t < trace.size(); ++t) {
            const Dispatch& d = rolled.steps[t].dispatch;
            CHECK(std::abs(d.renew_essential + d.renew_shiftable + d.renew_sold + d.curtailed -
                           trace[t].supply) <= 1e-9);
            CHECK(std::abs(d.grid_essential + d.renew_essential - trace[t].essential) <= 1e-9);
        }
    }
}

TEST_CASE("perfect information beats the online controller within discretization slack") {
    // two-tier prices over two days, seeded arrivals
    Rng rng(2718);
    std::vector<SlotObservation> trace;
    const int horizon = 48;
    for (int t = 0; t < horizon; ++t) {
        bool day = (t % 24) >= 8;
        double supply = 0.25 * uniform_int(rng, 16); // 0..4 kWh
        double essential = 0.25 * uniform_int(rng, 8);
        double arrivals = uniform_int(rng, 2);
        trace.push_back(slot(day ? 0.3 : 0.1, day ? 0.2 : 0.1, supply, essential, arrivals, 8.0));
    }
    DpGrid grid;
    grid.q_step = 0.25;
    grid.u_step = 0.25;
    grid.horizon = horizon;
    auto table = solve_backward(trace, grid, 0.0);
    auto rolled = rollout(table, trace, grid, 0.0);

    LyapunovParams params{10.0, 1.0};
    QueueState queues;
    double online_cost = 0.0;
    for (const auto& obs : trace) {
        auto decision = decide_slot(obs, queues, params);
        online_cost += instantaneous_cost(decision.dispatch, obs);
        queues = update_queues(queues, decision.dispatch.served_shiftable(), obs.arrivals,
                               params.epsilon);
    }
    double slack = 2.0 * grid.q_step * 0.3 * horizon;
    CHECK(rolled.total_cost <= online_cost + slack);
}

TEST_CASE("enumeration guards its instance size") {
    auto trace = std::vector<SlotObservation>(6, slot(0.5, 0.25, 1.0, 0.0, 0.0, 1.0));
    DpGrid grid = unit_grid(6);
    CHECK_THROWS_AS(enumerate_oracle(trace, grid), std::length_error);

    std::vector<SlotObservation> wide(5, slot(0.5, 0.25, 100.0, 0.0, 0.0, 100.0));
    DpGrid tiny = unit_grid(5);
    tiny.u_step = 0.015625;
    CHECK_THROWS_AS(enumerate_oracle(wide, tiny), std::length_error);
}

TEST_CASE("infeasible traces are rejected with the offending slot") {
    std::vector<SlotObservation> trace{slot(0.5, 0.25, 1.0, 1.0, 0.0, 4.0),
                                       slot(0.5, 0.25, 1.0, 9.0, 0.0, 4.0)};
    DpGrid grid = unit_grid(2);
    try {
        solve_backward(trace, grid);
        FAIL("expected InfeasibleScenarioError");
    } catch (const InfeasibleScenarioError& e) {
        CHECK(e.slot == 1);
    }
}
