#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "coldcharge/controller.hpp"
#include "coldcharge/simplex.hpp"

using namespace coldcharge;

namespace {

ThermalParams reference_params() { return ThermalParams{}; }

ThermalBounds reference_bounds() {
    ThermalBounds b;
    b.dT_loss_min = 0.9;
    b.dT_loss_max = 1.256;
    b.dT_gain_max = 3.8333;
    return b;
}

SlotProblem random_problem(std::mt19937_64& rng, int max_evs) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    SlotProblem prob;
    int n = 1 + static_cast<int>(u01(rng) * max_evs);
    if (n > max_evs) n = max_evs;
    for (int i = 0; i < n; ++i) {
        SlotEv ev;
        ev.id = i + 1;
        ev.w_charge = -60.0 + 65.0 * u01(rng);
        ev.w_heat = -5.0 + 10.0 * u01(rng);
        if (u01(rng) < 0.1) ev.w_heat = ev.w_charge;
        ev.cap_charge = 7.0 * u01(rng);
        ev.cap_heat = 3.5 * u01(rng);
        ev.cap_joint = (ev.cap_charge + ev.cap_heat + 2.0) * u01(rng);
        if (u01(rng) < 0.05) ev.cap_joint = 0.0;
        prob.evs.push_back(ev);
    }
    prob.pv_free = u01(rng) < 0.15 ? 0.0 : 15.0 * u01(rng);
    prob.grid_unit_cost = u01(rng) < 0.1 ? 0.0 : 8.0 * u01(rng);
    return prob;
}

bool decision_feasible(const SlotProblem& prob, const SlotDecision& d, double tol) {
    double total = 0.0;
    for (const auto& ev : prob.evs) {
        double pc = d.p_charge.at(ev.id);
        double ph = d.p_heat.at(ev.id);
        if (pc < -tol || pc > ev.cap_charge + tol) return false;
        if (ph < -tol || ph > ev.cap_heat + tol) return false;
        if (pc + ph > ev.cap_joint + tol) return false;
        total += pc + ph;
    }
    if (d.p_pv < -tol || d.p_pv > prob.pv_free + tol) return false;
    if (d.p_grid < -tol) return false;
    return std::fabs(d.p_pv + d.p_grid - total) <= tol;
}

}  // namespace

TEST_CASE("theta synthesis") {
    auto p = reference_params();
    auto b = reference_bounds();
    double theta = compute_theta(p, b, 600.0, 0.1, 1.0 / 12.0);
    CHECK(theta == doctest::Approx(4.5 + 1.256).epsilon(1e-12));

    // Tiny V leaves only the loss and lower-bound terms.
    CHECK(compute_theta(p, b, 1e-12, 0.1, 1.0 / 12.0) ==
          doctest::Approx(1.256 + 0.0).epsilon(1e-6));

    // Doubling the price cap doubles the first term only.
    double theta2 = compute_theta(p, b, 600.0, 0.2, 1.0 / 12.0);
    CHECK(theta2 - theta == doctest::Approx(4.5).epsilon(1e-12));

    CHECK_THROWS_AS(compute_theta(p, b, 0.0, 0.1, 1.0 / 12.0), std::invalid_argument);
}

TEST_CASE("admissible V range") {
    auto p = reference_params();
    auto b = reference_bounds();
    double vmax = compute_v_max(p, b, 0.1, 1.0 / 12.0);
    CHECK(vmax == doctest::Approx((20.0 - 2.9333 - 1.256) / 0.0075).epsilon(1e-4));
    CHECK(600.0 < vmax);

    // Halving the price cap doubles V_max.
    CHECK(compute_v_max(p, b, 0.05, 1.0 / 12.0) == doctest::Approx(2.0 * vmax));

    // Band exactly as wide as the two excesses: no admissible V. Round
    // bounds keep the arithmetic exact in floating point.
    ThermalBounds tight;
    tight.dT_gain_max = 3.0;
    tight.dT_loss_min = 1.0;
    tight.dT_loss_max = 1.0;
    ThermalParams narrow = p;
    narrow.t_low = 0.0;
    narrow.t_high = 3.0;  // equals (3.0 - 1.0) + 1.0
    CHECK_THROWS_AS(compute_v_max(narrow, tight, 0.1, 1.0 / 12.0), std::domain_error);
}

TEST_CASE("per-slot assumption checks") {
    auto p = reference_params();
    auto v = check_assumptions(p, 0.0, 1.256);
    CHECK(v.charge_heat_ok);  // 0.05*4.8/0.72 = 0.3333 <= 1.256
    CHECK(v.heating_ok);      // 0.8*min(3.0, 2.6)/0.72 = 2.8889 >= 1.256

    // Perfect charging efficiency makes the first check vacuous.
    ThermalParams perfect = p;
    perfect.delta_c = 1.0;
    CHECK(check_assumptions(perfect, 20.0, 1e-9).charge_heat_ok);

    // Tiny loss with a large charge rate breaks the first check.
    ThermalParams hot = p;
    hot.p_c_base = 40.0;
    CHECK_FALSE(check_assumptions(hot, 0.0, 0.5).charge_heat_ok);

    // The heating check fails when the charger hogs the joint cap.
    CHECK_FALSE(check_assumptions(p, 20.0, 1.256).heating_ok);
}

TEST_CASE("slot problem assembly hand values") {
    QueueState qs(3);
    EvSession ev;
    ev.id = 1;
    ev.t_arrive = 1;
    ev.t_depart = 2;  // r = 1 at slot 1
    ev.e_initial = 10.0;
    ev.e_depart = 30.0;
    ev.t_initial = 5.0;
    qs.admit_arrivals({{&ev, 6.0}}, 0);
    REQUIRE(qs.q(1) == doctest::Approx(20.0));
    qs.debt_update(15.0, 0.0);  // plant Y = 15

    ControllerParams params;
    params.v_weight = 600.0;
    params.gamma = 20.0;

    PresentEv pe;
    pe.id = 1;
    pe.r = 1;
    pe.temperature = 5.0;
    pe.h_backlog = -1.0;
    pe.demand_remaining = 20.0;
    pe.headroom = 40.0;
    ThermalParams tp;
    pe.thermal = &tp;

    auto prob = assemble_slot_problem(qs, {pe}, 0.08, 6.0, params, 1.0 / 12.0);
    REQUIRE(prob.evs.size() == 1);
    CHECK(prob.evs[0].w_charge ==
          doctest::Approx(-31.6667 - 23.75 - 0.069444).epsilon(1e-4));
    CHECK(prob.grid_unit_cost == doctest::Approx(600.0 * 0.08 / 12.0).epsilon(1e-12));
    CHECK(prob.evs[0].cap_heat == doctest::Approx(3.0 - 0.024 * 5.0));
    CHECK(prob.evs[0].cap_joint == doctest::Approx(7.4));

    // Heating slope from the backlog alone.
    pe.h_backlog = -3.0;
    prob = assemble_slot_problem(qs, {pe}, 0.08, 6.0, params, 1.0 / 12.0);
    CHECK(prob.evs[0].w_heat == doctest::Approx(-3.0 * 0.8 / 0.72).epsilon(1e-10));

    // Positive backlog with empty queues: both slopes non-negative.
    QueueState empty(3);
    pe.h_backlog = 2.0;
    prob = assemble_slot_problem(empty, {pe}, 0.08, 6.0, params, 1.0 / 12.0);
    CHECK(prob.evs[0].w_charge >= 0.0);
    CHECK(prob.evs[0].w_heat >= 0.0);

    // The demand cap binds the charge cap once the request is nearly served.
    pe.demand_remaining = 0.1;
    prob = assemble_slot_problem(empty, {pe}, 0.08, 6.0, params, 1.0 / 12.0);
    CHECK(prob.evs[0].cap_charge == doctest::Approx(0.1 / (0.95 / 12.0)));
}

TEST_CASE("greedy solver hand instance with brute-force confirmation") {
    SlotProblem prob;
    prob.evs.push_back({1, -55.486, 1.0, 4.8, 3.0, 7.4});
    prob.pv_free = 10.0;
    prob.grid_unit_cost = 5.0;
    auto sol = solve_slot_detailed(prob);
    CHECK(sol.decision.p_charge.at(1) == doctest::Approx(4.8));
    CHECK(sol.decision.p_heat.at(1) == doctest::Approx(0.0));
    CHECK(sol.decision.p_pv == doctest::Approx(4.8));

    // 0.01 kW brute force over the single EV's box.
    double best = 1e30;
    for (double pc = 0.0; pc <= 4.8 + 1e-9; pc += 0.01)
        for (double ph = 0.0; ph <= 3.0 + 1e-9; ph += 0.01) {
            if (pc + ph > 7.4) break;
            SlotDecision d;
            d.p_charge[1] = pc;
            d.p_heat[1] = ph;
            best = std::min(best, slot_objective(prob, d));
        }
    CHECK(sol.objective <= best + 1e-9);
    CHECK(sol.objective >= best - (55.486 + 1.0 + 5.0) * 0.01);
}

TEST_CASE("all-non-negative slopes yield the zero decision") {
    SlotProblem prob;
    prob.evs.push_back({1, 0.0, 0.5, 4.8, 3.0, 7.4});
    prob.evs.push_back({2, 2.0, 0.0, 4.8, 3.0, 7.4});
    prob.pv_free = 10.0;
    prob.grid_unit_cost = 1.0;
    auto sol = solve_slot_detailed(prob);
    CHECK(sol.objective == doctest::Approx(0.0));
    for (const auto& [id, p] : sol.decision.p_charge) CHECK(p == doctest::Approx(0.0));
    for (const auto& [id, p] : sol.decision.p_heat) CHECK(p == doctest::Approx(0.0));
}

TEST_CASE("greedy equals the LP oracle on random instances") {
    std::mt19937_64 rng(4242);
    for (int k = 0; k < 1500; ++k) {
        SlotProblem prob = random_problem(rng, 5);
        auto greedy = solve_slot_detailed(prob);
        auto lp = lp_solve_p3(prob);
        double gap = std::fabs(greedy.objective - lp.objective) /
                     std::max(1.0, std::fabs(lp.objective));
        REQUIRE(gap <= 1e-7);
        REQUIRE(decision_feasible(prob, greedy.decision, 1e-9));
        REQUIRE(decision_feasible(prob, lp.decision, 1e-9));
    }
}

TEST_CASE("forced-heating and no-heating properties") {
    std::mt19937_64 rng(777);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    ThermalParams p;
    int forced_seen = 0;
    for (int k = 0; k < 2000; ++k) {
        double v_lambda_dt = 0.5 * u01(rng);
        double h = -6.0 + 9.0 * u01(rng);
        SlotProblem prob;
        SlotEv ev;
        ev.id = 1;
        ev.w_charge = -10.0 + 12.0 * u01(rng);
        ev.w_heat = h * p.delta_h / p.q;
        ev.cap_charge = 7.0 * u01(rng);
        ev.cap_heat = 3.0 * u01(rng);
        ev.cap_joint = 7.4;
        prob.evs.push_back(ev);
        prob.pv_free = 4.0 * u01(rng);
        prob.grid_unit_cost = v_lambda_dt;
        auto d = solve_slot(prob);
        if (v_lambda_dt + p.delta_h * h / p.q < 0.0) {
            // Heating is profitable even at the grid price: driven to the cap.
            double expected =
                std::min(ev.cap_heat, ev.cap_joint - d.p_charge.at(1));
            REQUIRE(d.p_heat.at(1) == doctest::Approx(expected).epsilon(1e-9));
            ++forced_seen;
        }
        if (h > 0.0) REQUIRE(d.p_heat.at(1) == doctest::Approx(0.0));
    }
    CHECK(forced_seen > 100);  // the property branch was actually exercised
}

TEST_CASE("drift bound constant") {
    ObservedMaxima m;
    m.q_max.assign(4, 0.0);
    m.a_max.assign(4, 0.0);
    m.x_max.assign(4, 0.0);
    CHECK(drift_bound_B(m, 20.0, 3) == doctest::Approx(0.0));

    // Single active term: one EV with a loss bound of 2.
    m.dtd_max[1] = 2.0;
    CHECK(drift_bound_B(m, 20.0, 3) == doctest::Approx(2.0));
}

TEST_CASE("drift bound agrees with an independent evaluation") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    int r_max = 6;
    ObservedMaxima m;
    m.q_max.assign(static_cast<size_t>(r_max) + 1, 0.0);
    m.a_max.assign(static_cast<size_t>(r_max) + 1, 0.0);
    m.x_max.assign(static_cast<size_t>(r_max) + 1, 0.0);
    for (int r = 1; r <= r_max; ++r) {
        m.q_max[static_cast<size_t>(r)] = 40.0 * u01(rng);
        m.a_max[static_cast<size_t>(r)] = 20.0 * u01(rng);
        m.x_max[static_cast<size_t>(r)] = 2.0 * u01(rng);
    }
    m.y_max = 30.0 * u01(rng);
    for (int i = 1; i <= 4; ++i) {
        m.dtc_max[i] = 4.0 * u01(rng);
        m.dtd_max[i] = 3.0 * u01(rng);
    }
    double gamma = 20.0;

    // Second, independently coded evaluation of the same expression.
    auto q_at = [&](int r) {
        return r <= r_max ? m.q_max[static_cast<size_t>(r)] : 0.0;
    };
    double expected = gamma / (2.0 * (r_max + 1)) * q_at(r_max + 1) * q_at(r_max + 1) +
                      0.25 * gamma * q_at(1) * q_at(1) + gamma * m.y_max * q_at(1);
    for (int r = 1; r <= r_max; ++r) {
        expected += gamma * (std::pow(m.a_max[static_cast<size_t>(r)], 2) +
                             2.0 * q_at(r + 1) * m.a_max[static_cast<size_t>(r)]) /
                    (2.0 * (r + 1));
        expected += gamma * std::pow(m.x_max[static_cast<size_t>(r)], 2) / (2.0 * r);
    }
    for (int i = 1; i <= 4; ++i)
        expected += 0.5 * std::max(m.dtc_max[i] * m.dtc_max[i], m.dtd_max[i] * m.dtd_max[i]);

    CHECK(drift_bound_B(m, gamma, r_max) == doctest::Approx(expected).epsilon(1e-12));
}
