#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "coldcharge/harness.hpp"
#include "coldcharge/ingest.hpp"
#include "coldcharge/thermal.hpp"

using namespace coldcharge;

namespace {

Scenario tiny_scenario() {
    Scenario s;
    s.horizon = 6;
    s.dt_hours = 1.0 / 12.0;
    s.price_cap = 0.1;
    s.ambient = {-10.0, -10.0, -12.0, -12.0, -8.0, -10.0};
    s.price = {0.02, 0.03, 0.08, 0.05, 0.04, 0.02};
    s.pv_cap = {0.0, 1.0, 2.0, 2.0, 1.0, 0.0};
    s.ambient_low = -12.0;
    s.ambient_high = -8.0;
    EvSession ev;
    ev.id = 1;
    ev.t_arrive = 0;
    ev.t_depart = 6;
    ev.e_initial = 20.0;
    ev.e_depart = 21.5;
    ev.e_cap = 50.0;
    ev.t_initial = 4.0;
    s.sessions.push_back(ev);
    return s;
}

Scenario generated_scenario(std::uint64_t seed, int ev_count = 8) {
    GeneratorConfig gc;
    gc.ev_count = ev_count;
    gc.seed = seed;
    return generate_scenario(gc, synthetic_series(288, 1.0 / 12.0, seed));
}

}  // namespace

TEST_CASE("empty scenario: vacuous metrics with fulfillment one") {
    Scenario s = tiny_scenario();
    s.sessions.clear();
    ControllerParams params = make_controller_params(s, 600.0, 20.0);
    auto r = run_episode(s, Method::proposed, params, TruthModel::queue_model);
    CHECK(r.metrics.total_cost == doctest::Approx(0.0));
    CHECK(r.metrics.fulfillment_ratio == doctest::Approx(1.0));
    CHECK(r.metrics.cost_index == doctest::Approx(0.0));
    CHECK(r.metrics.heating_ratio == doctest::Approx(0.0));
}

TEST_CASE("hand-stepped recurrences reproduce the recorded trace") {
    Scenario s = tiny_scenario();
    const EvSession& ev = s.sessions[0];
    ControllerParams params = make_controller_params(s, 600.0, 20.0);
    auto r = run_episode(s, Method::proposed, params, TruthModel::queue_model);
    REQUIRE(r.trace.size() == 6);

    // Independent recurrence stepping of energy (battery bookkeeping),
    // temperature (per-slot loss model), the deadline queue ladder and the
    // debt queue, all driven by the recorded decisions.
    double energy = ev.e_initial;
    double temp = ev.t_initial;
    double theta = params.theta(1);
    std::vector<double> q(8, 0.0);
    q[6] = ev.e_depart - ev.e_initial;  // admitted before slot 0 with r = 6
    double y = 0.0;
    for (int t = 0; t < 6; ++t) {
        const TraceRecord& rec = r.trace[static_cast<size_t>(t)];
        const TraceEv& te = rec.evs.at(0);
        REQUIRE(te.energy == doctest::Approx(energy).epsilon(1e-12));
        REQUIRE(te.temp == doctest::Approx(temp).epsilon(1e-12));
        REQUIRE(te.h == doctest::Approx(temp - theta).epsilon(1e-12));
        int rr = ev.t_depart - t;
        for (int k = 1; k <= 6; ++k)
            REQUIRE(rec.q[static_cast<size_t>(k)] ==
                    doctest::Approx(q[static_cast<size_t>(k)]).epsilon(1e-12));
        REQUIRE(rec.y == doctest::Approx(y).epsilon(1e-12));

        double pc = te.p_charge;
        double ph = te.p_heat;
        energy += 0.95 * pc * (1.0 / 12.0);
        double loss = decay_loss(ev.thermal, s.ambient[static_cast<size_t>(t)]);
        temp = temp - loss + (0.8 * ph + 0.05 * pc) / 0.72;
        double x = 0.95 * pc * (1.0 / 12.0);
        y += q[1] - (rr == 1 ? x : 0.0);
        for (int k = 1; k < 7; ++k)
            q[static_cast<size_t>(k)] = std::max(
                q[static_cast<size_t>(k + 1)] - (rr == k + 1 ? x : 0.0), 0.0);
        q[7] = 0.0;
        q[6] = 0.0;

        REQUIRE(te.energy_after == doctest::Approx(energy).epsilon(1e-12));
        REQUIRE(te.temp_after == doctest::Approx(temp).epsilon(1e-12));
        REQUIRE(rec.y_after == doctest::Approx(y).epsilon(1e-12));

        // Power balance of the recorded slot.
        REQUIRE(rec.p_pv + rec.p_grid ==
                doctest::Approx(pc + ph).epsilon(1e-12));
        REQUIRE(rec.cost ==
                doctest::Approx(rec.price * rec.p_grid / 12.0).epsilon(1e-12));
    }
    CHECK(r.e_final.at(1) == doctest::Approx(energy).epsilon(1e-12));
}

TEST_CASE("identical inputs give bit-identical metrics and traces") {
    Scenario s = generated_scenario(42);
    ControllerParams params = make_controller_params(s, 600.0, 20.0);
    auto r1 = run_episode(s, Method::proposed, params, TruthModel::queue_model, 42);
    auto r2 = run_episode(s, Method::proposed, params, TruthModel::queue_model, 42);
    CHECK(metrics_to_json(r1.metrics) == metrics_to_json(r2.metrics));
    REQUIRE(r1.trace.size() == r2.trace.size());
    for (size_t t = 0; t < r1.trace.size(); ++t) {
        REQUIRE(r1.trace[t].p_grid == r2.trace[t].p_grid);
        REQUIRE(r1.trace[t].y_after == r2.trace[t].y_after);
        for (size_t k = 0; k < r1.trace[t].evs.size(); ++k) {
            REQUIRE(r1.trace[t].evs[k].p_charge == r2.trace[t].evs[k].p_charge);
            REQUIRE(r1.trace[t].evs[k].temp_after == r2.trace[t].evs[k].temp_after);
        }
    }
}

TEST_CASE("queue conservation and energy accounting close") {
    for (std::uint64_t seed : {1ull, 7ull, 23ull}) {
        Scenario s = generated_scenario(seed, 12);
        ControllerParams params = make_controller_params(s, 600.0, 20.0);
        for (Method m : {Method::proposed, Method::b1, Method::b2, Method::noheat}) {
            auto r = run_episode(s, m, params, TruthModel::queue_model, seed);
            double closed = r.delivered_total + r.terminal_queue_mass + r.y_final;
            CHECK(std::fabs(closed - r.admitted_demand) < 1e-6);

            double supplied = 0.0;
            double consumed = 0.0;
            for (const auto& rec : r.trace) {
                supplied += (rec.p_pv + rec.p_grid) * s.dt_hours;
                for (const auto& te : rec.evs)
                    consumed += (te.p_charge + te.p_heat) * s.dt_hours;
            }
            CHECK(std::fabs(supplied - consumed) < 1e-6);
        }
    }
}

TEST_CASE("per-EV delivery never exceeds demand or headroom") {
    Scenario s = generated_scenario(5, 15);
    ControllerParams params = make_controller_params(s, 600.0, 20.0);
    for (Method m : {Method::proposed, Method::b1, Method::b2, Method::noheat}) {
        auto r = run_episode(s, m, params, TruthModel::queue_model);
        for (const auto& ev : s.sessions) {
            CHECK(r.delivered.at(ev.id) <= ev.demand() + 1e-9);
            CHECK(r.e_final.at(ev.id) <= ev.e_cap + 1e-9);
        }
    }
}

TEST_CASE("proposed policy keeps temperatures in the band") {
    for (std::uint64_t seed : {3ull, 9ull, 31ull}) {
        Scenario s = generated_scenario(seed, 10);
        ControllerParams params = make_controller_params(s, 600.0, 20.0);
        auto r = run_episode(s, Method::proposed, params, TruthModel::queue_model);
        CHECK(r.metrics.assumption_failures == 0);
        CHECK(r.metrics.temperature_violations == 0);
    }
}

TEST_CASE("exact truth model keeps the backlog identity") {
    Scenario s = generated_scenario(11, 4);
    ControllerParams params = make_controller_params(s, 600.0, 20.0);
    auto r = run_episode(s, Method::proposed, params, TruthModel::exact);
    for (const auto& rec : r.trace)
        for (const auto& te : rec.evs)
            REQUIRE(te.h == doctest::Approx(te.temp - params.theta(te.id)).epsilon(1e-9));
}

TEST_CASE("trace replay reproduces states through the dynamics") {
    Scenario s = generated_scenario(19, 6);
    ControllerParams params = make_controller_params(s, 600.0, 20.0);
    auto r = run_episode(s, Method::proposed, params, TruthModel::queue_model);
    std::map<int, const EvSession*> by_id;
    for (const auto& ev : s.sessions) by_id[ev.id] = &ev;
    std::map<int, double> energy, temp;
    for (const auto& rec : r.trace) {
        for (const auto& te : rec.evs) {
            const ThermalParams& tp = by_id.at(te.id)->thermal;
            if (!energy.count(te.id)) {
                energy[te.id] = by_id.at(te.id)->e_initial;
                temp[te.id] = by_id.at(te.id)->t_initial;
            }
            REQUIRE(te.energy == doctest::Approx(energy[te.id]).epsilon(1e-9));
            REQUIRE(te.temp == doctest::Approx(temp[te.id]).epsilon(1e-9));
            energy[te.id] += tp.delta_c * te.p_charge * s.dt_hours;
            temp[te.id] = step_queue(temp[te.id],
                                     decay_loss(tp, rec.ambient), te.p_charge,
                                     te.p_heat, tp);
        }
    }
}

TEST_CASE("metric arithmetic from a synthetic trace") {
    // One 100 kWh request served 98.73 kWh at a total cost of 91.44.
    EvSession ev;
    ev.id = 1;
    ev.t_arrive = 0;
    ev.t_depart = 1;
    ev.e_initial = 0.0;
    ev.e_depart = 100.0;
    ev.e_cap = 200.0;
    ev.t_initial = 5.0;
    ev.thermal.delta_c = 1.0;

    TraceRecord rec;
    rec.slot = 0;
    rec.cost = 91.44;
    TraceEv te;
    te.id = 1;
    te.p_charge = 98.73;
    te.temp_after = 5.0;
    rec.evs.push_back(te);
    rec.y_after = 0.0;

    auto m = compute_metrics({rec}, {ev}, 1.0, 1);
    CHECK(m.fulfillment_ratio == doctest::Approx(0.9873));
    CHECK(m.cost_index == doctest::Approx(0.9262).epsilon(1e-4));
    CHECK(m.heating_ratio == doctest::Approx(0.0));

    // Half-served demand.
    rec.evs[0].p_charge = 50.0;
    m = compute_metrics({rec}, {ev}, 1.0, 1);
    CHECK(m.fulfillment_ratio == doctest::Approx(0.5));
}

TEST_CASE("offline trace shares the metric path") {
    Scenario s = tiny_scenario();
    auto sol = offline_solve(s, default_alpha(s));
    auto trace = offline_trace(sol, s);
    REQUIRE(trace.size() == 6);
    auto m = offline_metrics(sol, s);
    CHECK(m.total_cost == doctest::Approx(sol.energy_cost).epsilon(1e-9));
    CHECK(m.temperature_violations == 0);
}

TEST_CASE("offline method is rejected by the episode loop") {
    Scenario s = tiny_scenario();
    ControllerParams params = make_controller_params(s, 600.0, 20.0);
    CHECK_THROWS_AS(run_episode(s, Method::offline, params, TruthModel::queue_model),
                    std::invalid_argument);
}

TEST_CASE("theorem-1 mode rejects V beyond V_max") {
    Scenario s = tiny_scenario();
    ControllerParams ok = make_controller_params(s, 600.0, 20.0);
    CHECK(ok.v_max > 600.0);
    CHECK_THROWS_AS(make_controller_params(s, ok.v_max * 1.5, 20.0),
                    std::invalid_argument);
    // Permissive mode allows it.
    ControllerParams loose = make_controller_params(s, ok.v_max * 1.5, 20.0, false);
    CHECK(loose.v_weight > ok.v_max);
}
