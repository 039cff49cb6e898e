#include "coldcharge/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "coldcharge/thermal.hpp"

namespace coldcharge {

ControllerParams make_controller_params(const Scenario& s, double v, double gamma,
                                        bool theorem1_mode) {
    ControllerParams params;
    params.v_weight = v;
    params.gamma = gamma;
    params.theorem1_mode = theorem1_mode;
    params.v_max = std::numeric_limits<double>::infinity();
    for (const auto& ev : s.sessions) {
        ThermalBounds b = thermal_bounds(ev.thermal, s.ambient_low, s.ambient_high);
        params.v_max =
            std::min(params.v_max, compute_v_max(ev.thermal, b, s.price_cap, s.dt_hours));
        params.theta_by_ev[ev.id] =
            compute_theta(ev.thermal, b, v, s.price_cap, s.dt_hours);
    }
    if (theorem1_mode && v > params.v_max + 1e-9) {
        std::ostringstream msg;
        msg << "make_controller_params: V=" << v << " exceeds V_max=" << params.v_max;
        throw std::invalid_argument(msg.str());
    }
    return params;
}

namespace {

struct LiveEv {
    const EvSession* session = nullptr;
    EvRuntimeState state;
    ThermostatState thermostat;
    double delivered = 0.0;
};

void validate_decision(const SlotDecision& d, const std::vector<PresentEv>& evs,
                       double pv_cap) {
    constexpr double kTol = 1e-9;
    double total = 0.0;
    for (const auto& ev : evs) {
        const ThermalParams& p = *ev.thermal;
        double pc = d.p_charge.count(ev.id) ? d.p_charge.at(ev.id) : 0.0;
        double ph = d.p_heat.count(ev.id) ? d.p_heat.at(ev.id) : 0.0;
        if (pc < -kTol || pc > peak_charge_rate(p, ev.temperature) + kTol)
            throw std::logic_error("run_episode: charging power outside its rate cap");
        if (ph < -kTol || ph > peak_heat_rate(p, ev.temperature) + kTol)
            throw std::logic_error("run_episode: heating power outside its rate cap");
        if (pc + ph > p.p_total + kTol)
            throw std::logic_error("run_episode: joint power cap violated");
        total += pc + ph;
    }
    if (d.p_pv < -kTol || d.p_pv > pv_cap + kTol)
        throw std::logic_error("run_episode: PV draw outside [0, pv_cap]");
    if (d.p_grid < -kTol)
        throw std::logic_error("run_episode: negative grid draw");
    if (std::fabs(d.p_pv + d.p_grid - total) > kTol)
        throw std::logic_error("run_episode: power balance violated");
}

}  // namespace

EpisodeResult run_episode(const Scenario& s, Method method,
                          const ControllerParams& params, TruthModel truth,
                          std::uint64_t /*seed*/) {
    if (method == Method::offline)
        throw std::invalid_argument("run_episode: use offline_solve for the clairvoyant schedule");

    int r_max = 1;
    for (const auto& ev : s.sessions) r_max = std::max(r_max, ev.duration());

    EpisodeResult result;
    result.r_max = r_max;
    result.maxima.q_max.assign(static_cast<size_t>(r_max) + 1, 0.0);
    result.maxima.a_max.assign(static_cast<size_t>(r_max) + 1, 0.0);
    result.maxima.x_max.assign(static_cast<size_t>(r_max) + 1, 0.0);

    QueueState queues(r_max);
    std::map<int, LiveEv> live;
    std::map<int, ThermostatState> thermostats;

    auto admit_for = [&](int t_now) {
        std::vector<ArrivalAdmit> arrivals;
        std::vector<double> a_by_r(static_cast<size_t>(r_max) + 1, 0.0);
        for (const auto& ev : s.sessions) {
            if (ev.t_arrive != t_now + 1) continue;
            arrivals.push_back({&ev, params.theta(ev.id)});
            a_by_r[static_cast<size_t>(ev.t_depart - (t_now + 1))] += ev.demand();
            LiveEv le;
            le.session = &ev;
            le.state.energy = ev.e_initial;
            le.state.temperature = ev.t_initial;
            le.state.theta = params.theta(ev.id);
            le.state.h_backlog = ev.t_initial - le.state.theta;
            live[ev.id] = le;
            result.admitted_demand += ev.demand();
            result.e_final[ev.id] = ev.e_initial;
            result.delivered[ev.id] = 0.0;
        }
        queues.admit_arrivals(arrivals, t_now);
        for (int r = 1; r <= r_max; ++r)
            result.maxima.a_max[static_cast<size_t>(r)] = std::max(
                result.maxima.a_max[static_cast<size_t>(r)], a_by_r[static_cast<size_t>(r)]);
    };
    admit_for(-1);  // sessions already on site at slot 0

    for (int t = 0; t < s.horizon; ++t) {
        double price = s.price[static_cast<size_t>(t)];
        double pv_cap = s.pv_cap[static_cast<size_t>(t)];
        double ambient = s.ambient[static_cast<size_t>(t)];

        std::vector<PresentEv> present;
        for (auto& [id, le] : live) {
            const EvSession& ev = *le.session;
            PresentEv pe;
            pe.id = id;
            pe.r = ev.t_depart - t;
            pe.temperature = le.state.temperature;
            pe.h_backlog = le.state.h_backlog;
            pe.demand_remaining = std::max(0.0, ev.demand() - le.delivered);
            pe.headroom = std::max(0.0, ev.e_cap - le.state.energy);
            pe.thermal = &ev.thermal;
            present.push_back(pe);
        }

        for (int r = 1; r <= r_max; ++r)
            result.maxima.q_max[static_cast<size_t>(r)] =
                std::max(result.maxima.q_max[static_cast<size_t>(r)], queues.q(r));
        result.maxima.y_max = std::max(result.maxima.y_max, queues.y_debt());

        SlotContext ctx{&queues, &present, price, pv_cap, &params, s.dt_hours};
        SlotDecision decision;
        SlotProblem problem;
        std::vector<AllocStep> alloc;
        switch (method) {
            case Method::proposed: {
                problem = assemble_slot_problem(queues, present, price, pv_cap, params,
                                                s.dt_hours);
                SlotSolution sol = solve_slot_detailed(problem);
                decision = std::move(sol.decision);
                alloc = std::move(sol.order);
                break;
            }
            case Method::b1:
                decision = b1_decide(ctx, thermostats);
                break;
            case Method::b2:
                decision = b2_decide(ctx, thermostats);
                break;
            case Method::noheat:
                decision = noheat_decide(ctx);
                break;
            case Method::offline:
                break;  // rejected above
        }
        validate_decision(decision, present, pv_cap);

        TraceRecord rec;
        rec.slot = t;
        rec.price = price;
        rec.pv_cap = pv_cap;
        rec.ambient = ambient;
        rec.p_pv = decision.p_pv;
        rec.p_grid = decision.p_grid;
        rec.cost = price * decision.p_grid * s.dt_hours;
        rec.q = queues.q_snapshot();
        rec.y = queues.y_debt();
        for (const auto& step : alloc) {
            std::ostringstream tag;
            tag << step.ev_id << (step.heating ? 'h' : 'c');
            rec.alloc.push_back(tag.str());
        }

        // State stepping and queue updates.
        std::vector<EvGroup> groups;
        for (const auto& pe : present)
            groups.push_back({pe.id, pe.r, pe.thermal->delta_c});
        std::vector<double> x =
            x_from_decisions(decision, groups, s.dt_hours, r_max);
        for (int r = 1; r <= r_max; ++r)
            result.maxima.x_max[static_cast<size_t>(r)] =
                std::max(result.maxima.x_max[static_cast<size_t>(r)], x[static_cast<size_t>(r)]);

        for (const auto& pe : present) {
            LiveEv& le = live[pe.id];
            const ThermalParams& tp = *pe.thermal;
            double pc = decision.p_charge.at(pe.id);
            double ph = decision.p_heat.count(pe.id) ? decision.p_heat.at(pe.id) : 0.0;
            double dT_loss = decay_loss(tp, ambient);
            double gain = temp_gain(pc, ph, tp);
            AssumptionVerdict verdict = check_assumptions(tp, le.state.temperature, dT_loss);

            TraceEv tev;
            tev.id = pe.id;
            tev.energy = le.state.energy;
            tev.temp = le.state.temperature;
            tev.h = le.state.h_backlog;
            tev.p_charge = pc;
            tev.p_heat = ph;
            tev.cap_charge = peak_charge_rate(tp, le.state.temperature);
            tev.cap_heat = peak_heat_rate(tp, le.state.temperature);
            if (method == Method::proposed) {
                for (const auto& se : problem.evs) {
                    if (se.id != pe.id) continue;
                    tev.w_charge = se.w_charge;
                    tev.w_heat = se.w_heat;
                }
            }
            tev.charge_heat_ok = verdict.charge_heat_ok;
            tev.heating_ok = verdict.heating_ok;

            double delivered = tp.delta_c * pc * s.dt_hours;
            le.delivered += delivered;
            le.state.energy += delivered;
            result.delivered[pe.id] = le.delivered;
            result.e_final[pe.id] = le.state.energy;

            double t_old = le.state.temperature;
            le.state.temperature = truth == TruthModel::queue_model
                                       ? step_queue(t_old, dT_loss, pc, ph, tp)
                                       : step_exact(t_old, ambient, pc, ph, tp);
            // The backlog queue mirrors the realized temperature: under the
            // queue truth model its own recurrence does that exactly; under
            // the exact model the loss term is the realized one.
            double loss_applied = truth == TruthModel::queue_model
                                      ? dT_loss
                                      : tp.eta * (t_old - ambient) / tp.q;
            queues.temp_queue_update(pe.id, loss_applied, gain);
            le.state.h_backlog = queues.h(pe.id);

            result.maxima.dtc_max[pe.id] =
                std::max(result.maxima.dtc_max.count(pe.id)
                             ? result.maxima.dtc_max[pe.id]
                             : 0.0,
                         gain);
            result.maxima.dtd_max[pe.id] =
                std::max(result.maxima.dtd_max.count(pe.id)
                             ? result.maxima.dtd_max[pe.id]
                             : 0.0,
                         dT_loss);

            tev.energy_after = le.state.energy;
            tev.temp_after = le.state.temperature;
            rec.evs.push_back(tev);
        }

        double q1 = queues.q(1);
        queues.debt_update(q1, std::min(x[1], q1));
        std::vector<double> zeros(static_cast<size_t>(r_max) + 1, 0.0);
        queues.advance(x, zeros);
        rec.y_after = queues.y_debt();
        result.trace.push_back(std::move(rec));

        // Departures at t+1, then arrivals first available at t+1.
        for (auto it = live.begin(); it != live.end();) {
            if (it->second.session->t_depart == t + 1) {
                queues.remove_ev(it->first);
                thermostats.erase(it->first);
                it = live.erase(it);
            } else {
                ++it;
            }
        }
        admit_for(t);
    }

    result.y_final = queues.y_debt();
    for (int r = 1; r <= result.r_max; ++r) result.terminal_queue_mass += queues.q(r);
    for (const auto& [id, v] : result.delivered) result.delivered_total += v;
    result.metrics = compute_metrics(result.trace, s.sessions, s.dt_hours, s.horizon);
    return result;
}

EpisodeMetrics compute_metrics(const std::vector<TraceRecord>& trace,
                               const std::vector<EvSession>& sessions,
                               double dt_hours, int horizon,
                               double temp_tolerance) {
    EpisodeMetrics m;
    std::map<int, const EvSession*> by_id;
    for (const auto& ev : sessions) by_id[ev.id] = &ev;

    double charge_energy = 0.0;  // electrical input, kWh
    double heat_energy = 0.0;
    std::map<int, double> delivered;
    for (const auto& rec : trace) {
        m.total_cost += rec.cost;
        for (const auto& tev : rec.evs) {
            charge_energy += tev.p_charge * dt_hours;
            heat_energy += tev.p_heat * dt_hours;
            const EvSession* ev = by_id.count(tev.id) ? by_id.at(tev.id) : nullptr;
            double delta_c = ev ? ev->thermal.delta_c : 1.0;
            delivered[tev.id] += delta_c * tev.p_charge * dt_hours;
            const ThermalParams* tp = ev ? &ev->thermal : nullptr;
            if (tp && (tev.temp_after < tp->t_low - temp_tolerance ||
                       tev.temp_after > tp->t_high + temp_tolerance))
                ++m.temperature_violations;
            if (!tev.charge_heat_ok || !tev.heating_ok) ++m.assumption_failures;
        }
    }
    double demand = 0.0;
    double served = 0.0;
    for (const auto& ev : sessions) {
        demand += ev.demand();
        if (delivered.count(ev.id))
            served += std::min(delivered.at(ev.id), ev.demand());
    }
    m.fulfillment_ratio = demand > 0.0 ? std::min(served / demand, 1.0) : 1.0;
    double total_energy = charge_energy + heat_energy;
    m.heating_ratio = total_energy > 0.0 ? heat_energy / total_energy : 0.0;
    m.cost_index =
        m.fulfillment_ratio > 0.0 ? m.total_cost / (100.0 * m.fulfillment_ratio) : 0.0;
    m.y_final_over_t =
        horizon > 0 && !trace.empty() ? trace.back().y_after / horizon : 0.0;
    return m;
}

std::vector<TraceRecord> offline_trace(const OfflineSolution& sol, const Scenario& s) {
    std::vector<TraceRecord> trace;
    trace.reserve(static_cast<size_t>(s.horizon));
    std::map<int, double> energy;
    for (const auto& ev : s.sessions) energy[ev.id] = ev.e_initial;
    for (int t = 0; t < s.horizon; ++t) {
        TraceRecord rec;
        rec.slot = t;
        rec.price = s.price[static_cast<size_t>(t)];
        rec.pv_cap = s.pv_cap[static_cast<size_t>(t)];
        rec.ambient = s.ambient[static_cast<size_t>(t)];
        rec.p_pv = sol.p_pv[static_cast<size_t>(t)];
        rec.p_grid = sol.p_grid[static_cast<size_t>(t)];
        rec.cost = rec.price * rec.p_grid * s.dt_hours;
        rec.q = {0.0};
        for (const auto& ev : s.sessions) {
            if (t < ev.t_arrive || t >= ev.t_depart) continue;
            int o = t - ev.t_arrive;
            TraceEv tev;
            tev.id = ev.id;
            const auto& temps = sol.temperature.at(ev.id);
            tev.temp = temps[static_cast<size_t>(o)];
            tev.temp_after = temps[static_cast<size_t>(o) + 1];
            tev.p_charge = sol.p_charge.at(ev.id)[static_cast<size_t>(t)];
            tev.p_heat = sol.p_heat.at(ev.id)[static_cast<size_t>(t)];
            tev.cap_charge = peak_charge_rate(ev.thermal, tev.temp);
            tev.cap_heat = peak_heat_rate(ev.thermal, tev.temp);
            tev.energy = energy[ev.id];
            energy[ev.id] += ev.thermal.delta_c * tev.p_charge * s.dt_hours;
            tev.energy_after = energy[ev.id];
            rec.evs.push_back(tev);
        }
        trace.push_back(std::move(rec));
    }
    return trace;
}

EpisodeMetrics offline_metrics(const OfflineSolution& sol, const Scenario& s) {
    // Temperature slack widened to the solver's feasibility target.
    return compute_metrics(offline_trace(sol, s), s.sessions, s.dt_hours, s.horizon,
                           1e-6);
}

}  // namespace coldcharge
