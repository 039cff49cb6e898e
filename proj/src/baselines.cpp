#include "coldcharge/baselines.hpp"

#include <algorithm>
#include <stdexcept>

#include "coldcharge/thermal.hpp"

namespace coldcharge {

Method method_from_string(const std::string& name) {
    if (name == "proposed") return Method::proposed;
    if (name == "b1") return Method::b1;
    if (name == "b2") return Method::b2;
    if (name == "noheat") return Method::noheat;
    if (name == "offline") return Method::offline;
    throw std::invalid_argument("unknown method: " + name);
}

std::string method_name(Method m) {
    switch (m) {
        case Method::proposed: return "proposed";
        case Method::b1: return "b1";
        case Method::b2: return "b2";
        case Method::noheat: return "noheat";
        case Method::offline: return "offline";
    }
    return "?";
}

double bangbang_heat(ThermostatState& state, double temp, double heat_cap) {
    if (temp < state.band_low)
        state.heater_on = true;
    else if (temp > state.band_high)
        state.heater_on = false;
    return state.heater_on ? heat_cap : 0.0;
}

namespace {

// Charging stage shared by B1 and NoHeat: the per-slot problem with the
// temperature-coupling terms dropped and heating variables removed, joint
// caps reduced by any fixed heating draw.
SlotDecision queue_charging_stage(const SlotContext& ctx,
                                  const std::map<int, double>& heat_by_ev) {
    SlotProblem problem;
    double heat_total = 0.0;
    for (const auto& [id, h] : heat_by_ev) heat_total += h;
    problem.pv_free = std::max(0.0, ctx.pv_cap - heat_total);
    problem.grid_unit_cost = ctx.params->v_weight * ctx.price * ctx.dt_hours;
    for (const auto& ev : *ctx.evs) {
        const ThermalParams& p = *ev.thermal;
        double heat = heat_by_ev.count(ev.id) ? heat_by_ev.at(ev.id) : 0.0;
        SlotEv se;
        se.id = ev.id;
        se.w_charge =
            -(ctx.params->gamma / ev.r) * ctx.queues->q(ev.r) * p.delta_c * ctx.dt_hours;
        if (ev.r == 1)
            se.w_charge -=
                ctx.params->gamma * ctx.queues->y_debt() * p.delta_c * ctx.dt_hours;
        se.w_heat = 0.0;
        se.cap_heat = 0.0;
        double demand_cap =
            std::max(0.0, ev.demand_remaining) / (p.delta_c * ctx.dt_hours);
        double headroom_cap = std::max(0.0, ev.headroom) / (p.delta_c * ctx.dt_hours);
        se.cap_charge = std::max(
            0.0,
            std::min({peak_charge_rate(p, ev.temperature), demand_cap, headroom_cap}));
        se.cap_joint = std::max(0.0, p.p_total - heat);
        problem.evs.push_back(se);
    }
    SlotDecision d = solve_slot(problem);
    double total = 0.0;
    for (const auto& ev : *ctx.evs) {
        double heat = heat_by_ev.count(ev.id) ? heat_by_ev.at(ev.id) : 0.0;
        d.p_heat[ev.id] = heat;
        total += heat + d.p_charge[ev.id];
    }
    d.p_pv = std::min(total, ctx.pv_cap);
    d.p_grid = total - d.p_pv;
    return d;
}

std::map<int, double> thermostat_stage(const SlotContext& ctx,
                                       std::map<int, ThermostatState>& thermostats) {
    std::map<int, double> heat;
    for (const auto& ev : *ctx.evs) {
        const ThermalParams& p = *ev.thermal;
        double cap = std::min(peak_heat_rate(p, ev.temperature), p.p_total);
        heat[ev.id] = bangbang_heat(thermostats[ev.id], ev.temperature, cap);
    }
    return heat;
}

}  // namespace

SlotDecision b1_decide(const SlotContext& ctx,
                       std::map<int, ThermostatState>& thermostats) {
    return queue_charging_stage(ctx, thermostat_stage(ctx, thermostats));
}

SlotDecision b2_decide(const SlotContext& ctx,
                       std::map<int, ThermostatState>& thermostats) {
    std::map<int, double> heat = thermostat_stage(ctx, thermostats);
    SlotDecision d;
    double total = 0.0;
    for (const auto& ev : *ctx.evs) {
        const ThermalParams& p = *ev.thermal;
        double h = heat[ev.id];
        double demand_cap =
            std::max(0.0, ev.demand_remaining) / (p.delta_c * ctx.dt_hours);
        double headroom_cap = std::max(0.0, ev.headroom) / (p.delta_c * ctx.dt_hours);
        double pc = std::max(
            0.0, std::min({peak_charge_rate(p, ev.temperature), p.p_total - h,
                           demand_cap, headroom_cap}));
        d.p_charge[ev.id] = pc;
        d.p_heat[ev.id] = h;
        total += pc + h;
    }
    d.p_pv = std::min(total, ctx.pv_cap);
    d.p_grid = total - d.p_pv;
    return d;
}

SlotDecision noheat_decide(const SlotContext& ctx) {
    return queue_charging_stage(ctx, {});
}

}  // namespace coldcharge
