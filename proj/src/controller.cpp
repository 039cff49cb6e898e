#include "coldcharge/controller.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace coldcharge {

double ControllerParams::theta(int ev_id) const {
    auto it = theta_by_ev.find(ev_id);
    if (it == theta_by_ev.end()) {
        std::ostringstream msg;
        msg << "ControllerParams: no theta for EV " << ev_id;
        throw std::out_of_range(msg.str());
    }
    return it->second;
}

double compute_theta(const ThermalParams& p, const ThermalBounds& b, double v,
                     double price_cap, double dt_hours) {
    if (v <= 0.0) throw std::invalid_argument("compute_theta: V must be positive");
    // max_t{dT_loss - dT_gain} is attained with the gain at its minimum, zero.
    return p.q * v * price_cap * dt_hours / p.delta_h + b.dT_loss_max + p.t_low;
}

double compute_v_max(const ThermalParams& p, const ThermalBounds& b,
                     double price_cap, double dt_hours) {
    double gain_excess = b.dT_gain_max - b.dT_loss_min;  // max_t{dT_gain - dT_loss}
    double loss_excess = b.dT_loss_max;                  // max_t{dT_loss - dT_gain}
    double numerator = p.t_high - p.t_low - gain_excess - loss_excess;
    if (numerator <= 0.0)
        throw std::domain_error(
            "compute_v_max: temperature band too narrow for this climate");
    return numerator / (p.q * price_cap * dt_hours / p.delta_h);
}

AssumptionVerdict check_assumptions(const ThermalParams& p, double temp,
                                    double dT_loss) {
    constexpr double kTol = 1e-12;
    AssumptionVerdict v;
    double charge_heat = (1.0 - p.delta_c) * peak_charge_rate(p, temp) / p.q;
    v.charge_heat_ok = charge_heat - dT_loss <= kTol;
    double heat_avail =
        std::min(peak_heat_rate(p, temp), p.p_total - peak_charge_rate(p, temp));
    v.heating_ok = p.delta_h * heat_avail / p.q - dT_loss >= -kTol;
    return v;
}

SlotProblem assemble_slot_problem(const QueueState& queues,
                                  const std::vector<PresentEv>& evs,
                                  double price, double pv_cap,
                                  const ControllerParams& params,
                                  double dt_hours) {
    SlotProblem problem;
    problem.pv_free = pv_cap;
    problem.grid_unit_cost = params.v_weight * price * dt_hours;
    problem.evs.reserve(evs.size());
    for (const auto& ev : evs) {
        const ThermalParams& p = *ev.thermal;
        SlotEv se;
        se.id = ev.id;
        se.w_charge = -(params.gamma / ev.r) * queues.q(ev.r) * p.delta_c * dt_hours +
                      ev.h_backlog * (1.0 - p.delta_c) / p.q;
        if (ev.r == 1)
            se.w_charge -= params.gamma * queues.y_debt() * p.delta_c * dt_hours;
        se.w_heat = ev.h_backlog * p.delta_h / p.q;
        double demand_cap = std::max(0.0, ev.demand_remaining) / (p.delta_c * dt_hours);
        double headroom_cap = std::max(0.0, ev.headroom) / (p.delta_c * dt_hours);
        se.cap_charge = std::max(
            0.0, std::min({peak_charge_rate(p, ev.temperature), demand_cap, headroom_cap}));
        se.cap_heat = peak_heat_rate(p, ev.temperature);
        se.cap_joint = p.p_total;
        problem.evs.push_back(se);
    }
    return problem;
}

namespace {

struct Segment {
    int ev_index = 0;
    bool heating = false;
    double slope = 0.0;
    double length = 0.0;
};

}  // namespace

SlotSolution solve_slot_detailed(const SlotProblem& problem) {
    std::vector<Segment> segments;
    segments.reserve(problem.evs.size() * 2);
    for (size_t i = 0; i < problem.evs.size(); ++i) {
        const SlotEv& ev = problem.evs[i];
        // Better slope first; on a tie charging precedes heating.
        bool charge_first = ev.w_charge <= ev.w_heat;
        double first_cap = charge_first ? ev.cap_charge : ev.cap_heat;
        double first_slope = charge_first ? ev.w_charge : ev.w_heat;
        double second_cap = charge_first ? ev.cap_heat : ev.cap_charge;
        double second_slope = charge_first ? ev.w_heat : ev.w_charge;
        double len1 = std::min(first_cap, ev.cap_joint);
        double len2 = std::min(second_cap, std::max(0.0, ev.cap_joint - len1));
        if (len1 > 0.0)
            segments.push_back({static_cast<int>(i), !charge_first, first_slope, len1});
        if (len2 > 0.0)
            segments.push_back({static_cast<int>(i), charge_first, second_slope, len2});
    }
    // Stable sort keeps the (ev id, charge-before-heat) generation order on ties.
    std::stable_sort(segments.begin(), segments.end(),
                     [](const Segment& a, const Segment& b) { return a.slope < b.slope; });

    SlotSolution sol;
    for (const auto& ev : problem.evs) {
        sol.decision.p_charge[ev.id] = 0.0;
        sol.decision.p_heat[ev.id] = 0.0;
    }
    double total = 0.0;
    for (const auto& seg : segments) {
        if (seg.slope >= 0.0) break;  // sorted: nothing profitable remains
        double below = std::max(0.0, problem.pv_free - total);
        double amount = std::min(seg.length, below);
        if (seg.slope + problem.grid_unit_cost < 0.0) amount = seg.length;
        if (amount <= 0.0) continue;
        const SlotEv& ev = problem.evs[static_cast<size_t>(seg.ev_index)];
        if (seg.heating)
            sol.decision.p_heat[ev.id] += amount;
        else
            sol.decision.p_charge[ev.id] += amount;
        total += amount;
        sol.order.push_back({ev.id, seg.heating, seg.slope, amount});
    }
    sol.decision.p_pv = std::min(total, problem.pv_free);
    sol.decision.p_grid = total - sol.decision.p_pv;
    sol.objective = slot_objective(problem, sol.decision);
    return sol;
}

SlotDecision solve_slot(const SlotProblem& problem) {
    return solve_slot_detailed(problem).decision;
}

double slot_objective(const SlotProblem& problem, const SlotDecision& d) {
    double obj = 0.0;
    double total = 0.0;
    for (const auto& ev : problem.evs) {
        double pc = d.p_charge.count(ev.id) ? d.p_charge.at(ev.id) : 0.0;
        double ph = d.p_heat.count(ev.id) ? d.p_heat.at(ev.id) : 0.0;
        obj += ev.w_charge * pc + ev.w_heat * ph;
        total += pc + ph;
    }
    obj += problem.grid_unit_cost * std::max(total - problem.pv_free, 0.0);
    return obj;
}

double drift_bound_B(const ObservedMaxima& m, double gamma, int r_max) {
    auto at = [](const std::vector<double>& v, int r) {
        return (r >= 0 && r < static_cast<int>(v.size())) ? v[static_cast<size_t>(r)]
                                                          : 0.0;
    };
    double q1 = at(m.q_max, 1);
    double b = gamma / (2.0 * (r_max + 1)) * at(m.q_max, r_max + 1) * at(m.q_max, r_max + 1);
    b += gamma / 4.0 * q1 * q1;
    b += gamma * m.y_max * q1;
    for (int r = 1; r <= r_max; ++r) {
        double a = at(m.a_max, r);
        b += gamma / (2.0 * (r + 1)) * (a * a + 2.0 * at(m.q_max, r + 1) * a);
        double x = at(m.x_max, r);
        b += gamma / (2.0 * r) * x * x;
    }
    for (const auto& [id, dtc] : m.dtc_max) {
        double dtd = m.dtd_max.count(id) ? m.dtd_max.at(id) : 0.0;
        b += 0.5 * std::max(dtc * dtc, dtd * dtd);
    }
    // EVs recorded only on the loss side still contribute their max term.
    for (const auto& [id, dtd] : m.dtd_max)
        if (!m.dtc_max.count(id)) b += 0.5 * dtd * dtd;
    return b;
}

}  // namespace coldcharge
