// The online charging/heating policy: perturbation and trade-off parameter
// synthesis, per-slot problem assembly, the exact segment-greedy solver, the
// per-slot assumption checks, and the optimality-bound constant.
#pragma once

#include <map>
#include <vector>

#include "coldcharge/model.hpp"
#include "coldcharge/queues.hpp"
#include "coldcharge/thermal.hpp"

namespace coldcharge {

struct ControllerParams {
    double v_weight = 600.0;           // cost/backlog trade-off V
    double gamma = 20.0;               // demand-queue weight
    double v_max = 0.0;                // largest admissible V for this scenario
    std::map<int, double> theta_by_ev; // perturbation offsets, degC
    bool theorem1_mode = true;         // enforce v_weight <= v_max

    double theta(int ev_id) const;
};

// Perturbation offset:
//   theta = q V price_cap dt / delta_h + dT_loss_max + t_low.
double compute_theta(const ThermalParams& p, const ThermalBounds& b, double v,
                     double price_cap, double dt_hours);

// Largest admissible trade-off weight for one EV's parameters:
//   (band width - worst gain excess - worst loss excess) / (q price_cap dt / delta_h).
// Throws std::domain_error when the numerator is non-positive (temperature
// band too narrow for this climate).
double compute_v_max(const ThermalParams& p, const ThermalBounds& b,
                     double price_cap, double dt_hours);

// Per-slot feasibility premises evaluated at the EV's current temperature:
// charge_heat_ok  — charging heat alone never exceeds the ambient loss;
// heating_ok      — full available heating at least offsets the ambient loss.
struct AssumptionVerdict {
    bool charge_heat_ok = true;
    bool heating_ok = true;
    bool ok() const { return charge_heat_ok && heating_ok; }
};

AssumptionVerdict check_assumptions(const ThermalParams& p, double temp,
                                    double dT_loss);

// Snapshot of one present EV handed to the per-slot problem assembly.
struct PresentEv {
    int id = 0;
    int r = 0;                      // remaining parking slots
    double temperature = 0.0;       // degC
    double h_backlog = 0.0;         // degC
    double demand_remaining = 0.0;  // kWh still requested
    double headroom = 0.0;          // kWh to battery cap
    const ThermalParams* thermal = nullptr;
};

// Linear per-slot allocation problem: per-EV slopes ($ per kW for the slot)
// and caps, free PV up to pv_free, grid power at grid_unit_cost beyond it.
struct SlotEv {
    int id = 0;
    double w_charge = 0.0;
    double w_heat = 0.0;
    double cap_charge = 0.0;
    double cap_heat = 0.0;
    double cap_joint = 0.0;
};

struct SlotProblem {
    std::vector<SlotEv> evs;
    double pv_free = 0.0;
    double grid_unit_cost = 0.0;
};

SlotProblem assemble_slot_problem(const QueueState& queues,
                                  const std::vector<PresentEv>& evs,
                                  double price, double pv_cap,
                                  const ControllerParams& params,
                                  double dt_hours);

// One step of the greedy allocation, kept for the trace log.
struct AllocStep {
    int ev_id = 0;
    bool heating = false;
    double slope = 0.0;
    double amount = 0.0;  // kW allocated from this segment
};

struct SlotSolution {
    SlotDecision decision;
    std::vector<AllocStep> order;
    double objective = 0.0;
};

// Exact minimizer of
//   sum_i (w_c p_c + w_h p_h) + grid_unit_cost * max(sum p - pv_free, 0)
// over the per-EV boxes and joint caps. Segment-greedy: each EV contributes
// its two variables as slope-sorted segments, allocated while the marginal
// cost (slope below the PV boundary, slope + grid_unit_cost above) is
// negative. Ties resolve by (lower EV id, charging before heating).
SlotSolution solve_slot_detailed(const SlotProblem& problem);
SlotDecision solve_slot(const SlotProblem& problem);

// Objective evaluator shared by the solver, the LP oracle and the tests.
double slot_objective(const SlotProblem& problem, const SlotDecision& d);

// Episode-wide observed maxima feeding the optimality-bound constant.
struct ObservedMaxima {
    std::vector<double> q_max;  // 1-based, size r_max + 1
    std::vector<double> a_max;  // 1-based, size r_max + 1
    std::vector<double> x_max;  // 1-based, size r_max + 1
    double y_max = 0.0;
    std::map<int, double> dtc_max;  // per-EV max per-slot gain
    std::map<int, double> dtd_max;  // per-EV max per-slot loss
};

// The drift-bound constant B assembled term by term from observed maxima;
// queue indices beyond r_max contribute zero.
double drift_bound_B(const ObservedMaxima& m, double gamma, int r_max);

}  // namespace coldcharge
