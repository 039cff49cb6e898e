// Battery thermal physics: exact Newton-cooling step, the per-slot queue
// linearization used by the controller, and temperature-dependent rate caps.
#pragma once

#include "coldcharge/model.hpp"

namespace coldcharge {

// Per-slot thermal context of one EV under a given ambient temperature.
struct ThermalSlotContext {
    double zeta = 0.0;      // retention factor 1 - eta/q
    double k_slots = 0.0;   // real-valued decay horizon from t_high to t_low
    double dT_loss = 0.0;   // per-slot temperature loss, degC
};

// Horizon-wide loss/gain envelopes evaluated from declared ambient bounds.
struct ThermalBounds {
    double dT_loss_min = 0.0;
    double dT_loss_max = 0.0;
    double dT_gain_max = 0.0;
};

// Slot count for a free decay from t_high to t_low at the given ambient.
// Only defined on the cold branch (ambient < t_low).
double decay_slots(const ThermalParams& p, double ambient);

// Per-slot temperature loss. Cold branch: (t_high - t_low)/K. Warm fallback
// (ambient >= t_low): midpoint-linearized Newton cooling, clamped at zero.
double decay_loss(const ThermalParams& p, double ambient);

// One slot of the exact dynamics:
//   T' = T + (-eta (T - ambient) + delta_h p_h + (1 - delta_c) p_c) / q.
double step_exact(double temp, double ambient, double p_c, double p_h,
                  const ThermalParams& p);

// One slot of the linearized queue dynamics:
//   T' = T - dT_loss + (delta_h p_h + (1 - delta_c) p_c) / q.
double step_queue(double temp, double dT_loss, double p_c, double p_h,
                  const ThermalParams& p);

// Heating/charging gain of one slot, degC.
double temp_gain(double p_c, double p_h, const ThermalParams& p);

double peak_charge_rate(const ThermalParams& p, double temp);
double peak_heat_rate(const ThermalParams& p, double temp);

ThermalSlotContext slot_context(const ThermalParams& p, double ambient);

// Evaluates the loss envelope at the declared ambient bounds and the maximum
// achievable per-slot gain over the feasible temperature band. Throws
// std::invalid_argument when ambient_high >= t_high (outside the cold-climate
// regime the decay model covers).
ThermalBounds thermal_bounds(const ThermalParams& p, double ambient_low,
                             double ambient_high);

}  // namespace coldcharge
