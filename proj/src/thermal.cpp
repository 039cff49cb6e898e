#include "coldcharge/thermal.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace coldcharge {

double decay_slots(const ThermalParams& p, double ambient) {
    // zeta^K = (t_low - ambient)/(t_high - ambient); both sides in (0,1)
    // exactly when ambient < t_low.
    return std::log((ambient - p.t_low) / (ambient - p.t_high)) / std::log(p.zeta());
}

double decay_loss(const ThermalParams& p, double ambient) {
    if (ambient < p.t_low) {
        double k = decay_slots(p, ambient);
        return (p.t_high - ambient) * (1.0 - std::pow(p.zeta(), k)) / k;
    }
    // Warm-slot fallback: Newton cooling linearized at the band midpoint.
    double midpoint = 0.5 * (p.t_low + p.t_high);
    return (p.eta / p.q) * std::max(0.0, midpoint - ambient);
}

double step_exact(double temp, double ambient, double p_c, double p_h,
                  const ThermalParams& p) {
    return temp +
           (-p.eta * (temp - ambient) + p.delta_h * p_h + (1.0 - p.delta_c) * p_c) / p.q;
}

double temp_gain(double p_c, double p_h, const ThermalParams& p) {
    return (p.delta_h * p_h + (1.0 - p.delta_c) * p_c) / p.q;
}

double step_queue(double temp, double dT_loss, double p_c, double p_h,
                  const ThermalParams& p) {
    return temp - dT_loss + temp_gain(p_c, p_h, p);
}

double peak_charge_rate(const ThermalParams& p, double temp) {
    return std::max(0.0, p.p_c_base + p.beta_c * temp);
}

double peak_heat_rate(const ThermalParams& p, double temp) {
    return std::max(0.0, p.p_h_base - p.beta_h * temp);
}

ThermalSlotContext slot_context(const ThermalParams& p, double ambient) {
    ThermalSlotContext ctx;
    ctx.zeta = p.zeta();
    ctx.k_slots = ambient < p.t_low ? decay_slots(p, ambient) : 0.0;
    ctx.dT_loss = decay_loss(p, ambient);
    return ctx;
}

ThermalBounds thermal_bounds(const ThermalParams& p, double ambient_low,
                             double ambient_high) {
    if (ambient_low > ambient_high)
        throw std::invalid_argument("thermal_bounds: ambient_low > ambient_high");
    if (ambient_high >= p.t_high)
        throw std::invalid_argument(
            "thermal_bounds: ambient reaches the upper temperature bound; "
            "decay model undefined over the feasible band");
    ThermalBounds b;
    b.dT_loss_min = decay_loss(p, ambient_high);
    b.dT_loss_max = decay_loss(p, ambient_low);
    // Max gain over T in [t_low, t_high]: heat rate peaks at t_low, charge
    // rate at t_high; heating is additionally limited by the joint cap.
    double heat_max = std::min(peak_heat_rate(p, p.t_low), p.p_total);
    double charge_max = peak_charge_rate(p, p.t_high);
    b.dT_gain_max = (p.delta_h * heat_max + (1.0 - p.delta_c) * charge_max) / p.q;
    return b;
}

}  // namespace coldcharge
