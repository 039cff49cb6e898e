// Comparison policies: thermostat-regulated heating paired with either the
// queue-based charging controller (B1) or full-rate charging (B2), and the
// no-heating variant.
#pragma once

#include <map>

#include "coldcharge/controller.hpp"

namespace coldcharge {

enum class Method { proposed, b1, b2, noheat, offline };

Method method_from_string(const std::string& name);
std::string method_name(Method m);

// On/off hysteresis state of one EV's heater.
struct ThermostatState {
    bool heater_on = false;
    double band_low = 9.5;
    double band_high = 10.5;
};

// Advances the hysteresis and returns the heating power: full cap while on,
// zero while off; state holds inside the band.
double bangbang_heat(ThermostatState& state, double temp, double heat_cap);

// Shared per-slot context handed to every policy.
struct SlotContext {
    const QueueState* queues = nullptr;
    const std::vector<PresentEv>* evs = nullptr;
    double price = 0.0;
    double pv_cap = 0.0;
    const ControllerParams* params = nullptr;
    double dt_hours = 0.0;
};

SlotDecision b1_decide(const SlotContext& ctx,
                       std::map<int, ThermostatState>& thermostats);
SlotDecision b2_decide(const SlotContext& ctx,
                       std::map<int, ThermostatState>& thermostats);
SlotDecision noheat_decide(const SlotContext& ctx);

}  // namespace coldcharge
