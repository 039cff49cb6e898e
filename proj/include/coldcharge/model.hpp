// Core domain types shared by every module: per-EV physical parameters,
// charging sessions, the scenario container and its validation.
#pragma once

#include <map>
#include <string>
#include <vector>

namespace coldcharge {

// Lumped battery thermal/electrical parameters of one EV. Defaults follow a
// common mid-size pack: 5-minute slots, 50 kWh class battery.
struct ThermalParams {
    double q = 0.72;        // heat-capacity coefficient, kWh per degC per slot
    double eta = 0.048;     // dissipation coefficient, kWh per degC
    double delta_h = 0.8;   // heating efficiency
    double delta_c = 0.95;  // charging efficiency
    double beta_c = 0.12;   // charge-rate temperature slope, kW per degC
    double beta_h = 0.024;  // heat-rate temperature slope, kW per degC
    double p_c_base = 4.8;  // base peak charging rate, kW
    double p_h_base = 3.0;  // base peak heating rate, kW
    double p_total = 7.4;   // joint charging+heating cap, kW
    double t_low = 0.0;     // temperature lower bound, degC
    double t_high = 20.0;   // temperature upper bound, degC

    // Retention factor of the zero-input temperature recursion, in (0,1)
    // for valid parameters.
    double zeta() const { return 1.0 - eta / q; }
};

// One EV charging request. The EV is present over the half-open slot window
// [t_arrive, t_depart) and leaves at its deadline regardless of state.
struct EvSession {
    int id = 0;
    int t_arrive = 0;        // slot index
    int t_depart = 0;        // slot index, exclusive
    double e_initial = 0.0;  // kWh at arrival
    double e_depart = 0.0;   // kWh requested by the deadline
    double e_cap = 50.0;     // battery energy limit, kWh
    double t_initial = 0.0;  // battery temperature at arrival, degC
    ThermalParams thermal;

    double demand() const { return e_depart - e_initial; }
    int duration() const { return t_depart - t_arrive; }
};

// Time grid plus aligned ambient / price / PV series and the session list.
// ambient_low/ambient_high are declared bounds consumed by the controller's
// parameter synthesis; they must envelope the realized series.
struct Scenario {
    double dt_hours = 1.0 / 12.0;
    int horizon = 288;
    double price_cap = 0.1;  // $/kWh upper bound on the price series
    std::vector<double> ambient;  // degC per slot
    std::vector<double> price;    // $/kWh per slot
    std::vector<double> pv_cap;   // kW per slot
    double ambient_low = 0.0;
    double ambient_high = 0.0;
    std::vector<EvSession> sessions;

    const EvSession* find_session(int id) const;
};

// Charging/heating powers for one slot plus the PV/grid split.
struct SlotDecision {
    std::map<int, double> p_charge;  // EV id -> kW
    std::map<int, double> p_heat;    // EV id -> kW
    double p_pv = 0.0;               // kW drawn from PV
    double p_grid = 0.0;             // kW drawn from the grid

    double total_power() const;
};

// Per-EV mutable state carried by the episode harness. h_backlog tracks
// temperature minus theta; the identity h_backlog == temperature - theta is
// maintained by construction.
struct EvRuntimeState {
    double energy = 0.0;       // kWh
    double temperature = 0.0;  // degC
    double h_backlog = 0.0;    // degC
    double theta = 0.0;        // degC
};

// A single invariant violation found in a scenario. `index` is the offending
// slot or session id, -1 when the violation is scenario-wide.
struct Violation {
    std::string field;
    int index = -1;
    std::string message;
};

std::vector<Violation> validate_params(const ThermalParams& p, int session_id);
std::vector<Violation> validate_scenario(const Scenario& s);

}  // namespace coldcharge
