// Episode engine: the per-slot loop with arrival/departure bookkeeping,
// truth-model stepping, queue updates, metric accumulation and trace logging.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "coldcharge/baselines.hpp"
#include "coldcharge/controller.hpp"
#include "coldcharge/model.hpp"
#include "coldcharge/offline.hpp"
#include "coldcharge/queues.hpp"

namespace coldcharge {

struct TraceEv {
    int id = 0;
    double energy = 0.0;       // kWh at decision time
    double temp = 0.0;         // degC at decision time
    double h = 0.0;            // backlog at decision time
    double p_charge = 0.0;     // kW
    double p_heat = 0.0;       // kW
    double cap_charge = 0.0;   // rate cap at the current temperature
    double cap_heat = 0.0;
    double w_charge = 0.0;     // objective slopes (proposed policy only)
    double w_heat = 0.0;
    double energy_after = 0.0;
    double temp_after = 0.0;
    bool charge_heat_ok = true;
    bool heating_ok = true;
};

struct TraceRecord {
    int slot = 0;
    double price = 0.0;
    double pv_cap = 0.0;
    double ambient = 0.0;
    double p_pv = 0.0;
    double p_grid = 0.0;
    double cost = 0.0;            // lambda * grid * dt for this slot
    std::vector<double> q;        // decision-time queue snapshot, 1-based
    double y = 0.0;               // decision-time debt
    double y_after = 0.0;         // debt after this slot's update
    std::vector<TraceEv> evs;
    std::vector<std::string> alloc;  // greedy allocation order, e.g. "7c"
};

struct EpisodeMetrics {
    double total_cost = 0.0;
    double fulfillment_ratio = 1.0;
    double cost_index = 0.0;
    double heating_ratio = 0.0;
    double y_final_over_t = 0.0;
    long temperature_violations = 0;
    long assumption_failures = 0;
};

struct EpisodeResult {
    EpisodeMetrics metrics;
    std::vector<TraceRecord> trace;
    ObservedMaxima maxima;
    std::map<int, double> delivered;  // kWh per EV
    std::map<int, double> e_final;    // kWh per EV at departure (or horizon end)
    double admitted_demand = 0.0;
    double delivered_total = 0.0;
    double terminal_queue_mass = 0.0;  // sum of Q^r after the final slot
    double y_final = 0.0;
    int r_max = 0;
};

// Synthesizes per-EV theta and the scenario-wide V_max. Throws when
// theorem1_mode is on and v exceeds V_max.
ControllerParams make_controller_params(const Scenario& s, double v, double gamma,
                                        bool theorem1_mode = true);

// Runs one episode. Deterministic given (scenario, params, truth model);
// `seed` is carried for provenance only. Method::offline is rejected here —
// the clairvoyant schedule is produced by offline_solve.
EpisodeResult run_episode(const Scenario& s, Method method,
                          const ControllerParams& params, TruthModel truth,
                          std::uint64_t seed = 0);

// Derives all episode metrics from a complete trace. `temp_tolerance` is the
// slack applied to the temperature band when counting violations.
EpisodeMetrics compute_metrics(const std::vector<TraceRecord>& trace,
                               const std::vector<EvSession>& sessions,
                               double dt_hours, int horizon,
                               double temp_tolerance = 1e-9);

// Renders a clairvoyant schedule in the online trace format (queue fields
// zero, verdicts vacuously true) so both run kinds share one metric path.
std::vector<TraceRecord> offline_trace(const OfflineSolution& sol, const Scenario& s);
EpisodeMetrics offline_metrics(const OfflineSolution& sol, const Scenario& s);

}  // namespace coldcharge
