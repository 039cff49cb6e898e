// Scenario ingestion and synthesis: series CSV reading with step-hold
// resampling, the seeded session generator, scenario/trace/metrics
// serialization, and flat key-value run configuration.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "coldcharge/harness.hpp"
#include "coldcharge/model.hpp"

namespace coldcharge {

// Reads a `slot,value` CSV with one header line. Rejects gaps, duplicates
// and non-monotone indices. When the file holds n rows with horizon % n == 0
// each value is step-held over horizon/n slots. Throws std::runtime_error
// with the offending line number on malformed input.
std::vector<double> load_series(const std::string& path, int horizon);
void write_series(const std::string& path, const std::vector<double>& series);

// Seeded session/scenario synthesis parameters. Initial battery temperature
// defaults to uniform in [t_low, t_low + 5] (arrivals come in warm from
// driving).
struct GeneratorConfig {
    int ev_count = 20;
    int arrive_lo = 84;   // slot bounds of the arrival window, inclusive
    int arrive_hi = 120;
    int park_lo = 72;     // parking duration bounds in slots, inclusive
    int park_hi = 120;
    int depart_quantum = 6;  // departures snap to this slot grid (30 min)
    double soc_lo = 0.1;  // initial SoC bounds
    double soc_hi = 0.3;
    double soc_depart = 0.9;
    double capacity_kwh = 50.0;
    double init_temp_lo = 0.0;  // degC
    double init_temp_hi = 5.0;
    double ambient_offset = 0.0;  // applied uniformly to the ambient series
    std::uint64_t seed = 1;
    ThermalParams thermal;  // shared by all generated EVs
};

// Aligned input series plus the grid/price parameters the scenario carries.
struct SeriesInputs {
    std::vector<double> ambient;  // degC
    std::vector<double> price;    // $/kWh
    std::vector<double> pv;       // kW
    double price_cap = 0.1;
    double dt_hours = 1.0 / 12.0;
    int horizon = 288;
};

// Built-in winter day profiles: a cold sinusoidal ambient around -10 degC,
// a two-peak price curve bounded by price_cap, and a short midday PV bell.
// Small seeded perturbations keep distinct seeds distinct.
SeriesInputs synthetic_series(int horizon, double dt_hours, std::uint64_t seed,
                              double pv_peak_kw = 25.0);

Scenario generate_scenario(const GeneratorConfig& cfg, const SeriesInputs& inputs);

Scenario load_scenario_json(const std::string& path);
void save_scenario_json(const std::string& path, const Scenario& s);

std::string metrics_to_json(const EpisodeMetrics& m);
void write_metrics_json(const std::string& path, const EpisodeMetrics& m);

// Line-delimited trace: one JSON object per slot.
void write_trace_jsonl(const std::string& path, const std::vector<TraceRecord>& trace);
std::vector<TraceRecord> read_trace_jsonl(const std::string& path);

// Plot-ready per-slot trajectories: slot,ev,temp,p_charge,p_heat rows.
void write_trajectories_csv(const std::string& path,
                            const std::vector<TraceRecord>& trace);

// Flat key-value run configuration; `#` starts a comment. Unknown keys are
// rejected. CLI flags override file values.
struct RunConfig {
    std::string method = "proposed";
    double v = 600.0;
    double gamma = 20.0;
    std::string truth_model = "queue";  // queue | exact
    bool theorem1_mode = true;
    std::optional<double> alpha;  // offline penalty weight; defaulted per scenario
    std::string out_dir = ".";
    std::string ambient_csv;  // optional series files
    std::string price_csv;
    std::string pv_csv;
    double pv_peak_kw = 25.0;
    GeneratorConfig generator;
    double price_cap = 0.1;
    double dt_hours = 1.0 / 12.0;
    int horizon = 288;
};

RunConfig parse_config_file(const std::string& path);

// Materializes the run's scenario: loads CSV series when configured,
// otherwise synthesizes them; then generates sessions.
Scenario build_scenario(const RunConfig& cfg);

}  // namespace coldcharge
