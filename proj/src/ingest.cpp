#include "coldcharge/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace coldcharge {

using nlohmann::json;

std::vector<double> load_series(const std::string& path, int horizon) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_series: cannot open " + path);
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("load_series: " + path + ": empty file");
    std::vector<double> values;
    int line_no = 1;
    int expected = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string idx_str, val_str;
        if (!std::getline(row, idx_str, ',') || !std::getline(row, val_str)) {
            std::ostringstream msg;
            msg << "load_series: " << path << ":" << line_no << ": malformed row";
            throw std::runtime_error(msg.str());
        }
        int idx;
        double val;
        try {
            idx = std::stoi(idx_str);
            val = std::stod(val_str);
        } catch (const std::exception&) {
            std::ostringstream msg;
            msg << "load_series: " << path << ":" << line_no << ": malformed row";
            throw std::runtime_error(msg.str());
        }
        if (idx == expected - 1) {
            std::ostringstream msg;
            msg << "load_series: " << path << ":" << line_no << ": duplicate slot index "
                << idx;
            throw std::runtime_error(msg.str());
        }
        if (idx != expected) {
            std::ostringstream msg;
            msg << "load_series: " << path << ":" << line_no
                << ": expected slot index " << expected << ", found " << idx;
            throw std::runtime_error(msg.str());
        }
        values.push_back(val);
        ++expected;
    }
    if (values.empty()) throw std::runtime_error("load_series: " + path + ": no data rows");
    int n = static_cast<int>(values.size());
    if (n == horizon) return values;
    if (n < horizon && horizon % n == 0) {
        int repeat = horizon / n;
        std::vector<double> out;
        out.reserve(static_cast<size_t>(horizon));
        for (double v : values)
            for (int k = 0; k < repeat; ++k) out.push_back(v);
        return out;
    }
    std::ostringstream msg;
    msg << "load_series: " << path << ": " << n
        << " rows cannot be aligned to horizon " << horizon;
    throw std::runtime_error(msg.str());
}

void write_series(const std::string& path, const std::vector<double>& series) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_series: cannot open " + path);
    out << "slot,value\n";
    out.precision(17);
    for (size_t i = 0; i < series.size(); ++i) out << i << "," << series[i] << "\n";
}

SeriesInputs synthetic_series(int horizon, double dt_hours, std::uint64_t seed,
                              double pv_peak_kw) {
    SeriesInputs out;
    out.horizon = horizon;
    out.dt_hours = dt_hours;
    out.price_cap = 0.1;
    out.ambient.resize(static_cast<size_t>(horizon));
    out.price.resize(static_cast<size_t>(horizon));
    out.pv.resize(static_cast<size_t>(horizon));

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    double shift = -0.8 + 1.6 * u01(rng);
    double amp = 3.0 * (0.9 + 0.2 * u01(rng));
    double price_scale = 0.9 + 0.15 * u01(rng);
    double pv_scale = 0.7 + 0.3 * u01(rng);
    double wiggle_phase = 2.0 * M_PI * u01(rng);

    constexpr double kTau = 2.0 * M_PI;
    for (int t = 0; t < horizon; ++t) {
        double h = std::fmod(t * dt_hours, 24.0);
        out.ambient[static_cast<size_t>(t)] =
            -10.0 + shift + amp * std::cos(kTau * (h - 14.0) / 24.0);
        // Duck-curve wholesale shape: morning and evening peaks around a
        // deep midday trough.
        double morning = std::exp(-std::pow((h - 7.5) / 1.8, 2));
        double evening = std::exp(-std::pow((h - 18.0) / 2.2, 2));
        double midday = std::exp(-std::pow((h - 13.0) / 2.5, 2));
        double wiggle = 0.003 * std::sin(kTau * h / 6.0 + wiggle_phase);
        double price = price_scale * (0.030 + 0.035 * morning + 0.060 * evening -
                                      0.020 * midday) +
                       wiggle;
        out.price[static_cast<size_t>(t)] =
            std::min(std::max(price, 0.006), out.price_cap - 1e-4);
        double sun = 0.0;
        if (h > 8.5 && h < 16.0) sun = std::pow(std::sin(M_PI * (h - 8.5) / 7.5), 1.5);
        out.pv[static_cast<size_t>(t)] = pv_peak_kw * pv_scale * sun;
    }
    return out;
}

Scenario generate_scenario(const GeneratorConfig& cfg, const SeriesInputs& inputs) {
    if (cfg.ev_count < 0) throw std::invalid_argument("generate_scenario: negative ev_count");
    if (cfg.arrive_lo > cfg.arrive_hi || cfg.park_lo > cfg.park_hi ||
        cfg.soc_lo > cfg.soc_hi || cfg.init_temp_lo > cfg.init_temp_hi)
        throw std::invalid_argument("generate_scenario: unordered bounds");
    if (cfg.soc_lo < 0.0 || cfg.soc_hi > 1.0 || cfg.soc_depart < 0.0 ||
        cfg.soc_depart > 1.0)
        throw std::invalid_argument("generate_scenario: SoC outside [0,1]");
    if (cfg.park_lo > inputs.horizon)
        throw std::invalid_argument("generate_scenario: parking duration exceeds horizon");
    if (cfg.arrive_lo < 0 || cfg.arrive_hi >= inputs.horizon)
        throw std::invalid_argument("generate_scenario: arrival window outside horizon");
    if (static_cast<int>(inputs.ambient.size()) != inputs.horizon ||
        static_cast<int>(inputs.price.size()) != inputs.horizon ||
        static_cast<int>(inputs.pv.size()) != inputs.horizon)
        throw std::invalid_argument("generate_scenario: series length mismatch");

    Scenario s;
    s.dt_hours = inputs.dt_hours;
    s.horizon = inputs.horizon;
    s.price_cap = inputs.price_cap;
    s.ambient = inputs.ambient;
    for (double& v : s.ambient) v += cfg.ambient_offset;
    s.price = inputs.price;
    s.pv_cap = inputs.pv;
    s.ambient_low = *std::min_element(s.ambient.begin(), s.ambient.end());
    s.ambient_high = *std::max_element(s.ambient.begin(), s.ambient.end());

    std::mt19937_64 rng(cfg.seed);
    std::uniform_int_distribution<int> arrive(cfg.arrive_lo, cfg.arrive_hi);
    std::uniform_int_distribution<int> park(cfg.park_lo, cfg.park_hi);
    std::uniform_real_distribution<double> soc(cfg.soc_lo, cfg.soc_hi);
    std::uniform_real_distribution<double> temp(cfg.init_temp_lo, cfg.init_temp_hi);
    for (int k = 0; k < cfg.ev_count; ++k) {
        EvSession ev;
        ev.id = k + 1;
        ev.t_arrive = arrive(rng);
        ev.t_depart = std::min(ev.t_arrive + park(rng), inputs.horizon);
        if (cfg.depart_quantum > 1) {
            // Declared deadlines cluster on coarse marks, so EVs share
            // remaining-time groups.
            int q = cfg.depart_quantum;
            int snapped = ((ev.t_depart + q / 2) / q) * q;
            ev.t_depart = std::max(ev.t_arrive + 1, std::min(snapped, inputs.horizon));
        }
        ev.e_cap = cfg.capacity_kwh;
        ev.e_initial = soc(rng) * cfg.capacity_kwh;
        ev.e_depart = cfg.soc_depart * cfg.capacity_kwh;
        ev.t_initial = temp(rng);
        ev.thermal = cfg.thermal;
        s.sessions.push_back(ev);
    }
    return s;
}

namespace {

json params_to_json(const ThermalParams& p) {
    return json{{"q", p.q},           {"eta", p.eta},
                {"delta_h", p.delta_h}, {"delta_c", p.delta_c},
                {"beta_c", p.beta_c},   {"beta_h", p.beta_h},
                {"p_c_base", p.p_c_base}, {"p_h_base", p.p_h_base},
                {"p_total", p.p_total}, {"t_low", p.t_low},
                {"t_high", p.t_high}};
}

ThermalParams params_from_json(const json& j) {
    ThermalParams p;
    p.q = j.at("q");
    p.eta = j.at("eta");
    p.delta_h = j.at("delta_h");
    p.delta_c = j.at("delta_c");
    p.beta_c = j.at("beta_c");
    p.beta_h = j.at("beta_h");
    p.p_c_base = j.at("p_c_base");
    p.p_h_base = j.at("p_h_base");
    p.p_total = j.at("p_total");
    p.t_low = j.at("t_low");
    p.t_high = j.at("t_high");
    return p;
}

}  // namespace

Scenario load_scenario_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_scenario_json: cannot open " + path);
    json j = json::parse(in);
    Scenario s;
    s.dt_hours = j.at("dt_hours");
    s.horizon = j.at("horizon");
    s.price_cap = j.at("price_cap");
    s.ambient = j.at("ambient").get<std::vector<double>>();
    s.price = j.at("price").get<std::vector<double>>();
    s.pv_cap = j.at("pv_cap").get<std::vector<double>>();
    s.ambient_low = j.at("ambient_low");
    s.ambient_high = j.at("ambient_high");
    for (const auto& je : j.at("sessions")) {
        EvSession ev;
        ev.id = je.at("id");
        ev.t_arrive = je.at("t_arrive");
        ev.t_depart = je.at("t_depart");
        ev.e_initial = je.at("e_initial");
        ev.e_depart = je.at("e_depart");
        ev.e_cap = je.at("e_cap");
        ev.t_initial = je.at("t_initial");
        ev.thermal = params_from_json(je.at("thermal"));
        s.sessions.push_back(ev);
    }
    return s;
}

void save_scenario_json(const std::string& path, const Scenario& s) {
    json j;
    j["dt_hours"] = s.dt_hours;
    j["horizon"] = s.horizon;
    j["price_cap"] = s.price_cap;
    j["ambient"] = s.ambient;
    j["price"] = s.price;
    j["pv_cap"] = s.pv_cap;
    j["ambient_low"] = s.ambient_low;
    j["ambient_high"] = s.ambient_high;
    j["sessions"] = json::array();
    for (const auto& ev : s.sessions) {
        json je{{"id", ev.id},
                {"t_arrive", ev.t_arrive},
                {"t_depart", ev.t_depart},
                {"e_initial", ev.e_initial},
                {"e_depart", ev.e_depart},
                {"e_cap", ev.e_cap},
                {"t_initial", ev.t_initial},
                {"thermal", params_to_json(ev.thermal)}};
        j["sessions"].push_back(je);
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_scenario_json: cannot open " + path);
    out << j.dump(2) << "\n";
}

std::string metrics_to_json(const EpisodeMetrics& m) {
    json j{{"total_cost", m.total_cost},
           {"fulfillment_ratio", m.fulfillment_ratio},
           {"cost_index", m.cost_index},
           {"heating_ratio", m.heating_ratio},
           {"y_final_over_t", m.y_final_over_t},
           {"temperature_violations", m.temperature_violations},
           {"assumption_failures", m.assumption_failures}};
    return j.dump(2);
}

void write_metrics_json(const std::string& path, const EpisodeMetrics& m) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_metrics_json: cannot open " + path);
    out << metrics_to_json(m) << "\n";
}

namespace {

json trace_ev_to_json(const TraceEv& e) {
    return json{{"id", e.id},
                {"e", e.energy},
                {"temp", e.temp},
                {"h", e.h},
                {"pc", e.p_charge},
                {"ph", e.p_heat},
                {"cap_c", e.cap_charge},
                {"cap_h", e.cap_heat},
                {"w_c", e.w_charge},
                {"w_h", e.w_heat},
                {"e_after", e.energy_after},
                {"temp_after", e.temp_after},
                {"a42", e.charge_heat_ok},
                {"a43", e.heating_ok}};
}

TraceEv trace_ev_from_json(const json& j) {
    TraceEv e;
    e.id = j.at("id");
    e.energy = j.at("e");
    e.temp = j.at("temp");
    e.h = j.at("h");
    e.p_charge = j.at("pc");
    e.p_heat = j.at("ph");
    e.cap_charge = j.at("cap_c");
    e.cap_heat = j.at("cap_h");
    e.w_charge = j.at("w_c");
    e.w_heat = j.at("w_h");
    e.energy_after = j.at("e_after");
    e.temp_after = j.at("temp_after");
    e.charge_heat_ok = j.at("a42");
    e.heating_ok = j.at("a43");
    return e;
}

}  // namespace

void write_trace_jsonl(const std::string& path, const std::vector<TraceRecord>& trace) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_trace_jsonl: cannot open " + path);
    for (const auto& rec : trace) {
        json j{{"slot", rec.slot},   {"price", rec.price},
               {"pv_cap", rec.pv_cap}, {"ambient", rec.ambient},
               {"p_pv", rec.p_pv},   {"p_grid", rec.p_grid},
               {"cost", rec.cost},   {"q", rec.q},
               {"y", rec.y},         {"y_after", rec.y_after},
               {"alloc", rec.alloc}};
        j["evs"] = json::array();
        for (const auto& e : rec.evs) j["evs"].push_back(trace_ev_to_json(e));
        out << j.dump() << "\n";
    }
}

std::vector<TraceRecord> read_trace_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_trace_jsonl: cannot open " + path);
    std::vector<TraceRecord> trace;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        TraceRecord rec;
        rec.slot = j.at("slot");
        rec.price = j.at("price");
        rec.pv_cap = j.at("pv_cap");
        rec.ambient = j.at("ambient");
        rec.p_pv = j.at("p_pv");
        rec.p_grid = j.at("p_grid");
        rec.cost = j.at("cost");
        rec.q = j.at("q").get<std::vector<double>>();
        rec.y = j.at("y");
        rec.y_after = j.at("y_after");
        rec.alloc = j.at("alloc").get<std::vector<std::string>>();
        for (const auto& je : j.at("evs")) rec.evs.push_back(trace_ev_from_json(je));
        trace.push_back(std::move(rec));
    }
    return trace;
}

void write_trajectories_csv(const std::string& path,
                            const std::vector<TraceRecord>& trace) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_trajectories_csv: cannot open " + path);
    out << "slot,ev,temp,p_charge,p_heat\n";
    out.precision(12);
    for (const auto& rec : trace)
        for (const auto& e : rec.evs)
            out << rec.slot << "," << e.id << "," << e.temp << "," << e.p_charge << ","
                << e.p_heat << "\n";
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("parse_config_file: cannot open " + path);
    RunConfig cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            std::ostringstream msg;
            msg << "parse_config_file: " << path << ":" << line_no << ": expected key=value";
            throw std::runtime_error(msg.str());
        }
        auto strip = [](std::string v) {
            auto b = v.find_first_not_of(" \t\r");
            auto e = v.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : v.substr(b, e - b + 1);
        };
        std::string key = strip(line.substr(0, eq));
        std::string value = strip(line.substr(eq + 1));
        try {
            if (key == "method") cfg.method = value;
            else if (key == "v") cfg.v = std::stod(value);
            else if (key == "gamma") cfg.gamma = std::stod(value);
            else if (key == "truth_model") cfg.truth_model = value;
            else if (key == "theorem1_mode") cfg.theorem1_mode = value == "true" || value == "1";
            else if (key == "alpha") cfg.alpha = std::stod(value);
            else if (key == "out_dir") cfg.out_dir = value;
            else if (key == "ambient_csv") cfg.ambient_csv = value;
            else if (key == "price_csv") cfg.price_csv = value;
            else if (key == "pv_csv") cfg.pv_csv = value;
            else if (key == "pv_peak_kw") cfg.pv_peak_kw = std::stod(value);
            else if (key == "price_cap") cfg.price_cap = std::stod(value);
            else if (key == "dt_hours") cfg.dt_hours = std::stod(value);
            else if (key == "horizon") cfg.horizon = std::stoi(value);
            else if (key == "ev_count") cfg.generator.ev_count = std::stoi(value);
            else if (key == "arrive_lo") cfg.generator.arrive_lo = std::stoi(value);
            else if (key == "arrive_hi") cfg.generator.arrive_hi = std::stoi(value);
            else if (key == "park_lo") cfg.generator.park_lo = std::stoi(value);
            else if (key == "park_hi") cfg.generator.park_hi = std::stoi(value);
            else if (key == "depart_quantum") cfg.generator.depart_quantum = std::stoi(value);
            else if (key == "soc_lo") cfg.generator.soc_lo = std::stod(value);
            else if (key == "soc_hi") cfg.generator.soc_hi = std::stod(value);
            else if (key == "soc_depart") cfg.generator.soc_depart = std::stod(value);
            else if (key == "capacity_kwh") cfg.generator.capacity_kwh = std::stod(value);
            else if (key == "init_temp_lo") cfg.generator.init_temp_lo = std::stod(value);
            else if (key == "init_temp_hi") cfg.generator.init_temp_hi = std::stod(value);
            else if (key == "ambient_offset") cfg.generator.ambient_offset = std::stod(value);
            else if (key == "seed") cfg.generator.seed = std::stoull(value);
            else {
                std::ostringstream msg;
                msg << "parse_config_file: " << path << ":" << line_no << ": unknown key '"
                    << key << "'";
                throw std::runtime_error(msg.str());
            }
        } catch (const std::invalid_argument&) {
            std::ostringstream msg;
            msg << "parse_config_file: " << path << ":" << line_no << ": bad value for '"
                << key << "'";
            throw std::runtime_error(msg.str());
        }
    }
    return cfg;
}

Scenario build_scenario(const RunConfig& cfg) {
    SeriesInputs inputs;
    if (!cfg.ambient_csv.empty() || !cfg.price_csv.empty() || !cfg.pv_csv.empty()) {
        inputs = synthetic_series(cfg.horizon, cfg.dt_hours, cfg.generator.seed,
                                  cfg.pv_peak_kw);
        if (!cfg.ambient_csv.empty())
            inputs.ambient = load_series(cfg.ambient_csv, cfg.horizon);
        if (!cfg.price_csv.empty()) inputs.price = load_series(cfg.price_csv, cfg.horizon);
        if (!cfg.pv_csv.empty()) inputs.pv = load_series(cfg.pv_csv, cfg.horizon);
    } else {
        inputs = synthetic_series(cfg.horizon, cfg.dt_hours, cfg.generator.seed,
                                  cfg.pv_peak_kw);
    }
    inputs.price_cap = cfg.price_cap;
    inputs.dt_hours = cfg.dt_hours;
    inputs.horizon = cfg.horizon;
    return generate_scenario(cfg.generator, inputs);
}

}  // namespace coldcharge
