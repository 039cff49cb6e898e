// Command-line front end: run one episode, compare all methods on one
// scenario, sweep a parameter grid, or run the built-in self checks.
#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <random>

#include "coldcharge/harness.hpp"
#include "coldcharge/ingest.hpp"
#include "coldcharge/simplex.hpp"

using namespace coldcharge;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDataError = 1;
constexpr int kExitValidation = 2;

struct CliOverrides {
    std::string config_path;
    std::string scenario_path;
    std::optional<std::string> method;
    std::optional<double> v;
    std::optional<double> gamma;
    std::optional<std::string> truth_model;
    std::optional<double> offset;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
};

RunConfig resolve_config(const CliOverrides& o) {
    RunConfig cfg;
    if (!o.config_path.empty()) cfg = parse_config_file(o.config_path);
    if (o.method) cfg.method = *o.method;
    if (o.v) cfg.v = *o.v;
    if (o.gamma) cfg.gamma = *o.gamma;
    if (o.truth_model) cfg.truth_model = *o.truth_model;
    if (o.offset) cfg.generator.ambient_offset = *o.offset;
    if (o.seed) cfg.generator.seed = *o.seed;
    if (o.out) cfg.out_dir = *o.out;
    return cfg;
}

Scenario resolve_scenario(const CliOverrides& o, const RunConfig& cfg) {
    Scenario s = o.scenario_path.empty() ? build_scenario(cfg)
                                         : load_scenario_json(o.scenario_path);
    auto violations = validate_scenario(s);
    if (!violations.empty()) {
        for (const auto& v : violations)
            std::cerr << "scenario violation: " << v.field << " (index " << v.index
                      << "): " << v.message << "\n";
        throw std::runtime_error("scenario failed validation");
    }
    return s;
}

TruthModel truth_from_string(const std::string& name) {
    if (name == "queue") return TruthModel::queue_model;
    if (name == "exact") return TruthModel::exact;
    throw std::runtime_error("unknown truth model: " + name);
}

struct MethodRun {
    EpisodeMetrics metrics;
    std::vector<TraceRecord> trace;
};

MethodRun run_method(const Scenario& s, const RunConfig& cfg, Method method) {
    MethodRun out;
    if (method == Method::offline) {
        double alpha = cfg.alpha ? *cfg.alpha : default_alpha(s);
        OfflineSolution sol =
            offline_solve(s, alpha, truth_from_string(cfg.truth_model));
        out.trace = offline_trace(sol, s);
        out.metrics = offline_metrics(sol, s);
        return out;
    }
    ControllerParams params =
        make_controller_params(s, cfg.v, cfg.gamma, cfg.theorem1_mode);
    EpisodeResult r = run_episode(s, method, params,
                                  truth_from_string(cfg.truth_model),
                                  cfg.generator.seed);
    out.metrics = r.metrics;
    out.trace = std::move(r.trace);
    return out;
}

int cmd_run(const CliOverrides& o) {
    RunConfig cfg = resolve_config(o);
    Scenario s = resolve_scenario(o, cfg);
    Method method = method_from_string(cfg.method);
    MethodRun r = run_method(s, cfg, method);

    std::filesystem::create_directories(cfg.out_dir);
    auto dir = std::filesystem::path(cfg.out_dir);
    save_scenario_json((dir / "scenario.json").string(), s);
    write_metrics_json((dir / "metrics.json").string(), r.metrics);
    write_trace_jsonl((dir / "trace.jsonl").string(), r.trace);
    write_trajectories_csv((dir / "trajectories.csv").string(), r.trace);
    std::cout << metrics_to_json(r.metrics) << "\n";
    return kExitOk;
}

int cmd_compare(const CliOverrides& o) {
    RunConfig cfg = resolve_config(o);
    Scenario s = resolve_scenario(o, cfg);
    std::filesystem::create_directories(cfg.out_dir);
    auto path = std::filesystem::path(cfg.out_dir) / "compare.csv";
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string());
    out << "method,total_cost,fulfillment_pct,cost_index,heating_pct\n";
    out.precision(6);
    out << std::fixed;
    for (Method m : {Method::offline, Method::proposed, Method::b1, Method::b2,
                     Method::noheat}) {
        MethodRun r = run_method(s, cfg, m);
        out << method_name(m) << "," << r.metrics.total_cost << ","
            << 100.0 * r.metrics.fulfillment_ratio << "," << r.metrics.cost_index
            << "," << 100.0 * r.metrics.heating_ratio << "\n";
        std::cout << method_name(m) << ": cost=" << r.metrics.total_cost
                  << " fulfillment=" << 100.0 * r.metrics.fulfillment_ratio
                  << "% cost_index=" << r.metrics.cost_index
                  << " heating=" << 100.0 * r.metrics.heating_ratio << "%\n";
    }
    std::cout << "wrote " << path.string() << "\n";
    return kExitOk;
}

int cmd_sweep(const CliOverrides& o, const std::string& param,
              std::vector<double> values) {
    RunConfig cfg = resolve_config(o);
    if (values.empty()) {
        if (param == "v") values = {100, 200, 300, 400, 500, 600};
        else if (param == "gamma") values = {5, 10, 20, 40};
        else if (param == "offset") values = {-12, -8, -4, 0, 4};
        else throw std::runtime_error("unknown sweep parameter: " + param);
    }

    // The scenario is fixed for v/gamma sweeps and regenerated per offset.
    std::optional<Scenario> base;
    if (param != "offset") base = resolve_scenario(o, cfg);

    std::vector<std::future<EpisodeMetrics>> futures;
    for (double value : values) {
        futures.push_back(std::async(std::launch::async, [&, value]() {
            RunConfig point = cfg;
            if (param == "v") point.v = value;
            else if (param == "gamma") point.gamma = value;
            else point.generator.ambient_offset = value;
            Scenario s = base ? *base : build_scenario(point);
            return run_method(s, point, method_from_string(point.method)).metrics;
        }));
    }

    std::filesystem::create_directories(cfg.out_dir);
    auto path = std::filesystem::path(cfg.out_dir) / ("sweep_" + param + ".csv");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string());
    out << param
        << ",total_cost,fulfillment_pct,cost_index,heating_pct,temperature_violations,"
           "assumption_failures\n";
    out.precision(6);
    out << std::fixed;
    for (size_t i = 0; i < values.size(); ++i) {
        EpisodeMetrics m = futures[i].get();
        out << values[i] << "," << m.total_cost << "," << 100.0 * m.fulfillment_ratio
            << "," << m.cost_index << "," << 100.0 * m.heating_ratio << ","
            << m.temperature_violations << "," << m.assumption_failures << "\n";
    }
    std::cout << "wrote " << path.string() << "\n";
    return kExitOk;
}

// Built-in self checks: solver oracle agreement, thermal identities, queue
// conservation, determinism, generator validity.
int cmd_validate(int instances) {
    int failures = 0;
    auto report = [&](const std::string& name, bool ok) {
        std::cout << (ok ? "[PASS] " : "[FAIL] ") << name << "\n";
        if (!ok) ++failures;
    };

    {
        std::mt19937_64 rng(2024);
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        bool ok = true;
        for (int k = 0; k < instances && ok; ++k) {
            SlotProblem prob;
            int n = 1 + static_cast<int>(u01(rng) * 5.0);
            for (int i = 0; i < n; ++i) {
                SlotEv ev;
                ev.id = i + 1;
                ev.w_charge = -60.0 + 65.0 * u01(rng);
                ev.w_heat = -5.0 + 10.0 * u01(rng);
                ev.cap_charge = 7.0 * u01(rng);
                ev.cap_heat = 3.5 * u01(rng);
                ev.cap_joint = (ev.cap_charge + ev.cap_heat + 2.0) * u01(rng);
                prob.evs.push_back(ev);
            }
            prob.pv_free = 15.0 * u01(rng);
            prob.grid_unit_cost = 8.0 * u01(rng);
            auto greedy = solve_slot_detailed(prob);
            auto lp = lp_solve_p3(prob);
            double gap = std::fabs(greedy.objective - lp.objective) /
                         std::max(1.0, std::fabs(lp.objective));
            if (gap > 1e-7) ok = false;
        }
        report("greedy slot solver matches the LP oracle", ok);
    }
    {
        ThermalParams p;
        bool ok = true;
        for (int i = 0; i < 50; ++i) {
            double ambient = -30.0 + i * 0.55;
            double k = decay_slots(p, ambient);
            double loss = decay_loss(p, ambient);
            if (std::fabs(loss * k - (p.t_high - p.t_low)) > 1e-9) ok = false;
        }
        report("decay identity loss*K = band width", ok);
    }
    {
        GeneratorConfig gc;
        gc.ev_count = 8;
        gc.seed = 5;
        Scenario s = generate_scenario(gc, synthetic_series(288, 1.0 / 12.0, 5));
        bool ok = validate_scenario(s).empty();
        ControllerParams params = make_controller_params(s, 600.0, 20.0);
        auto r1 = run_episode(s, Method::proposed, params, TruthModel::queue_model, 5);
        auto r2 = run_episode(s, Method::proposed, params, TruthModel::queue_model, 5);
        ok = ok && metrics_to_json(r1.metrics) == metrics_to_json(r2.metrics);
        double closed = r1.delivered_total + r1.terminal_queue_mass + r1.y_final;
        ok = ok && std::fabs(closed - r1.admitted_demand) < 1e-6;
        ok = ok && r1.metrics.temperature_violations == 0;
        report("episode determinism, queue conservation, feasibility", ok);
    }
    return failures == 0 ? kExitOk : kExitValidation;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Online EV charging control with battery thermal management"};
    app.require_subcommand(1);

    CliOverrides o;
    std::string sweep_param = "v";
    std::string sweep_values;
    int validate_instances = 500;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", o.config_path, "flat key=value configuration file");
        cmd->add_option("--scenario", o.scenario_path, "scenario JSON file");
        cmd->add_option("--method", o.method, "proposed|b1|b2|noheat|offline");
        cmd->add_option("--v", o.v, "trade-off weight V");
        cmd->add_option("--gamma", o.gamma, "demand-queue weight");
        cmd->add_option("--truth-model", o.truth_model, "queue|exact");
        cmd->add_option("--offset", o.offset, "ambient offset, degC");
        cmd->add_option("--seed", o.seed, "generator seed");
        cmd->add_option("--out", o.out, "output directory");
    };

    CLI::App* run = app.add_subcommand("run", "run one episode");
    add_common(run);
    CLI::App* compare = app.add_subcommand("compare", "all methods on one scenario");
    add_common(compare);
    CLI::App* sweep = app.add_subcommand("sweep", "grid over v, gamma or offset");
    add_common(sweep);
    sweep->add_option("--param", sweep_param, "v|gamma|offset");
    sweep->add_option("--values", sweep_values, "comma-separated grid values");
    CLI::App* validate = app.add_subcommand("validate", "built-in self checks");
    validate->add_option("--instances", validate_instances,
                         "random instances for the solver cross-check");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(o);
        if (compare->parsed()) return cmd_compare(o);
        if (sweep->parsed()) {
            std::vector<double> values;
            std::stringstream ss(sweep_values);
            std::string tok;
            while (std::getline(ss, tok, ','))
                if (!tok.empty()) values.push_back(std::stod(tok));
            return cmd_sweep(o, sweep_param, values);
        }
        if (validate->parsed()) return cmd_validate(validate_instances);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDataError;
    }
    return kExitOk;
}
