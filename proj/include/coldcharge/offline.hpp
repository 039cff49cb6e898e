// Clairvoyant full-horizon program: energy cost plus a quadratic terminal
// shortfall penalty, affine battery/thermal dynamics, temperature and rate
// constraints, and the PV/grid epigraph. Built as a sparse convex QP and
// handed to the operator-splitting solver.
#pragma once

#include <map>
#include <vector>

#include "coldcharge/model.hpp"

namespace coldcharge {

enum class TruthModel { queue_model, exact };

struct OfflineSolution {
    double objective = 0.0;     // energy cost + penalty
    double energy_cost = 0.0;   // sum of lambda_t * grid_t * dt
    double penalty_cost = 0.0;  // alpha * sum (e_final - e_depart)^2
    std::map<int, std::vector<double>> p_charge;     // EV id -> per-slot kW (full horizon)
    std::map<int, std::vector<double>> p_heat;       // EV id -> per-slot kW
    std::map<int, std::vector<double>> temperature;  // EV id -> degC while present
    std::map<int, double> e_final;                   // EV id -> kWh at departure
    std::vector<double> p_pv;    // kW per slot
    std::vector<double> p_grid;  // kW per slot
    double kkt_primal = 0.0;
    double kkt_dual = 0.0;
    double kkt_comp = 0.0;
    int iterations = 0;
};

// Penalty weight making the terminal shortfall dominate any single slot's
// energy price: 100 * price_cap * dt per kWh^2.
double default_alpha(const Scenario& s);

// Solves the clairvoyant program on the realized scenario. Throws
// std::runtime_error when the splitting method fails to reach the residual
// target (the message carries the residuals).
OfflineSolution offline_solve(const Scenario& s, double alpha,
                              TruthModel model = TruthModel::queue_model);

// Realized full-horizon objective of an arbitrary schedule, for dominance
// comparisons against the clairvoyant optimum.
double p1_objective(double energy_cost, const std::map<int, double>& e_final,
                    const Scenario& s, double alpha);

}  // namespace coldcharge
