#include "coldcharge/offline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "coldcharge/qp_solver.hpp"
#include "coldcharge/thermal.hpp"

namespace coldcharge {

double default_alpha(const Scenario& s) { return 100.0 * s.price_cap * s.dt_hours; }

double p1_objective(double energy_cost, const std::map<int, double>& e_final,
                    const Scenario& s, double alpha) {
    double obj = energy_cost;
    for (const auto& ev : s.sessions) {
        double e = e_final.count(ev.id) ? e_final.at(ev.id) : ev.e_initial;
        obj += alpha * (e - ev.e_depart) * (e - ev.e_depart);
    }
    return obj;
}

namespace {

// Variable offsets of one session inside the stacked QP vector.
struct SessionVars {
    int pc = 0;    // first charging var, one per window slot
    int ph = 0;    // first heating var
    int temp = 0;  // first temperature var, for slots t_arrive+1 .. t_depart
    int e = 0;     // terminal energy var
};

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

OfflineSolution offline_solve(const Scenario& s, double alpha, TruthModel model) {
    const int horizon = s.horizon;
    const double dt = s.dt_hours;

    std::vector<SessionVars> vars(s.sessions.size());
    int n = 0;
    for (size_t k = 0; k < s.sessions.size(); ++k) {
        int dur = s.sessions[k].duration();
        vars[k].pc = n;
        n += dur;
        vars[k].ph = n;
        n += dur;
        vars[k].temp = n;
        n += dur;
        vars[k].e = n;
        n += 1;
    }
    const int g0 = n;  // grid epigraph vars, one per slot
    n += horizon;

    std::vector<Eigen::Triplet<double>> p_trips;
    Eigen::VectorXd q = Eigen::VectorXd::Zero(n);
    std::vector<Eigen::Triplet<double>> a_trips;
    std::vector<double> lower, upper;
    int row = 0;
    auto add_entry = [&](int j, double v) { a_trips.emplace_back(row, j, v); };
    auto close_row = [&](double lo, double hi) {
        lower.push_back(lo);
        upper.push_back(hi);
        ++row;
    };

    double constant = 0.0;
    for (size_t k = 0; k < s.sessions.size(); ++k) {
        const EvSession& ev = s.sessions[k];
        const ThermalParams& tp = ev.thermal;
        const SessionVars& sv = vars[k];
        int dur = ev.duration();

        p_trips.emplace_back(sv.e, sv.e, 2.0 * alpha);
        q[sv.e] = -2.0 * alpha * ev.e_depart;
        constant += alpha * ev.e_depart * ev.e_depart;

        for (int o = 0; o < dur; ++o) {
            int t = ev.t_arrive + o;
            int pc = sv.pc + o;
            int ph = sv.ph + o;
            int t_next = sv.temp + o;          // temperature after slot t
            int t_cur = o > 0 ? t_next - 1 : -1;  // -1: arrival temperature constant
            double amb = s.ambient[static_cast<size_t>(t)];

            // Thermal dynamics, equality row.
            add_entry(t_next, 1.0);
            add_entry(ph, -tp.delta_h / tp.q);
            add_entry(pc, -(1.0 - tp.delta_c) / tp.q);
            double rhs;
            if (model == TruthModel::queue_model) {
                if (t_cur >= 0) add_entry(t_cur, -1.0);
                rhs = -decay_loss(tp, amb) + (t_cur < 0 ? ev.t_initial : 0.0);
            } else {
                double zeta = tp.zeta();
                if (t_cur >= 0) add_entry(t_cur, -zeta);
                rhs = (tp.eta / tp.q) * amb + (t_cur < 0 ? zeta * ev.t_initial : 0.0);
            }
            close_row(rhs, rhs);

            // Temperature band.
            add_entry(t_next, 1.0);
            close_row(tp.t_low, tp.t_high);

            // Temperature-dependent rate caps at the slot's current
            // temperature, plus plain non-negativity.
            add_entry(pc, 1.0);
            if (t_cur >= 0) {
                add_entry(t_cur, -tp.beta_c);
                close_row(-kInf, tp.p_c_base);
            } else {
                close_row(-kInf, std::max(0.0, tp.p_c_base + tp.beta_c * ev.t_initial));
            }
            add_entry(pc, 1.0);
            close_row(0.0, kInf);
            add_entry(ph, 1.0);
            if (t_cur >= 0) {
                add_entry(t_cur, tp.beta_h);
                close_row(-kInf, tp.p_h_base);
            } else {
                close_row(-kInf, std::max(0.0, tp.p_h_base - tp.beta_h * ev.t_initial));
            }
            add_entry(ph, 1.0);
            close_row(0.0, kInf);

            // Joint power cap.
            add_entry(pc, 1.0);
            add_entry(ph, 1.0);
            close_row(-kInf, tp.p_total);
        }

        // Terminal energy bookkeeping and battery limit.
        add_entry(sv.e, 1.0);
        for (int o = 0; o < dur; ++o) add_entry(sv.pc + o, -tp.delta_c * dt);
        close_row(ev.e_initial, ev.e_initial);
        add_entry(sv.e, 1.0);
        close_row(-kInf, ev.e_cap);
    }

    // PV boundary and grid epigraph, per slot.
    for (int t = 0; t < horizon; ++t) {
        q[g0 + t] = s.price[static_cast<size_t>(t)] * dt;
        for (size_t k = 0; k < s.sessions.size(); ++k) {
            const EvSession& ev = s.sessions[k];
            if (t < ev.t_arrive || t >= ev.t_depart) continue;
            int o = t - ev.t_arrive;
            add_entry(vars[k].pc + o, 1.0);
            add_entry(vars[k].ph + o, 1.0);
        }
        add_entry(g0 + t, -1.0);
        close_row(-kInf, s.pv_cap[static_cast<size_t>(t)]);
        add_entry(g0 + t, 1.0);
        close_row(0.0, kInf);
    }

    QpProblem qp;
    qp.objective.resize(n, n);
    qp.objective.setFromTriplets(p_trips.begin(), p_trips.end());
    qp.linear = q;
    qp.constraints.resize(row, n);
    qp.constraints.setFromTriplets(a_trips.begin(), a_trips.end());
    qp.lower = Eigen::Map<Eigen::VectorXd>(lower.data(), row);
    qp.upper = Eigen::Map<Eigen::VectorXd>(upper.data(), row);

    // Absolute-only termination: the acceptance gate on KKT residuals is
    // absolute, so relative convergence must not stop the iteration early.
    // A stalled run is retried with different step sizes, which breaks the
    // occasional plateau.
    QpSettings settings;
    settings.eps_abs = 2.5e-7;
    settings.eps_rel = 0.0;
    settings.polish_target = 2.0e-7;
    QpResult r = solve_qp(qp, settings);
    for (double rho0 : {1.0, 0.01}) {
        if (std::max({r.primal_residual, r.dual_residual, r.comp_residual}) <= 1e-6)
            break;
        QpSettings retry = settings;
        retry.rho = rho0;
        QpResult second = solve_qp(qp, retry);
        if (std::max({second.primal_residual, second.dual_residual,
                      second.comp_residual}) <
            std::max({r.primal_residual, r.dual_residual, r.comp_residual}))
            r = second;
    }
    double worst = std::max({r.primal_residual, r.dual_residual, r.comp_residual});
    if (worst > 1e-6) {
        std::ostringstream msg;
        msg << "offline_solve: splitting method stalled, residuals primal="
            << r.primal_residual << " dual=" << r.dual_residual
            << " comp=" << r.comp_residual << " after " << r.iterations
            << " iterations";
        throw std::runtime_error(msg.str());
    }

    OfflineSolution out;
    out.kkt_primal = r.primal_residual;
    out.kkt_dual = r.dual_residual;
    out.kkt_comp = r.comp_residual;
    out.iterations = r.iterations;
    out.p_pv.assign(static_cast<size_t>(horizon), 0.0);
    out.p_grid.assign(static_cast<size_t>(horizon), 0.0);

    std::vector<double> totals(static_cast<size_t>(horizon), 0.0);
    for (size_t k = 0; k < s.sessions.size(); ++k) {
        const EvSession& ev = s.sessions[k];
        const SessionVars& sv = vars[k];
        int dur = ev.duration();
        auto& pc = out.p_charge[ev.id];
        auto& ph = out.p_heat[ev.id];
        pc.assign(static_cast<size_t>(horizon), 0.0);
        ph.assign(static_cast<size_t>(horizon), 0.0);
        auto& temp = out.temperature[ev.id];
        temp.resize(static_cast<size_t>(dur) + 1);
        temp[0] = ev.t_initial;
        for (int o = 0; o < dur; ++o) {
            int t = ev.t_arrive + o;
            double c = std::max(0.0, r.x[vars[k].pc + o]);
            double h = std::max(0.0, r.x[vars[k].ph + o]);
            pc[static_cast<size_t>(t)] = c;
            ph[static_cast<size_t>(t)] = h;
            totals[static_cast<size_t>(t)] += c + h;
            temp[static_cast<size_t>(o) + 1] = r.x[sv.temp + o];
        }
        out.e_final[ev.id] = r.x[sv.e];
    }
    double energy_cost = 0.0;
    for (int t = 0; t < horizon; ++t) {
        double pv = std::min(totals[static_cast<size_t>(t)], s.pv_cap[static_cast<size_t>(t)]);
        out.p_pv[static_cast<size_t>(t)] = pv;
        out.p_grid[static_cast<size_t>(t)] = totals[static_cast<size_t>(t)] - pv;
        energy_cost += s.price[static_cast<size_t>(t)] * out.p_grid[static_cast<size_t>(t)] * dt;
    }
    out.energy_cost = energy_cost;
    out.penalty_cost = 0.0;
    for (const auto& ev : s.sessions) {
        double d = out.e_final[ev.id] - ev.e_depart;
        out.penalty_cost += alpha * d * d;
    }
    out.objective = out.energy_cost + out.penalty_cost;
    return out;
}

}  // namespace coldcharge
