#include "coldcharge/qp_solver.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace coldcharge {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double inf_norm(const Eigen::VectorXd& v) {
    return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

// Column-wise infinity norms of a sparse matrix.
Eigen::VectorXd col_norms(const Eigen::SparseMatrix<double>& m) {
    Eigen::VectorXd norms = Eigen::VectorXd::Zero(m.cols());
    for (int k = 0; k < m.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it)
            norms[it.col()] = std::max(norms[it.col()], std::fabs(it.value()));
    return norms;
}

Eigen::VectorXd row_norms(const Eigen::SparseMatrix<double>& m) {
    Eigen::VectorXd norms = Eigen::VectorXd::Zero(m.rows());
    for (int k = 0; k < m.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it)
            norms[it.row()] = std::max(norms[it.row()], std::fabs(it.value()));
    return norms;
}

void scale_columns(Eigen::SparseMatrix<double>& m, const Eigen::VectorXd& s) {
    for (int k = 0; k < m.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it)
            it.valueRef() *= s[it.col()];
}

void scale_rows(Eigen::SparseMatrix<double>& m, const Eigen::VectorXd& s) {
    for (int k = 0; k < m.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it)
            it.valueRef() *= s[it.row()];
}

struct Scaling {
    Eigen::VectorXd d;  // variable scaling
    Eigen::VectorXd e;  // row scaling
    double cost = 1.0;
};

// Modified Ruiz equilibration of the stacked [[P, A'],[A, 0]] system plus
// cost normalization.
Scaling ruiz_equilibrate(Eigen::SparseMatrix<double>& p, Eigen::VectorXd& q,
                         Eigen::SparseMatrix<double>& a, Eigen::VectorXd& lower,
                         Eigen::VectorXd& upper, int passes) {
    const int n = static_cast<int>(p.rows());
    const int m = static_cast<int>(a.rows());
    Scaling s;
    s.d = Eigen::VectorXd::Ones(n);
    s.e = Eigen::VectorXd::Ones(m);
    auto safe_scale = [](double norm) {
        if (norm < 1e-10) return 1.0;
        return 1.0 / std::sqrt(std::min(std::max(norm, 1e-8), 1e8));
    };
    for (int pass = 0; pass < passes; ++pass) {
        Eigen::VectorXd pn = col_norms(p);
        Eigen::VectorXd an_col = col_norms(a);
        Eigen::VectorXd an_row = row_norms(a);
        Eigen::VectorXd dx(n), dz(m);
        for (int j = 0; j < n; ++j) dx[j] = safe_scale(std::max(pn[j], an_col[j]));
        for (int i = 0; i < m; ++i) dz[i] = safe_scale(an_row[i]);
        scale_columns(p, dx);
        scale_rows(p, dx);
        q = q.cwiseProduct(dx);
        scale_columns(a, dx);
        scale_rows(a, dz);
        for (int i = 0; i < m; ++i) {
            if (std::isfinite(lower[i])) lower[i] *= dz[i];
            if (std::isfinite(upper[i])) upper[i] *= dz[i];
        }
        s.d = s.d.cwiseProduct(dx);
        s.e = s.e.cwiseProduct(dz);
        // Cost normalization.
        Eigen::VectorXd pcols = col_norms(p);
        double pmean = n > 0 ? pcols.sum() / n : 0.0;
        double denom = std::max(pmean, inf_norm(q));
        if (denom > 1e-10) {
            double g = 1.0 / std::min(std::max(denom, 1e-8), 1e8);
            p *= g;
            q *= g;
            s.cost *= g;
        }
    }
    return s;
}

Eigen::SparseMatrix<double> build_kkt(const Eigen::SparseMatrix<double>& p,
                                      const Eigen::SparseMatrix<double>& a,
                                      double sigma, const Eigen::VectorXd& rho) {
    const int n = static_cast<int>(p.rows());
    const int m = static_cast<int>(a.rows());
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(p.nonZeros() + 2 * a.nonZeros() + n + m);
    for (int k = 0; k < p.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(p, k); it; ++it)
            trips.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()),
                               it.value());
    for (int j = 0; j < n; ++j) trips.emplace_back(j, j, sigma);
    for (int k = 0; k < a.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(a, k); it; ++it) {
            int i = static_cast<int>(it.row());
            int j = static_cast<int>(it.col());
            trips.emplace_back(n + i, j, it.value());
            trips.emplace_back(j, n + i, it.value());
        }
    for (int i = 0; i < m; ++i) trips.emplace_back(n + i, n + i, -1.0 / rho[i]);
    Eigen::SparseMatrix<double> kkt(n + m, n + m);
    kkt.setFromTriplets(trips.begin(), trips.end());
    return kkt;
}

struct Residuals {
    double prim = 0.0;
    double dual = 0.0;
    double comp = 0.0;
    double prim_rel_den = 0.0;
    double dual_rel_den = 0.0;
};

Residuals compute_residuals(const QpProblem& orig, const Eigen::VectorXd& x,
                            const Eigen::VectorXd& y, const Eigen::VectorXd& z) {
    Residuals r;
    Eigen::VectorXd ax = orig.constraints * x;
    const int m = static_cast<int>(ax.size());
    for (int i = 0; i < m; ++i) {
        double viol = 0.0;
        if (std::isfinite(orig.lower[i])) viol = std::max(viol, orig.lower[i] - ax[i]);
        if (std::isfinite(orig.upper[i])) viol = std::max(viol, ax[i] - orig.upper[i]);
        r.prim = std::max(r.prim, viol);
        double comp = 0.0;
        if (y[i] < 0.0)
            comp = std::isfinite(orig.lower[i]) ? -y[i] * std::fabs(ax[i] - orig.lower[i])
                                                : -y[i] * 1e30;
        else if (y[i] > 0.0)
            comp = std::isfinite(orig.upper[i]) ? y[i] * std::fabs(orig.upper[i] - ax[i])
                                                : y[i] * 1e30;
        r.comp = std::max(r.comp, comp);
    }
    Eigen::VectorXd aty = orig.constraints.transpose() * y;
    Eigen::VectorXd px = orig.objective * x;
    r.dual = inf_norm(px + orig.linear + aty);
    r.prim_rel_den = std::max(inf_norm(ax), inf_norm(z));
    r.dual_rel_den = std::max({inf_norm(px), inf_norm(aty), inf_norm(orig.linear)});
    return r;
}

// Solves the equality-constrained subproblem for a candidate active set,
// proximally anchored at (x0, y0): zero-curvature directions the active rows
// leave free stay at their anchored (near-optimal) values instead of blowing
// up to -q/delta. Returns false on factorization failure or blow-up.
bool solve_active_kkt(const QpProblem& orig, const std::vector<int>& side,
                      const Eigen::VectorXd& x0, const Eigen::VectorXd& y0,
                      Eigen::VectorXd& x_out, Eigen::VectorXd& y_out) {
    const int n = static_cast<int>(orig.objective.rows());
    const int m = static_cast<int>(orig.constraints.rows());
    std::vector<int> active;
    std::vector<double> bound;
    for (int i = 0; i < m; ++i) {
        if (side[static_cast<size_t>(i)] == 0) continue;
        active.push_back(i);
        bound.push_back(side[static_cast<size_t>(i)] < 0 ? orig.lower[i]
                                                         : orig.upper[i]);
    }
    const int ma = static_cast<int>(active.size());

    std::vector<Eigen::Triplet<double>> trips;
    for (int k = 0; k < orig.objective.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(orig.objective, k); it; ++it)
            trips.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()),
                               it.value());
    const double delta = 1e-6;
    for (int j = 0; j < n; ++j) trips.emplace_back(j, j, delta);
    std::vector<int> row_map(m, -1);
    for (int k = 0; k < ma; ++k) row_map[active[static_cast<size_t>(k)]] = k;
    for (int k = 0; k < orig.constraints.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(orig.constraints, k); it;
             ++it) {
            int ai = row_map[it.row()];
            if (ai < 0) continue;
            trips.emplace_back(n + ai, static_cast<int>(it.col()), it.value());
            trips.emplace_back(static_cast<int>(it.col()), n + ai, it.value());
        }
    for (int k = 0; k < ma; ++k) trips.emplace_back(n + k, n + k, -delta);
    Eigen::SparseMatrix<double> kkt(n + ma, n + ma);
    kkt.setFromTriplets(trips.begin(), trips.end());

    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
    ldlt.compute(kkt);
    if (ldlt.info() != Eigen::Success) {
        return false;
    }

    // Residual of the unregularized active-set KKT at a point.
    auto unreg_residual = [&](const Eigen::VectorXd& v) {
        Eigen::VectorXd vx = v.head(n);
        Eigen::VectorXd atv = Eigen::VectorXd::Zero(n);
        Eigen::VectorXd av = Eigen::VectorXd::Zero(ma);
        for (int k = 0; k < orig.constraints.outerSize(); ++k)
            for (Eigen::SparseMatrix<double>::InnerIterator it(orig.constraints, k); it;
                 ++it) {
                int ai = row_map[it.row()];
                if (ai < 0) continue;
                atv[it.col()] += it.value() * v[n + ai];
                av[ai] += it.value() * vx[it.col()];
            }
        Eigen::VectorXd out(n + ma);
        out.head(n) = orig.objective * vx + orig.linear + atv;
        for (int k = 0; k < ma; ++k)
            out[n + k] = av[k] - bound[static_cast<size_t>(k)];
        return out;
    };

    // Proximal iteration re-anchored at each pass; the residual monitor
    // keeps the best iterate in case the active set is inconsistent.
    Eigen::VectorXd anchor(n + ma);
    anchor.head(n) = x0;
    for (int k = 0; k < ma; ++k) anchor[n + k] = y0[active[static_cast<size_t>(k)]];
    // Inconsistent pins make the proximal iteration run away while its
    // residual still shrinks, so bound the travel from the anchor.
    const double travel_cap = 10.0 * (1.0 + anchor.cwiseAbs().maxCoeff());
    Eigen::VectorXd sol = anchor;
    Eigen::VectorXd best = anchor;
    double best_norm = unreg_residual(sol).cwiseAbs().maxCoeff();
    for (int pass = 0; pass < 10; ++pass) {
        Eigen::VectorXd rhs(n + ma);
        rhs.head(n) = -orig.linear + delta * sol.head(n);
        for (int k = 0; k < ma; ++k)
            rhs[n + k] = bound[static_cast<size_t>(k)] - delta * sol[n + k];
        sol = ldlt.solve(rhs);
        if (!sol.allFinite()) break;
        if ((sol - anchor).cwiseAbs().maxCoeff() > travel_cap) break;
        double norm = unreg_residual(sol).cwiseAbs().maxCoeff();
        if (norm < best_norm) {
            best = sol;
            best_norm = norm;
        }
        if (norm < 1e-11) break;
    }
    sol = best;
    if ((sol - anchor).cwiseAbs().maxCoeff() > travel_cap) {
        return false;
    }

    x_out = sol.head(n);
    y_out = Eigen::VectorXd::Zero(m);
    for (int k = 0; k < ma; ++k) y_out[active[static_cast<size_t>(k)]] = sol[n + k];
    return true;
}

// Active-set refinement of an approximate solution: solve with the guessed
// active set, add violated rows, drop wrong-signed multipliers, repeat.
// Returns true when the refined point reaches the target residuals.
bool polish(const QpProblem& orig, const QpSettings& settings, Eigen::VectorXd& x,
            Eigen::VectorXd& y, Eigen::VectorXd& z, Residuals& res) {
    const int m = static_cast<int>(orig.constraints.rows());
    // Proximity-based pinning is restricted to single-variable (box) rows:
    // pinning a nearly-active coupling row can make the active system
    // inconsistent at the residual scale.
    std::vector<int> nnz_row(static_cast<size_t>(m), 0);
    for (int k = 0; k < orig.constraints.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(orig.constraints, k); it; ++it)
            ++nnz_row[static_cast<size_t>(it.row())];
    std::vector<bool> is_box(static_cast<size_t>(m), false);
    for (int i = 0; i < m; ++i)
        is_box[static_cast<size_t>(i)] = nnz_row[static_cast<size_t>(i)] == 1;

    std::vector<int> side(static_cast<size_t>(m), 0);  // -1 lower, +1 upper
    std::vector<bool> is_eq(static_cast<size_t>(m), false);
    Eigen::VectorXd ax = orig.constraints * x;
    for (int i = 0; i < m; ++i) {
        size_t si = static_cast<size_t>(i);
        bool lo = std::isfinite(orig.lower[i]);
        bool hi = std::isfinite(orig.upper[i]);
        if (lo && hi && orig.upper[i] - orig.lower[i] < 1e-14) {
            side[si] = -1;
            is_eq[si] = true;
        } else if (y[i] < -1e-9 && lo) {
            side[si] = -1;
        } else if (y[i] > 1e-9 && hi) {
            side[si] = 1;
        } else if (is_box[si] && lo &&
                   ax[i] - orig.lower[i] < 1e-8 * (1.0 + std::fabs(orig.lower[i]))) {
            side[si] = -1;
        } else if (is_box[si] && hi &&
                   orig.upper[i] - ax[i] < 1e-8 * (1.0 + std::fabs(orig.upper[i]))) {
            side[si] = 1;
        }
    }

    Eigen::VectorXd x_new, y_new;
    for (int round = 0; round < 8; ++round) {
        if (!solve_active_kkt(orig, side, x, y, x_new, y_new)) return false;
        Eigen::VectorXd ax_new = orig.constraints * x_new;
        bool changed = false;
        for (int i = 0; i < m; ++i) {
            size_t si = static_cast<size_t>(i);
            if (is_eq[si]) continue;
            double tol = 1e-9 * (1.0 + std::fabs(ax_new[i]));
            if (side[si] == 0) {
                if (std::isfinite(orig.lower[i]) && ax_new[i] < orig.lower[i] - tol) {
                    side[si] = -1;
                    changed = true;
                } else if (std::isfinite(orig.upper[i]) &&
                           ax_new[i] > orig.upper[i] + tol) {
                    side[si] = 1;
                    changed = true;
                }
            } else if (side[si] < 0 && y_new[i] > 1e-10) {
                side[si] = 0;
                changed = true;
            } else if (side[si] > 0 && y_new[i] < -1e-10) {
                side[si] = 0;
                changed = true;
            }
        }
        if (!changed) break;
    }

    Eigen::VectorXd z_new = orig.constraints * x_new;
    Residuals cand = compute_residuals(orig, x_new, y_new, z_new);
    double before = std::max({res.prim, res.dual, res.comp});
    double after = std::max({cand.prim, cand.dual, cand.comp});
    if (after < before) {
        x = x_new;
        y = y_new;
        z = z_new;
        res = cand;
    }
    return after <= settings.polish_target;
}

}  // namespace

QpResult solve_qp(const QpProblem& problem, const QpSettings& settings) {
    const int n = static_cast<int>(problem.objective.rows());
    const int m = static_cast<int>(problem.constraints.rows());
    if (problem.linear.size() != n || problem.constraints.cols() != n ||
        problem.lower.size() != m || problem.upper.size() != m)
        throw std::invalid_argument("solve_qp: inconsistent dimensions");

    // Scaled copies; the originals stay untouched for residual checks.
    Eigen::SparseMatrix<double> p = problem.objective;
    Eigen::VectorXd q = problem.linear;
    Eigen::SparseMatrix<double> a = problem.constraints;
    Eigen::VectorXd lower = problem.lower;
    Eigen::VectorXd upper = problem.upper;
    Scaling scaling = ruiz_equilibrate(p, q, a, lower, upper, 10);

    Eigen::VectorXd rho(m);
    for (int i = 0; i < m; ++i) {
        bool eq = std::isfinite(lower[i]) && std::isfinite(upper[i]) &&
                  upper[i] - lower[i] < 1e-14;
        rho[i] = eq ? settings.rho * 1e3 : settings.rho;
    }

    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
    ldlt.compute(build_kkt(p, a, settings.sigma, rho));
    if (ldlt.info() != Eigen::Success)
        throw std::runtime_error("solve_qp: KKT factorization failed");

    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd z = Eigen::VectorXd::Zero(m);
    for (int i = 0; i < m; ++i)
        z[i] = std::min(std::max(0.0, lower[i]), upper[i]);
    Eigen::VectorXd y = Eigen::VectorXd::Zero(m);

    QpResult result;
    Residuals res;
    Eigen::VectorXd xu, yu, zu;
    auto unscale = [&]() {
        xu = scaling.d.cwiseProduct(x);
        zu = z.cwiseQuotient(scaling.e);
        yu = scaling.e.cwiseProduct(y) / scaling.cost;
    };
    int iter = 0;
    int next_polish = 1000;
    for (; iter < settings.max_iter; ++iter) {
        Eigen::VectorXd rhs(n + m);
        rhs.head(n) = settings.sigma * x - q;
        rhs.tail(m) = z - y.cwiseQuotient(rho);
        Eigen::VectorXd sol = ldlt.solve(rhs);
        Eigen::VectorXd x_tilde = sol.head(n);
        Eigen::VectorXd nu = sol.tail(m);
        Eigen::VectorXd z_tilde = z + (nu - y).cwiseQuotient(rho);

        double al = settings.relax_alpha;
        Eigen::VectorXd x_next = al * x_tilde + (1.0 - al) * x;
        Eigen::VectorXd z_cand =
            al * z_tilde + (1.0 - al) * z + y.cwiseQuotient(rho);
        Eigen::VectorXd z_next = z_cand.cwiseMax(lower).cwiseMin(upper);
        y = rho.cwiseProduct(z_cand - z_next);
        x = x_next;
        z = z_next;

        if ((iter + 1) % settings.check_every != 0) continue;

        // Unscale and evaluate the exact KKT residuals.
        unscale();
        res = compute_residuals(problem, xu, yu, zu);
        double eps_p = settings.eps_abs + settings.eps_rel * res.prim_rel_den;
        double eps_d = settings.eps_abs + settings.eps_rel * res.dual_rel_den;
        if (std::getenv("COLDCHARGE_QP_TRACE") && (iter + 1) % 2000 == 0)
            std::fprintf(stderr, "iter %d prim %.3e dual %.3e comp %.3e\n", iter + 1,
                         res.prim, res.dual, res.comp);
        if (res.prim <= eps_p && res.dual <= eps_d) {
            result.converged = true;
            break;
        }

        // Near the optimum an active-set polish usually lands the exact
        // solution long before the first-order iterates do.
        double coarse = std::max(res.prim / std::max(res.prim_rel_den, 1.0),
                                 res.dual / std::max(res.dual_rel_den, 1.0));
        if (coarse < 3e-5 && iter + 1 >= next_polish) {
            next_polish = iter + 1 + 1000;
            Eigen::VectorXd px = xu, py = yu, pz = zu;
            Residuals pres = res;
            if (polish(problem, settings, px, py, pz, pres)) {
                result.converged = true;
                result.polished = true;
                result.x = px;
                result.y = py;
                result.z = pz;
                result.iterations = iter;
                result.primal_residual = pres.prim;
                result.dual_residual = pres.dual;
                result.comp_residual = pres.comp;
                result.objective =
                    0.5 * px.dot(problem.objective * px) + problem.linear.dot(px);
                return result;
            }
        }

        // Step-size adaptation on the scaled residual ratio.
        if ((iter + 1) % (settings.check_every * 8) == 0) {
            Eigen::VectorXd ax_s = a * x;
            Eigen::VectorXd aty_s = a.transpose() * y;
            Eigen::VectorXd px_s = p * x;
            double rp = inf_norm(ax_s - z) /
                        std::max({inf_norm(ax_s), inf_norm(z), 1e-10});
            double rd = inf_norm(px_s + q + aty_s) /
                        std::max({inf_norm(px_s), inf_norm(aty_s), inf_norm(q), 1e-10});
            double ratio = std::sqrt(rp / std::max(rd, 1e-16));
            if (ratio > 5.0 || ratio < 0.2) {
                for (int i = 0; i < m; ++i)
                    rho[i] = std::min(std::max(rho[i] * ratio, 1e-6), 1e6);
                ldlt.compute(build_kkt(p, a, settings.sigma, rho));
                if (ldlt.info() != Eigen::Success)
                    throw std::runtime_error("solve_qp: KKT refactorization failed");
            }
        }
    }

    unscale();
    res = compute_residuals(problem, xu, yu, zu);
    result.polished = polish(problem, settings, xu, yu, zu, res);

    result.x = xu;
    result.y = yu;
    result.z = zu;
    result.iterations = iter;
    result.primal_residual = res.prim;
    result.dual_residual = res.dual;
    result.comp_residual = res.comp;
    result.objective = 0.5 * xu.dot(problem.objective * xu) + problem.linear.dot(xu);
    return result;
}

}  // namespace coldcharge
