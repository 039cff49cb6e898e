#include "coldcharge/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace coldcharge {

namespace {

constexpr double kTol = 1e-10;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Dense LU with partial pivoting, sized for tens of rows.
class Lu {
  public:
    explicit Lu(std::vector<std::vector<double>> m) : a_(std::move(m)) {
        n_ = a_.size();
        perm_.resize(n_);
        for (size_t i = 0; i < n_; ++i) perm_[i] = i;
        for (size_t k = 0; k < n_; ++k) {
            size_t piv = k;
            for (size_t i = k + 1; i < n_; ++i)
                if (std::fabs(a_[i][k]) > std::fabs(a_[piv][k])) piv = i;
            if (std::fabs(a_[piv][k]) < 1e-12)
                throw std::runtime_error("simplex: singular basis matrix");
            std::swap(a_[k], a_[piv]);
            std::swap(perm_[k], perm_[piv]);
            for (size_t i = k + 1; i < n_; ++i) {
                a_[i][k] /= a_[k][k];
                for (size_t j = k + 1; j < n_; ++j) a_[i][j] -= a_[i][k] * a_[k][j];
            }
        }
    }

    std::vector<double> solve(const std::vector<double>& rhs) const {
        std::vector<double> x(n_);
        for (size_t i = 0; i < n_; ++i) x[i] = rhs[perm_[i]];
        for (size_t i = 0; i < n_; ++i)
            for (size_t j = 0; j < i; ++j) x[i] -= a_[i][j] * x[j];
        for (size_t i = n_; i-- > 0;) {
            for (size_t j = i + 1; j < n_; ++j) x[i] -= a_[i][j] * x[j];
            x[i] /= a_[i][i];
        }
        return x;
    }

    // Solves transpose(B) y = rhs.
    std::vector<double> solve_transposed(const std::vector<double>& rhs) const {
        std::vector<double> y = rhs;
        for (size_t i = 0; i < n_; ++i) {
            for (size_t j = 0; j < i; ++j) y[i] -= a_[j][i] * y[j];
            y[i] /= a_[i][i];
        }
        for (size_t i = n_; i-- > 0;)
            for (size_t j = i + 1; j < n_; ++j) y[i] -= a_[j][i] * y[j];
        std::vector<double> out(n_);
        for (size_t i = 0; i < n_; ++i) out[perm_[i]] = y[i];
        return out;
    }

  private:
    std::vector<std::vector<double>> a_;
    std::vector<size_t> perm_;
    size_t n_ = 0;
};

enum class VarStatus { basic, at_lower, at_upper };

}  // namespace

LpResult solve_bounded_lp(const DenseLp& lp) {
    const size_t n = lp.cost.size();
    const size_t m = lp.a.size();
    if (lp.b.size() != m || lp.upper.size() != n)
        throw std::invalid_argument("solve_bounded_lp: inconsistent dimensions");
    for (const auto& row : lp.a)
        if (row.size() != n) throw std::invalid_argument("solve_bounded_lp: ragged matrix");
    for (double bi : lp.b)
        if (bi < 0.0) throw std::invalid_argument("solve_bounded_lp: negative rhs");

    const size_t total = n + m;  // structural vars plus slacks
    auto column = [&](size_t j, size_t i) -> double {
        return j < n ? lp.a[i][j] : (j - n == i ? 1.0 : 0.0);
    };
    auto cost_of = [&](size_t j) { return j < n ? lp.cost[j] : 0.0; };
    auto upper_of = [&](size_t j) { return j < n ? lp.upper[j] : kInf; };

    std::vector<VarStatus> status(total, VarStatus::at_lower);
    std::vector<size_t> basis(m);
    for (size_t i = 0; i < m; ++i) {
        basis[i] = n + i;
        status[n + i] = VarStatus::basic;
    }

    std::vector<double> x_basic(m);
    const int max_iter = 20000;
    int iter = 0;
    for (; iter < max_iter; ++iter) {
        std::vector<std::vector<double>> bmat(m, std::vector<double>(m));
        for (size_t i = 0; i < m; ++i)
            for (size_t k = 0; k < m; ++k) bmat[i][k] = column(basis[k], i);
        Lu lu(std::move(bmat));

        std::vector<double> rhs = lp.b;
        for (size_t j = 0; j < total; ++j) {
            if (status[j] != VarStatus::at_upper) continue;
            double uj = upper_of(j);
            for (size_t i = 0; i < m; ++i) rhs[i] -= column(j, i) * uj;
        }
        x_basic = lu.solve(rhs);

        std::vector<double> cb(m);
        for (size_t k = 0; k < m; ++k) cb[k] = cost_of(basis[k]);
        std::vector<double> y = lu.solve_transposed(cb);

        // Entering variable, Bland: first index with a favorable reduced cost.
        size_t entering = total;
        bool from_lower = true;
        for (size_t j = 0; j < total; ++j) {
            if (status[j] == VarStatus::basic) continue;
            if (upper_of(j) <= 0.0) continue;  // fixed at zero
            double d = cost_of(j);
            for (size_t i = 0; i < m; ++i) d -= y[i] * column(j, i);
            if (status[j] == VarStatus::at_lower && d < -kTol) {
                entering = j;
                from_lower = true;
                break;
            }
            if (status[j] == VarStatus::at_upper && d > kTol) {
                entering = j;
                from_lower = false;
                break;
            }
        }
        if (entering == total) break;  // optimal

        std::vector<double> col(m);
        for (size_t i = 0; i < m; ++i) col[i] = column(entering, i);
        std::vector<double> w = lu.solve(col);

        double dir = from_lower ? 1.0 : -1.0;
        double t_best = upper_of(entering);  // bound flip distance
        int leave_row = -1;
        for (size_t i = 0; i < m; ++i) {
            double delta = -dir * w[i];  // per-unit change of basic i
            double limit = kInf;
            if (delta > kTol) {
                double ub = upper_of(basis[i]);
                if (std::isfinite(ub)) limit = (ub - x_basic[i]) / delta;
            } else if (delta < -kTol) {
                limit = x_basic[i] / (-delta);
            }
            limit = std::max(limit, 0.0);
            // Bland tie-break: smallest leaving variable index.
            if (limit < t_best - kTol ||
                (limit < t_best + kTol && leave_row >= 0 &&
                 basis[i] < basis[static_cast<size_t>(leave_row)])) {
                t_best = limit;
                leave_row = static_cast<int>(i);
            }
        }
        if (!std::isfinite(t_best))
            throw std::runtime_error("solve_bounded_lp: unbounded problem");

        if (leave_row < 0) {
            // Entering variable traverses to its other bound.
            status[entering] =
                from_lower ? VarStatus::at_upper : VarStatus::at_lower;
            continue;
        }
        size_t leaving = basis[static_cast<size_t>(leave_row)];
        double delta = -dir * w[static_cast<size_t>(leave_row)];
        status[leaving] = delta > 0.0 ? VarStatus::at_upper : VarStatus::at_lower;
        basis[static_cast<size_t>(leave_row)] = entering;
        status[entering] = VarStatus::basic;
    }
    if (iter >= max_iter)
        throw std::runtime_error("solve_bounded_lp: iteration cap exceeded");

    LpResult result;
    result.iterations = iter;
    result.x.assign(n, 0.0);
    for (size_t j = 0; j < n; ++j)
        if (status[j] == VarStatus::at_upper) result.x[j] = upper_of(j);
    for (size_t k = 0; k < m; ++k)
        if (basis[k] < n) result.x[basis[k]] = x_basic[k];
    result.objective = 0.0;
    for (size_t j = 0; j < n; ++j) result.objective += lp.cost[j] * result.x[j];
    return result;
}

LpSlotResult lp_solve_p3(const SlotProblem& problem) {
    const size_t n_ev = problem.evs.size();
    DenseLp lp;
    lp.cost.resize(2 * n_ev + 1);
    lp.upper.resize(2 * n_ev + 1);
    double joint_sum = 0.0;
    for (size_t i = 0; i < n_ev; ++i) {
        const SlotEv& ev = problem.evs[i];
        lp.cost[2 * i] = ev.w_charge;
        lp.cost[2 * i + 1] = ev.w_heat;
        lp.upper[2 * i] = ev.cap_charge;
        lp.upper[2 * i + 1] = ev.cap_heat;
        joint_sum += ev.cap_joint;
    }
    lp.cost[2 * n_ev] = problem.grid_unit_cost;  // epigraph variable g
    lp.upper[2 * n_ev] = joint_sum;

    // Per-EV joint caps, then the PV boundary row sum p - g <= pv_free.
    for (size_t i = 0; i < n_ev; ++i) {
        std::vector<double> row(2 * n_ev + 1, 0.0);
        row[2 * i] = 1.0;
        row[2 * i + 1] = 1.0;
        lp.a.push_back(std::move(row));
        lp.b.push_back(problem.evs[i].cap_joint);
    }
    std::vector<double> pv_row(2 * n_ev + 1, 0.0);
    for (size_t i = 0; i < 2 * n_ev; ++i) pv_row[i] = 1.0;
    pv_row[2 * n_ev] = -1.0;
    lp.a.push_back(std::move(pv_row));
    lp.b.push_back(problem.pv_free);

    LpResult r = solve_bounded_lp(lp);

    LpSlotResult out;
    out.objective = r.objective;
    double total = 0.0;
    for (size_t i = 0; i < n_ev; ++i) {
        out.decision.p_charge[problem.evs[i].id] = r.x[2 * i];
        out.decision.p_heat[problem.evs[i].id] = r.x[2 * i + 1];
        total += r.x[2 * i] + r.x[2 * i + 1];
    }
    out.decision.p_pv = std::min(total, problem.pv_free);
    out.decision.p_grid = total - out.decision.p_pv;
    return out;
}

}  // namespace coldcharge
