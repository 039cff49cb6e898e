#include "coldcharge/queues.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace coldcharge {

QueueState::QueueState(int r_max) : r_max_(r_max) {
    if (r_max < 1) throw std::invalid_argument("QueueState: r_max must be >= 1");
    q_by_r_.assign(static_cast<size_t>(r_max) + 1, 0.0);
}

double QueueState::h(int ev_id) const {
    auto it = h_by_ev_.find(ev_id);
    if (it == h_by_ev_.end()) {
        std::ostringstream msg;
        msg << "QueueState: unknown EV id " << ev_id;
        throw std::out_of_range(msg.str());
    }
    return it->second;
}

std::vector<double> QueueState::q_snapshot() const { return q_by_r_; }

void QueueState::admit_arrivals(const std::vector<ArrivalAdmit>& arrivals, int t_now) {
    for (const auto& a : arrivals) {
        const EvSession& s = *a.session;
        int r = s.t_depart - (t_now + 1);
        if (r < 1 || r > r_max_) {
            std::ostringstream msg;
            msg << "admit_arrivals: EV " << s.id << " remaining time " << r
                << " outside [1, " << r_max_ << "]";
            throw std::invalid_argument(msg.str());
        }
        if (h_by_ev_.count(s.id)) {
            std::ostringstream msg;
            msg << "admit_arrivals: duplicate EV id " << s.id;
            throw std::invalid_argument(msg.str());
        }
        q_by_r_[static_cast<size_t>(r)] += s.demand();
        h_by_ev_[s.id] = s.t_initial - a.theta;
    }
}

void QueueState::advance(std::span<const double> x_by_r,
                         std::span<const double> a_by_r) {
    size_t need = static_cast<size_t>(r_max_) + 1;
    if (x_by_r.size() != need || a_by_r.size() != need)
        throw std::invalid_argument("advance: spans must have size r_max + 1");
    for (int r = 1; r <= r_max_; ++r)
        if (x_by_r[static_cast<size_t>(r)] < 0.0)
            throw std::invalid_argument("advance: negative service");
    for (int r = 2; r <= r_max_; ++r) {
        q_by_r_[static_cast<size_t>(r - 1)] =
            std::max(q_by_r_[static_cast<size_t>(r)] - x_by_r[static_cast<size_t>(r)],
                     0.0) +
            a_by_r[static_cast<size_t>(r - 1)];
    }
    q_by_r_[static_cast<size_t>(r_max_)] = a_by_r[static_cast<size_t>(r_max_)];
}

void QueueState::debt_update(double q1, double x1) {
    if (x1 > q1 + 1e-9) throw std::invalid_argument("debt_update: service exceeds head queue");
    y_debt_ += q1 - x1;
}

void QueueState::temp_queue_update(int ev_id, double dT_loss, double dT_gain) {
    auto it = h_by_ev_.find(ev_id);
    if (it == h_by_ev_.end()) {
        std::ostringstream msg;
        msg << "temp_queue_update: unknown EV id " << ev_id;
        throw std::out_of_range(msg.str());
    }
    it->second += dT_gain - dT_loss;
}

void QueueState::remove_ev(int ev_id) { h_by_ev_.erase(ev_id); }

std::vector<double> x_from_decisions(const SlotDecision& decision,
                                     const std::vector<EvGroup>& groups,
                                     double dt_hours, int r_max) {
    std::vector<double> x(static_cast<size_t>(r_max) + 1, 0.0);
    for (const auto& g : groups) {
        if (g.r < 1 || g.r > r_max)
            throw std::invalid_argument("x_from_decisions: group index out of range");
        auto it = decision.p_charge.find(g.id);
        double p = it == decision.p_charge.end() ? 0.0 : it->second;
        x[static_cast<size_t>(g.r)] += g.delta_c * p * dt_hours;
    }
    return x;
}

}  // namespace coldcharge
