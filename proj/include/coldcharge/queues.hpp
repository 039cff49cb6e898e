// Controller backlog state: deadline-indexed demand queues, the unmet-demand
// debt queue, and per-EV temperature backlog queues.
#pragma once

#include <map>
#include <span>
#include <vector>

#include "coldcharge/model.hpp"

namespace coldcharge {

// One arrival handed to the queue state: the session plus its perturbation
// offset (theta) fixing the initial temperature backlog.
struct ArrivalAdmit {
    const EvSession* session = nullptr;
    double theta = 0.0;
};

// EV membership of one remaining-time group for service aggregation.
struct EvGroup {
    int id = 0;
    int r = 0;            // remaining parking slots, 1..r_max
    double delta_c = 0.95;
};

// Demand/debt/temperature backlog. q(r) is indexed by remaining parking time
// r in 1..r_max; index 0 of the backing array is unused so the code reads
// like the recurrences it implements.
class QueueState {
  public:
    explicit QueueState(int r_max);

    int r_max() const { return r_max_; }
    double q(int r) const { return q_by_r_.at(static_cast<size_t>(r)); }
    double y_debt() const { return y_debt_; }
    double h(int ev_id) const;
    bool has_ev(int ev_id) const { return h_by_ev_.count(ev_id) > 0; }
    const std::map<int, double>& h_by_ev() const { return h_by_ev_; }
    std::vector<double> q_snapshot() const;  // 1-based copy, size r_max+1

    // Registers arrivals first available at slot t_now + 1. Each arrival's
    // remaining time r = t_depart - (t_now + 1) must lie in [1, r_max].
    // Demand lands at index r of the current array (for full-horizon
    // arrivals that is exactly the Q^R refill); the temperature backlog is
    // initialized to t_initial - theta. Throws on duplicate ids.
    void admit_arrivals(const std::vector<ArrivalAdmit>& arrivals, int t_now);

    // End-of-slot shift: for 2 <= r <= r_max,
    //   Q^{r-1} <- max(Q^r - x^r, 0) + a^{r-1},
    // and Q^{r_max} is refilled from a[r_max]. Both spans are 1-based with
    // size r_max + 1.
    void advance(std::span<const double> x_by_r, std::span<const double> a_by_r);

    // Debt accrual: Y <- Y + q1 - x1, with q1 the head queue before the shift.
    void debt_update(double q1, double x1);

    // Temperature backlog step for one EV: H <- H - dT_loss + dT_gain.
    void temp_queue_update(int ev_id, double dT_loss, double dT_gain);

    void remove_ev(int ev_id);

  private:
    int r_max_;
    std::vector<double> q_by_r_;  // size r_max + 1, slot 0 unused
    double y_debt_ = 0.0;
    std::map<int, double> h_by_ev_;
};

// Aggregated service per remaining-time group (1-based, size r_max + 1):
//   x^r = sum over EVs in group r of delta_c * p_charge * dt.
std::vector<double> x_from_decisions(const SlotDecision& decision,
                                     const std::vector<EvGroup>& groups,
                                     double dt_hours, int r_max);

}  // namespace coldcharge
