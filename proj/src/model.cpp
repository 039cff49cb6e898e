#include "coldcharge/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace coldcharge {

const EvSession* Scenario::find_session(int id) const {
    for (const auto& s : sessions)
        if (s.id == id) return &s;
    return nullptr;
}

double SlotDecision::total_power() const {
    double total = 0.0;
    for (const auto& [id, p] : p_charge) total += p;
    for (const auto& [id, p] : p_heat) total += p;
    return total;
}

namespace {

void add(std::vector<Violation>& out, const std::string& field, int index,
         const std::string& msg) {
    out.push_back(Violation{field, index, msg});
}

bool finite(double v) { return std::isfinite(v); }

}  // namespace

std::vector<Violation> validate_params(const ThermalParams& p, int session_id) {
    std::vector<Violation> out;
    if (!(p.delta_c > 0.0 && p.delta_c <= 1.0))
        add(out, "thermal.delta_c", session_id, "charging efficiency must be in (0,1]");
    if (!(p.delta_h > 0.0 && p.delta_h <= 1.0))
        add(out, "thermal.delta_h", session_id, "heating efficiency must be in (0,1]");
    if (!(p.eta > 0.0 && p.eta < p.q))
        add(out, "thermal.eta", session_id, "need 0 < eta < q so zeta lies in (0,1)");
    if (!(p.t_low < p.t_high))
        add(out, "thermal.t_low", session_id, "temperature band is empty");
    if (p.p_c_base < 0.0 || p.p_h_base < 0.0 || p.beta_c < 0.0 || p.beta_h < 0.0)
        add(out, "thermal.rates", session_id, "rate coefficients must be non-negative");
    if (!(p.p_total > 0.0))
        add(out, "thermal.p_total", session_id, "joint power cap must be positive");
    return out;
}

std::vector<Violation> validate_scenario(const Scenario& s) {
    std::vector<Violation> out;
    if (s.dt_hours <= 0.0) add(out, "dt_hours", -1, "slot length must be positive");
    if (s.horizon <= 0) add(out, "horizon", -1, "horizon must be positive");
    if (s.price_cap < 0.0) add(out, "price_cap", -1, "price cap must be non-negative");

    auto check_series = [&](const std::vector<double>& v, const std::string& name) {
        if (static_cast<int>(v.size()) != s.horizon) {
            std::ostringstream msg;
            msg << name << " has " << v.size() << " entries, horizon is " << s.horizon;
            add(out, name, -1, msg.str());
            return false;
        }
        for (int t = 0; t < s.horizon; ++t)
            if (!finite(v[t])) add(out, name, t, "non-finite value");
        return true;
    };

    bool ambient_ok = check_series(s.ambient, "ambient");
    if (check_series(s.price, "price")) {
        for (int t = 0; t < s.horizon; ++t) {
            if (s.price[t] < 0.0) add(out, "price", t, "negative price");
            if (s.price[t] > s.price_cap) add(out, "price", t, "price above price_cap");
        }
    }
    if (check_series(s.pv_cap, "pv_cap")) {
        for (int t = 0; t < s.horizon; ++t)
            if (s.pv_cap[t] < 0.0) add(out, "pv_cap", t, "negative PV capacity");
    }
    if (ambient_ok && !s.ambient.empty()) {
        double lo = *std::min_element(s.ambient.begin(), s.ambient.end());
        double hi = *std::max_element(s.ambient.begin(), s.ambient.end());
        if (s.ambient_low > lo)
            add(out, "ambient_low", -1, "declared lower bound above realized minimum");
        if (s.ambient_high < hi)
            add(out, "ambient_high", -1, "declared upper bound below realized maximum");
    }

    std::map<int, int> seen;
    for (const auto& ev : s.sessions) {
        if (seen.count(ev.id)) add(out, "session.id", ev.id, "duplicate session id");
        seen[ev.id] = 1;
        if (!(ev.t_arrive < ev.t_depart))
            add(out, "session.window", ev.id, "t_arrive must precede t_depart");
        if (ev.t_arrive < 0 || ev.t_depart > s.horizon)
            add(out, "session.window", ev.id, "session window outside the horizon");
        if (!(ev.e_initial <= ev.e_depart))
            add(out, "session.energy", ev.id, "e_initial exceeds e_depart");
        if (!(ev.e_depart <= ev.e_cap))
            add(out, "session.energy", ev.id, "e_depart exceeds battery capacity");
        if (ev.e_initial < 0.0) add(out, "session.energy", ev.id, "negative initial energy");
        if (!(ev.thermal.t_low <= ev.t_initial && ev.t_initial <= ev.thermal.t_high))
            add(out, "session.t_initial", ev.id, "initial temperature outside the band");
        auto pv = validate_params(ev.thermal, ev.id);
        out.insert(out.end(), pv.begin(), pv.end());
    }
    return out;
}

}  // namespace coldcharge
