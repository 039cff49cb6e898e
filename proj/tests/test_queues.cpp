#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <vector>

#include "coldcharge/queues.hpp"
#include "coldcharge/thermal.hpp"

using namespace coldcharge;

namespace {

EvSession make_session(int id, int t_arrive, int t_depart, double demand) {
    EvSession ev;
    ev.id = id;
    ev.t_arrive = t_arrive;
    ev.t_depart = t_depart;
    ev.e_initial = 10.0;
    ev.e_depart = 10.0 + demand;
    ev.e_cap = 50.0;
    ev.t_initial = 5.0;
    return ev;
}

std::vector<double> zeros(int r_max) {
    return std::vector<double>(static_cast<size_t>(r_max) + 1, 0.0);
}

}  // namespace

TEST_CASE("admission fills the matching remaining-time slot") {
    QueueState qs(10);
    auto ev = make_session(1, 5, 15, 30.0);  // admitted at end of slot 4 -> r = 10
    qs.admit_arrivals({{&ev, 5.756}}, 4);
    CHECK(qs.q(10) == doctest::Approx(30.0));
    CHECK(qs.h(1) == doctest::Approx(5.0 - 5.756));

    auto ev2 = make_session(2, 5, 12, 10.0);  // r = 7
    auto ev3 = make_session(3, 5, 12, 30.0);  // r = 7
    qs.admit_arrivals({{&ev2, 5.756}, {&ev3, 5.756}}, 4);
    CHECK(qs.q(7) == doctest::Approx(40.0));
}

TEST_CASE("duplicate admissions are rejected") {
    QueueState qs(10);
    auto ev = make_session(1, 5, 15, 30.0);
    qs.admit_arrivals({{&ev, 0.0}}, 4);
    CHECK_THROWS_AS(qs.admit_arrivals({{&ev, 0.0}}, 4), std::invalid_argument);
}

TEST_CASE("admission outside [1, R] is rejected") {
    QueueState qs(5);
    auto late = make_session(1, 5, 5 + 6, 30.0);  // r = 6 > R
    CHECK_THROWS_AS(qs.admit_arrivals({{&late, 0.0}}, 4), std::invalid_argument);
    auto expired = make_session(2, 5, 5, 30.0);  // r = 0
    CHECK_THROWS_AS(qs.admit_arrivals({{&expired, 0.0}}, 4), std::invalid_argument);
}

TEST_CASE("advance applies the shifted recurrence") {
    QueueState qs(2);
    auto ev = make_session(1, 1, 3, 30.0);  // r = 2 at slot 1
    qs.admit_arrivals({{&ev, 0.0}}, 0);
    REQUIRE(qs.q(2) == doctest::Approx(30.0));
    auto x = zeros(2);
    x[2] = 10.0;
    qs.advance(x, zeros(2));
    CHECK(qs.q(1) == doctest::Approx(20.0));
    CHECK(qs.q(2) == doctest::Approx(0.0));
}

TEST_CASE("advance clamps over-service at zero and adds arrivals") {
    QueueState qs(2);
    auto ev = make_session(1, 1, 3, 5.0);
    qs.admit_arrivals({{&ev, 0.0}}, 0);
    auto x = zeros(2);
    x[2] = 10.0;  // more than queued
    auto a = zeros(2);
    a[1] = 7.0;
    qs.advance(x, a);
    CHECK(qs.q(1) == doctest::Approx(7.0));
}

TEST_CASE("full-length shift matches a hand-stepped table") {
    // R = 3, scripted service and arrivals over three slots; expected values
    // stepped by hand with Q'^{r-1} = max(Q^r - x^r, 0) + a^{r-1}.
    QueueState qs(3);
    auto seed_ev = make_session(9, 1, 4, 12.0);  // r = 3
    qs.admit_arrivals({{&seed_ev, 0.0}}, 0);     // Q = [_, 0, 0, 12]

    auto x = zeros(3);
    auto a = zeros(3);
    x[3] = 2.0;
    a[2] = 5.0;
    a[3] = 4.0;
    qs.advance(x, a);  // Q1 = 0, Q2 = max(12-2,0)+5 = 15, Q3 = 4
    CHECK(qs.q(1) == doctest::Approx(0.0));
    CHECK(qs.q(2) == doctest::Approx(15.0));
    CHECK(qs.q(3) == doctest::Approx(4.0));

    x = zeros(3);
    a = zeros(3);
    x[2] = 6.0;
    x[3] = 1.0;
    a[1] = 2.0;
    qs.advance(x, a);  // Q1 = max(15-6,0)+2 = 11, Q2 = max(4-1,0) = 3, Q3 = 0
    CHECK(qs.q(1) == doctest::Approx(11.0));
    CHECK(qs.q(2) == doctest::Approx(3.0));
    CHECK(qs.q(3) == doctest::Approx(0.0));

    x = zeros(3);
    a = zeros(3);
    x[1] = 11.0;
    x[2] = 4.0;
    qs.advance(x, a);  // Q1 = max(3-4,0) = 0, rest zero
    CHECK(qs.q(1) == doctest::Approx(0.0));
    CHECK(qs.q(2) == doctest::Approx(0.0));
    CHECK(qs.q(3) == doctest::Approx(0.0));
}

TEST_CASE("debt accumulation") {
    QueueState qs(3);
    qs.debt_update(20.0, 20.0);
    CHECK(qs.y_debt() == doctest::Approx(0.0));
    qs.debt_update(20.0, 5.0);
    CHECK(qs.y_debt() == doctest::Approx(15.0));
    CHECK_THROWS_AS(qs.debt_update(1.0, 2.0), std::invalid_argument);
}

TEST_CASE("debt telescopes over a scripted run") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    QueueState qs(4);
    double expected = 0.0;
    for (int t = 0; t < 10; ++t) {
        double q1 = u(rng);
        double x1 = u(rng) * 0.5;
        if (x1 > q1) x1 = q1;
        expected += q1 - x1;
        qs.debt_update(q1, x1);
    }
    CHECK(qs.y_debt() == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("temperature backlog updates") {
    QueueState qs(3);
    auto ev = make_session(4, 1, 4, 10.0);
    ev.t_initial = 2.0;
    qs.admit_arrivals({{&ev, 0.0}}, 0);  // H = 2
    qs.temp_queue_update(4, 1.0, 1.0);
    CHECK(qs.h(4) == doctest::Approx(2.0));
    qs.temp_queue_update(4, 1.256, 0.0);
    CHECK(qs.h(4) == doctest::Approx(0.744));
    CHECK_THROWS_AS(qs.temp_queue_update(99, 1.0, 0.0), std::out_of_range);
}

TEST_CASE("backlog plus theta tracks the queue-model temperature") {
    ThermalParams p;
    double theta = 5.756;
    EvSession ev = make_session(1, 1, 60, 30.0);
    ev.t_initial = 4.0;
    QueueState qs(60);
    qs.admit_arrivals({{&ev, theta}}, 0);

    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    double temp = ev.t_initial;
    for (int t = 0; t < 50; ++t) {
        double ambient = -14.0 + 8.0 * u01(rng);
        double pc = 4.0 * u01(rng);
        double ph = 3.0 * u01(rng);
        double loss = decay_loss(p, ambient);
        temp = step_queue(temp, loss, pc, ph, p);
        qs.temp_queue_update(1, loss, temp_gain(pc, ph, p));
        REQUIRE(qs.h(1) + theta == doctest::Approx(temp).epsilon(1e-12));
    }
}

TEST_CASE("service aggregation from decisions") {
    SlotDecision d;
    d.p_charge[1] = 4.8;
    std::vector<EvGroup> groups{{1, 3, 0.95}};
    auto x = x_from_decisions(d, groups, 1.0 / 12.0, 5);
    CHECK(x[3] == doctest::Approx(0.38).epsilon(1e-12));
    CHECK(x[1] == doctest::Approx(0.0));

    // Two EVs in the same group sum; an absent group stays zero.
    d.p_charge[2] = 2.4;
    groups.push_back({2, 3, 0.95});
    x = x_from_decisions(d, groups, 1.0 / 12.0, 5);
    CHECK(x[3] == doctest::Approx(0.38 + 0.19).epsilon(1e-12));
    CHECK(x[2] == doctest::Approx(0.0));
}

TEST_CASE("queues stay non-negative under random admissible updates") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    QueueState qs(5);
    for (int t = 0; t < 200; ++t) {
        auto x = zeros(5);
        auto a = zeros(5);
        for (int r = 1; r <= 5; ++r) {
            x[static_cast<size_t>(r)] = 3.0 * u01(rng);
            a[static_cast<size_t>(r)] = u01(rng) < 0.3 ? 10.0 * u01(rng) : 0.0;
        }
        double q1 = qs.q(1);
        qs.debt_update(q1, std::min(q1, x[1]));
        qs.advance(x, a);
        for (int r = 1; r <= 5; ++r) REQUIRE(qs.q(r) >= 0.0);
        REQUIRE(qs.y_debt() >= 0.0);
    }
}
