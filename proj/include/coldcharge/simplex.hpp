// Dense bounded-variable simplex used as a correctness oracle for per-slot
// allocation problems. Deliberately unoptimized; not on the hot path.
#pragma once

#include <vector>

#include "coldcharge/controller.hpp"

namespace coldcharge {

// min cost . x  subject to  a x <= b,  0 <= x <= upper.
// upper entries may be +infinity; every b entry must be non-negative so the
// all-slack basis is feasible.
struct DenseLp {
    std::vector<double> cost;
    std::vector<std::vector<double>> a;  // m rows of size n
    std::vector<double> b;
    std::vector<double> upper;
};

struct LpResult {
    std::vector<double> x;
    double objective = 0.0;
    int iterations = 0;
};

// Bland's rule throughout, so termination is guaranteed. Throws on malformed
// input or when the iteration cap is hit.
LpResult solve_bounded_lp(const DenseLp& lp);

struct LpSlotResult {
    double objective = 0.0;
    SlotDecision decision;
};

// Reference solution of a per-slot problem via the epigraph encoding
// g >= sum p - pv_free, g >= 0, cost grid_unit_cost * g.
LpSlotResult lp_solve_p3(const SlotProblem& problem);

}  // namespace coldcharge
