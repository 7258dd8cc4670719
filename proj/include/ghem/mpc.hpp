#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ghem/recipe.hpp"

namespace ghem {

struct MpcWeights {
    double alpha = 1.0;    // energy-cost term
    double beta = 1e-4;    // smoothness term, $ per (umol m^-2 s^-1)^2
    double gamma = 0.05;   // peak term, $ per (umol m^-2 s^-1)
};

// One receding-horizon problem instance at step i: hours 1..i-1 carry
// committed lighting decisions and realized data, hours i..N carry forecasts.
struct MpcProblem {
    int horizon = 24;             // N_I
    double interval_hours = 1.0;  // I
    int step = 1;                 // i, 1-based
    std::vector<double> price;       // P_ep[n], $/kWh, length horizon
    std::vector<double> solar_ppfd;  // Y[n], umol m^-2 s^-1 (post-transmittance)
    PhysiologyBounds bounds;
    MpcWeights weights;
    std::vector<int> committed_u;    // length step-1
    std::vector<double> committed_x; // length step-1; intensity when lit

    // Sunlight presence is data, not a decision: v[n] = Y[n] > sun_threshold.
    double sun_threshold = 1.0;
    // When true (default), sunlit hours require total light >= ppfd_min even
    // with the lamps off; shading alone cannot dim below the floor.
    bool min_floor_on_sunlit = true;
    // Replaces the DLI target when the nominal one is unreachable (repair
    // policy); <= 0 means "use bounds.dli_target".
    double dli_override = 0.0;

    double effective_dli() const { return dli_override > 0.0 ? dli_override : bounds.dli_target; }
    void check_shape() const;  // throws std::invalid_argument
};

std::vector<int> sun_mask(const MpcProblem& problem);

struct MpcSolution {
    std::vector<int> u;       // lamp on/off per hour
    std::vector<double> x;    // lamp intensity (0 when off)
    std::vector<int> v;       // sunlight presence (data)
    std::vector<double> w;    // shading factor in [0,1]
    std::vector<double> r_a;  // x[n]*u[n]
    std::vector<double> r_s;  // Y[n]*v[n]*w[n]
    std::vector<double> r;    // r_a + r_s
    double objective = 0.0;
    std::string status;       // "optimal" | "incumbent" | "infeasible"
    double gap = 0.0;         // relative optimality gap (0 when proven)
    long nodes = 0;
    long qp_solves = 0;
    double dli_enforced = 0.0;  // DLI equality actually imposed (after repair)
    std::vector<std::string> warnings;

    bool feasible() const { return status != "infeasible"; }
};

struct FeasibilityReport {
    bool feasible = false;
    double dli_min_reachable = 0.0;  // mol m^-2 day^-1 forced by floors/commitments
    double dli_max_reachable = 0.0;  // mol m^-2 day^-1 with every source saturated
    double dli_deficit = 0.0;        // > 0 when the target exceeds the reachable max
    double dli_surplus = 0.0;        // > 0 when floors force more light than the target
    std::string detail;
};

// Exact interval analysis of the DLI equality against per-hour light ranges.
FeasibilityReport feasibility_check(const MpcProblem& problem);

struct MpcSolveOptions {
    long node_limit = 100000;
    double rel_gap = 1e-6;          // declare optimal at this proven gap
    double prune_slack = 1e-9;      // relative; guards against QP round-off
    // Warm-start hint: a full-horizon on/off pattern (e.g. previous step's
    // plan). Ignored when empty or infeasible.
    std::vector<int> hint_pattern;
};

// Best-first branch-and-bound over the lamp on/off binaries; each node's
// bound comes from the convex relaxation (semi-continuity dropped), each
// leaf from an exact convex QP. Throws SolverError on internal failure;
// infeasibility is a status, not an exception.
MpcSolution solve(const MpcProblem& problem, const MpcSolveOptions& options = {});

// Exhaustive enumeration of all on/off patterns (test oracle). Rejects
// instances with more than 10 free hours.
MpcSolution brute_force_solve(const MpcProblem& problem);

struct ConstraintCheck {
    bool ok = false;
    std::vector<std::string> failures;
    std::vector<std::string> warnings;  // e.g. dropped floors on committed hours
};

// Independent verifier: replays the program constraints (variable coupling,
// binary domains, committed prefix, PPFD cap and floor, DLI equality)
// directly from their defining formulas, without consulting the solver.
ConstraintCheck verify_solution(const MpcProblem& problem, const MpcSolution& solution,
                                double tolerance = 1e-5);

// Canonical objective of a solution under the problem's weights and prices.
double solution_objective(const MpcProblem& problem, const std::vector<double>& r_a);

// --- receding-horizon driver -------------------------------------------

struct Schedule {
    std::vector<int> u_opt;
    std::vector<double> x_opt;

    int committed_hours() const { return static_cast<int>(u_opt.size()); }
};

// Appends hour `step`'s decision; committing a step twice or out of order throws.
void commit(const MpcSolution& solution, int step, Schedule& schedule);

// Assembles the step-i problem from realized history (hours < i) and
// forecasts (hours >= i). Forecast vectors are full-horizon; entries before
// `step` are ignored. Throws DataError when coverage is short.
MpcProblem assemble_problem(int step, const std::vector<double>& actual_price,
                            const std::vector<double>& actual_solar,
                            const std::vector<double>& price_forecast,
                            const std::vector<double>& solar_forecast,
                            const Schedule& committed, const PhysiologyBounds& bounds,
                            const MpcWeights& weights);

struct StepDiagnostics {
    int step = 0;
    double objective = 0.0;
    double gap = 0.0;
    long nodes = 0;
    double dli_committed = 0.0;  // artificial DLI committed through this step
    double peak_ra = 0.0;        // max committed artificial PPFD so far
    double dli_deficit = 0.0;    // repair-policy deficit at this step, if any
    std::string status;
};

struct DayResult {
    Schedule schedule;
    MpcSolution final_solution;   // step-24 solution over the whole day
    LightingRecipe recipe;        // committed artificial + final solar plan
    std::vector<StepDiagnostics> steps;
    bool repair_applied = false;
    double worst_dli_deficit = 0.0;
};

// Supplies full-horizon price/solar forecasts for a given step (1-based).
using DayForecaster =
    std::function<void(int step, std::vector<double>& price, std::vector<double>& solar)>;

// Runs assemble -> solve -> commit for i = 1..24. Actual vectors are
// revealed hour by hour (only entries < i are read at step i). Applies the
// DLI repair policy on mid-day infeasibility and records it.
DayResult run_day(const std::vector<double>& actual_price,
                  const std::vector<double>& actual_solar, const DayForecaster& forecaster,
                  const PhysiologyBounds& bounds, const MpcWeights& weights,
                  const MpcSolveOptions& options = {});

void write_step_diagnostics_csv(const std::vector<StepDiagnostics>& steps,
                                const std::string& path);

// Debug/golden-file serialization.
std::string problem_to_json(const MpcProblem& problem);
MpcProblem problem_from_json(const std::string& json_text);
std::string solution_to_json(const MpcSolution& solution);

}  // namespace ghem
