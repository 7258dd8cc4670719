#include "ghem/mpc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <queue>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "ghem/csv.hpp"
#include "ghem/qp.hpp"

namespace ghem {

namespace {

constexpr double kDliPerPpfdHour = 3600e-6;  // mol m^-2 per (umol m^-2 s^-1 * h)

// Marker for an undetermined lamp binary inside the branch-and-bound tree.
constexpr int kOpen = -1;

struct HourRange {
    // Achievable total-light interval [t_lo, t_hi] for the hour, given the
    // lamp assignment (or the hull over both assignments when open).
    double t_lo = 0.0;
    double t_hi = 0.0;
    bool hour_infeasible = false;
    bool floor_dropped = false;  // committed hour whose sunlit floor is unsatisfiable
};

struct ProblemView {
    int n = 0;
    double pmin = 0.0, pmax = 0.0;
    double r_total = 0.0;  // required sum of r[n] in PPFD-hours / I
    std::vector<int> v;            // sunlight presence
    std::vector<double> s_avail;   // Y[n] when sunlit, else 0
    std::vector<double> a_committed;  // committed artificial, hours < step-1
    int committed_count = 0;
};

ProblemView make_view(const MpcProblem& p) {
    ProblemView view;
    view.n = p.horizon;
    view.pmin = p.bounds.ppfd_min;
    view.pmax = p.bounds.ppfd_max;
    view.r_total = p.effective_dli() / (kDliPerPpfdHour * p.interval_hours);
    view.committed_count = p.step - 1;
    view.v.resize(p.horizon);
    view.s_avail.resize(p.horizon);
    view.a_committed.assign(p.horizon, 0.0);
    for (int i = 0; i < p.horizon; ++i) {
        view.v[i] = p.solar_ppfd[i] > p.sun_threshold ? 1 : 0;
        view.s_avail[i] = view.v[i] ? p.solar_ppfd[i] : 0.0;
    }
    for (int i = 0; i < view.committed_count; ++i)
        view.a_committed[i] = p.committed_u[i] ? p.committed_x[i] : 0.0;
    return view;
}

// Per-hour reachable total light for a (possibly partial) lamp assignment.
HourRange hour_range(const MpcProblem& p, const ProblemView& view, int hour, int assignment) {
    HourRange r;
    const double S = view.s_avail[hour];
    const bool sunlit = view.v[hour] != 0;
    const double floor = (sunlit && p.min_floor_on_sunlit) ? view.pmin : 0.0;
    const double X = view.pmax;

    if (hour < view.committed_count) {
        const double a = view.a_committed[hour];
        double s_lo = std::max(0.0, floor - a);
        double s_hi = std::max(0.0, std::min(S, X - a));
        if (s_lo > s_hi + 1e-9) {
            // Realized sun is too weak to honor the floor on a past dark
            // hour; nothing can act on the past, so the floor is dropped.
            s_lo = 0.0;
            r.floor_dropped = true;
        }
        r.t_lo = a + s_lo;
        r.t_hi = a + s_hi;
        return r;
    }

    switch (assignment) {
        case 1:  // lamps on: a in [pmin, X], s in [0, S], a + s <= X
            r.t_lo = view.pmin;
            r.t_hi = X;
            return r;
        case 0:  // lamps off: light is sun alone
            if (!sunlit) {
                r.t_lo = r.t_hi = 0.0;
                return r;
            }
            r.t_lo = floor;
            r.t_hi = std::min(S, X);
            if (r.t_lo > r.t_hi + 1e-9) r.hour_infeasible = true;
            return r;
        default: {  // open: hull over both branches
            const HourRange on = hour_range(p, view, hour, 1);
            HourRange off = hour_range(p, view, hour, 0);
            if (off.hour_infeasible) return on;
            r.t_lo = std::min(on.t_lo, off.t_lo);
            r.t_hi = std::max(on.t_hi, off.t_hi);
            return r;
        }
    }
}

struct RangeSummary {
    bool per_hour_ok = true;
    double sum_lo = 0.0;
    double sum_hi = 0.0;
    int first_bad_hour = -1;
};

RangeSummary summarize_ranges(const MpcProblem& p, const ProblemView& view,
                              const std::vector<int>& pattern) {
    RangeSummary s;
    for (int i = 0; i < view.n; ++i) {
        const HourRange r = hour_range(p, view, i, pattern.empty() ? kOpen : pattern[i]);
        if (r.hour_infeasible) {
            s.per_hour_ok = false;
            if (s.first_bad_hour < 0) s.first_bad_hour = i;
        }
        s.sum_lo += r.t_lo;
        s.sum_hi += r.t_hi;
    }
    return s;
}

bool pattern_feasible(const MpcProblem& p, const ProblemView& view,
                      const std::vector<int>& pattern, double tol) {
    const RangeSummary s = summarize_ranges(p, view, pattern);
    return s.per_hour_ok && s.sum_lo <= view.r_total + tol && view.r_total <= s.sum_hi + tol;
}

// --- QP assembly ---------------------------------------------------------

struct QpLayout {
    std::vector<int> a_var;  // per hour: variable index or -1
    std::vector<int> s_var;
    std::vector<int> u_var;  // relaxed binaries (open hours only)
    std::vector<double> s_const;  // pinned solar contribution when s has no variable
    int m_var = -1;
    int num_vars = 0;
    double objective_const = 0.0;
};

struct BuiltQp {
    QpProblem qp;
    QpLayout layout;
    bool feasible = true;
};

// Builds the convex (relaxation) program for a partial or complete lamp
// assignment. Open hours get a relaxed u in [0,1] with variable bounds
// pmin*u <= a <= pmax*u; determined hours get their exact constraints.
BuiltQp build_qp(const MpcProblem& p, const ProblemView& view, const std::vector<int>& pattern) {
    BuiltQp out;
    QpLayout& L = out.layout;
    const int n = view.n;
    L.a_var.assign(n, -1);
    L.s_var.assign(n, -1);
    L.u_var.assign(n, -1);
    L.s_const.assign(n, 0.0);

    const double X = view.pmax;
    const double pmin = view.pmin;
    const bool use_peak = p.weights.gamma > 0.0;

    int nv = 0;
    for (int i = 0; i < n; ++i) {
        const bool committed = i < view.committed_count;
        const int assign = committed ? 2 : pattern[i];
        const bool sunlit = view.v[i] != 0;
        const double S = view.s_avail[i];

        if (!committed && (assign == 1 || assign == kOpen)) L.a_var[i] = nv++;
        if (sunlit) {
            // Solar share is a variable whenever shading has room to act.
            double s_lo = 0.0, s_hi = std::min(S, X);
            if (committed) {
                const double a = view.a_committed[i];
                const double floor = p.min_floor_on_sunlit ? pmin : 0.0;
                s_lo = std::max(0.0, floor - a);
                s_hi = std::max(0.0, std::min(S, X - a));
                if (s_lo > s_hi + 1e-9) s_lo = 0.0;  // dropped floor
            } else if (assign == 0 && p.min_floor_on_sunlit) {
                s_lo = pmin;
                if (s_lo > s_hi + 1e-9) {
                    out.feasible = false;
                    return out;
                }
            }
            if (s_hi - s_lo > 1e-9) {
                L.s_var[i] = nv++;
            } else {
                L.s_const[i] = 0.5 * (s_lo + s_hi);
            }
        }
        if (!committed && assign == kOpen) L.u_var[i] = nv++;
    }
    if (use_peak) L.m_var = nv++;
    L.num_vars = nv;

    QpProblem& qp = out.qp;
    qp.Q = Eigen::MatrixXd::Zero(nv, nv);
    qp.c = Eigen::VectorXd::Zero(nv);

    double rhs = view.r_total;
    double peak_floor = 0.0;
    for (int i = 0; i < n; ++i) {
        if (i < view.committed_count) {
            const double a = view.a_committed[i];
            rhs -= a;
            L.objective_const +=
                p.weights.alpha * p.price[i] * a + p.weights.beta * a * a;
            peak_floor = std::max(peak_floor, a);
        }
        if (L.s_var[i] < 0) rhs -= L.s_const[i];
        if (L.a_var[i] >= 0) {
            qp.c[L.a_var[i]] = p.weights.alpha * p.price[i];
            qp.Q(L.a_var[i], L.a_var[i]) = 2.0 * p.weights.beta;
        }
    }
    if (use_peak) qp.c[L.m_var] = p.weights.gamma;

    // Single equality: the DLI sum.
    qp.A = Eigen::MatrixXd::Zero(1, nv);
    qp.b = Eigen::VectorXd::Constant(1, rhs);
    for (int i = 0; i < n; ++i) {
        if (L.a_var[i] >= 0) qp.A(0, L.a_var[i]) = 1.0;
        if (L.s_var[i] >= 0) qp.A(0, L.s_var[i]) = 1.0;
    }

    // Inequality rows.
    std::vector<Eigen::VectorXd> rows;
    std::vector<double> hs;
    const auto add_row = [&](const std::vector<std::pair<int, double>>& terms, double bound) {
        Eigen::VectorXd row = Eigen::VectorXd::Zero(nv);
        for (const auto& [idx, coef] : terms) row[idx] = coef;
        rows.push_back(std::move(row));
        hs.push_back(bound);
    };

    for (int i = 0; i < n; ++i) {
        const bool committed = i < view.committed_count;
        const int assign = committed ? 2 : pattern[i];
        const int av = L.a_var[i];
        const int sv = L.s_var[i];
        const bool sunlit = view.v[i] != 0;
        const double S = view.s_avail[i];

        if (sv >= 0) {
            double s_lo = 0.0, s_hi = std::min(S, X);
            if (committed) {
                const double a = view.a_committed[i];
                const double floor = p.min_floor_on_sunlit ? pmin : 0.0;
                s_lo = std::max(0.0, floor - a);
                s_hi = std::max(0.0, std::min(S, X - a));
                if (s_lo > s_hi + 1e-9) s_lo = 0.0;
            } else if (assign == 0 && p.min_floor_on_sunlit) {
                s_lo = pmin;
            }
            add_row({{sv, 1.0}}, s_hi);
            add_row({{sv, -1.0}}, -s_lo);
        }
        if (av >= 0 && assign == 1) {
            add_row({{av, -1.0}}, -pmin);
            if (sv >= 0)
                add_row({{av, 1.0}, {sv, 1.0}}, X);  // r <= pmax
            else
                add_row({{av, 1.0}}, X);
            // The sunlit floor is implied by a >= pmin here.
        }
        if (av >= 0 && assign == kOpen) {
            const int uv = L.u_var[i];
            add_row({{av, 1.0}, {uv, -X}}, 0.0);      // a <= pmax * u
            add_row({{av, -1.0}, {uv, pmin}}, 0.0);   // a >= pmin * u
            add_row({{uv, 1.0}}, 1.0);
            add_row({{uv, -1.0}}, 0.0);
            if (sv >= 0) {
                add_row({{av, 1.0}, {sv, 1.0}}, X);
                if (p.min_floor_on_sunlit && sunlit)
                    add_row({{av, -1.0}, {sv, -1.0}}, -pmin);
            }
        }
        if (L.m_var >= 0 && av >= 0) add_row({{av, 1.0}, {L.m_var, -1.0}}, 0.0);
    }
    if (L.m_var >= 0) add_row({{L.m_var, -1.0}}, -peak_floor);

    qp.G = Eigen::MatrixXd::Zero(static_cast<int>(rows.size()), nv);
    qp.h = Eigen::VectorXd::Zero(static_cast<int>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        qp.G.row(static_cast<int>(r)) = rows[r].transpose();
        qp.h[static_cast<int>(r)] = hs[r];
    }
    return out;
}

MpcSolution extract_solution(const MpcProblem& p, const ProblemView& view,
                             const std::vector<int>& pattern, const QpLayout& layout,
                             const Eigen::VectorXd& x) {
    MpcSolution sol;
    const int n = view.n;
    sol.u.assign(n, 0);
    sol.x.assign(n, 0.0);
    sol.v = view.v;
    sol.w.assign(n, 0.0);
    sol.r_a.assign(n, 0.0);
    sol.r_s.assign(n, 0.0);
    sol.r.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double a = 0.0;
        if (i < view.committed_count) {
            sol.u[i] = p.committed_u[i];
            sol.x[i] = sol.u[i] ? p.committed_x[i] : 0.0;
            a = view.a_committed[i];
        } else if (pattern[i] == 1) {
            a = layout.a_var[i] >= 0 ? x[layout.a_var[i]] : 0.0;
            sol.u[i] = 1;
            sol.x[i] = a;
        }
        double s = layout.s_var[i] >= 0 ? x[layout.s_var[i]] : layout.s_const[i];
        s = std::clamp(s, 0.0, view.s_avail[i] > 0.0 ? view.s_avail[i] : 0.0);
        sol.r_a[i] = a;
        sol.r_s[i] = s;
        sol.r[i] = a + s;
        sol.w[i] = view.v[i] && view.s_avail[i] > 0.0 ? s / view.s_avail[i] : 0.0;
    }
    sol.objective = solution_objective(p, sol.r_a);
    sol.dli_enforced = p.effective_dli();
    return sol;
}

// Exact solve for a fully determined lamp pattern. Returns infeasible
// solutions with status set; never throws for infeasibility.
struct EvalResult {
    bool feasible = false;
    MpcSolution solution;
};

EvalResult evaluate_pattern(const MpcProblem& p, const ProblemView& view,
                            const std::vector<int>& pattern, long& qp_solves) {
    EvalResult out;
    const double tol = 1e-9 * std::max(1.0, view.r_total);
    const RangeSummary rs = summarize_ranges(p, view, pattern);
    if (!rs.per_hour_ok || rs.sum_lo > view.r_total + tol || view.r_total > rs.sum_hi + tol)
        return out;

    // When the DLI equality pins every hour to an endpoint of its range, the
    // totals are forced; only the artificial/solar split may retain freedom.
    const bool pin_lo = view.r_total - rs.sum_lo <= tol;
    const bool pin_hi = rs.sum_hi - view.r_total <= tol;
    if (pin_lo || pin_hi) {
        const int n = view.n;
        std::vector<double> t(n), a_lo(n), a_hi(n);
        for (int i = 0; i < n; ++i) {
            const HourRange hr = hour_range(p, view, i, pattern[i]);
            t[i] = pin_lo ? hr.t_lo : hr.t_hi;
            if (i < view.committed_count) {
                a_lo[i] = a_hi[i] = view.a_committed[i];
            } else if (pattern[i] == 1) {
                a_lo[i] = std::max(view.pmin, t[i] - view.s_avail[i]);
                a_hi[i] = t[i];
            } else {
                a_lo[i] = a_hi[i] = 0.0;
            }
        }
        // Box QP over the lamp intensities with the totals fixed.
        std::vector<int> var_of(n, -1);
        int nv = 0;
        for (int i = 0; i < n; ++i)
            if (a_hi[i] - a_lo[i] > 1e-9) var_of[i] = nv++;
        const bool use_peak = p.weights.gamma > 0.0;
        const int mv = use_peak ? nv++ : -1;

        Eigen::VectorXd a_sol(n);
        for (int i = 0; i < n; ++i) a_sol[i] = a_lo[i];
        if (nv > 0) {
            QpProblem qp;
            qp.Q = Eigen::MatrixXd::Zero(nv, nv);
            qp.c = Eigen::VectorXd::Zero(nv);
            std::vector<Eigen::VectorXd> rows;
            std::vector<double> hs;
            double peak_floor = 0.0;
            for (int i = 0; i < n; ++i)
                if (var_of[i] < 0) peak_floor = std::max(peak_floor, a_lo[i]);
            for (int i = 0; i < n; ++i) {
                const int vi = var_of[i];
                if (vi < 0) continue;
                qp.c[vi] = p.weights.alpha * p.price[i];
                qp.Q(vi, vi) = 2.0 * p.weights.beta;
                Eigen::VectorXd row = Eigen::VectorXd::Zero(nv);
                row[vi] = 1.0;
                rows.push_back(row);
                hs.push_back(a_hi[i]);
                rows.push_back(-row);
                hs.push_back(-a_lo[i]);
                if (mv >= 0) {
                    Eigen::VectorXd er = Eigen::VectorXd::Zero(nv);
                    er[vi] = 1.0;
                    er[mv] = -1.0;
                    rows.push_back(er);
                    hs.push_back(0.0);
                }
            }
            if (mv >= 0) {
                qp.c[mv] = p.weights.gamma;
                Eigen::VectorXd er = Eigen::VectorXd::Zero(nv);
                er[mv] = -1.0;
                rows.push_back(er);
                hs.push_back(-peak_floor);
            }
            qp.G = Eigen::MatrixXd::Zero(static_cast<int>(rows.size()), nv);
            qp.h = Eigen::VectorXd::Zero(static_cast<int>(rows.size()));
            for (std::size_t r = 0; r < rows.size(); ++r) {
                qp.G.row(static_cast<int>(r)) = rows[r].transpose();
                qp.h[static_cast<int>(r)] = hs[r];
            }
            const QpResult qr = solve_qp(qp);
            ++qp_solves;
            if (qr.status == QpStatus::NumericalFailure)
                throw SolverError("inner box QP failed to converge");
            for (int i = 0; i < n; ++i)
                if (var_of[i] >= 0) a_sol[i] = std::clamp(qr.x[var_of[i]], a_lo[i], a_hi[i]);
        }

        MpcSolution sol;
        sol.u.assign(n, 0);
        sol.x.assign(n, 0.0);
        sol.v = view.v;
        sol.w.assign(n, 0.0);
        sol.r_a.assign(n, 0.0);
        sol.r_s.assign(n, 0.0);
        sol.r.assign(n, 0.0);
        for (int i = 0; i < n; ++i) {
            const bool committed = i < view.committed_count;
            sol.u[i] = committed ? p.committed_u[i] : (pattern[i] == 1 ? 1 : 0);
            sol.r_a[i] = sol.u[i] ? a_sol[i] : 0.0;
            sol.x[i] = sol.r_a[i];
            if (committed) sol.x[i] = sol.u[i] ? p.committed_x[i] : 0.0;
            sol.r_s[i] = std::max(0.0, t[i] - sol.r_a[i]);
            sol.r[i] = sol.r_a[i] + sol.r_s[i];
            sol.w[i] = view.v[i] && view.s_avail[i] > 0.0
                           ? std::clamp(sol.r_s[i] / view.s_avail[i], 0.0, 1.0)
                           : 0.0;
        }
        sol.objective = solution_objective(p, sol.r_a);
        sol.dli_enforced = p.effective_dli();
        sol.status = "optimal";
        out.feasible = true;
        out.solution = std::move(sol);
        return out;
    }

    BuiltQp built = build_qp(p, view, pattern);
    if (!built.feasible) return out;
    const QpResult qr = solve_qp(built.qp);
    ++qp_solves;
    if (qr.status == QpStatus::NumericalFailure)
        throw SolverError("inner QP failed to converge at a fixed lamp pattern");
    out.feasible = true;
    out.solution = extract_solution(p, view, pattern, built.layout, qr.x);
    out.solution.status = "optimal";
    return out;
}

// Lexicographic "earliest lights-on" ordering used to break objective ties.
bool pattern_lex_earlier(const std::vector<int>& a, const std::vector<int>& b) {
    for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
        if (a[i] != b[i]) return a[i] > b[i];
    }
    return false;
}

std::vector<int> forced_pattern(const MpcProblem& p, const ProblemView& view) {
    std::vector<int> pattern(view.n, kOpen);
    for (int i = 0; i < view.committed_count; ++i) pattern[i] = p.committed_u[i];
    if (p.min_floor_on_sunlit) {
        for (int i = view.committed_count; i < view.n; ++i)
            if (view.v[i] && view.s_avail[i] < view.pmin - 1e-12) pattern[i] = 1;
    }
    return pattern;
}

}  // namespace

void MpcProblem::check_shape() const {
    if (horizon <= 0) throw std::invalid_argument("horizon must be positive");
    if (step < 1 || step > horizon) throw std::invalid_argument("step outside [1, horizon]");
    if (static_cast<int>(price.size()) != horizon ||
        static_cast<int>(solar_ppfd.size()) != horizon)
        throw std::invalid_argument("price/solar vectors must cover the horizon");
    if (static_cast<int>(committed_u.size()) != step - 1 ||
        static_cast<int>(committed_x.size()) != step - 1)
        throw std::invalid_argument("committed prefix must cover hours before the current step");
    bounds.check_valid();
    if (weights.alpha < 0 || weights.beta < 0 || weights.gamma < 0)
        throw std::invalid_argument("objective weights must be nonnegative");
}

std::vector<int> sun_mask(const MpcProblem& problem) {
    std::vector<int> v(problem.horizon);
    for (int i = 0; i < problem.horizon; ++i)
        v[i] = problem.solar_ppfd[i] > problem.sun_threshold ? 1 : 0;
    return v;
}

double solution_objective(const MpcProblem& problem, const std::vector<double>& r_a) {
    double cost = 0.0, quad = 0.0, peak = 0.0;
    for (int i = 0; i < problem.horizon; ++i) {
        cost += problem.price[i] * r_a[i];
        quad += r_a[i] * r_a[i];
        peak = std::max(peak, r_a[i]);
    }
    return problem.weights.alpha * cost + problem.weights.beta * quad +
           problem.weights.gamma * peak;
}

FeasibilityReport feasibility_check(const MpcProblem& problem) {
    problem.check_shape();
    const ProblemView view = make_view(problem);
    const std::vector<int> root = forced_pattern(problem, view);
    const RangeSummary rs = summarize_ranges(problem, view, root);

    FeasibilityReport rep;
    const double scale = kDliPerPpfdHour * problem.interval_hours;
    rep.dli_min_reachable = rs.sum_lo * scale;
    rep.dli_max_reachable = rs.sum_hi * scale;
    const double target = problem.effective_dli();
    const double tol = 1e-9 * std::max(1.0, target);
    rep.dli_deficit = std::max(0.0, target - rep.dli_max_reachable);
    rep.dli_surplus = std::max(0.0, rep.dli_min_reachable - target);
    rep.feasible = rs.per_hour_ok && rep.dli_deficit <= tol && rep.dli_surplus <= tol;
    if (rep.feasible) {
        rep.dli_deficit = rep.dli_surplus = 0.0;
    } else if (rep.dli_deficit > tol) {
        rep.detail = "remaining hours cannot reach the DLI target; deficit " +
                     fmt_double(rep.dli_deficit, 6) + " mol/m^2";
    } else if (rep.dli_surplus > tol) {
        rep.detail = "commitments and sunlit floors exceed the DLI target by " +
                     fmt_double(rep.dli_surplus, 6) + " mol/m^2";
    } else {
        rep.detail = "an hour admits no feasible light level";
    }
    return rep;
}

MpcSolution solve(const MpcProblem& problem, const MpcSolveOptions& options) {
    problem.check_shape();
    const ProblemView view = make_view(problem);
    const double feas_tol = 1e-9 * std::max(1.0, view.r_total);

    MpcSolution best;
    best.status = "infeasible";
    bool have_incumbent = false;
    std::vector<int> best_pattern;
    long qp_solves = 0;
    long nodes = 0;

    const std::vector<int> root_pattern = forced_pattern(problem, view);
    {
        const RangeSummary rs = summarize_ranges(problem, view, root_pattern);
        if (!rs.per_hour_ok || rs.sum_lo > view.r_total + feas_tol ||
            view.r_total > rs.sum_hi + feas_tol) {
            const FeasibilityReport rep = feasibility_check(problem);
            best.warnings.push_back(rep.detail);
            best.nodes = 0;
            return best;
        }
    }

    const auto try_incumbent = [&](const std::vector<int>& pattern) {
        const EvalResult ev = evaluate_pattern(problem, view, pattern, qp_solves);
        if (!ev.feasible) return;
        const double tie = 1e-9 * std::max(1.0, std::abs(ev.solution.objective));
        if (!have_incumbent || ev.solution.objective < best.objective - tie ||
            (std::abs(ev.solution.objective - best.objective) <= tie &&
             pattern_lex_earlier(pattern, best_pattern))) {
            best = ev.solution;
            best_pattern = pattern;
            have_incumbent = true;
        }
    };

    // Seed incumbents: caller hint, greedy-by-price, everything on.
    if (static_cast<int>(options.hint_pattern.size()) == view.n) {
        std::vector<int> hint = root_pattern;
        for (int i = view.committed_count; i < view.n; ++i)
            if (hint[i] == kOpen) hint[i] = options.hint_pattern[i] ? 1 : 0;
        try_incumbent(hint);
    }
    {
        std::vector<int> greedy = root_pattern;
        for (int i = view.committed_count; i < view.n; ++i)
            if (greedy[i] == kOpen) greedy[i] = 0;
        if (!pattern_feasible(problem, view, greedy, feas_tol)) {
            std::vector<int> order;
            for (int i = view.committed_count; i < view.n; ++i)
                if (greedy[i] == 0 && root_pattern[i] == kOpen) order.push_back(i);
            std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
                return problem.price[a] < problem.price[b];
            });
            for (int idx : order) {
                greedy[idx] = 1;
                if (pattern_feasible(problem, view, greedy, feas_tol)) break;
            }
        }
        try_incumbent(greedy);
        std::vector<int> all_on = root_pattern;
        for (int i = view.committed_count; i < view.n; ++i)
            if (all_on[i] == kOpen) all_on[i] = 1;
        try_incumbent(all_on);
    }

    struct Node {
        std::vector<int> pattern;
        double lb;
        long seq;
    };
    const auto node_order = [](const Node& a, const Node& b) {
        if (a.lb != b.lb) return a.lb > b.lb;  // min-heap on bound
        return a.seq > b.seq;
    };
    std::priority_queue<Node, std::vector<Node>, decltype(node_order)> open(node_order);
    long seq = 0;
    open.push({root_pattern, -std::numeric_limits<double>::infinity(), seq++});

    double proven_lb = -std::numeric_limits<double>::infinity();
    bool node_limit_hit = false;

    while (!open.empty()) {
        if (nodes >= options.node_limit) {
            node_limit_hit = true;
            proven_lb = std::min(proven_lb, open.top().lb);
            break;
        }
        Node node = open.top();
        open.pop();
        const double prune_at =
            have_incumbent
                ? best.objective - options.prune_slack * std::max(1.0, std::abs(best.objective))
                : std::numeric_limits<double>::infinity();
        if (node.lb >= prune_at) {
            // Best-first order: every remaining node is at least as bad.
            proven_lb = std::max(proven_lb, node.lb);
            break;
        }
        ++nodes;

        if (!pattern_feasible(problem, view, node.pattern, feas_tol)) continue;

        const bool fully_determined =
            std::none_of(node.pattern.begin(), node.pattern.end(),
                         [](int a) { return a == kOpen; });
        if (fully_determined) {
            try_incumbent(node.pattern);
            continue;
        }

        const BuiltQp built = build_qp(problem, view, node.pattern);
        if (!built.feasible) continue;
        const QpResult qr = solve_qp(built.qp);
        ++qp_solves;
        if (qr.status == QpStatus::NumericalFailure)
            throw SolverError("relaxation QP failed to converge");
        const double lb = qr.objective + built.layout.objective_const -
                          1e-9 * std::max(1.0, std::abs(qr.objective));
        if (lb >= prune_at) continue;

        // Pick the hour whose relaxed intensity most violates the
        // {0} u [pmin, pmax] semi-continuity; round-feasible relaxations
        // become incumbent candidates directly.
        int branch_hour = -1;
        double worst = 1e-6 * view.pmin;
        std::vector<int> rounded = node.pattern;
        for (int i = 0; i < view.n; ++i) {
            if (node.pattern[i] != kOpen) continue;
            const double a = built.layout.a_var[i] >= 0 ? qr.x[built.layout.a_var[i]] : 0.0;
            rounded[i] = a >= 0.5 * view.pmin ? 1 : 0;
            const double viol = std::min(a, view.pmin - a);
            if (viol > worst) {
                worst = viol;
                branch_hour = i;
            }
        }
        if (branch_hour < 0) {
            try_incumbent(rounded);
            const double close_at =
                have_incumbent ? best.objective -
                                     1e-9 * std::max(1.0, std::abs(best.objective))
                               : std::numeric_limits<double>::infinity();
            if (lb >= close_at) continue;
            // Rounding did not certify the bound; split on the first open hour.
            for (int i = 0; i < view.n; ++i)
                if (node.pattern[i] == kOpen) {
                    branch_hour = i;
                    break;
                }
        }

        for (int value : {1, 0}) {
            Node child;
            child.pattern = node.pattern;
            child.pattern[branch_hour] = value;
            child.lb = lb;
            child.seq = seq++;
            open.push(std::move(child));
        }
    }

    if (!have_incumbent) {
        best.status = "infeasible";
        best.warnings.push_back("no lamp pattern satisfies the constraint set");
        best.nodes = nodes;
        best.qp_solves = qp_solves;
        return best;
    }
    if (open.empty() && !node_limit_hit) proven_lb = best.objective;
    const double scale = std::max(1.0, std::abs(best.objective));
    best.gap = std::max(0.0, (best.objective - std::min(proven_lb, best.objective)) / scale);
    best.status = (!node_limit_hit || best.gap <= options.rel_gap) ? "optimal" : "incumbent";
    best.nodes = nodes;
    best.qp_solves = qp_solves;
    return best;
}

MpcSolution brute_force_solve(const MpcProblem& problem) {
    problem.check_shape();
    const ProblemView view = make_view(problem);
    const int free_hours = view.n - view.committed_count;
    if (free_hours > 10)
        throw std::invalid_argument("brute-force oracle limited to 10 free hours, got " +
                                    std::to_string(free_hours));

    MpcSolution best;
    best.status = "infeasible";
    bool have = false;
    std::vector<int> best_pattern;
    long qp_solves = 0;

    std::vector<int> pattern(view.n, 0);
    for (int i = 0; i < view.committed_count; ++i) pattern[i] = problem.committed_u[i];

    const long combos = 1L << free_hours;
    for (long mask = 0; mask < combos; ++mask) {
        for (int k = 0; k < free_hours; ++k)
            pattern[view.committed_count + k] = (mask >> k) & 1;
        const EvalResult ev = evaluate_pattern(problem, view, pattern, qp_solves);
        if (!ev.feasible) continue;
        const double tie = 1e-9 * std::max(1.0, std::abs(ev.solution.objective));
        if (!have || ev.solution.objective < best.objective - tie ||
            (std::abs(ev.solution.objective - best.objective) <= tie &&
             pattern_lex_earlier(pattern, best_pattern))) {
            best = ev.solution;
            best_pattern = pattern;
            have = true;
        }
    }
    best.nodes = combos;
    best.qp_solves = qp_solves;
    if (!have) best.warnings.push_back("no lamp pattern satisfies the constraint set");
    return best;
}

ConstraintCheck verify_solution(const MpcProblem& problem, const MpcSolution& solution,
                                double tolerance) {
    ConstraintCheck check;
    const int n = problem.horizon;
    const auto fail = [&](const std::string& msg) { check.failures.push_back(msg); };

    if (static_cast<int>(solution.u.size()) != n || static_cast<int>(solution.x.size()) != n ||
        static_cast<int>(solution.w.size()) != n || static_cast<int>(solution.r_a.size()) != n ||
        static_cast<int>(solution.r_s.size()) != n || static_cast<int>(solution.r.size()) != n) {
        fail("solution arrays do not span the horizon");
        return check;
    }

    const std::vector<int> v = sun_mask(problem);
    const double pmin = problem.bounds.ppfd_min;
    const double pmax = problem.bounds.ppfd_max;
    double r_sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const std::string at = " at hour " + std::to_string(i + 1);
        if (solution.u[i] != 0 && solution.u[i] != 1) fail("u not binary" + at);
        if (static_cast<int>(solution.v.size()) == n && solution.v[i] != v[i])
            fail("v does not match sunlight data" + at);
        if (i < problem.step - 1) {
            if (solution.u[i] != problem.committed_u[i]) fail("committed u rewritten" + at);
            else if (solution.u[i] &&
                     std::abs(solution.x[i] - problem.committed_x[i]) > tolerance)
                fail("committed x rewritten" + at);
        }
        if (solution.u[i] == 1 && solution.x[i] < pmin - tolerance)
            fail("lamp intensity below ppfd_min" + at);
        if (std::abs(solution.r_a[i] - solution.x[i] * solution.u[i]) > tolerance)
            fail("r_a != x*u" + at);
        if (solution.w[i] < -tolerance || solution.w[i] > 1.0 + tolerance)
            fail("shading factor outside [0,1]" + at);
        const double rs_expect = problem.solar_ppfd[i] * v[i] * solution.w[i];
        if (std::abs(solution.r_s[i] - rs_expect) > tolerance * std::max(1.0, rs_expect))
            fail("r_s != Y*v*w" + at);
        if (std::abs(solution.r[i] - (solution.r_a[i] + solution.r_s[i])) > tolerance)
            fail("r != r_a + r_s" + at);
        if (solution.r[i] > pmax + tolerance) fail("r above ppfd_max" + at);
        if (problem.min_floor_on_sunlit && v[i] && solution.r[i] < pmin - tolerance) {
            // A committed dark hour whose realized sun is below the floor is
            // a logged consequence of forecast error, not a solver defect.
            if (i < problem.step - 1 && problem.committed_u[i] == 0 &&
                problem.solar_ppfd[i] < pmin)
                check.warnings.push_back("floor dropped on committed dark hour " +
                                         std::to_string(i + 1));
            else
                fail("sunlit floor violated" + at);
        }
        r_sum += solution.r[i];
    }
    const double dli = kDliPerPpfdHour * problem.interval_hours * r_sum;
    const double target = solution.dli_enforced > 0.0 ? solution.dli_enforced
                                                      : problem.effective_dli();
    if (std::abs(dli - target) > 1e-6)
        fail("DLI " + fmt_double(dli, 8) + " != enforced target " + fmt_double(target, 8));

    check.ok = check.failures.empty();
    return check;
}

void commit(const MpcSolution& solution, int step, Schedule& schedule) {
    if (schedule.committed_hours() != step - 1)
        throw std::logic_error("commit at step " + std::to_string(step) + " but " +
                               std::to_string(schedule.committed_hours()) +
                               " hours already committed");
    if (static_cast<int>(solution.u.size()) < step)
        throw std::logic_error("solution does not cover the committed step");
    schedule.u_opt.push_back(solution.u[step - 1]);
    schedule.x_opt.push_back(solution.u[step - 1] ? solution.x[step - 1] : 0.0);
}

MpcProblem assemble_problem(int step, const std::vector<double>& actual_price,
                            const std::vector<double>& actual_solar,
                            const std::vector<double>& price_forecast,
                            const std::vector<double>& solar_forecast,
                            const Schedule& committed, const PhysiologyBounds& bounds,
                            const MpcWeights& weights) {
    constexpr int kHorizon = 24;
    if (step < 1 || step > kHorizon) throw std::invalid_argument("step outside [1,24]");
    if (static_cast<int>(actual_price.size()) < step - 1 ||
        static_cast<int>(actual_solar.size()) < step - 1)
        throw DataError("history does not cover hours before step " + std::to_string(step));
    if (static_cast<int>(price_forecast.size()) < kHorizon ||
        static_cast<int>(solar_forecast.size()) < kHorizon)
        throw DataError("forecast does not cover the 24-hour horizon");
    if (committed.committed_hours() != step - 1)
        throw std::invalid_argument("committed schedule inconsistent with step");

    MpcProblem p;
    p.horizon = kHorizon;
    p.step = step;
    p.bounds = bounds;
    p.weights = weights;
    p.price.resize(kHorizon);
    p.solar_ppfd.resize(kHorizon);
    for (int nidx = 0; nidx < kHorizon; ++nidx) {
        const bool realized = nidx < step - 1;
        p.price[nidx] = realized ? actual_price[nidx] : price_forecast[nidx];
        p.solar_ppfd[nidx] = std::max(0.0, realized ? actual_solar[nidx] : solar_forecast[nidx]);
    }
    p.committed_u = committed.u_opt;
    p.committed_x = committed.x_opt;
    return p;
}

DayResult run_day(const std::vector<double>& actual_price,
                  const std::vector<double>& actual_solar, const DayForecaster& forecaster,
                  const PhysiologyBounds& bounds, const MpcWeights& weights,
                  const MpcSolveOptions& options) {
    constexpr int kHorizon = 24;
    if (actual_price.size() < kHorizon || actual_solar.size() < kHorizon)
        throw DataError("a full day of actuals is required");

    DayResult out;
    std::vector<double> price_fc(kHorizon), solar_fc(kHorizon);
    std::vector<int> prev_pattern;

    for (int step = 1; step <= kHorizon; ++step) {
        forecaster(step, price_fc, solar_fc);
        MpcProblem prob = assemble_problem(step, actual_price, actual_solar, price_fc, solar_fc,
                                           out.schedule, bounds, weights);
        StepDiagnostics diag;
        diag.step = step;

        const FeasibilityReport rep = feasibility_check(prob);
        if (!rep.feasible) {
            if (rep.dli_deficit > 0.0) {
                prob.dli_override = rep.dli_max_reachable;
                diag.dli_deficit = rep.dli_deficit;
            } else if (rep.dli_surplus > 0.0) {
                prob.dli_override = rep.dli_min_reachable;
                diag.dli_deficit = -rep.dli_surplus;
            }
            out.repair_applied = true;
            out.worst_dli_deficit = std::max(out.worst_dli_deficit, rep.dli_deficit);
        }

        MpcSolveOptions opts = options;
        opts.hint_pattern = prev_pattern;
        MpcSolution sol = solve(prob, opts);
        if (!sol.feasible())
            throw SolverError("MPC infeasible at step " + std::to_string(step) +
                              (sol.warnings.empty() ? "" : ": " + sol.warnings.front()));
        commit(sol, step, out.schedule);
        prev_pattern = sol.u;

        diag.objective = sol.objective;
        diag.gap = sol.gap;
        diag.nodes = sol.nodes;
        diag.status = sol.status;
        double dli_committed = 0.0, peak = 0.0;
        for (int k = 0; k < out.schedule.committed_hours(); ++k) {
            const double ra = out.schedule.u_opt[k] ? out.schedule.x_opt[k] : 0.0;
            dli_committed += kDliPerPpfdHour * ra;
            peak = std::max(peak, ra);
        }
        diag.dli_committed = dli_committed;
        diag.peak_ra = peak;
        out.steps.push_back(diag);
        if (step == kHorizon) out.final_solution = std::move(sol);
    }

    LightingRecipe recipe;
    recipe.interval_hours = 1.0;
    recipe.artificial.resize(kHorizon);
    recipe.solar = out.final_solution.r_s;
    recipe.values.resize(kHorizon);
    for (int i = 0; i < kHorizon; ++i) {
        recipe.artificial[i] = out.schedule.u_opt[i] ? out.schedule.x_opt[i] : 0.0;
        recipe.values[i] = recipe.artificial[i] + recipe.solar[i];
    }
    out.recipe = std::move(recipe);
    return out;
}

void write_step_diagnostics_csv(const std::vector<StepDiagnostics>& steps,
                                const std::string& path) {
    CsvWriter w(path);
    w.write_row({"step", "objective", "gap", "nodes", "dli_committed", "peak_ra"});
    for (const auto& s : steps)
        w.write_row({std::to_string(s.step), fmt_double(s.objective), fmt_double(s.gap, 9),
                     std::to_string(s.nodes), fmt_double(s.dli_committed),
                     fmt_double(s.peak_ra)});
}

std::string problem_to_json(const MpcProblem& p) {
    nlohmann::json j;
    j["horizon"] = p.horizon;
    j["interval_hours"] = p.interval_hours;
    j["step"] = p.step;
    j["price"] = p.price;
    j["solar_ppfd"] = p.solar_ppfd;
    j["bounds"] = {{"ppfd_min", p.bounds.ppfd_min},
                   {"ppfd_max", p.bounds.ppfd_max},
                   {"dli_target", p.bounds.dli_target}};
    j["weights"] = {{"alpha", p.weights.alpha},
                    {"beta", p.weights.beta},
                    {"gamma", p.weights.gamma}};
    j["committed_u"] = p.committed_u;
    j["committed_x"] = p.committed_x;
    j["sun_threshold"] = p.sun_threshold;
    j["min_floor_on_sunlit"] = p.min_floor_on_sunlit;
    j["dli_override"] = p.dli_override;
    return j.dump(2);
}

MpcProblem problem_from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    MpcProblem p;
    p.horizon = j.at("horizon").get<int>();
    p.interval_hours = j.at("interval_hours").get<double>();
    p.step = j.at("step").get<int>();
    p.price = j.at("price").get<std::vector<double>>();
    p.solar_ppfd = j.at("solar_ppfd").get<std::vector<double>>();
    p.bounds.ppfd_min = j.at("bounds").at("ppfd_min").get<double>();
    p.bounds.ppfd_max = j.at("bounds").at("ppfd_max").get<double>();
    p.bounds.dli_target = j.at("bounds").at("dli_target").get<double>();
    p.weights.alpha = j.at("weights").at("alpha").get<double>();
    p.weights.beta = j.at("weights").at("beta").get<double>();
    p.weights.gamma = j.at("weights").at("gamma").get<double>();
    p.committed_u = j.at("committed_u").get<std::vector<int>>();
    p.committed_x = j.at("committed_x").get<std::vector<double>>();
    p.sun_threshold = j.at("sun_threshold").get<double>();
    p.min_floor_on_sunlit = j.at("min_floor_on_sunlit").get<bool>();
    p.dli_override = j.at("dli_override").get<double>();
    return p;
}

std::string solution_to_json(const MpcSolution& s) {
    nlohmann::json j;
    j["u"] = s.u;
    j["x"] = s.x;
    j["v"] = s.v;
    j["w"] = s.w;
    j["r_a"] = s.r_a;
    j["r_s"] = s.r_s;
    j["r"] = s.r;
    j["objective"] = s.objective;
    j["status"] = s.status;
    j["gap"] = s.gap;
    j["nodes"] = s.nodes;
    j["dli_enforced"] = s.dli_enforced;
    j["warnings"] = s.warnings;
    return j.dump(2);
}

}  // namespace ghem
