#include "ghem/qp.hpp"

#include <cmath>
#include <limits>

namespace ghem {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Largest alpha in [0, 1] with v + alpha*dv >= (1-eta)*v elementwise positive.
double max_step(const VectorXd& v, const VectorXd& dv, double eta) {
    double alpha = 1.0;
    for (Eigen::Index i = 0; i < v.size(); ++i)
        if (dv[i] < 0.0) alpha = std::min(alpha, -eta * v[i] / dv[i]);
    return alpha;
}

}  // namespace

QpResult solve_qp(const QpProblem& prob, const QpOptions& opt) {
    const int n = prob.num_vars();
    const int p = static_cast<int>(prob.b.size());
    const int m = static_cast<int>(prob.h.size());

    QpResult res;
    res.x = VectorXd::Zero(n);
    res.eq_duals = VectorXd::Zero(p);
    res.ineq_duals = VectorXd::Zero(m);
    if (n == 0) {
        res.status = QpStatus::Optimal;
        return res;
    }

    // Static regularization keeps the KKT factorization well posed when
    // Q is singular (LP case) or constraints are redundant.
    const double reg = 1e-11;

    const auto solve_kkt = [&](const MatrixXd& K) { return Eigen::PartialPivLU<MatrixXd>(K); };

    // Equality-constrained (or unconstrained) QP: single KKT solve.
    if (m == 0) {
        MatrixXd K(n + p, n + p);
        K.setZero();
        K.topLeftCorner(n, n) = prob.Q + reg * MatrixXd::Identity(n, n);
        if (p > 0) {
            K.topRightCorner(n, p) = prob.A.transpose();
            K.bottomLeftCorner(p, n) = prob.A;
            K.bottomRightCorner(p, p) = -reg * MatrixXd::Identity(p, p);
        }
        VectorXd rhs(n + p);
        rhs.head(n) = -prob.c;
        if (p > 0) rhs.tail(p) = prob.b;
        const VectorXd sol = solve_kkt(K).solve(rhs);
        res.x = sol.head(n);
        if (p > 0) res.eq_duals = sol.tail(p);
        res.objective = 0.5 * res.x.dot(prob.Q * res.x) + prob.c.dot(res.x);
        VectorXd rd = prob.Q * res.x + prob.c;
        if (p > 0) rd += prob.A.transpose() * res.eq_duals;
        res.kkt_residual = rd.lpNorm<Eigen::Infinity>();
        res.status = res.kkt_residual < 1e-6 * std::max(1.0, prob.c.lpNorm<Eigen::Infinity>())
                         ? QpStatus::Optimal
                         : QpStatus::NumericalFailure;
        res.iterations = 1;
        return res;
    }

    // --- interior-point initialization ---------------------------------
    // Solve the KKT system with identity scaling, then shift slacks and
    // multipliers into the positive orthant.
    VectorXd x, y(p), s(m), z(m);
    {
        MatrixXd K(n + p, n + p);
        K.setZero();
        K.topLeftCorner(n, n) =
            prob.Q + prob.G.transpose() * prob.G + reg * MatrixXd::Identity(n, n);
        if (p > 0) {
            K.topRightCorner(n, p) = prob.A.transpose();
            K.bottomLeftCorner(p, n) = prob.A;
            K.bottomRightCorner(p, p) = -reg * MatrixXd::Identity(p, p);
        }
        VectorXd rhs(n + p);
        rhs.head(n) = -prob.c + prob.G.transpose() * prob.h;
        if (p > 0) rhs.tail(p) = prob.b;
        const VectorXd sol = solve_kkt(K).solve(rhs);
        x = sol.head(n);
        if (p > 0) y = sol.tail(p);

        const VectorXd resid = prob.h - prob.G * x;  // slack estimate
        const double dp = -resid.minCoeff();
        s = dp < 0.0 ? resid : VectorXd(resid.array() + (1.0 + dp));
        const VectorXd zhat = -resid;  // multiplier estimate from the same solve
        const double dd = -zhat.minCoeff();
        z = dd < 0.0 ? zhat : VectorXd(zhat.array() + (1.0 + dd));
    }

    const double scale_obj = std::max(1.0, prob.c.lpNorm<Eigen::Infinity>());
    const double scale_rhs = std::max(
        {1.0, prob.h.lpNorm<Eigen::Infinity>(), p > 0 ? prob.b.lpNorm<Eigen::Infinity>() : 0.0});

    MatrixXd K(n + p, n + p);
    VectorXd rhs(n + p);

    for (int iter = 0; iter < opt.max_iterations; ++iter) {
        VectorXd r_dual = prob.Q * x + prob.c + prob.G.transpose() * z;
        if (p > 0) r_dual += prob.A.transpose() * y;
        VectorXd r_eq = p > 0 ? VectorXd(prob.A * x - prob.b) : VectorXd();
        VectorXd r_in = prob.G * x + s - prob.h;
        const double mu = s.dot(z) / m;

        const double rd = r_dual.lpNorm<Eigen::Infinity>() / scale_obj;
        const double rp = std::max(p > 0 ? r_eq.lpNorm<Eigen::Infinity>() : 0.0,
                                   r_in.lpNorm<Eigen::Infinity>()) /
                          scale_rhs;
        const double obj = 0.5 * x.dot(prob.Q * x) + prob.c.dot(x);
        const double gap = s.dot(z) / std::max(1.0, std::abs(obj));

        res.kkt_residual = std::max({rd, rp, gap});
        res.iterations = iter;
        if (res.kkt_residual <= opt.tolerance) {
            res.status = QpStatus::Optimal;
            res.x = x;
            res.eq_duals = y;
            res.ineq_duals = z;
            res.objective = obj;
            return res;
        }
        if (!std::isfinite(mu) || mu > 1e16) break;

        const VectorXd d = (z.array() / s.array()).matrix();  // diag scaling
        K.setZero();
        K.topLeftCorner(n, n) = prob.Q + prob.G.transpose() * d.asDiagonal() * prob.G +
                                reg * MatrixXd::Identity(n, n);
        if (p > 0) {
            K.topRightCorner(n, p) = prob.A.transpose();
            K.bottomLeftCorner(p, n) = prob.A;
            K.bottomRightCorner(p, p) = -reg * MatrixXd::Identity(p, p);
        }
        const Eigen::PartialPivLU<MatrixXd> lu(K);

        const auto newton_step = [&](const VectorXd& rc, VectorXd& dx, VectorXd& dy, VectorXd& ds,
                                     VectorXd& dz) {
            // rc is the complementarity target: S Z e - rc_target form,
            // passed already combined as rc = s.*z (+ corrections).
            const VectorXd tmp = (d.array() * r_in.array()).matrix() -
                                 (rc.array() / s.array()).matrix();
            rhs.head(n) = -r_dual - prob.G.transpose() * tmp;
            if (p > 0) rhs.tail(p) = -r_eq;
            const VectorXd sol = lu.solve(rhs);
            dx = sol.head(n);
            if (p > 0)
                dy = sol.tail(p);
            else
                dy.resize(0);
            ds = -r_in - prob.G * dx;
            dz = -((rc + z.cwiseProduct(ds)).array() / s.array()).matrix();
        };

        // Affine (predictor) direction.
        VectorXd dx_a, dy_a, ds_a, dz_a;
        newton_step(s.cwiseProduct(z), dx_a, dy_a, ds_a, dz_a);
        const double ap_a = max_step(s, ds_a, 1.0);
        const double ad_a = max_step(z, dz_a, 1.0);
        const double mu_aff =
            (s + ap_a * ds_a).dot(z + ad_a * dz_a) / static_cast<double>(m);
        const double sigma = std::pow(std::max(0.0, mu_aff / mu), 3.0);

        // Corrector direction.
        VectorXd rc = s.cwiseProduct(z) + ds_a.cwiseProduct(dz_a);
        rc.array() -= sigma * mu;
        VectorXd dx, dy, ds, dz;
        newton_step(rc, dx, dy, ds, dz);

        const double ap = std::min(1.0, opt.step_fraction * max_step(s, ds, 1.0));
        const double ad = std::min(1.0, opt.step_fraction * max_step(z, dz, 1.0));
        x += ap * dx;
        s += ap * ds;
        if (p > 0) y += ad * dy;
        z += ad * dz;
    }

    res.x = x;
    res.eq_duals = y;
    res.ineq_duals = z;
    res.objective = 0.5 * x.dot(prob.Q * x) + prob.c.dot(x);
    res.status = res.kkt_residual <= 1e-6 ? QpStatus::MaxIterations : QpStatus::NumericalFailure;
    return res;
}

}  // namespace ghem
