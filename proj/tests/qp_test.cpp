#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "ghem/qp.hpp"

using namespace ghem;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST_CASE("equality-constrained QP matches the KKT solution") {
    // min x1^2 + x2^2 s.t. x1 + x2 = 2  ->  x = (1, 1)
    QpProblem p;
    p.Q = 2.0 * MatrixXd::Identity(2, 2);
    p.c = VectorXd::Zero(2);
    p.A = MatrixXd::Ones(1, 2);
    p.b = VectorXd::Constant(1, 2.0);
    const QpResult r = solve_qp(p);
    REQUIRE(r.status == QpStatus::Optimal);
    CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(r.x[1] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(r.objective == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("box-constrained QP lands on the active bound") {
    // min (x-3)^2 s.t. x <= 1  ->  x = 1
    QpProblem p;
    p.Q = 2.0 * MatrixXd::Identity(1, 1);
    p.c = VectorXd::Constant(1, -6.0);
    p.G = MatrixXd::Identity(1, 1);
    p.h = VectorXd::Constant(1, 1.0);
    const QpResult r = solve_qp(p);
    REQUIRE(r.status == QpStatus::Optimal);
    CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("pure LP (Q = 0) solves to the vertex") {
    // min -x1 - 2 x2 s.t. x1 + x2 <= 4, 0 <= x <= 3  ->  x = (1, 3)
    QpProblem p;
    p.Q = MatrixXd::Zero(2, 2);
    p.c = VectorXd(2);
    p.c << -1.0, -2.0;
    p.G = MatrixXd(5, 2);
    p.G << 1, 1, 1, 0, 0, 1, -1, 0, 0, -1;
    p.h = VectorXd(5);
    p.h << 4, 3, 3, 0, 0;
    const QpResult r = solve_qp(p);
    REQUIRE(r.status == QpStatus::Optimal);
    CHECK(r.objective == doctest::Approx(-7.0).epsilon(1e-8));
    CHECK(r.x[1] == doctest::Approx(3.0).epsilon(1e-7));
}

TEST_CASE("mixed equality and inequality with redundant rows") {
    // min x1^2 + 0.5 x2^2 + x3 s.t. x1 + x2 + x3 = 1, x3 >= 0, x3 >= 0 (dup), x <= 10
    QpProblem p;
    p.Q = MatrixXd::Zero(3, 3);
    p.Q(0, 0) = 2.0;
    p.Q(1, 1) = 1.0;
    p.c = VectorXd::Zero(3);
    p.c[2] = 1.0;
    p.A = MatrixXd::Ones(1, 3);
    p.b = VectorXd::Constant(1, 1.0);
    p.G = MatrixXd::Zero(5, 3);
    p.G(0, 2) = -1.0;
    p.G(1, 2) = -1.0;
    p.G(2, 0) = 1.0;
    p.G(3, 1) = 1.0;
    p.G(4, 2) = 1.0;
    p.h = VectorXd::Zero(5);
    p.h.tail(3).setConstant(10.0);
    const QpResult r = solve_qp(p);
    REQUIRE(r.status == QpStatus::Optimal);
    // With x3 = 0: min x1^2 + 0.5 x2^2 s.t. x1 + x2 = 1 -> x1 = 1/3, x2 = 2/3.
    CHECK(r.x[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
    CHECK(r.x[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-6));
    CHECK(r.x[2] == doctest::Approx(0.0).scale(1.0).epsilon(1e-6));
}

TEST_CASE("property: random strictly convex QPs satisfy the KKT conditions") {
    std::mt19937_64 rng(42);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 6);
        const int m = 1 + static_cast<int>(rng() % 8);
        MatrixXd M(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) M(i, j) = gauss(rng);
        QpProblem p;
        p.Q = M.transpose() * M + 0.1 * MatrixXd::Identity(n, n);
        p.c = VectorXd::NullaryExpr(n, [&](int) { return gauss(rng); });
        p.G = MatrixXd::NullaryExpr(m, n, [&](int, int) { return gauss(rng); });
        // Make x = 0 strictly feasible: h > 0.
        p.h = VectorXd::NullaryExpr(m, [&](int) { return 0.5 + std::abs(gauss(rng)); });

        const QpResult r = solve_qp(p);
        REQUIRE(r.status == QpStatus::Optimal);
        // Stationarity, primal feasibility, dual feasibility, complementarity.
        const VectorXd grad = p.Q * r.x + p.c + p.G.transpose() * r.ineq_duals;
        CHECK(grad.lpNorm<Eigen::Infinity>() < 1e-6);
        const VectorXd slack = p.h - p.G * r.x;
        CHECK(slack.minCoeff() > -1e-7);
        CHECK(r.ineq_duals.minCoeff() > -1e-9);
        for (int i = 0; i < m; ++i) CHECK(std::abs(slack[i] * r.ineq_duals[i]) < 1e-5);
    }
}
