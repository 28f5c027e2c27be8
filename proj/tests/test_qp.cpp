#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "msmpc/qp.hpp"

using namespace msmpc;

namespace {

// oracle: enumerate every active subset, solve the KKT equality system, and
// keep the best candidate whose multipliers are nonnegative and which is
// primal feasible
double active_set_enum(const QpProblem& p, bool& found) {
    const int n = static_cast<int>(p.H.rows());
    const int m = static_cast<int>(p.A.rows());
    double best = std::numeric_limits<double>::infinity();
    found = false;
    for (unsigned mask = 0; mask < (1u << m); ++mask) {
        std::vector<int> act;
        for (int i = 0; i < m; ++i)
            if (mask & (1u << i)) act.push_back(i);
        const int q = static_cast<int>(act.size());
        if (q > n) continue;
        MatrixXd K = MatrixXd::Zero(n + q, n + q);
        K.topLeftCorner(n, n) = p.H;
        for (int i = 0; i < q; ++i) {
            K.block(n + i, 0, 1, n) = p.A.row(act[i]);
            K.block(0, n + i, n, 1) = p.A.row(act[i]).transpose();
        }
        VectorXd rhs(n + q);
        rhs.head(n) = -p.f;
        for (int i = 0; i < q; ++i) rhs(n + i) = p.b(act[i]);
        Eigen::FullPivLU<MatrixXd> lu(K);
        if (!lu.isInvertible()) continue;
        VectorXd sol = lu.solve(rhs);
        VectorXd x = sol.head(n);
        VectorXd lam = sol.tail(q);
        if (q > 0 && lam.minCoeff() < -1e-9) continue;
        if (m > 0 && (p.A * x - p.b).maxCoeff() > 1e-8) continue;
        found = true;
        best = std::min(best, 0.5 * x.dot(p.H * x) + p.f.dot(x));
    }
    return best;
}

}  // namespace

TEST_CASE("random QPs match exhaustive active-set enumeration") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 4, m = 10;
        QpProblem p;
        MatrixXd R(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) R(i, j) = unif(rng);
        p.H = R.transpose() * R + 0.5 * MatrixXd::Identity(n, n);
        p.f.resize(n);
        for (int j = 0; j < n; ++j) p.f(j) = unif(rng);
        p.A.resize(m, n);
        p.b.resize(m);
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < n; ++j) p.A(i, j) = unif(rng);
            p.b(i) = 0.2 + std::abs(unif(rng));  // origin strictly feasible
        }
        auto r = solve_qp(p);
        REQUIRE(r.status == QpStatus::Optimal);
        bool found = false;
        double oracle = active_set_enum(p, found);
        REQUIRE(found);
        CHECK(r.value == Catch::Approx(oracle).margin(1e-7));
        CHECK(qp_kkt_residual(p, r) <= 1e-7);
    }
}

TEST_CASE("equality constraints are honored") {
    QpProblem p;
    p.H = 2.0 * MatrixXd::Identity(2, 2);
    p.f = VectorXd::Zero(2);
    p.Aeq.resize(1, 2);
    p.Aeq << 1.0, 1.0;
    p.beq.resize(1);
    p.beq << 2.0;
    auto r = solve_qp(p);
    REQUIRE(r.status == QpStatus::Optimal);
    CHECK(r.x(0) == Catch::Approx(1.0).margin(1e-9));
    CHECK(r.x(1) == Catch::Approx(1.0).margin(1e-9));
    CHECK(qp_kkt_residual(p, r) <= 1e-8);
}

TEST_CASE("infeasible QP is detected") {
    QpProblem p;
    p.H = MatrixXd::Identity(1, 1);
    p.f = VectorXd::Zero(1);
    p.A.resize(2, 1);
    p.A << 1.0, -1.0;
    p.b.resize(2);
    p.b << -1.0, -1.0;  // x <= -1 and x >= 1
    CHECK(solve_qp(p).status == QpStatus::Infeasible);
}

TEST_CASE("unconstrained minimum is returned when feasible") {
    QpProblem p;
    p.H = 4.0 * MatrixXd::Identity(2, 2);
    p.f.resize(2);
    p.f << -4.0, 8.0;
    p.A = MatrixXd::Identity(2, 2);
    p.b = VectorXd::Constant(2, 10.0);
    auto r = solve_qp(p);
    REQUIRE(r.status == QpStatus::Optimal);
    CHECK(r.x(0) == Catch::Approx(1.0).margin(1e-10));
    CHECK(r.x(1) == Catch::Approx(-2.0).margin(1e-10));
    CHECK(r.active.empty());
}

TEST_CASE("non positive definite Hessian is rejected") {
    QpProblem p;
    p.H = -MatrixXd::Identity(1, 1);
    p.f = VectorXd::Zero(1);
    CHECK_THROWS_AS(solve_qp(p), std::invalid_argument);
}
