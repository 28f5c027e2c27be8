#include <catch2/catch_amalgamated.hpp>
#include <functional>
#include <random>

#include "msmpc/lp.hpp"

using namespace msmpc;

namespace {

// brute-force oracle: enumerate all n-subsets of rows, solve the square
// system, keep the best feasible vertex
double vertex_enum_min(const LpProblem& p, bool& found) {
    const int m = static_cast<int>(p.A.rows());
    const int n = static_cast<int>(p.A.cols());
    double best = std::numeric_limits<double>::infinity();
    found = false;
    std::vector<int> idx(n);
    std::function<void(int, int)> rec = [&](int start, int depth) {
        if (depth == n) {
            MatrixXd B(n, n);
            VectorXd rhs(n);
            for (int i = 0; i < n; ++i) {
                B.row(i) = p.A.row(idx[i]);
                rhs(i) = p.b(idx[i]);
            }
            Eigen::FullPivLU<MatrixXd> lu(B);
            if (!lu.isInvertible()) return;
            VectorXd x = lu.solve(rhs);
            if ((p.A * x - p.b).maxCoeff() <= 1e-7) {
                found = true;
                best = std::min(best, p.c.dot(x));
            }
            return;
        }
        for (int j = start; j <= m - (n - depth); ++j) {
            idx[depth] = j;
            rec(j + 1, depth + 1);
        }
    };
    rec(0, 0);
    return best;
}

LpProblem random_bounded_lp(std::mt19937_64& rng, int n, int extra_rows) {
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    LpProblem p;
    p.A.resize(extra_rows + 2 * n, n);
    p.b.resize(extra_rows + 2 * n);
    for (int i = 0; i < extra_rows; ++i) {
        for (int j = 0; j < n; ++j) p.A(i, j) = unif(rng);
        p.b(i) = 1.0 + std::abs(unif(rng));  // keeps the origin interior
    }
    p.A.middleRows(extra_rows, n) = MatrixXd::Identity(n, n);
    p.A.bottomRows(n) = -MatrixXd::Identity(n, n);
    p.b.tail(2 * n).setConstant(10.0);
    p.c.resize(n);
    for (int j = 0; j < n; ++j) p.c(j) = unif(rng);
    return p;
}

}  // namespace

TEST_CASE("random LPs match vertex enumeration") {
    std::mt19937_64 rng(12345);
    for (int trial = 0; trial < 50; ++trial) {
        LpProblem p = random_bounded_lp(rng, 5, 10);
        auto r = solve_lp(p);
        REQUIRE(r.status == LpStatus::Optimal);
        bool found = false;
        double oracle = vertex_enum_min(p, found);
        REQUIRE(found);
        CHECK(r.value == Catch::Approx(oracle).margin(1e-8));
        CHECK(lp_certificate_residual(p, r) <= 1e-6);
    }
}

TEST_CASE("infeasible and unbounded problems are classified") {
    LpProblem inf;
    inf.c.resize(1);
    inf.c << 1.0;
    inf.A.resize(2, 1);
    inf.A << 1.0, -1.0;
    inf.b.resize(2);
    inf.b << 0.0, -1.0;  // x <= 0 and x >= 1
    CHECK(solve_lp(inf).status == LpStatus::Infeasible);

    LpProblem unb;
    unb.c.resize(1);
    unb.c << 1.0;
    unb.A.resize(1, 1);
    unb.A << 1.0;
    unb.b.resize(1);
    unb.b << 0.0;  // min x, x <= 0
    CHECK(solve_lp(unb).status == LpStatus::Unbounded);
}

TEST_CASE("degenerate LP with duplicated rows still solves") {
    LpProblem p;
    p.c.resize(2);
    p.c << -1.0, -1.0;
    p.A.resize(6, 2);
    p.A << 1, 0, 1, 0, 0, 1, 0, 1, 1, 1, -1, -1;
    p.b.resize(6);
    p.b << 1, 1, 1, 1, 2, 5;
    auto r = solve_lp(p);
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK(r.value == Catch::Approx(-2.0).margin(1e-9));
}

TEST_CASE("dual route agrees with the general route on large row counts") {
    std::mt19937_64 rng(777);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    const int n = 6, m = 300;
    for (int trial = 0; trial < 5; ++trial) {
        LpProblem p;
        p.A.resize(m, n);
        p.b.resize(m);
        for (int i = 0; i < m; ++i) {
            VectorXd row(n);
            for (int j = 0; j < n; ++j) row(j) = unif(rng);
            row.normalize();
            p.A.row(i) = row;
            p.b(i) = 1.0;  // halfspaces tangent-ish to the unit ball
        }
        p.c.resize(n);
        for (int j = 0; j < n; ++j) p.c(j) = unif(rng);
        auto fast = solve_lp(p);
        auto slow = solve_lp_general(p);
        REQUIRE(fast.status == LpStatus::Optimal);
        REQUIRE(slow.status == LpStatus::Optimal);
        CHECK(fast.value == Catch::Approx(slow.value).margin(1e-7));
        CHECK(lp_certificate_residual(p, fast) <= 1e-6);
    }
}

TEST_CASE("polytope support of the unit box") {
    MatrixXd A(4, 2);
    A << 1, 0, -1, 0, 0, 1, 0, -1;
    VectorXd b = VectorXd::Ones(4);
    VectorXd d(2);
    d << 3.0, -4.0;
    auto s = polytope_support(A, b, d);
    REQUIRE(s.bounded);
    CHECK(s.value == Catch::Approx(7.0).margin(1e-9));

    MatrixXd A2(1, 2);
    A2 << 1, 0;
    VectorXd b2 = VectorXd::Ones(1);
    CHECK_FALSE(polytope_support(A2, b2, d).bounded);
}
