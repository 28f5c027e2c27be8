#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "msmpc/riccati.hpp"

using namespace msmpc;

TEST_CASE("spectral radius and 2-norm") {
    MatrixXd M(2, 2);
    M << 0.0, 1.0, -0.25, 0.0;  // eigenvalues +-0.5i
    CHECK(spectral_radius(M) == Catch::Approx(0.5).margin(1e-12));
    MatrixXd D = MatrixXd::Zero(2, 2);
    D(0, 0) = 3.0;
    D(1, 1) = -7.0;
    CHECK(matrix_norm2(D) == Catch::Approx(7.0).margin(1e-12));
}

TEST_CASE("dlyap matches the truncated series oracle") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 4;
        MatrixXd F(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) F(i, j) = 0.3 * unif(rng);
        MatrixXd R(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) R(i, j) = unif(rng);
        MatrixXd S = R.transpose() * R;
        MatrixXd P = solve_dlyap(F, S);
        // oracle: P = sum_k (F')^k S F^k, convergent since rho(F) < 1
        MatrixXd acc = MatrixXd::Zero(n, n);
        MatrixXd Fk = MatrixXd::Identity(n, n);
        for (int k = 0; k < 2000; ++k) {
            acc += Fk.transpose() * S * Fk;
            Fk = F * Fk;
            if (Fk.norm() < 1e-16) break;
        }
        CHECK((P - acc).norm() <= 1e-9 * (1.0 + acc.norm()));
        CHECK(dlyap_residual(F, S, P) <= 1e-10 * (1.0 + S.norm()));
    }
}

TEST_CASE("dlyap rejects unstable dynamics") {
    MatrixXd F = 1.5 * MatrixXd::Identity(2, 2);
    CHECK_THROWS_AS(solve_dlyap(F, MatrixXd::Identity(2, 2)), std::runtime_error);
}

TEST_CASE("scalar LQ gain matches bisection on the scalar Riccati equation") {
    const double a = 1.2, b = 0.7, q = 2.0, rr = 0.5;
    // scalar fixed point: p = q + a^2 p - a^2 p^2 b^2 / (r + b^2 p)
    double lo = q, hi = 1e6;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        double rhs = q + a * a * mid - a * a * mid * mid * b * b / (rr + b * b * mid);
        if (rhs > mid)
            lo = mid;
        else
            hi = mid;
    }
    double p_star = 0.5 * (lo + hi);
    double k_star = -b * p_star * a / (rr + b * b * p_star);

    MatrixXd A(1, 1), B(1, 1), Q(1, 1), R(1, 1);
    A << a;
    B << b;
    Q << q;
    R << rr;
    MatrixXd K = dlqr(A, B, Q, R);
    CHECK(K(0, 0) == Catch::Approx(k_star).margin(1e-6));
    CHECK(std::abs(a + b * K(0, 0)) < 1.0);
}

TEST_CASE("dlqr stabilizes a random stabilizable pair and satisfies the fixed point") {
    std::mt19937_64 rng(5150);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    const int n = 3;
    MatrixXd A(n, n), B(n, 1);
    for (int i = 0; i < n; ++i) {
        B(i, 0) = unif(rng);
        for (int j = 0; j < n; ++j) A(i, j) = 0.6 * unif(rng);
    }
    A(0, 0) += 1.1;  // make it unstable so K has work to do
    MatrixXd Q = MatrixXd::Identity(n, n);
    MatrixXd R = MatrixXd::Identity(1, 1);
    MatrixXd K = dlqr(A, B, Q, R);
    CHECK(spectral_radius(A + B * K) < 1.0);

    // recover P from the closed loop and check the Riccati fixed point
    MatrixXd P = solve_dlyap(A + B * K, Q + K.transpose() * R * K);
    CHECK(dare_residual(A, B, Q, R, P) <= 1e-7 * (1.0 + P.norm()));
}
