#include <catch2/catch_amalgamated.hpp>
#include <unsupported/Eigen/MatrixFunctions>

#include <cstdio>

#include "msmpc/plant.hpp"

using namespace msmpc;

TEST_CASE("first-order hold-equivalent discretization is exact") {
    const double a = 10.0, Ts = 0.1;
    VectorXd num(1), den(2);
    num << 1.0;
    den << 1.0, a;
    ArxPlant p = discretize_zoh(num, den, Ts);
    REQUIRE(p.n == 1);
    CHECK(p.theta(0) == Catch::Approx(std::exp(-a * Ts)).margin(1e-12));
    CHECK(p.theta(1) == Catch::Approx((1.0 - std::exp(-a * Ts)) / a).margin(1e-12));
    CHECK(p.dc_gain() == Catch::Approx(1.0 / a).margin(1e-10));
}

TEST_CASE("third-order benchmark plant discretizes to a stable unit-gain model") {
    VectorXd num(1), den(4);
    num << 160.0;
    den << 1.0, 11.6, 32.0, 160.0;
    ArxPlant p = discretize_zoh(num, den, 0.1);
    REQUIRE(p.n == 3);
    CHECK(spectral_radius(p.companion()) < 1.0);
    CHECK(p.dc_gain() == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("improper and unstable transfer functions are rejected") {
    VectorXd num(2), den(2);
    num << 1.0, 1.0;
    den << 1.0, 2.0;
    CHECK_THROWS_AS(discretize_zoh(num, den, 0.1), std::invalid_argument);
    VectorXd num2(1), den2(2);
    num2 << 1.0;
    den2 << 1.0, -2.0;  // pole at +2
    CHECK_THROWS_AS(discretize_zoh(num2, den2, 0.1), std::invalid_argument);
}

TEST_CASE("ARX simulation matches direct state-space stepping") {
    VectorXd num(2), den(3);
    num << 2.0, 5.0;
    den << 1.0, 3.0, 7.0;
    const double Ts = 0.05;
    ArxPlant p = discretize_zoh(num, den, Ts);

    // independent path: discretize the canonical realization and step it
    const int n = 2;
    MatrixXd A(n, n);
    A << -3.0, -7.0, 1.0, 0.0;
    VectorXd B(n);
    B << 1.0, 0.0;
    Eigen::RowVectorXd C(n);
    C << 2.0, 5.0;
    MatrixXd aug = MatrixXd::Zero(n + 1, n + 1);
    aug.topLeftCorner(n, n) = A * Ts;
    aug.topRightCorner(n, 1) = B * Ts;
    MatrixXd e = aug.exp();
    MatrixXd Ad = e.topLeftCorner(n, n);
    VectorXd Bd = e.topRightCorner(n, 1);

    const int T = 60;
    VectorXd u = generate_excitation(5, T, 7, {-1.0, 0.5, 1.0});
    auto sim = simulate(p, u, VectorXd::Zero(T), VectorXd::Zero(T));

    VectorXd x = VectorXd::Zero(n);
    for (int k = 0; k < T; ++k) {
        double y = C * x;
        CHECK(sim.z(k) == Catch::Approx(y).margin(1e-9));
        x = Ad * x + Bd * u(k);
    }
}

TEST_CASE("excitation holds each level and is reproducible") {
    auto u = generate_excitation(11, 200, 50, {-1.0, 0.0, 1.0});
    for (int k = 0; k < 200; ++k) {
        CHECK((u(k) == -1.0 || u(k) == 0.0 || u(k) == 1.0));
        if (k % 50 != 0) CHECK(u(k) == u(k - 1));
    }
    auto u2 = generate_excitation(11, 200, 50, {-1.0, 0.0, 1.0});
    CHECK((u - u2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("noise sampling respects its bound") {
    auto v = sample_bounded_noise(3, 1000, 0.01);
    CHECK(v.cwiseAbs().maxCoeff() <= 0.01);
    CHECK(v.cwiseAbs().maxCoeff() > 0.004);  // not degenerate
    CHECK(sample_bounded_noise(3, 10, 0.0).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("simulate rejects noise exceeding the declared bound") {
    ArxPlant p(1, (VectorXd(2) << 0.5, 1.0).finished(), 0.01, 0.0);
    VectorXd u = VectorXd::Zero(5);
    VectorXd bad = VectorXd::Constant(5, 0.02);
    CHECK_THROWS_AS(simulate(p, u, bad, VectorXd::Zero(5)), std::invalid_argument);
}

TEST_CASE("dataset CSV round trip preserves every sample") {
    ArxPlant p(1, (VectorXd(2) << 0.5, 1.0).finished(), 0.01, 0.05);
    Dataset ds = collect_dataset(p, 77, 120, 10, {-1.0, 1.0}, 0.1);
    CHECK(ds.y.cwiseAbs().maxCoeff() > 0.1);
    const std::string path = "roundtrip_test.csv";
    write_dataset_csv(ds, path);
    Dataset back = read_dataset_csv(path);
    REQUIRE(back.u.size() == ds.u.size());
    CHECK((back.u - ds.u).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.y - ds.y).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.z - ds.z).cwiseAbs().maxCoeff() == 0.0);
    std::remove(path.c_str());
}
