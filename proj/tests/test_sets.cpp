#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "msmpc/sets.hpp"

using namespace msmpc;

namespace {

// sign-pattern oracle: a zonotope's support is attained at a vertex
double zonotope_support_oracle(const Zonotope& z, const VectorXd& d) {
    const int g = z.num_generators();
    double best = -std::numeric_limits<double>::infinity();
    for (unsigned mask = 0; mask < (1u << g); ++mask) {
        VectorXd x = z.center;
        for (int i = 0; i < g; ++i)
            x += ((mask >> i) & 1u ? 1.0 : -1.0) * z.generators.col(i);
        best = std::max(best, d.dot(x));
    }
    return best;
}

}  // namespace

TEST_CASE("zonotope support matches the vertex oracle") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 3, g = 6;
        VectorXd c(n);
        MatrixXd G(n, g);
        for (int i = 0; i < n; ++i) {
            c(i) = unif(rng);
            for (int j = 0; j < g; ++j) G(i, j) = unif(rng);
        }
        Zonotope z(c, G);
        VectorXd d(n);
        for (int i = 0; i < n; ++i) d(i) = unif(rng);
        CHECK(support(z, d) == Catch::Approx(zonotope_support_oracle(z, d)).margin(1e-10));
    }
}

TEST_CASE("box support and Minkowski sum additivity") {
    Box b1 = Box::symmetric(VectorXd::Constant(2, 1.0));
    Box b2(VectorXd::Constant(2, -0.5), VectorXd::Constant(2, 2.0));
    VectorXd d(2);
    d << 2.0, -1.0;
    CHECK(support(b1, d) == Catch::Approx(3.0).margin(1e-12));
    Zonotope s = minkowski_sum(b1, b2);
    CHECK(support(s, d) == Catch::Approx(support(b1, d) + support(b2, d)).margin(1e-12));
}

TEST_CASE("pontryagin difference of boxes matches the grid oracle") {
    Box outer = Box::symmetric(VectorXd::Constant(2, 5.0));
    Zonotope inner(VectorXd::Zero(2), (MatrixXd(2, 2) << 1.0, 0.5, 0.0, 1.0).finished());
    Box diff = pontryagin_diff_box(outer, inner);
    // every point of diff plus every vertex of inner must stay inside outer
    for (double sx : {-1.0, 1.0})
        for (double sy : {-1.0, 1.0}) {
            VectorXd w = sx * inner.generators.col(0) + sy * inner.generators.col(1);
            for (double px : {diff.lower(0), diff.upper(0)})
                for (double py : {diff.lower(1), diff.upper(1)}) {
                    VectorXd x(2);
                    x << px, py;
                    VectorXd s = x + w;
                    CHECK(s.cwiseAbs().maxCoeff() <= 5.0 + 1e-12);
                }
        }
    // tightness: pushing any face out by epsilon escapes outer for some w
    CHECK(diff.upper(0) + support(inner, VectorXd::Unit(2, 0)) ==
          Catch::Approx(5.0).margin(1e-12));
    CHECK_THROWS_AS(pontryagin_diff_box(Box::symmetric(VectorXd::Constant(2, 0.5)), inner),
                    std::runtime_error);
}

TEST_CASE("scalar invariant set matches the geometric series") {
    MatrixXd F(1, 1), M(1, 1);
    F << 0.5;
    M << 1.0;
    Box W = Box::symmetric(VectorXd::Constant(1, 1.0));
    const double alpha = 1e-3;
    Zonotope E = compute_rpi(F, M, W, alpha);
    // exact limit is [-2, 2]; the truncated scaled sum lies slightly above
    double h = support(E, VectorXd::Ones(1));
    CHECK(h >= 2.0 - 1e-9);
    CHECK(h <= 2.0 / (1.0 - alpha) + 1e-9);
    auto dirs = certification_directions(1, 16);
    CHECK(rpi_residual(E, F, M, W, dirs) <= 1e-8);
}

TEST_CASE("planar rotation-contraction invariant set is certified") {
    double th = 0.7, rho = 0.8;
    MatrixXd F(2, 2);
    F << rho * std::cos(th), -rho * std::sin(th), rho * std::sin(th), rho * std::cos(th);
    MatrixXd M = MatrixXd::Identity(2, 2);
    Box W = Box::symmetric((VectorXd(2) << 0.3, 0.1).finished());
    Zonotope E = compute_rpi(F, M, W);
    auto dirs = certification_directions(2, 100);
    CHECK(rpi_residual(E, F, M, W, dirs) <= 1e-8);
    // the reduced set must also stay invariant and contain the original
    Zonotope Er = reduce_zonotope(E, 6);
    CHECK(Er.num_generators() <= 6);
    for (const auto& d : dirs) CHECK(support(Er, d) >= support(E, d) - 1e-12);
}

TEST_CASE("zonotope halfspace conversion is exact") {
    std::mt19937_64 rng(404);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 3, g = 5;
        MatrixXd G(n, g);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < g; ++j) G(i, j) = unif(rng);
        Zonotope z(VectorXd::Zero(n), G);
        HPolytope h = zonotope_hrep(z);
        for (const auto& d : certification_directions(n, 40)) {
            double hz = support(z, d);
            double hp = support(h, d);
            CHECK(hp == Catch::Approx(hz).margin(1e-7));
        }
        // vertex membership
        for (unsigned mask = 0; mask < (1u << g); ++mask) {
            VectorXd x = z.center;
            for (int i = 0; i < g; ++i)
                x += ((mask >> i) & 1u ? 1.0 : -1.0) * z.generators.col(i);
            CHECK(hpoly_residual(h, x) <= 1e-8);
        }
    }
}

TEST_CASE("flat zonotope gets paired equality-like rows") {
    MatrixXd G(2, 1);
    G << 1.0, 0.0;
    Zonotope z(VectorXd::Zero(2), G);  // a segment on the x axis
    HPolytope h = zonotope_hrep(z);
    VectorXd inside(2), outside(2);
    inside << 0.5, 0.0;
    outside << 0.5, 0.1;
    CHECK(hpoly_residual(h, inside) <= 1e-10);
    CHECK(hpoly_residual(h, outside) > 1e-3);
}

TEST_CASE("terminal set is invariant and certified by forward simulation") {
    MatrixXd F(2, 2);
    F << 0.9, 0.4, -0.3, 0.7;
    CHECK(spectral_radius(F) < 1.0);
    MatrixXd G(4, 2);
    G << 1, 0, -1, 0, 0, 1, 0, -1;
    VectorXd g = VectorXd::Ones(4);
    HPolytope XF = compute_terminal_set(F, G, g);
    CHECK(invariance_residual(XF, F) <= 1e-7);

    // every sampled member must satisfy the seed constraints forever
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    int members = 0;
    for (int s = 0; s < 400; ++s) {
        VectorXd x(2);
        x << unif(rng), unif(rng);
        if (hpoly_residual(XF, x) > 0) continue;
        ++members;
        VectorXd xx = x;
        for (int k = 0; k < 60; ++k) {
            CHECK((G * xx - g).maxCoeff() <= 1e-8);
            xx = F * xx;
        }
    }
    CHECK(members > 20);
}
