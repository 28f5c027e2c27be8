#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "msmpc/riccati.hpp"

namespace msmpc {

/// Ground-truth single-input single-output LTI plant in ARX form:
///   z(k+1) = theta' [z(k)..z(k-n+1), u(k-1)..u(k-n+1), u(k)] + v(k)
///   y(k)   = z(k) + d(k)
struct ArxPlant {
    int n = 0;
    VectorXd theta;  // 2n entries: [a_1..a_n, b_2..b_n, b_1]
    double v_bar = 0.0;
    double d_bar = 0.0;

    ArxPlant() = default;
    ArxPlant(int order, VectorXd coeffs, double vb, double db)
        : n(order), theta(std::move(coeffs)), v_bar(vb), d_bar(db) {
        if (n <= 0 || theta.size() != 2 * n)
            throw std::invalid_argument("ArxPlant: theta must have 2n entries");
        if (vb < 0 || db < 0)
            throw std::invalid_argument("ArxPlant: disturbance bounds must be nonnegative");
        if (spectral_radius(companion()) >= 1.0)
            throw std::invalid_argument("ArxPlant: autoregressive part is unstable");
    }

    MatrixXd companion() const {
        MatrixXd C = MatrixXd::Zero(n, n);
        C.row(0) = theta.head(n).transpose();
        if (n > 1) C.block(1, 0, n - 1, n - 1).setIdentity();
        return C;
    }

    double dc_gain() const {
        double num = theta(2 * n - 1) + theta.segment(n, n - 1).sum();
        double den = 1.0 - theta.head(n).sum();
        return num / den;
    }
};

namespace detail {

/// Monic polynomial coefficients [1, p1, .., pn] from complex roots.
inline VectorXd poly_from_roots(const Eigen::VectorXcd& roots) {
    const int n = static_cast<int>(roots.size());
    std::vector<std::complex<double>> p(n + 1, {0.0, 0.0});
    p[0] = 1.0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j >= 1; --j) p[j] -= roots(i) * p[j - 1];
    VectorXd out(n + 1);
    for (int i = 0; i <= n; ++i) out(i) = p[i].real();
    return out;
}

inline VectorXd charpoly(const MatrixXd& M) {
    Eigen::EigenSolver<MatrixXd> es(M, false);
    return poly_from_roots(es.eigenvalues());
}

}  // namespace detail

/// Zero-order-hold discretization of a strictly proper, stable continuous
/// transfer function, returned as ARX coefficients. Coefficients are given
/// highest power first; the denominator need not be monic.
inline ArxPlant discretize_zoh(const VectorXd& num_coeffs, const VectorXd& den_coeffs,
                               double Ts, double v_bar = 0.0, double d_bar = 0.0) {
    if (Ts <= 0) throw std::invalid_argument("discretize_zoh: Ts must be positive");
    const int n = static_cast<int>(den_coeffs.size()) - 1;
    if (n < 1) throw std::invalid_argument("discretize_zoh: denominator degree must be >= 1");
    if (num_coeffs.size() >= den_coeffs.size())
        throw std::invalid_argument(
            "discretize_zoh: transfer function must be strictly proper");
    if (std::abs(den_coeffs(0)) < 1e-14)
        throw std::invalid_argument("discretize_zoh: leading denominator coefficient is zero");

    VectorXd den = den_coeffs / den_coeffs(0);
    VectorXd num = VectorXd::Zero(n);
    num.tail(num_coeffs.size()) = num_coeffs / den_coeffs(0);

    // controllable canonical realization
    MatrixXd A = MatrixXd::Zero(n, n);
    A.row(0) = -den.tail(n).transpose();
    if (n > 1) A.block(1, 0, n - 1, n - 1).setIdentity();
    VectorXd B = VectorXd::Zero(n);
    B(0) = 1.0;
    Eigen::RowVectorXd C = num.transpose();

    Eigen::EigenSolver<MatrixXd> es(A, false);
    if (es.eigenvalues().real().maxCoeff() >= 0)
        throw std::invalid_argument("discretize_zoh: continuous-time plant is unstable");

    // [Ad Bd; 0 I] = expm([A B; 0 0] * Ts)
    MatrixXd aug = MatrixXd::Zero(n + 1, n + 1);
    aug.topLeftCorner(n, n) = A * Ts;
    aug.topRightCorner(n, 1) = B * Ts;
    MatrixXd eaug = aug.exp();
    MatrixXd Ad = eaug.topLeftCorner(n, n);
    VectorXd Bd = eaug.topRightCorner(n, 1);

    VectorXd a = detail::charpoly(Ad);                       // 1, p1..pn
    VectorXd ab = detail::charpoly(Ad - Bd * MatrixXd(C));   // 1, q1'..qn'
    VectorXd b = (ab - a).tail(n);                           // numerator q1..qn

    VectorXd theta(2 * n);
    theta.head(n) = -a.tail(n);             // alpha_i
    if (n > 1) theta.segment(n, n - 1) = b.tail(n - 1);  // beta_2..beta_n
    theta(2 * n - 1) = b(0);                // beta_1 (current input)
    return ArxPlant(n, theta, v_bar, d_bar);
}

struct SimResult {
    VectorXd z;
    VectorXd y;
};

/// Exact ARX recursion; entries of z before the initial condition are taken
/// as z_init, inputs before time 0 are zero.
inline SimResult simulate(const ArxPlant& plant, const VectorXd& u, const VectorXd& v,
                          const VectorXd& d, const VectorXd& z_init = VectorXd()) {
    const int T = static_cast<int>(u.size());
    const int n = plant.n;
    if (v.size() < T - 1 || d.size() < T)
        throw std::invalid_argument("simulate: noise sequences too short");
    if (v.size() > 0 && v.cwiseAbs().maxCoeff() > plant.v_bar + 1e-12)
        throw std::invalid_argument("simulate: process noise exceeds declared bound");
    if (d.size() > 0 && d.cwiseAbs().maxCoeff() > plant.d_bar + 1e-12)
        throw std::invalid_argument("simulate: measurement noise exceeds declared bound");
    if (z_init.size() != 0 && z_init.size() != n)
        throw std::invalid_argument("simulate: z_init must have n entries");

    VectorXd z = VectorXd::Zero(T);
    for (int i = 0; i < n && i < T; ++i) z(i) = z_init.size() ? z_init(i) : 0.0;
    auto uat = [&](int k) { return (k >= 0 && k < T) ? u(k) : 0.0; };
    for (int k = n - 1; k + 1 < T; ++k) {
        double acc = 0.0;
        for (int i = 0; i < n; ++i) acc += plant.theta(i) * z(k - i);
        for (int i = 1; i < n; ++i) acc += plant.theta(n + i - 1) * uat(k - i);
        acc += plant.theta(2 * n - 1) * uat(k);
        z(k + 1) = acc + v(k);
    }
    SimResult r;
    r.z = z;
    r.y = z + d.head(T);
    return r;
}

/// Piecewise-constant excitation holding each level for `hold` steps; values
/// drawn uniformly from `levels`.
inline VectorXd generate_excitation(std::uint64_t seed, int length, int hold,
                                    const std::vector<double>& levels) {
    if (hold < 1) throw std::invalid_argument("generate_excitation: hold must be >= 1");
    if (levels.empty()) throw std::invalid_argument("generate_excitation: empty level set");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<size_t> pick(0, levels.size() - 1);
    VectorXd u(length);
    double cur = 0.0;
    for (int k = 0; k < length; ++k) {
        if (k % hold == 0) cur = levels[pick(rng)];
        u(k) = cur;
    }
    return u;
}

/// I.i.d. uniform noise on [-bound, bound].
inline VectorXd sample_bounded_noise(std::uint64_t seed, int length, double bound) {
    if (bound < 0) throw std::invalid_argument("sample_bounded_noise: negative bound");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-bound, bound);
    VectorXd v(length);
    for (int k = 0; k < length; ++k) v(k) = bound == 0.0 ? 0.0 : unif(rng);
    return v;
}

struct Dataset {
    VectorXd u;
    VectorXd y;
    VectorXd z;  // noise-free output, kept for validation only
    std::uint64_t seed = 0;
    double v_bar = 0.0;
    double d_bar = 0.0;
    double Ts = 0.0;
    int n = 0;
    VectorXd theta_bar;
};

/// Identification dataset: excitation, one plant run, bounded uniform noise.
inline Dataset collect_dataset(const ArxPlant& plant, std::uint64_t seed, int length,
                               int hold, const std::vector<double>& levels,
                               double Ts = 0.0) {
    Dataset ds;
    ds.u = generate_excitation(seed, length, hold, levels);
    VectorXd v = sample_bounded_noise(seed ^ 0x9e3779b97f4a7c15ull, length, plant.v_bar);
    VectorXd d = sample_bounded_noise(seed ^ 0xc2b2ae3d27d4eb4full, length, plant.d_bar);
    auto sim = simulate(plant, ds.u, v, d);
    ds.y = sim.y;
    ds.z = sim.z;
    ds.seed = seed;
    ds.v_bar = plant.v_bar;
    ds.d_bar = plant.d_bar;
    ds.Ts = Ts;
    ds.n = plant.n;
    ds.theta_bar = plant.theta;
    return ds;
}

inline void write_dataset_csv(const Dataset& ds, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("write_dataset_csv: cannot open " + path);
    f.precision(17);
    f << "k,u,y,z\n";
    for (int k = 0; k < ds.u.size(); ++k)
        f << k << ',' << ds.u(k) << ',' << ds.y(k) << ',' << ds.z(k) << '\n';
}

inline Dataset read_dataset_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("read_dataset_csv: cannot open " + path);
    std::string line;
    std::getline(f, line);  // header
    std::vector<double> u, y, z;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        if (row.size() != 4) throw std::runtime_error("read_dataset_csv: malformed row");
        u.push_back(row[1]);
        y.push_back(row[2]);
        z.push_back(row[3]);
    }
    Dataset ds;
    ds.u = Eigen::Map<VectorXd>(u.data(), static_cast<int>(u.size()));
    ds.y = Eigen::Map<VectorXd>(y.data(), static_cast<int>(y.size()));
    ds.z = Eigen::Map<VectorXd>(z.data(), static_cast<int>(z.size()));
    return ds;
}

}  // namespace msmpc
