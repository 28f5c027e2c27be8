#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "msmpc/ident.hpp"
#include "msmpc/plant.hpp"
#include "msmpc/qp.hpp"
#include "msmpc/riccati.hpp"
#include "msmpc/sets.hpp"

namespace msmpc {

/// Period-to-period model built from the predictor bank. The state
///   X(j) = [z(t_j) .. z(t_j-o+1), u(t_j-1) .. u(t_j-o+1)],  t_j = j*p_bar,
/// advances one period per step, driven by the stacked input
///   U(j) = [u(t_j) .. u(t_j+p_bar-1)].
/// Row i of the state update is the (p_bar-i)-step predictor; the stacked
/// output Zhat(j) = C U-to-period outputs collects all p_bar intra-period
/// predictions. w_bar bounds the per-step prediction error plus measurement
/// noise.
struct LiftedModel {
    int o = 0;
    int p_bar = 0;
    int nx = 0;  // 2o-1
    MatrixXd A;  // nx x nx
    MatrixXd B;  // nx x p_bar
    MatrixXd M;  // nx x p_bar, disturbance input
    MatrixXd C;  // p_bar x nx, row p-1 predicts z(t_j + p)
    MatrixXd D;  // p_bar x p_bar
    VectorXd w_bar;  // p_bar entries, w_bar(p-1) = tau_hat_p + d_bar

    static LiftedModel from_bank(const PredictorBank& bank) {
        const int o = bank.o;
        const int pb = bank.p_bar;
        if (pb <= o)
            throw std::invalid_argument(
                "LiftedModel: period must exceed the model order (p_bar > o)");
        LiftedModel m;
        m.o = o;
        m.p_bar = pb;
        m.nx = 2 * o - 1;
        m.A = MatrixXd::Zero(m.nx, m.nx);
        m.B = MatrixXd::Zero(m.nx, pb);
        m.M = MatrixXd::Zero(m.nx, pb);
        m.C = MatrixXd::Zero(pb, m.nx);
        m.D = MatrixXd::Zero(pb, pb);
        m.w_bar = bank.w_bar();

        for (int p = 1; p <= pb; ++p) {
            const auto& mod = bank.model(p);
            m.C.block(p - 1, 0, 1, o) = mod.theta_AR().transpose();
            if (o > 1)
                m.C.block(p - 1, o, 1, o - 1) = mod.theta_U().transpose();
            m.D.block(p - 1, 0, 1, p) = mod.theta_Ubar().transpose();
        }
        // top block: rows i = 0..o-1 give z(t_{j+1} - i) via horizon p_bar - i
        for (int i = 0; i < o; ++i) {
            const int p = pb - i;
            m.A.row(i) = m.C.row(p - 1);
            m.B.block(i, 0, 1, p) = m.D.block(p - 1, 0, 1, p);
            m.M(i, p - 1) = 1.0;
        }
        // bottom block: the new input history is the tail of U(j) reversed
        for (int k = 0; k < o - 1; ++k) m.B(o + k, pb - 1 - k) = 1.0;
        return m;
    }
};

/// Residual of the lifted update against direct multi-step prediction on a
/// concrete state/input pair; exact lifting makes this zero to rounding.
inline double lift_consistency_residual(const LiftedModel& m, const PredictorBank& bank,
                                        const VectorXd& X, const VectorXd& U) {
    const int o = m.o;
    VectorXd Xn = m.A * X + m.B * U;
    VectorXd Z = m.C * X + m.D * U;
    double worst = 0.0;
    for (int i = 0; i < o; ++i)
        worst = std::max(worst, std::abs(Xn(i) - Z(m.p_bar - 1 - i)));
    for (int k = 0; k < o - 1; ++k)
        worst = std::max(worst, std::abs(Xn(o + k) - U(m.p_bar - 1 - k)));
    // each output row must agree with the bank model applied to the regressor
    for (int p = 1; p <= m.p_bar; ++p) {
        VectorXd phi(2 * o - 1 + p);
        phi.head(2 * o - 1) = X;
        phi.tail(p) = U.head(p);
        worst = std::max(worst, std::abs(Z(p - 1) - predict(bank.model(p), phi)));
    }
    return worst;
}

struct MpcConfig {
    int Np = 3;          // prediction horizon in periods
    double qy = 100.0;   // output weight per intra-period sample
    double ru = 1.0;     // input weight per base step
    double z_max = 10.0;  // |z| bound at every base step
    double u_max = 10.0;  // |u| bound at every base step
    double eps_ball = 1e-3;   // required margin inside the tightened sets
    int max_E_generators = 12;
    double rpi_alpha = 1e-3;
};

/// Everything the online controller needs, computed once offline.
struct TubeController {
    LiftedModel model;
    MpcConfig cfg;
    MatrixXd Q, R;       // stacked stage weights (p_bar x p_bar)
    MatrixXd K;          // period-rate feedback, u = K x convention
    MatrixXd P;          // terminal cost
    MatrixXd F;          // A + B K
    MatrixXd Gcl;        // C + D K
    Zonotope E;          // robust invariant error set (possibly reduced)
    HPolytope E_hrep;
    Box Z, U;            // raw constraints, dimension p_bar
    Box Z_hat;           // Z shrunk by the prediction-error tube
    Box Z_tight, U_tight;  // additionally shrunk by the error set
    HPolytope terminal;
    double rho_cl = 0.0;   // spectral radius of F
    double norm_cl = 0.0;  // induced 2-norm of F

    // condensed QP template; decision vector [Xbar; U_0; ..; U_{Np-1}]
    int nd = 0;
    MatrixXd H;
    MatrixXd Aqp;
    VectorXd b_base;
    int init_rows = 0;           // leading rows whose rhs depends on X
    std::vector<MatrixXd> Smap;  // Smap[i] maps decision vector to Xbar_i
    MatrixXd Y0;                 // first-stage output map
    MatrixXd T0;                 // first-stage input selector
};

namespace detail {

inline void build_qp_template(TubeController& c) {
    const LiftedModel& m = c.model;
    const int nx = m.nx;
    const int pb = m.p_bar;
    const int Np = c.cfg.Np;
    c.nd = nx + Np * pb;

    // Smap[i]: decision -> nominal state i periods ahead
    c.Smap.assign(Np + 1, MatrixXd::Zero(nx, c.nd));
    c.Smap[0].leftCols(nx).setIdentity();
    for (int i = 0; i < Np; ++i) {
        c.Smap[i + 1] = m.A * c.Smap[i];
        c.Smap[i + 1].middleCols(nx + i * pb, pb) += m.B;
    }

    MatrixXd Hm = MatrixXd::Zero(c.nd, c.nd);
    std::vector<MatrixXd> Y(Np);
    for (int i = 0; i < Np; ++i) {
        MatrixXd Ti = MatrixXd::Zero(pb, c.nd);
        Ti.middleCols(nx + i * pb, pb).setIdentity();
        Y[i] = m.C * c.Smap[i] + m.D * Ti;
        Hm += Y[i].transpose() * c.Q * Y[i] + Ti.transpose() * c.R * Ti;
        if (i == 0) c.T0 = Ti;
    }
    Hm += c.Smap[Np].transpose() * c.P * c.Smap[Np];
    c.H = Hm + Hm.transpose();  // J(x) = x' Hm x = 1/2 x' H x
    c.Y0 = Y[0];

    const int m_init = c.E_hrep.num_rows();
    const int m_out = 2 * pb * Np;
    const int m_in = 2 * pb * Np;
    const int m_term = c.terminal.num_rows();
    c.init_rows = m_init;
    c.Aqp.resize(m_init + m_out + m_in + m_term, c.nd);
    c.b_base.resize(c.Aqp.rows());

    int r = 0;
    // X - Xbar in E  <=>  -E_A Xbar <= E_b - E_A X  (X-dependent rhs)
    c.Aqp.middleRows(r, m_init).setZero();
    c.Aqp.block(r, 0, m_init, nx) = -c.E_hrep.A;
    c.b_base.segment(r, m_init) = c.E_hrep.b;
    r += m_init;
    for (int i = 0; i < Np; ++i) {
        c.Aqp.middleRows(r, pb) = Y[i];
        c.b_base.segment(r, pb) = c.Z_tight.upper;
        r += pb;
        c.Aqp.middleRows(r, pb) = -Y[i];
        c.b_base.segment(r, pb) = -c.Z_tight.lower;
        r += pb;
    }
    for (int i = 0; i < Np; ++i) {
        c.Aqp.middleRows(r, pb).setZero();
        c.Aqp.block(r, nx + i * pb, pb, pb).setIdentity();
        c.b_base.segment(r, pb) = c.U_tight.upper;
        r += pb;
        c.Aqp.middleRows(r, pb).setZero();
        c.Aqp.block(r, nx + i * pb, pb, pb) = -MatrixXd::Identity(pb, pb);
        c.b_base.segment(r, pb) = -c.U_tight.lower;
        r += pb;
    }
    c.Aqp.middleRows(r, m_term) = c.terminal.A * c.Smap[Np];
    c.b_base.segment(r, m_term) = c.terminal.b;
}

}  // namespace detail

/// Offline synthesis: terminal ingredients, invariant error set, constraint
/// tightening, and the condensed QP template.
inline TubeController synth(const PredictorBank& bank, const MpcConfig& cfg) {
    TubeController c;
    c.model = LiftedModel::from_bank(bank);
    c.cfg = cfg;
    const LiftedModel& m = c.model;
    const int pb = m.p_bar;

    c.Q = cfg.qy * MatrixXd::Identity(pb, pb);
    c.R = cfg.ru * MatrixXd::Identity(pb, pb);
    c.K = dlqr(m.A, m.B, m.C.transpose() * c.Q * m.C, c.R);
    c.F = m.A + m.B * c.K;
    c.Gcl = m.C + m.D * c.K;
    c.P = solve_dlyap(c.F, c.Gcl.transpose() * c.Q * c.Gcl +
                               c.K.transpose() * c.R * c.K);
    c.rho_cl = spectral_radius(c.F);
    c.norm_cl = matrix_norm2(c.F);

    // invariant set for the period-rate error, reduced for a tractable H-rep;
    // the reduction enlarges the set, so invariance is certified again
    Box W = Box::symmetric(m.w_bar);
    Zonotope E_full = compute_rpi(c.F, m.M, W, cfg.rpi_alpha);
    auto dirs = certification_directions(m.nx, 128);
    int budget = cfg.max_E_generators;
    while (true) {
        c.E = reduce_zonotope(E_full, budget);
        if (rpi_residual(c.E, c.F, m.M, W, dirs) <= 1e-8) break;
        budget += m.nx;
        if (budget > E_full.num_generators())
            throw std::runtime_error(
                "synth: reduced error set lost invariance at every budget");
    }
    c.E_hrep = zonotope_hrep(c.E);

    c.Z = Box::symmetric(VectorXd::Constant(pb, cfg.z_max));
    c.U = Box::symmetric(VectorXd::Constant(pb, cfg.u_max));
    VectorXd zh = VectorXd::Constant(pb, cfg.z_max) - m.w_bar;
    if (zh.minCoeff() <= 0)
        throw std::runtime_error(
            "synth: prediction-error tube swallows the output constraint");
    c.Z_hat = Box(-zh, zh);
    c.Z_tight = pontryagin_diff_box(c.Z_hat, linear_map(c.Gcl, c.E));
    c.U_tight = pontryagin_diff_box(c.U, linear_map(c.K, c.E));

    const double eps = cfg.eps_ball;
    if (c.Z_tight.upper.minCoeff() < eps || c.Z_tight.lower.maxCoeff() > -eps ||
        c.U_tight.upper.minCoeff() < eps || c.U_tight.lower.maxCoeff() > -eps)
        throw std::runtime_error(
            "synth: tightened constraints have no margin around the origin");

    MatrixXd G(4 * pb, m.nx);
    VectorXd g(4 * pb);
    G << c.Gcl, -c.Gcl, c.K, -c.K;
    g << c.Z_tight.upper, -c.Z_tight.lower, c.U_tight.upper, -c.U_tight.lower;
    c.terminal = compute_terminal_set(c.F, G, g);

    detail::build_qp_template(c);
    return c;
}

struct MpcStep {
    bool feasible = false;
    double Jstar = 0.0;
    VectorXd decision;   // full optimizer [Xbar; U_0; ..; U_{Np-1}]
    VectorXd Xbar;      // optimal nominal state
    VectorXd U_nominal;  // first-period nominal input
    VectorXd U_applied;  // nominal plus error feedback
    double stage_cost = 0.0;  // first-period cost along the nominal plan
    double kkt_residual = 0.0;
};

/// Feasibility residual at state X of the time-shifted plan from the previous
/// period, closed with the terminal gain. Nonpositive (up to solver slack)
/// whenever the disturbances stayed within their bounds, so this is checked
/// explicitly before each new solve.
inline double shifted_candidate_residual(const TubeController& c,
                                         const VectorXd& prev_decision,
                                         const VectorXd& X) {
    const int nx = c.model.nx;
    const int pb = c.model.p_bar;
    const int Np = c.cfg.Np;
    VectorXd cand(c.nd);
    cand.head(nx) = c.Smap[1] * prev_decision;
    for (int i = 0; i + 1 < Np; ++i)
        cand.segment(nx + i * pb, pb) = prev_decision.segment(nx + (i + 1) * pb, pb);
    cand.tail(pb) = c.K * (c.Smap[Np] * prev_decision);
    VectorXd rhs = c.b_base;
    rhs.head(c.init_rows) -= c.E_hrep.A * X;
    return (c.Aqp * cand - rhs).maxCoeff();
}

/// One period of the controller: solve the condensed QP anchored at the
/// measured state X, apply the first input block with error feedback.
inline MpcStep step(const TubeController& c, const VectorXd& X) {
    if (X.size() != c.model.nx) throw std::invalid_argument("step: bad state dimension");
    QpProblem qp;
    qp.H = c.H;
    qp.f = VectorXd::Zero(c.nd);
    qp.A = c.Aqp;
    qp.b = c.b_base;
    qp.b.head(c.init_rows) -= c.E_hrep.A * X;

    MpcStep s;
    auto r = solve_qp(qp);
    if (r.status != QpStatus::Optimal) return s;
    s.feasible = true;
    s.Jstar = r.value;
    s.decision = r.x;
    s.kkt_residual = qp_kkt_residual(qp, r);
    s.Xbar = r.x.head(c.model.nx);
    s.U_nominal = r.x.segment(c.model.nx, c.model.p_bar);
    s.U_applied = s.U_nominal + c.K * (X - s.Xbar);
    VectorXd zbar = c.Y0 * r.x;
    s.stage_cost = zbar.dot(c.Q * zbar) + s.U_nominal.dot(c.R * s.U_nominal);
    return s;
}

/// Warm-up trajectories that put the plant in a nonzero state before the
/// controller takes over; all three sequences share the time axis.
struct ClosedLoopInit {
    VectorXd u;
    VectorXd z;
    VectorXd y;
};

struct ClosedLoopTrace {
    VectorXd u, z, y;   // full base-rate trajectories including warm-up
    int warmup_len = 0;
    int p_bar = 0;
    std::vector<double> Jstar;
    std::vector<double> stage_cost;
    std::vector<double> cost_slack;     // J*(j+1) - J*(j) + stage(j), want <= tol
    std::vector<double> tube_residual;  // membership of X - Xbar in E
    std::vector<double> shifted_residual;  // feasibility of the shifted plan
    std::vector<VectorXd> X;     // measured lifted state per period
    std::vector<VectorXd> Xbar;  // optimal nominal state per period
    std::vector<char> feasible;

    bool all_feasible = false;
    bool bounds_ok = false;     // |z|, |u| within limits over the controlled part
    bool cost_monotone = false;
    bool tube_ok = false;
    bool shifted_ok = false;
    bool converged = false;
    std::string failure_note;

    bool all_ok() const {
        return all_feasible && bounds_ok && cost_monotone && tube_ok && shifted_ok &&
               converged;
    }
};

/// Closed loop against the true plant with fresh bounded noise. Runs the
/// stability and constraint audits a certified run must pass.
inline ClosedLoopTrace run_closed_loop(const TubeController& c, const ArxPlant& plant,
                                       const ClosedLoopInit& init, int periods,
                                       std::uint64_t noise_seed,
                                       double cost_tol = 1e-6, double tube_tol = 1e-8) {
    const LiftedModel& m = c.model;
    const int pb = m.p_bar;
    const int o = m.o;
    const int w0 = static_cast<int>(init.u.size());
    if (w0 < std::max(o, plant.n) || init.z.size() != w0 || init.y.size() != w0)
        throw std::invalid_argument("run_closed_loop: warm-up too short or inconsistent");

    const int T = w0 + periods * pb;
    ClosedLoopTrace tr;
    tr.warmup_len = w0;
    tr.p_bar = pb;
    tr.u.resize(T);
    tr.z.resize(T);
    tr.y.resize(T);
    tr.u.head(w0) = init.u;
    tr.z.head(w0) = init.z;
    tr.y.head(w0) = init.y;

    VectorXd v = sample_bounded_noise(noise_seed ^ 0x9e3779b97f4a7c15ull,
                                      periods * pb, plant.v_bar);
    VectorXd d = sample_bounded_noise(noise_seed ^ 0xc2b2ae3d27d4eb4full,
                                      periods * pb, plant.d_bar);

    auto advance = [&](int t, double vk) {
        // z(t) from the ARX recursion; t >= plant.n guaranteed by the warm-up
        double acc = 0.0;
        for (int i = 1; i <= plant.n; ++i) acc += plant.theta(i - 1) * tr.z(t - i);
        for (int i = 2; i <= plant.n; ++i) acc += plant.theta(plant.n + i - 2) * tr.u(t - i);
        acc += plant.theta(2 * plant.n - 1) * tr.u(t - 1);
        return acc + vk;
    };

    tr.all_feasible = true;
    tr.cost_monotone = true;
    tr.tube_ok = true;
    tr.shifted_ok = true;
    const double shift_tol = 1e-6 * (1.0 + c.b_base.lpNorm<Eigen::Infinity>());
    VectorXd prev_decision;
    int len = w0;
    for (int j = 0; j < periods; ++j) {
        const int t = len - 1;
        VectorXd X(m.nx);
        for (int i = 0; i < o; ++i) X(i) = tr.y(t - i);
        for (int i = 1; i < o; ++i) X(o + i - 1) = tr.u(t - i);

        if (j > 0) {
            double sres = shifted_candidate_residual(c, prev_decision, X);
            tr.shifted_residual.push_back(sres);
            if (sres > shift_tol) tr.shifted_ok = false;
        }

        MpcStep s = step(c, X);
        tr.feasible.push_back(s.feasible ? 1 : 0);
        if (!s.feasible) {
            tr.all_feasible = false;
            tr.failure_note = "period " + std::to_string(j) + ": QP infeasible";
            break;
        }
        tr.Jstar.push_back(s.Jstar);
        tr.stage_cost.push_back(s.stage_cost);
        tr.X.push_back(X);
        tr.Xbar.push_back(s.Xbar);
        prev_decision = s.decision;
        double tube_res = hpoly_residual(c.E_hrep, X - s.Xbar);
        tr.tube_residual.push_back(tube_res);
        if (tube_res > tube_tol) tr.tube_ok = false;
        if (j > 0) {
            double slack = tr.Jstar[j] - tr.Jstar[j - 1] + tr.stage_cost[j - 1];
            tr.cost_slack.push_back(slack);
            if (slack > cost_tol * (1.0 + std::abs(tr.Jstar[j - 1])))
                tr.cost_monotone = false;
        }

        for (int i = 0; i < pb; ++i) {
            tr.u(len) = s.U_applied(i);
            int k = len - w0;  // noise index
            tr.z(len) = advance(len, v(k));
            tr.y(len) = tr.z(len) + d(k);
            ++len;
        }
    }

    tr.u.conservativeResize(len);
    tr.z.conservativeResize(len);
    tr.y.conservativeResize(len);

    if (tr.all_feasible) {
        double zpk = tr.z.tail(len - w0).cwiseAbs().maxCoeff();
        double upk = tr.u.tail(len - w0).cwiseAbs().maxCoeff();
        tr.bounds_ok = zpk <= c.cfg.z_max + 1e-9 && upk <= c.cfg.u_max + 1e-9;
        if (!tr.bounds_ok) tr.failure_note = "state or input constraint violated";
        tr.converged = !tr.Jstar.empty() &&
                       tr.Jstar.back() <= 1e-3 * std::max(1.0, tr.Jstar.front());
        if (!tr.converged && tr.failure_note.empty())
            tr.failure_note = "cost did not decay";
    }
    return tr;
}

}  // namespace msmpc
