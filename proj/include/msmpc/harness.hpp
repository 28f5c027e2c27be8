#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "msmpc/ident.hpp"
#include "msmpc/mpc.hpp"
#include "msmpc/plant.hpp"

namespace msmpc {

using nlohmann::json;

inline json to_json(const VectorXd& v) {
    json a = json::array();
    for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

inline json to_json(const MatrixXd& m) {
    json rows = json::array();
    for (int i = 0; i < m.rows(); ++i) {
        json r = json::array();
        for (int j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
        rows.push_back(r);
    }
    return rows;
}

inline VectorXd vector_from_json(const json& a) {
    VectorXd v(a.size());
    for (size_t i = 0; i < a.size(); ++i) v(static_cast<int>(i)) = a[i].get<double>();
    return v;
}

inline MatrixXd matrix_from_json(const json& a) {
    const int r = static_cast<int>(a.size());
    const int c = r ? static_cast<int>(a[0].size()) : 0;
    MatrixXd m(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) m(i, j) = a[i][j].get<double>();
    return m;
}

/// Full description of one reproducible experiment; every random draw is
/// derived from the seeds below.
struct ExperimentConfig {
    int schema_version = 1;

    // continuous-time plant and sampling
    VectorXd num{VectorXd::Zero(1)};
    VectorXd den{VectorXd::Zero(1)};
    double Ts = 0.1;
    double v_bar = 0.01;
    double d_bar = 0.1;

    // identification dataset
    int N = 1000;
    int hold = 50;
    std::vector<double> levels{-1.0, 0.0, 1.0};
    std::uint64_t data_seed = 1;

    // multi-step identification
    int o = 4;
    int p_bar = 10;
    double alpha = 1.05;
    double gamma = 1.2;

    // controller
    MpcConfig mpc;

    // closed loop: open-loop excursion reached before the controller engages
    double excursion_level = 2.0;
    int excursion_hold = 30;
    int periods = 30;
    std::uint64_t sim_seed = 42;

    static ExperimentConfig defaults() {
        ExperimentConfig c;
        c.num = VectorXd::Zero(1);
        c.num << 160.0;
        c.den = VectorXd::Zero(4);
        c.den << 1.0, 11.6, 32.0, 160.0;
        return c;
    }
};

inline json to_json(const ExperimentConfig& c) {
    json j;
    j["schema_version"] = c.schema_version;
    j["num"] = to_json(c.num);
    j["den"] = to_json(c.den);
    j["Ts"] = c.Ts;
    j["v_bar"] = c.v_bar;
    j["d_bar"] = c.d_bar;
    j["N"] = c.N;
    j["hold"] = c.hold;
    j["levels"] = c.levels;
    j["data_seed"] = c.data_seed;
    j["o"] = c.o;
    j["p_bar"] = c.p_bar;
    j["alpha"] = c.alpha;
    j["gamma"] = c.gamma;
    j["Np"] = c.mpc.Np;
    j["qy"] = c.mpc.qy;
    j["ru"] = c.mpc.ru;
    j["z_max"] = c.mpc.z_max;
    j["u_max"] = c.mpc.u_max;
    j["eps_ball"] = c.mpc.eps_ball;
    j["max_E_generators"] = c.mpc.max_E_generators;
    j["rpi_alpha"] = c.mpc.rpi_alpha;
    j["excursion_level"] = c.excursion_level;
    j["excursion_hold"] = c.excursion_hold;
    j["periods"] = c.periods;
    j["sim_seed"] = c.sim_seed;
    return j;
}

inline ExperimentConfig config_from_json(const json& j) {
    ExperimentConfig c;
    if (j.value("schema_version", 1) != 1)
        throw std::runtime_error("config: unsupported schema version");
    auto d = ExperimentConfig::defaults();
    c.num = j.contains("num") ? vector_from_json(j["num"]) : d.num;
    c.den = j.contains("den") ? vector_from_json(j["den"]) : d.den;
    c.Ts = j.value("Ts", d.Ts);
    c.v_bar = j.value("v_bar", d.v_bar);
    c.d_bar = j.value("d_bar", d.d_bar);
    c.N = j.value("N", d.N);
    c.hold = j.value("hold", d.hold);
    c.levels = j.value("levels", d.levels);
    c.data_seed = j.value("data_seed", d.data_seed);
    c.o = j.value("o", d.o);
    c.p_bar = j.value("p_bar", d.p_bar);
    c.alpha = j.value("alpha", d.alpha);
    c.gamma = j.value("gamma", d.gamma);
    c.mpc.Np = j.value("Np", d.mpc.Np);
    c.mpc.qy = j.value("qy", d.mpc.qy);
    c.mpc.ru = j.value("ru", d.mpc.ru);
    c.mpc.z_max = j.value("z_max", d.mpc.z_max);
    c.mpc.u_max = j.value("u_max", d.mpc.u_max);
    c.mpc.eps_ball = j.value("eps_ball", d.mpc.eps_ball);
    c.mpc.max_E_generators = j.value("max_E_generators", d.mpc.max_E_generators);
    c.mpc.rpi_alpha = j.value("rpi_alpha", d.mpc.rpi_alpha);
    c.excursion_level = j.value("excursion_level", d.excursion_level);
    c.excursion_hold = j.value("excursion_hold", d.excursion_hold);
    c.periods = j.value("periods", d.periods);
    c.sim_seed = j.value("sim_seed", d.sim_seed);
    return c;
}

inline json to_json(const PredictorBank& b) {
    json j;
    j["o"] = b.o;
    j["p_bar"] = b.p_bar;
    j["d_bar"] = b.d_bar;
    j["alpha"] = b.alpha;
    j["gamma"] = b.gamma;
    j["fingerprint"] = b.fingerprint;
    json models = json::array();
    for (const auto& m : b.models) {
        json mj;
        mj["p"] = m.p;
        mj["o"] = m.o;
        mj["theta"] = to_json(m.theta);
        mj["eps_hat"] = m.eps_hat;
        mj["tau_lower"] = m.tau_lower;
        mj["tau_hat"] = m.tau_hat;
        models.push_back(mj);
    }
    j["models"] = models;
    return j;
}

inline PredictorBank bank_from_json(const json& j) {
    PredictorBank b;
    b.o = j.at("o").get<int>();
    b.p_bar = j.at("p_bar").get<int>();
    b.d_bar = j.at("d_bar").get<double>();
    b.alpha = j.at("alpha").get<double>();
    b.gamma = j.at("gamma").get<double>();
    b.fingerprint = j.value("fingerprint", std::uint64_t(0));
    for (const auto& mj : j.at("models")) {
        PredictorModel m;
        m.p = mj.at("p").get<int>();
        m.o = mj.at("o").get<int>();
        m.theta = vector_from_json(mj.at("theta"));
        m.eps_hat = mj.at("eps_hat").get<double>();
        m.tau_lower = mj.at("tau_lower").get<double>();
        m.tau_hat = mj.at("tau_hat").get<double>();
        b.models.push_back(std::move(m));
    }
    return b;
}

inline json to_json(const TubeController& c) {
    json j;
    j["o"] = c.model.o;
    j["p_bar"] = c.model.p_bar;
    j["A"] = to_json(c.model.A);
    j["B"] = to_json(c.model.B);
    j["M"] = to_json(c.model.M);
    j["C"] = to_json(c.model.C);
    j["D"] = to_json(c.model.D);
    j["w_bar"] = to_json(c.model.w_bar);
    j["K"] = to_json(c.K);
    j["P"] = to_json(c.P);
    j["rho_cl"] = c.rho_cl;
    j["norm_cl"] = c.norm_cl;
    j["E_generators"] = to_json(c.E.generators);
    j["E_hrep_A"] = to_json(c.E_hrep.A);
    j["E_hrep_b"] = to_json(c.E_hrep.b);
    j["Z_tight_lower"] = to_json(c.Z_tight.lower);
    j["Z_tight_upper"] = to_json(c.Z_tight.upper);
    j["U_tight_lower"] = to_json(c.U_tight.lower);
    j["U_tight_upper"] = to_json(c.U_tight.upper);
    j["terminal_A"] = to_json(c.terminal.A);
    j["terminal_b"] = to_json(c.terminal.b);
    j["Np"] = c.cfg.Np;
    return j;
}

inline ArxPlant make_plant(const ExperimentConfig& c) {
    return discretize_zoh(c.num, c.den, c.Ts, c.v_bar, c.d_bar);
}

inline Dataset make_dataset(const ExperimentConfig& c, const ArxPlant& plant,
                            std::uint64_t seed_override = 0) {
    return collect_dataset(plant, seed_override ? seed_override : c.data_seed, c.N,
                           c.hold, c.levels, c.Ts);
}

/// Error-bound propagation for the iterated one-step model: the one-step
/// bound re-enters through each autoregressive coefficient at every further
/// step, giving e(1) = w1 and e(q+1) = w1 + sum_i |a_i| e(q+1-i).
inline VectorXd iterated_error_bounds(const PredictorBank& bank) {
    const int o = bank.o;
    const VectorXd w = bank.w_bar();
    VectorXd a = bank.model(1).theta.head(o).cwiseAbs();
    VectorXd e(bank.p_bar);
    for (int q = 0; q < bank.p_bar; ++q) {
        double acc = w(0);
        for (int i = 1; i <= o; ++i)
            if (q - i >= 0) acc += a(i - 1) * e(q - i);
        e(q) = q == 0 ? w(0) : acc;
    }
    return e;
}

struct BoundsRow {
    int p;
    double eps_hat, tau_lower, tau_hat;
    double w_multistep;  // tau_hat + d_bar
    double w_iterated;   // propagated one-step bound
};

inline std::vector<BoundsRow> compare_bounds(const PredictorBank& bank) {
    VectorXd it = iterated_error_bounds(bank);
    std::vector<BoundsRow> rows;
    for (int p = 1; p <= bank.p_bar; ++p) {
        const auto& m = bank.model(p);
        rows.push_back({p, m.eps_hat, m.tau_lower, m.tau_hat, m.tau_hat + bank.d_bar,
                        it(p - 1)});
    }
    return rows;
}

inline void write_bounds_csv(const std::vector<BoundsRow>& rows, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("write_bounds_csv: cannot open " + path);
    f.precision(17);
    f << "p,eps_hat,tau_lower,tau_hat,w_multistep,w_iterated\n";
    for (const auto& r : rows)
        f << r.p << ',' << r.eps_hat << ',' << r.tau_lower << ',' << r.tau_hat << ','
          << r.w_multistep << ',' << r.w_iterated << '\n';
}

inline void write_thm1_csv(const std::vector<Thm1Row>& rows, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("write_thm1_csv: cannot open " + path);
    f.precision(17);
    f << "p,tau_multistep,tau_iterated,gap\n";
    for (const auto& r : rows)
        f << r.p << ',' << r.tau_multistep << ',' << r.tau_iterated << ',' << r.gap
          << '\n';
}

/// Base-rate closed loop built from the one-step model with the same LQ
/// weights, for the contraction comparison against the period-rate design.
struct OneStepComparison {
    MatrixXd A1, B1, K1;
    double rho = 0.0;
    double norm2 = 0.0;
};

inline OneStepComparison one_step_closed_loop(const PredictorBank& bank, double qy,
                                              double ru) {
    const int o = bank.o;
    const int nx = 2 * o - 1;
    const auto& m = bank.model(1);
    OneStepComparison c;
    c.A1 = MatrixXd::Zero(nx, nx);
    c.B1 = MatrixXd::Zero(nx, 1);
    c.A1.block(0, 0, 1, o) = m.theta_AR().transpose();
    if (o > 1) c.A1.block(0, o, 1, o - 1) = m.theta_U().transpose();
    for (int r = 1; r < o; ++r) c.A1(r, r - 1) = 1.0;
    for (int r = o + 1; r < nx; ++r) c.A1(r, r - 1) = 1.0;
    c.B1(0, 0) = m.theta_Ubar()(0);
    if (o > 1) c.B1(o, 0) = 1.0;

    MatrixXd C1 = MatrixXd::Zero(1, nx);
    C1(0, 0) = 1.0;
    c.K1 = dlqr(c.A1, c.B1, C1.transpose() * qy * C1,
                ru * MatrixXd::Identity(1, 1));
    MatrixXd F1 = c.A1 + c.B1 * c.K1;
    c.rho = spectral_radius(F1);
    c.norm2 = matrix_norm2(F1);
    return c;
}

inline void write_table1_csv(const TubeController& ctrl, const OneStepComparison& os,
                             const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("write_table1_csv: cannot open " + path);
    f.precision(17);
    f << "controller,rho,norm2\n";
    f << "multirate," << ctrl.rho_cl << ',' << ctrl.norm_cl << '\n';
    f << "one_step," << os.rho << ',' << os.norm2 << '\n';
}

/// Open-loop excursion providing the controller's initial condition: a held
/// constant input from rest, with fresh bounded noise.
inline ClosedLoopInit make_excursion(const ArxPlant& plant, const ExperimentConfig& c) {
    const int T = std::max({c.excursion_hold, plant.n + 1, c.o + 1});
    VectorXd u = VectorXd::Constant(T, c.excursion_level);
    VectorXd v = sample_bounded_noise(c.sim_seed ^ 0xa0761d6478bd642full, T, plant.v_bar);
    VectorXd d = sample_bounded_noise(c.sim_seed ^ 0xe7037ed1a0b428dbull, T, plant.d_bar);
    auto sim = simulate(plant, u, v, d);
    return {u, sim.z, sim.y};
}

/// Continue a trajectory with zero input and fresh noise; the comparison
/// baseline for the regulation experiment.
inline VectorXd open_loop_continuation(const ArxPlant& plant, const ClosedLoopInit& init,
                                       int extra, std::uint64_t seed) {
    const int w0 = static_cast<int>(init.u.size());
    VectorXd u(w0 + extra);
    u.head(w0) = init.u;
    u.tail(extra).setZero();
    VectorXd v2 = sample_bounded_noise(seed ^ 0x9e3779b97f4a7c15ull, extra, plant.v_bar);
    // continue the recorded excursion; only the fresh segment needs noise
    VectorXd z(w0 + extra);
    z.head(w0) = init.z;
    for (int t = w0; t < w0 + extra; ++t) {
        double acc = 0.0;
        for (int i = 1; i <= plant.n; ++i) acc += plant.theta(i - 1) * z(t - i);
        for (int i = 2; i <= plant.n; ++i) acc += plant.theta(plant.n + i - 2) * u(t - i);
        acc += plant.theta(2 * plant.n - 1) * u(t - 1);
        z(t) = acc + v2(t - w0);
    }
    return z;
}

/// Steps after `start` until |z| stays below the threshold for good; -1 when
/// it never settles within the record.
inline int settling_time(const VectorXd& z, int start, double threshold) {
    int settle = -1;
    for (int k = start; k < z.size(); ++k) {
        if (std::abs(z(k)) < threshold) {
            if (settle < 0) settle = k;
        } else {
            settle = -1;
        }
    }
    return settle < 0 ? -1 : settle - start;
}

struct ContainmentCheck {
    int total = 0;
    int violations = 0;
    double worst_margin = -std::numeric_limits<double>::infinity();  // |err| - tau_hat
};

/// Validate the certified error bounds on a fresh dataset: every true p-step
/// output must lie within tau_hat of its prediction.
inline ContainmentCheck validate_containment(const PredictorBank& bank,
                                             const ArxPlant& plant,
                                             const ExperimentConfig& cfg,
                                             std::uint64_t seed) {
    Dataset ds = make_dataset(cfg, plant, seed);
    ContainmentCheck out;
    for (int p = 1; p <= bank.p_bar; ++p) {
        auto table = build_regressors(ds, bank.o, p, bank.p_bar);
        const auto& m = bank.model(p);
        VectorXd pred = table.rows * m.theta;
        for (int k = 0; k < table.N; ++k) {
            double margin = std::abs(table.true_targets(k) - pred(k)) - m.tau_hat;
            out.worst_margin = std::max(out.worst_margin, margin);
            ++out.total;
            if (margin > 0) ++out.violations;
        }
    }
    return out;
}

/// Random stable ARX plant: poles drawn inside a disk of radius 0.85 (real or
/// conjugate pairs), numerator coefficients uniform with a floor on the
/// leading one so the input is visible.
inline ArxPlant random_stable_plant(std::uint64_t seed, int n, double v_bar,
                                    double d_bar) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Eigen::VectorXcd roots(n);
    int i = 0;
    while (i < n) {
        double r = 0.2 + 0.65 * unif(rng);
        if (i + 1 < n && unif(rng) < 0.5) {
            double ang = 0.1 + 2.9 * unif(rng);
            roots(i) = std::polar(r, ang);
            roots(i + 1) = std::conj(roots(i));
            i += 2;
        } else {
            roots(i) = std::complex<double>(unif(rng) < 0.5 ? r : -r, 0.0);
            ++i;
        }
    }
    VectorXd ar = detail::poly_from_roots(roots);  // 1, c1..cn
    VectorXd theta(2 * n);
    theta.head(n) = -ar.tail(n);
    for (int k = 0; k < n - 1; ++k) theta(n + k) = -0.5 + unif(rng);
    double b1 = 0.2 + 0.8 * unif(rng);
    theta(2 * n - 1) = unif(rng) < 0.5 ? -b1 : b1;
    return ArxPlant(n, theta, v_bar, d_bar);
}

struct Audits {
    bool thm1_ok = false;
    bool bounds_shape_ok = false;
    bool table1_ok = false;
    double rpi_resid = 0.0;
    double lyap_resid = 0.0;
    bool rpi_ok = false;
    bool lyap_ok = false;
    bool closed_loop_ok = false;
    bool containment_ok = false;
    bool settling_ok = false;
    double settle_ratio = 0.0;
    std::string note;

    bool all_ok() const {
        return thm1_ok && bounds_shape_ok && table1_ok && rpi_ok && lyap_ok &&
               closed_loop_ok && containment_ok && settling_ok;
    }
};

inline json to_json(const Audits& a) {
    json j;
    j["thm1_ok"] = a.thm1_ok;
    j["bounds_shape_ok"] = a.bounds_shape_ok;
    j["table1_ok"] = a.table1_ok;
    j["rpi_residual"] = a.rpi_resid;
    j["lyapunov_residual"] = a.lyap_resid;
    j["rpi_ok"] = a.rpi_ok;
    j["lyapunov_ok"] = a.lyap_ok;
    j["closed_loop_ok"] = a.closed_loop_ok;
    j["containment_ok"] = a.containment_ok;
    j["settling_ok"] = a.settling_ok;
    j["settle_ratio"] = a.settle_ratio;
    j["all_ok"] = a.all_ok();
    if (!a.note.empty()) j["note"] = a.note;
    return j;
}

struct ExperimentResult {
    ExperimentConfig config;
    ArxPlant plant;
    Dataset dataset;
    IdentResult ident;
    std::vector<Thm1Row> thm1;
    std::vector<BoundsRow> bounds;
    TubeController controller;
    OneStepComparison one_step;
    ClosedLoopTrace trace;
    VectorXd open_loop_z;
    int settle_closed = -1;
    int settle_open = -1;
    ContainmentCheck containment;
    Audits audits;
};

inline bool bounds_shape_ok(const std::vector<BoundsRow>& rows) {
    // the iterated bound must dominate from p=3 on, with a widening gap on
    // the upper half of the horizon
    for (const auto& r : rows)
        if (r.p >= 3 && r.w_iterated < r.w_multistep) return false;
    double prev_gap = -std::numeric_limits<double>::infinity();
    for (const auto& r : rows) {
        if (r.p < 5) continue;
        double gap = r.w_iterated - r.w_multistep;
        if (gap <= prev_gap) return false;
        prev_gap = gap;
    }
    return true;
}

/// End-to-end pipeline: data, identification, optimality report, synthesis,
/// closed loop, and every audit.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    ExperimentResult r;
    r.config = cfg;
    r.plant = make_plant(cfg);
    r.dataset = make_dataset(cfg, r.plant);
    r.ident = identify_bank(r.dataset, cfg.o, cfg.p_bar, cfg.alpha, cfg.gamma, cfg.d_bar);
    r.thm1 = verify_thm1(r.ident);
    r.audits.thm1_ok = true;  // verify_thm1 throws on violation
    r.bounds = compare_bounds(r.ident.bank);
    r.audits.bounds_shape_ok = bounds_shape_ok(r.bounds);

    r.controller = synth(r.ident.bank, cfg.mpc);
    r.one_step = one_step_closed_loop(r.ident.bank, cfg.mpc.qy, cfg.mpc.ru);
    r.audits.table1_ok = r.controller.rho_cl < 1.0 && r.controller.rho_cl < r.one_step.rho;

    {
        const auto& c = r.controller;
        Box W = Box::symmetric(c.model.w_bar);
        auto dirs = certification_directions(c.model.nx, 100);
        r.audits.rpi_resid = rpi_residual(c.E, c.F, c.model.M, W, dirs);
        r.audits.rpi_ok = r.audits.rpi_resid <= 1e-8;
        MatrixXd S = c.Gcl.transpose() * c.Q * c.Gcl + c.K.transpose() * c.R * c.K;
        r.audits.lyap_resid = dlyap_residual(c.F, S, c.P);
        r.audits.lyap_ok = r.audits.lyap_resid <= 1e-8 * (1.0 + S.norm());
    }

    ClosedLoopInit init = make_excursion(r.plant, cfg);
    r.trace = run_closed_loop(r.controller, r.plant, init, cfg.periods, cfg.sim_seed);
    r.audits.closed_loop_ok = r.trace.all_ok();
    if (!r.trace.all_ok()) r.audits.note = r.trace.failure_note;

    const int extra = cfg.periods * cfg.p_bar;
    r.open_loop_z = open_loop_continuation(r.plant, init, extra, cfg.sim_seed);
    const int w0 = static_cast<int>(init.u.size());
    r.settle_closed = settling_time(r.trace.z, w0, 0.5);
    r.settle_open = settling_time(r.open_loop_z, w0, 0.5);
    r.audits.settling_ok = r.settle_closed >= 0 && r.settle_open > 0 &&
                           2 * r.settle_closed < r.settle_open;
    r.audits.settle_ratio = r.settle_open > 0
                                ? static_cast<double>(r.settle_closed) / r.settle_open
                                : -1.0;

    r.containment = validate_containment(r.ident.bank, r.plant, cfg,
                                         cfg.data_seed ^ 0x2545f4914f6cdd1dull);
    r.audits.containment_ok = r.containment.violations == 0;
    return r;
}

inline void write_trace_csvs(const ClosedLoopTrace& tr, const std::string& steps_path,
                             const std::string& periods_path) {
    {
        std::ofstream f(steps_path);
        if (!f) throw std::runtime_error("write_trace_csvs: cannot open " + steps_path);
        f.precision(17);
        f << "k,u,z,y\n";
        for (int k = 0; k < tr.u.size(); ++k)
            f << k << ',' << tr.u(k) << ',' << tr.z(k) << ',' << tr.y(k) << '\n';
    }
    {
        std::ofstream f(periods_path);
        if (!f) throw std::runtime_error("write_trace_csvs: cannot open " + periods_path);
        f.precision(17);
        f << "j,Jstar,feasible,cost_slack,tube_ok\n";
        for (size_t j = 0; j < tr.Jstar.size(); ++j)
            f << j << ',' << tr.Jstar[j] << ',' << int(tr.feasible[j]) << ','
              << (j > 0 ? tr.cost_slack[j - 1] : 0.0) << ','
              << (tr.tube_residual[j] <= 1e-8 ? 1 : 0) << '\n';
    }
}

inline void write_tightening_csv(const TubeController& c, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("write_tightening_csv: cannot open " + path);
    f.precision(17);
    f << "p,w_bar,z_hat_upper,z_tight_upper,u_tight_upper\n";
    for (int p = 1; p <= c.model.p_bar; ++p)
        f << p << ',' << c.model.w_bar(p - 1) << ',' << c.Z_hat.upper(p - 1) << ','
          << c.Z_tight.upper(p - 1) << ',' << c.U_tight.upper(p - 1) << '\n';
}

inline void write_artifacts(const ExperimentResult& r, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    auto at = [&](const std::string& name) { return (fs::path(dir) / name).string(); };

    write_dataset_csv(r.dataset, at("dataset.csv"));
    write_bounds_csv(r.bounds, at("bounds.csv"));
    write_thm1_csv(r.thm1, at("thm1.csv"));
    write_table1_csv(r.controller, r.one_step, at("table1.csv"));
    write_trace_csvs(r.trace, at("trace_steps.csv"), at("trace_periods.csv"));
    write_tightening_csv(r.controller, at("tightening.csv"));

    std::ofstream(at("config.json")) << to_json(r.config).dump(2) << '\n';
    std::ofstream(at("bank.json")) << to_json(r.ident.bank).dump(2) << '\n';
    std::ofstream(at("controller.json")) << to_json(r.controller).dump(2) << '\n';
    std::ofstream(at("audits.json")) << to_json(r.audits).dump(2) << '\n';

    std::ofstream ol(at("open_loop.csv"));
    ol.precision(17);
    ol << "k,z\n";
    for (int k = 0; k < r.open_loop_z.size(); ++k) ol << k << ',' << r.open_loop_z(k) << '\n';
}

}  // namespace msmpc
