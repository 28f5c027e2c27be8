#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <cstring>
#include <future>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "msmpc/lp.hpp"
#include "msmpc/plant.hpp"

namespace msmpc {

/// Data matrix for horizon step p: row k is
///   [y(k)..y(k-o+1), u(k-1)..u(k-o+1), u(k)..u(k+p-1)]
/// with target y(k+p). The usable index range is shared across all p up to
/// p_bar so every step sees the same N.
struct RegressorTable {
    int p = 0;
    int o = 0;
    int N = 0;
    MatrixXd rows;        // N x (2o-1+p)
    VectorXd targets;     // y(k+p)
    VectorXd true_targets;  // z(k+p), validation only
    int width() const { return 2 * o - 1 + p; }
};

inline RegressorTable build_regressors(const Dataset& ds, int o, int p, int p_bar) {
    if (o < 1) throw std::invalid_argument("build_regressors: order must be >= 1");
    if (p < 1 || p > p_bar) throw std::invalid_argument("build_regressors: bad p");
    const int T = static_cast<int>(ds.y.size());
    const int k0 = std::max(o - 1, 1);
    const int k1 = T - 1 - p_bar;
    if (k1 < k0) throw std::invalid_argument("build_regressors: dataset too short");

    RegressorTable t;
    t.p = p;
    t.o = o;
    t.N = k1 - k0 + 1;
    t.rows.resize(t.N, t.width());
    t.targets.resize(t.N);
    t.true_targets.resize(t.N);
    for (int k = k0; k <= k1; ++k) {
        const int r = k - k0;
        for (int i = 0; i < o; ++i) t.rows(r, i) = ds.y(k - i);
        for (int i = 1; i < o; ++i) t.rows(r, o + i - 1) = ds.u(k - i);
        for (int i = 0; i < p; ++i) t.rows(r, 2 * o - 1 + i) = ds.u(k + i);
        t.targets(r) = ds.y(k + p);
        t.true_targets(r) = ds.z(k + p);
    }
    return t;
}

struct EpsEstimate {
    double lambda_lower = 0.0;  // LP optimum
    double eps_hat = 0.0;       // alpha * lambda, clamped at zero
};

/// Tightest residual level consistent with the data:
/// min lambda s.t. |target_k - theta'phi_k| <= lambda + d_bar, inflated by
/// alpha for finite data.
inline EpsEstimate estimate_eps(const RegressorTable& t, double d_bar, double alpha) {
    if (alpha < 1.0) throw std::invalid_argument("estimate_eps: alpha must be >= 1");
    const int w = t.width();
    LpProblem lp;
    lp.c = VectorXd::Zero(w + 1);
    lp.c(w) = 1.0;
    lp.A.resize(2 * t.N, w + 1);
    lp.b.resize(2 * t.N);
    lp.A.block(0, 0, t.N, w) = t.rows;
    lp.A.block(t.N, 0, t.N, w) = -t.rows;
    lp.A.col(w).setConstant(-1.0);
    lp.b.head(t.N) = t.targets.array() + d_bar;
    lp.b.tail(t.N) = -t.targets.array() + d_bar;
    auto r = solve_lp(lp);
    if (r.status != LpStatus::Optimal)
        throw std::runtime_error("estimate_eps: LP failed with status " +
                                 std::string(to_string(r.status)));
    EpsEstimate e;
    e.lambda_lower = r.value;
    e.eps_hat = std::max(0.0, alpha * r.value);
    return e;
}

/// H-polytope of data-consistent parameter vectors:
/// |target_k - theta'phi_k| <= eps_hat + d_bar for every row.
struct FeasibleParamSet {
    int p = 0;
    double eps_hat = 0.0;
    double d_bar = 0.0;
    MatrixXd A;
    VectorXd b;
    VectorXd box_lower;  // canonical support bounds, from the compactness check
    VectorXd box_upper;

    double support(const VectorXd& dir) const {
        auto r = polytope_support(A, b, dir);
        if (!r.bounded)
            throw std::runtime_error(
                "FeasibleParamSet: unbounded support direction; more informative data needed");
        return r.value;
    }

    /// max_i (A theta - b)_i; membership when <= tolerance
    double membership_residual(const VectorXd& theta) const {
        return (A * theta - b).maxCoeff();
    }
};

inline FeasibleParamSet build_fps(const RegressorTable& t, double eps_hat, double d_bar) {
    const int w = t.width();
    const double rhs_margin = eps_hat + d_bar;

    // assemble +/- rows, then deduplicate with a lexicographic sort
    MatrixXd A(2 * t.N, w);
    VectorXd b(2 * t.N);
    A.topRows(t.N) = t.rows;
    b.head(t.N) = t.targets.array() + rhs_margin;
    A.bottomRows(t.N) = -t.rows;
    b.tail(t.N) = -t.targets.array() + rhs_margin;

    std::vector<int> idx(2 * t.N);
    for (int i = 0; i < 2 * t.N; ++i) idx[i] = i;
    auto less_row = [&](int i, int j) {
        for (int c = 0; c < w; ++c) {
            if (A(i, c) < A(j, c) - 1e-12) return true;
            if (A(i, c) > A(j, c) + 1e-12) return false;
        }
        return b(i) < b(j) - 1e-12;
    };
    auto same_row = [&](int i, int j) { return !less_row(i, j) && !less_row(j, i); };
    std::stable_sort(idx.begin(), idx.end(), less_row);
    std::vector<int> kept;
    for (int i : idx)
        if (kept.empty() || !same_row(kept.back(), i)) kept.push_back(i);

    FeasibleParamSet f;
    f.p = t.p;
    f.eps_hat = eps_hat;
    f.d_bar = d_bar;
    f.A.resize(static_cast<int>(kept.size()), w);
    f.b.resize(static_cast<int>(kept.size()));
    for (size_t i = 0; i < kept.size(); ++i) {
        f.A.row(static_cast<int>(i)) = A.row(kept[i]);
        f.b(static_cast<int>(i)) = b(kept[i]);
    }

    // compactness check in all canonical directions
    f.box_lower.resize(w);
    f.box_upper.resize(w);
    for (int i = 0; i < w; ++i) {
        VectorXd e = VectorXd::Zero(w);
        e(i) = 1.0;
        auto up = polytope_support(f.A, f.b, e);
        e(i) = -1.0;
        auto dn = polytope_support(f.A, f.b, e);
        if (!up.bounded || !dn.bounded)
            throw std::runtime_error(
                "build_fps: parameter set unbounded in coordinate " + std::to_string(i) +
                " of step p=" + std::to_string(t.p) +
                "; more informative data should be collected");
        f.box_upper(i) = up.value;
        f.box_lower(i) = -dn.value;
    }
    return f;
}

/// Per-row support interval of theta'phi_k over the feasible set; shared by
/// the worst-case-error evaluation and the min-max fit.
struct SupportCache {
    VectorXd lo;
    VectorXd hi;
};

inline SupportCache compute_support_cache(const FeasibleParamSet& f,
                                          const RegressorTable& t,
                                          int num_threads = 0) {
    SupportCache c;
    c.lo.resize(t.N);
    c.hi.resize(t.N);
    if (num_threads <= 0)
        num_threads = std::max(1u, std::thread::hardware_concurrency());
    num_threads = std::min<int>(num_threads, std::max(1, t.N / 16));

    auto work = [&](int begin, int end) {
        for (int k = begin; k < end; ++k) {
            VectorXd phi = t.rows.row(k).transpose();
            c.hi(k) = polytope_support(f.A, f.b, phi).value;
            c.lo(k) = -polytope_support(f.A, f.b, -phi).value;
        }
    };
    if (num_threads <= 1) {
        work(0, t.N);
    } else {
        std::vector<std::future<void>> futs;
        int chunk = (t.N + num_threads - 1) / num_threads;
        for (int s = 0; s < t.N; s += chunk)
            futs.push_back(std::async(std::launch::async, work, s,
                                      std::min(t.N, s + chunk)));
        for (auto& fu : futs) fu.get();
    }
    return c;
}

/// Worst-case prediction error of a candidate parameter vector over the data:
/// max_k max_{theta in FPS} |(theta - theta_hat)'phi_k| + eps_hat, with the
/// inner maximum attained at the cached support values.
inline double worst_case_error(const FeasibleParamSet& f, const VectorXd& theta_hat,
                               const RegressorTable& t, const SupportCache& c) {
    if (theta_hat.size() != t.width())
        throw std::invalid_argument("worst_case_error: dimension mismatch");
    VectorXd proj = t.rows * theta_hat;
    double worst = 0.0;
    for (int k = 0; k < t.N; ++k)
        worst = std::max(worst, std::max(c.hi(k) - proj(k), proj(k) - c.lo(k)));
    return worst + f.eps_hat;
}

/// One p-step predictor with its error bounds.
struct PredictorModel {
    int p = 0;
    int o = 0;
    VectorXd theta;       // 2o-1+p entries: [theta_AR, theta_U, theta_Ubar]
    double eps_hat = 0.0;
    double tau_lower = 0.0;  // worst-case error over the data
    double tau_hat = 0.0;    // gamma * tau_lower

    Eigen::VectorBlock<const VectorXd> theta_AR() const { return theta.head(o); }
    Eigen::VectorBlock<const VectorXd> theta_U() const { return theta.segment(o, o - 1); }
    Eigen::VectorBlock<const VectorXd> theta_Ubar() const { return theta.tail(p); }
};

inline double predict(const PredictorModel& m, const VectorXd& phi) {
    if (phi.size() != m.theta.size())
        throw std::invalid_argument("predict: regressor dimension mismatch");
    return m.theta.dot(phi);
}

/// Min-max fit: the nominal parameter vector minimizing the worst-case error
/// over the feasible set. Solved as one LP over (theta, t) using the cached
/// per-row support values; the inner maximum is attained there, so this is
/// exact.
inline PredictorModel fit_nominal(const FeasibleParamSet& f, const RegressorTable& t,
                                  double gamma, const SupportCache& c) {
    if (gamma < 1.0) throw std::invalid_argument("fit_nominal: gamma must be >= 1");
    const int w = t.width();
    const int mf = static_cast<int>(f.A.rows());
    LpProblem lp;
    lp.c = VectorXd::Zero(w + 1);
    lp.c(w) = 1.0;
    lp.A.resize(mf + 2 * t.N, w + 1);
    lp.b.resize(mf + 2 * t.N);
    lp.A.setZero();
    lp.A.block(0, 0, mf, w) = f.A;
    lp.b.head(mf) = f.b;
    lp.A.block(mf, 0, t.N, w) = -t.rows;
    lp.b.segment(mf, t.N) = -c.hi;
    lp.A.block(mf + t.N, 0, t.N, w) = t.rows;
    lp.b.tail(t.N) = c.lo;
    lp.A.col(w).segment(mf, 2 * t.N).setConstant(-1.0);

    auto r = solve_lp(lp);
    if (r.status != LpStatus::Optimal)
        throw std::runtime_error("fit_nominal: LP failed with status " +
                                 std::string(to_string(r.status)));
    PredictorModel m;
    m.p = t.p;
    m.o = t.o;
    m.theta = r.x.head(w);
    m.eps_hat = f.eps_hat;
    m.tau_lower = r.value + f.eps_hat;
    m.tau_hat = gamma * m.tau_lower;
    return m;
}

/// Pad an order-n one-step ARX parameter vector to model order o >= n in the
/// regressor layout [y(o), u-history(o-1), u(current)].
inline VectorXd pad_one_step_model(const VectorXd& theta_2n, int n, int o) {
    if (theta_2n.size() != 2 * n || o < n)
        throw std::invalid_argument("pad_one_step_model: bad dimensions");
    VectorXd out = VectorXd::Zero(2 * o);
    out.head(n) = theta_2n.head(n);
    if (n > 1) out.segment(o, n - 1) = theta_2n.segment(n, n - 1);
    out(2 * o - 1) = theta_2n(2 * n - 1);
    return out;
}

/// Coefficients of the p-step predictor obtained by iterating a one-step
/// model with itself: each intermediate output is replaced by its own
/// prediction. Returns a vector in the p-step regressor layout.
inline VectorXd iterate_one_step(const VectorXd& theta1, int p, int o) {
    if (theta1.size() != 2 * o)
        throw std::invalid_argument("iterate_one_step: theta1 must have 2o entries");
    if (p < 1) throw std::invalid_argument("iterate_one_step: p must be >= 1");
    const int wp = 2 * o - 1 + p;

    // map from the p-step regressor to the one-step regressor at offset 0
    MatrixXd T = MatrixXd::Zero(2 * o, wp);
    T.topLeftCorner(2 * o - 1, 2 * o - 1).setIdentity();
    T(2 * o - 1, 2 * o - 1) = 1.0;  // current input u(k)

    // one-step shift of the regressor under the model
    MatrixXd S = MatrixXd::Zero(2 * o, 2 * o);
    S.row(0) = theta1.transpose();
    for (int r = 1; r < o; ++r) S(r, r - 1) = 1.0;
    if (o >= 2) S(o, 2 * o - 1) = 1.0;
    for (int r = o + 1; r <= 2 * o - 2; ++r) S(r, r - 1) = 1.0;

    for (int q = 1; q <= p - 1; ++q) {
        T = S * T;
        T(2 * o - 1, 2 * o - 1 + q) = 1.0;  // fresh input u(k+q)
    }
    return T.transpose() * theta1;
}

/// Full bank of multi-step predictors for p = 1..p_bar.
struct PredictorBank {
    int o = 0;
    int p_bar = 0;
    double d_bar = 0.0;
    double alpha = 1.0;
    double gamma = 1.0;
    std::uint64_t fingerprint = 0;
    std::vector<PredictorModel> models;  // index p-1

    const PredictorModel& model(int p) const { return models.at(p - 1); }
    VectorXd w_bar() const {
        VectorXd w(p_bar);
        for (int p = 1; p <= p_bar; ++p) w(p - 1) = model(p).tau_hat + d_bar;
        return w;
    }
};

inline std::uint64_t dataset_fingerprint(const Dataset& ds) {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&](double v) {
        std::uint64_t bits;
        static_assert(sizeof(bits) == sizeof(v));
        std::memcpy(&bits, &v, sizeof(bits));
        h = (h ^ bits) * 1099511628211ull;
    };
    for (int i = 0; i < ds.u.size(); ++i) mix(ds.u(i));
    for (int i = 0; i < ds.y.size(); ++i) mix(ds.y(i));
    return h;
}

/// Identification artifacts kept around for verification and control design.
struct IdentResult {
    PredictorBank bank;
    std::vector<RegressorTable> tables;  // index p-1
    std::vector<FeasibleParamSet> fps;
    std::vector<SupportCache> caches;
};

inline IdentResult identify_bank(const Dataset& ds, int o, int p_bar, double alpha,
                                 double gamma, double d_bar) {
    IdentResult out;
    out.bank.o = o;
    out.bank.p_bar = p_bar;
    out.bank.d_bar = d_bar;
    out.bank.alpha = alpha;
    out.bank.gamma = gamma;
    out.bank.fingerprint = dataset_fingerprint(ds);
    out.tables.resize(p_bar);
    out.fps.resize(p_bar);
    out.caches.resize(p_bar);
    out.bank.models.resize(p_bar);

    // fits across p are independent
    std::vector<std::future<void>> futs;
    for (int p = 1; p <= p_bar; ++p) {
        futs.push_back(std::async(std::launch::async, [&, p] {
            auto table = build_regressors(ds, o, p, p_bar);
            auto eps = estimate_eps(table, d_bar, alpha);
            auto fps = build_fps(table, eps.eps_hat, d_bar);
            auto cache = compute_support_cache(fps, table, 1);
            auto model = fit_nominal(fps, table, gamma, cache);
            out.tables[p - 1] = std::move(table);
            out.fps[p - 1] = std::move(fps);
            out.caches[p - 1] = std::move(cache);
            out.bank.models[p - 1] = std::move(model);
        }));
    }
    for (auto& f : futs) f.get();
    return out;
}

struct Thm1Row {
    int p = 0;
    double tau_multistep = 0.0;  // worst-case error of the optimal fit
    double tau_iterated = 0.0;   // worst-case error of the iterated one-step model
    double gap = 0.0;
};

/// Compare the optimal multi-step fit against the model obtained by iterating
/// a one-step model, on the same feasible sets and data. The optimal fit must
/// never be worse; a violation is a hard failure.
inline std::vector<Thm1Row> verify_thm1(const IdentResult& id, VectorXd theta1 = VectorXd(),
                                        double tol = 1e-9) {
    const int o = id.bank.o;
    if (theta1.size() == 0) theta1 = id.bank.model(1).theta;
    if (theta1.size() != 2 * o)
        throw std::invalid_argument("verify_thm1: theta1 must have 2o entries");
    std::vector<Thm1Row> rows;
    for (int p = 1; p <= id.bank.p_bar; ++p) {
        Thm1Row r;
        r.p = p;
        r.tau_multistep = id.bank.model(p).tau_lower;
        VectorXd th_it = iterate_one_step(theta1, p, o);
        r.tau_iterated =
            worst_case_error(id.fps[p - 1], th_it, id.tables[p - 1], id.caches[p - 1]);
        r.gap = r.tau_iterated - r.tau_multistep;
        if (r.gap < -tol)
            throw std::runtime_error(
                "verify_thm1: optimality violated at p=" + std::to_string(p) +
                " with gap " + std::to_string(r.gap));
        rows.push_back(r);
    }
    return rows;
}

}  // namespace msmpc
