#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <limits>
#include <stdexcept>
#include <vector>

namespace msmpc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class LpStatus { Optimal, Infeasible, Unbounded, Failure };

inline const char* to_string(LpStatus s) {
    switch (s) {
        case LpStatus::Optimal: return "optimal";
        case LpStatus::Infeasible: return "infeasible";
        case LpStatus::Unbounded: return "unbounded";
        default: return "failure";
    }
}

/// Inequality-form problem: min c'x  s.t.  A x <= b, x free.
struct LpProblem {
    VectorXd c;
    MatrixXd A;
    VectorXd b;
};

struct LpResult {
    LpStatus status = LpStatus::Failure;
    VectorXd x;
    double value = 0.0;
    VectorXd dual;  // multipliers of A x <= b, nonnegative at optimum
};

namespace detail {

struct StandardResult {
    LpStatus status = LpStatus::Failure;
    VectorXd x;                   // n entries
    double value = 0.0;
    VectorXd y;                   // row multipliers, B' y = c_B
    std::vector<int> basis;       // basic columns, entries >= n are artificials
};

// Revised simplex for  min c'x  s.t.  A x = b, x >= 0.
//
// Two phases with artificial columns; artificials that remain basic at zero
// (dependent rows) are never allowed to grow: whenever a pivot would move
// them they leave at zero step. Dantzig pricing with a permanent switch to
// Bland's rule once the objective stalls; ties broken on lowest index so runs
// are reproducible.
class StandardSimplex {
public:
    StandardSimplex(VectorXd c, MatrixXd A, VectorXd b, double tol = 1e-9)
        : c_(std::move(c)), tol_(tol) {
        const int m = static_cast<int>(A.rows());
        const int n = static_cast<int>(A.cols());
        n_ = n;
        for (int i = 0; i < m; ++i) {
            if (b(i) < 0) {
                b(i) = -b(i);
                A.row(i) = -A.row(i);
            }
        }
        A_ = MatrixXd(m, n + m);
        A_.leftCols(n) = A;
        A_.rightCols(m) = MatrixXd::Identity(m, m);
        b_ = std::move(b);
    }

    StandardResult solve() {
        const int m = static_cast<int>(A_.rows());
        basis_.resize(m);
        for (int i = 0; i < m; ++i) basis_[i] = n_ + i;

        VectorXd c1 = VectorXd::Zero(n_ + m);
        c1.tail(m).setOnes();
        LpStatus st = iterate(c1);
        StandardResult r;
        if (st == LpStatus::Failure) {
            r.status = LpStatus::Failure;
            return r;
        }
        VectorXd xb = basic_solution();
        double p1 = 0;
        for (int i = 0; i < m; ++i) p1 += c1(basis_[i]) * xb(i);
        if (p1 > 1e-7 * (1.0 + b_.lpNorm<Eigen::Infinity>())) {
            r.status = LpStatus::Infeasible;
            return r;
        }

        VectorXd c2 = VectorXd::Zero(n_ + m);
        c2.head(n_) = c_;
        st = iterate(c2);
        r.status = st;
        if (st != LpStatus::Optimal) return r;

        xb = basic_solution();
        r.x = VectorXd::Zero(n_);
        for (int i = 0; i < m; ++i)
            if (basis_[i] < n_) r.x(basis_[i]) = xb(i);
        r.value = c_.dot(r.x);
        MatrixXd B(m, m);
        VectorXd cb(m);
        for (int i = 0; i < m; ++i) {
            B.col(i) = A_.col(basis_[i]);
            cb(i) = c2(basis_[i]);
        }
        r.y = B.transpose().partialPivLu().solve(cb);
        r.basis = basis_;
        return r;
    }

private:
    VectorXd basic_solution() const {
        const int m = static_cast<int>(A_.rows());
        MatrixXd B(m, m);
        for (int i = 0; i < m; ++i) B.col(i) = A_.col(basis_[i]);
        return B.partialPivLu().solve(b_);
    }

    LpStatus iterate(const VectorXd& c) {
        const int m = static_cast<int>(A_.rows());
        const int ncols = static_cast<int>(A_.cols());
        bool bland = false;
        double last_obj = std::numeric_limits<double>::infinity();
        int stall = 0;
        const int cap = 200 * (m + n_) + 20000;
        std::vector<char> in_basis(ncols, 0);
        for (int bi : basis_) in_basis[bi] = 1;

        for (int it = 0; it < cap; ++it) {
            MatrixXd B(m, m);
            VectorXd cb(m);
            for (int i = 0; i < m; ++i) {
                B.col(i) = A_.col(basis_[i]);
                cb(i) = c(basis_[i]);
            }
            Eigen::PartialPivLU<MatrixXd> lu(B);
            VectorXd xb = lu.solve(b_);
            VectorXd y = B.transpose().partialPivLu().solve(cb);

            double obj = cb.dot(xb);
            if (obj < last_obj - tol_ * (1.0 + std::abs(last_obj))) {
                last_obj = obj;
                stall = 0;
            } else if (++stall > m + n_ + 50) {
                bland = true;
            }

            // pricing over the real columns only; artificials never re-enter
            int q = -1;
            double best = -tol_ * (1.0 + y.lpNorm<Eigen::Infinity>());
            for (int j = 0; j < n_; ++j) {
                if (in_basis[j]) continue;
                double rj = c(j) - A_.col(j).dot(y);
                if (rj < best) {
                    q = j;
                    if (bland) break;
                    best = rj;
                }
            }
            if (q < 0) return LpStatus::Optimal;

            VectorXd d = lu.solve(A_.col(q));

            // a basic artificial touched by this direction leaves at zero step
            int leave = -1;
            for (int i = 0; i < m; ++i) {
                if (basis_[i] >= n_ && std::abs(d(i)) > tol_) {
                    if (leave < 0 || basis_[i] < basis_[leave]) leave = i;
                }
            }
            double step = 0.0;
            if (leave < 0) {
                step = std::numeric_limits<double>::infinity();
                for (int i = 0; i < m; ++i) {
                    if (d(i) > tol_) {
                        double ratio = std::max(xb(i), 0.0) / d(i);
                        if (ratio < step - 1e-12 ||
                            (ratio < step + 1e-12 &&
                             (leave < 0 || basis_[i] < basis_[leave]))) {
                            step = ratio;
                            leave = i;
                        }
                    }
                }
                if (leave < 0) return LpStatus::Unbounded;
            }
            in_basis[basis_[leave]] = 0;
            in_basis[q] = 1;
            basis_[leave] = q;
        }
        return LpStatus::Failure;
    }

    VectorXd c_;
    MatrixXd A_;
    VectorXd b_;
    double tol_;
    int n_ = 0;
    std::vector<int> basis_;
};

inline StandardResult solve_standard(const VectorXd& c, const MatrixXd& A,
                                     const VectorXd& b, double tol = 1e-9) {
    return StandardSimplex(c, A, b, tol).solve();
}

}  // namespace detail

/// Certified solve of min c'x s.t. Ax <= b with free x, via the standard-form
/// conversion x = x+ - x- plus slacks. Basis size equals the row count, so
/// this is the path of choice for small systems and the fallback otherwise.
inline LpResult solve_lp_general(const LpProblem& p, double tol = 1e-9) {
    const int m = static_cast<int>(p.A.rows());
    const int n = static_cast<int>(p.A.cols());
    MatrixXd As(m, 2 * n + m);
    As.leftCols(n) = p.A;
    As.middleCols(n, n) = -p.A;
    As.rightCols(m) = MatrixXd::Identity(m, m);
    VectorXd cs = VectorXd::Zero(2 * n + m);
    cs.head(n) = p.c;
    cs.segment(n, n) = -p.c;
    auto sr = detail::solve_standard(cs, As, p.b, tol);
    LpResult r;
    r.status = sr.status;
    if (sr.status != LpStatus::Optimal) return r;
    r.x = sr.x.head(n) - sr.x.segment(n, n);
    r.value = sr.value;
    // multipliers of Ax <= b: slack column j has reduced cost -y_j >= 0
    r.dual = (-sr.y).cwiseMax(0.0);
    return r;
}

/// Solve min c'x s.t. Ax <= b through its dual
///   min b'y  s.t.  A'y = -c, y >= 0,
/// whose basis has only as many rows as x has entries. This is the hot path
/// for support-function calls over feasible-parameter polytopes with
/// thousands of half-spaces. Falls back to the general route when the primal
/// solution cannot be recovered cleanly or the dual is infeasible.
inline LpResult solve_lp(const LpProblem& p, double tol = 1e-9) {
    const int m = static_cast<int>(p.A.rows());
    const int n = static_cast<int>(p.A.cols());
    if (m <= 64) return solve_lp_general(p, tol);

    auto sr = detail::solve_standard(p.b, p.A.transpose(), -p.c, tol);
    if (sr.status == LpStatus::Unbounded) {
        LpResult r;
        r.status = LpStatus::Infeasible;
        return r;
    }
    if (sr.status != LpStatus::Optimal) {
        // dual infeasible: the primal is unbounded or infeasible; classify
        // with the certified general route
        return solve_lp_general(p, tol);
    }

    LpResult r;
    r.status = LpStatus::Optimal;
    r.value = -sr.value;
    r.dual = sr.x;  // dual variables are the multipliers of Ax <= b

    // primal recovery: rows active at the optimum are the basic dual
    // variables (complementary slackness); solve A_B x = b_B
    std::vector<int> act;
    for (int bi : sr.basis)
        if (bi < m) act.push_back(bi);
    MatrixXd AB(static_cast<int>(act.size()), n);
    VectorXd bB(static_cast<int>(act.size()));
    for (size_t i = 0; i < act.size(); ++i) {
        AB.row(static_cast<int>(i)) = p.A.row(act[i]);
        bB(static_cast<int>(i)) = p.b(act[i]);
    }
    r.x = AB.completeOrthogonalDecomposition().solve(bB);
    const double scale = 1.0 + p.b.lpNorm<Eigen::Infinity>();
    double viol = (p.A * r.x - p.b).maxCoeff();
    double gap = std::abs(p.c.dot(r.x) - r.value);
    if (viol > 1e-7 * scale || gap > 1e-6 * (1.0 + std::abs(r.value)))
        return solve_lp_general(p, tol);
    return r;
}

/// Independent optimality check: primal feasibility, dual feasibility,
/// stationarity c + A'y = 0, and complementary slackness.
inline double lp_certificate_residual(const LpProblem& p, const LpResult& r) {
    if (r.status != LpStatus::Optimal) return std::numeric_limits<double>::infinity();
    const double scale =
        1.0 + p.b.lpNorm<Eigen::Infinity>() + p.c.lpNorm<Eigen::Infinity>();
    VectorXd slack = p.b - p.A * r.x;
    double res = std::max(0.0, -slack.minCoeff());
    res = std::max(res, std::max(0.0, -r.dual.minCoeff()));
    res = std::max(res, (p.c + p.A.transpose() * r.dual).lpNorm<Eigen::Infinity>());
    res = std::max(res, r.dual.cwiseProduct(slack).cwiseAbs().maxCoeff());
    return res / scale;
}

struct SupportResult {
    double value = 0.0;
    VectorXd argmax;
    bool bounded = true;
};

/// max_{Ax <= b} d'x
inline SupportResult polytope_support(const MatrixXd& A, const VectorXd& b,
                                      const VectorXd& d, double tol = 1e-9) {
    LpProblem p{-d, A, b};
    LpResult r = solve_lp(p, tol);
    SupportResult s;
    if (r.status == LpStatus::Unbounded) {
        s.bounded = false;
        s.value = std::numeric_limits<double>::infinity();
        return s;
    }
    if (r.status != LpStatus::Optimal)
        throw std::runtime_error("polytope_support: LP failed with status " +
                                 std::string(to_string(r.status)));
    s.value = -r.value;
    s.argmax = r.x;
    return s;
}

}  // namespace msmpc
