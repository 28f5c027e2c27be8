#pragma once

#include <Eigen/Dense>
#include <limits>
#include <stdexcept>
#include <vector>

namespace msmpc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class QpStatus { Optimal, Infeasible, Failure };

inline const char* to_string(QpStatus s) {
    switch (s) {
        case QpStatus::Optimal: return "optimal";
        case QpStatus::Infeasible: return "infeasible";
        default: return "failure";
    }
}

/// min 1/2 x'Hx + f'x  s.t.  A x <= b,  Aeq x = beq.  H symmetric positive
/// definite.
struct QpProblem {
    MatrixXd H;
    VectorXd f;
    MatrixXd A;
    VectorXd b;
    MatrixXd Aeq;
    VectorXd beq;
};

struct QpResult {
    QpStatus status = QpStatus::Failure;
    VectorXd x;
    double value = 0.0;
    VectorXd lambda;     // multipliers of A x <= b (>= 0)
    VectorXd lambda_eq;  // multipliers of Aeq x = beq (free sign)
    std::vector<int> active;  // active inequality rows at the solution
};

/// Dual active-set method: start at the unconstrained minimum, add the most
/// violated constraint at a time, taking partial steps when an active
/// multiplier would go negative. No feasible starting point is needed and
/// infeasibility is detected when no finite step exists.
class QpSolver {
public:
    explicit QpSolver(double tol = 1e-10) : tol_(tol) {}

    QpResult solve(const QpProblem& p) const {
        const int n = static_cast<int>(p.H.rows());
        const int mi = static_cast<int>(p.A.rows());
        const int me = static_cast<int>(p.Aeq.rows());

        Eigen::LLT<MatrixXd> llt(p.H);
        if (llt.info() != Eigen::Success)
            throw std::invalid_argument("QpSolver: Hessian is not positive definite");

        QpResult r;
        r.x = llt.solve(-p.f);
        std::vector<int> W;         // active rows; eq rows encoded as mi + k
        std::vector<double> sign;   // +1, or -1 for equalities added flipped
        std::vector<double> u;      // multipliers in W order

        double scale = 1.0;
        if (p.b.size() > 0) scale = std::max(scale, p.b.cwiseAbs().maxCoeff());
        if (p.beq.size() > 0) scale = std::max(scale, p.beq.cwiseAbs().maxCoeff());
        const double feas_tol = 1e-9 * scale;
        const int cap = 200 * (n + mi + me) + 1000;

        auto row_of = [&](int idx) -> VectorXd {
            return idx < mi ? VectorXd(p.A.row(idx)) : VectorXd(p.Aeq.row(idx - mi));
        };
        auto rhs_of = [&](int idx) -> double {
            return idx < mi ? p.b(idx) : p.beq(idx - mi);
        };

        bool converged = false;
        for (int it = 0; it < cap; ++it) {
            // most violated constraint not yet active; equalities first
            int pidx = -1;
            double psign = 1.0, worst = feas_tol;
            for (int k = 0; k < me; ++k) {
                if (is_active(W, mi + k)) continue;
                double v = p.Aeq.row(k).dot(r.x) - p.beq(k);
                if (std::abs(v) > worst) {
                    worst = std::abs(v);
                    pidx = mi + k;
                    psign = v > 0 ? 1.0 : -1.0;
                }
            }
            if (pidx < 0) {
                for (int k = 0; k < mi; ++k) {
                    if (is_active(W, k)) continue;
                    double v = p.A.row(k).dot(r.x) - p.b(k);
                    if (v > worst) {
                        worst = v;
                        pidx = k;
                        psign = 1.0;
                    }
                }
            }
            if (pidx < 0) {
                converged = true;  // primal feasible -> optimal
                break;
            }

            VectorXd a = psign * row_of(pidx);
            double upl = 0.0;  // multiplier of the entering constraint

            // inner loop: move toward constraint pidx, dropping blockers
            bool added = false;
            for (int inner = 0; inner < cap; ++inner) {
                const int q = static_cast<int>(W.size());
                MatrixXd K(n + q, n + q);
                K.setZero();
                K.topLeftCorner(n, n) = p.H;
                for (int i = 0; i < q; ++i) {
                    VectorXd ai = sign[i] * row_of(W[i]);
                    K.block(i + n, 0, 1, n) = ai.transpose();
                    K.block(0, i + n, n, 1) = ai;
                }
                VectorXd rhs = VectorXd::Zero(n + q);
                rhs.head(n) = -a;
                Eigen::FullPivLU<MatrixXd> lu(K);
                VectorXd z;
                VectorXd rdir = VectorXd::Zero(q);
                if (lu.isInvertible()) {
                    VectorXd sol = lu.solve(rhs);
                    z = sol.head(n);
                    rdir = sol.tail(q);
                } else {
                    // entering row is dependent on the active set
                    z = VectorXd::Zero(n);
                    MatrixXd At(n, q);
                    for (int i = 0; i < q; ++i) At.col(i) = sign[i] * row_of(W[i]);
                    rdir = At.completeOrthogonalDecomposition().solve(a);
                    rdir = -rdir;
                }

                double viol = a.dot(r.x) - psign * rhs_of(pidx);
                double dz = a.dot(z);
                double t_full = std::numeric_limits<double>::infinity();
                if (dz < -1e-12) t_full = -viol / dz;

                double t_block = std::numeric_limits<double>::infinity();
                int blocker = -1;
                for (int i = 0; i < q; ++i) {
                    if (W[i] >= mi) continue;  // equalities never blocked
                    if (rdir(i) < -1e-12) {
                        double t = -u[i] / rdir(i);
                        if (t < t_block) {
                            t_block = t;
                            blocker = i;
                        }
                    }
                }

                double t = std::min(t_full, t_block);
                if (!std::isfinite(t)) {
                    r.status = QpStatus::Infeasible;
                    return r;
                }
                r.x += t * z;
                for (int i = 0; i < q; ++i) u[i] += t * rdir(i);
                upl += t;
                if (t_full <= t_block) {
                    W.push_back(pidx);
                    sign.push_back(psign);
                    u.push_back(upl);
                    added = true;
                    break;
                }
                // drop the blocking inequality and continue toward pidx
                W.erase(W.begin() + blocker);
                sign.erase(sign.begin() + blocker);
                u.erase(u.begin() + blocker);
            }
            if (!added && pidx >= 0) {
                // only reachable via inner-loop cap
                r.status = QpStatus::Failure;
                return r;
            }
        }

        if (!converged) {
            r.status = QpStatus::Failure;
            return r;
        }
        r.status = QpStatus::Optimal;
        r.value = 0.5 * r.x.dot(p.H * r.x) + p.f.dot(r.x);
        r.lambda = VectorXd::Zero(mi);
        r.lambda_eq = VectorXd::Zero(me);
        for (size_t i = 0; i < W.size(); ++i) {
            if (W[i] < mi) {
                r.lambda(W[i]) = u[i];
                r.active.push_back(W[i]);
            } else {
                r.lambda_eq(W[i] - mi) = sign[i] * u[i];
            }
        }
        return r;
    }

private:
    static bool is_active(const std::vector<int>& W, int idx) {
        for (int w : W)
            if (w == idx) return true;
        return false;
    }

    double tol_;
};

inline QpResult solve_qp(const QpProblem& p, double tol = 1e-10) {
    return QpSolver(tol).solve(p);
}

/// Scaled KKT residual: stationarity, primal feasibility, dual feasibility,
/// and complementary slackness.
inline double qp_kkt_residual(const QpProblem& p, const QpResult& r) {
    if (r.status != QpStatus::Optimal) return std::numeric_limits<double>::infinity();
    double scale = 1.0 + r.x.cwiseAbs().maxCoeff() + p.f.cwiseAbs().maxCoeff();
    VectorXd g = p.H * r.x + p.f;
    if (p.A.rows() > 0) g += p.A.transpose() * r.lambda;
    if (p.Aeq.rows() > 0) g += p.Aeq.transpose() * r.lambda_eq;
    double res = g.lpNorm<Eigen::Infinity>();
    if (p.A.rows() > 0) {
        VectorXd slack = p.b - p.A * r.x;
        res = std::max(res, -slack.minCoeff());
        res = std::max(res, -r.lambda.minCoeff());
        res = std::max(res, r.lambda.cwiseProduct(slack).cwiseAbs().maxCoeff());
    }
    if (p.Aeq.rows() > 0)
        res = std::max(res, (p.Aeq * r.x - p.beq).lpNorm<Eigen::Infinity>());
    return res / scale;
}

}  // namespace msmpc
