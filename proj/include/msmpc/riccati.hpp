#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <stdexcept>

namespace msmpc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline double spectral_radius(const MatrixXd& M) {
    if (M.rows() != M.cols())
        throw std::invalid_argument("spectral_radius: matrix must be square");
    Eigen::EigenSolver<MatrixXd> es(M, /*computeEigenvectors=*/false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

inline double matrix_norm2(const MatrixXd& M) {
    if (M.size() == 0) return 0.0;
    return Eigen::JacobiSVD<MatrixXd>(M).singularValues()(0);
}

/// Unique solution of F'PF - P = -S for Schur-stable F, via the Kronecker
/// linear system (I - F' (x) F') vec(P) = vec(S). Output is symmetrized.
inline MatrixXd solve_dlyap(const MatrixXd& F, const MatrixXd& S) {
    const int n = static_cast<int>(F.rows());
    if (S.rows() != n || S.cols() != n)
        throw std::invalid_argument("solve_dlyap: dimension mismatch");
    if (spectral_radius(F) >= 1.0)
        throw std::runtime_error("solve_dlyap: F is not Schur stable");

    const MatrixXd Ft = F.transpose();
    MatrixXd K = MatrixXd::Identity(n * n, n * n);
    // K -= Ft (x) Ft
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            K.block(i * n, j * n, n, n) -= Ft(i, j) * Ft;
    // vec(A P B) = (B' (x) A) vec(P); with A = F', B = F both factors are F'
    VectorXd vecS(n * n);
    for (int j = 0; j < n; ++j) vecS.segment(j * n, n) = S.col(j);
    VectorXd vecP = K.partialPivLu().solve(vecS);
    MatrixXd P(n, n);
    for (int j = 0; j < n; ++j) P.col(j) = vecP.segment(j * n, n);
    return 0.5 * (P + P.transpose());
}

inline double dlyap_residual(const MatrixXd& F, const MatrixXd& S,
                             const MatrixXd& P) {
    return (F.transpose() * P * F - P + S).norm();
}

/// Infinite-horizon LQ gain by Riccati iteration; returns K with the sign
/// convention u = K x, i.e. A + B K Schur stable.
inline MatrixXd dlqr(const MatrixXd& A, const MatrixXd& B, const MatrixXd& Q,
                     const MatrixXd& R, double tol = 1e-10, int cap = 10000) {
    const int n = static_cast<int>(A.rows());
    MatrixXd P = Q;
    MatrixXd K;
    for (int it = 0; it < cap; ++it) {
        MatrixXd G = R + B.transpose() * P * B;
        K = -G.ldlt().solve(B.transpose() * P * A);
        MatrixXd Pn = Q + A.transpose() * P * A -
                      A.transpose() * P * B * G.ldlt().solve(B.transpose() * P * A);
        Pn = 0.5 * (Pn + Pn.transpose());
        if ((Pn - P).norm() <= tol * (1.0 + Pn.norm())) {
            P = Pn;
            MatrixXd G2 = R + B.transpose() * P * B;
            K = -G2.ldlt().solve(B.transpose() * P * A);
            if (spectral_radius(A + B * K) >= 1.0)
                throw std::runtime_error(
                    "dlqr: closed loop not Schur stable; (A,B) may not be stabilizable");
            return K;
        }
        P = Pn;
    }
    throw std::runtime_error(
        "dlqr: Riccati iteration did not converge; (A,B) may not be stabilizable");
}

/// Fixed-point residual of the LQ Riccati equation for testing.
inline double dare_residual(const MatrixXd& A, const MatrixXd& B,
                            const MatrixXd& Q, const MatrixXd& R,
                            const MatrixXd& P) {
    MatrixXd G = R + B.transpose() * P * B;
    MatrixXd rhs = Q + A.transpose() * P * A -
                   A.transpose() * P * B * G.ldlt().solve(B.transpose() * P * A);
    return (P - rhs).norm();
}

}  // namespace msmpc
