#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

#include "msmpc/lp.hpp"
#include "msmpc/riccati.hpp"

namespace msmpc {

struct Box {
    VectorXd lower;
    VectorXd upper;

    Box() = default;
    Box(VectorXd lo, VectorXd hi) : lower(std::move(lo)), upper(std::move(hi)) {
        if (lower.size() != upper.size() || (upper - lower).minCoeff() < 0)
            throw std::invalid_argument("Box: lower must be <= upper elementwise");
    }
    static Box symmetric(const VectorXd& radius) { return Box(-radius, radius); }
    int dim() const { return static_cast<int>(lower.size()); }
    VectorXd center() const { return 0.5 * (lower + upper); }
    VectorXd radius() const { return 0.5 * (upper - lower); }
};

/// Affine image of a unit infinity-ball: {c + G xi : |xi|_inf <= 1}.
struct Zonotope {
    VectorXd center;
    MatrixXd generators;  // one generator per column

    Zonotope() = default;
    Zonotope(VectorXd c, MatrixXd G) : center(std::move(c)), generators(std::move(G)) {
        if (generators.size() > 0 && generators.rows() != center.size())
            throw std::invalid_argument("Zonotope: generator dimension mismatch");
        if (generators.size() == 0) generators.resize(center.size(), 0);
    }
    static Zonotope point(const VectorXd& c) {
        return Zonotope(c, MatrixXd(c.size(), 0));
    }
    static Zonotope from_box(const Box& b) {
        return Zonotope(b.center(), MatrixXd(b.radius().asDiagonal()));
    }
    int dim() const { return static_cast<int>(center.size()); }
    int num_generators() const { return static_cast<int>(generators.cols()); }
};

/// {x : A x <= b}
struct HPolytope {
    MatrixXd A;
    VectorXd b;
    int dim() const { return static_cast<int>(A.cols()); }
    int num_rows() const { return static_cast<int>(A.rows()); }
};

inline double support(const Box& s, const VectorXd& d) {
    if (d.size() != s.dim()) throw std::invalid_argument("support: dimension mismatch");
    return d.dot(s.center()) + s.radius().cwiseProduct(d.cwiseAbs()).sum();
}

inline double support(const Zonotope& s, const VectorXd& d) {
    if (d.size() != s.dim()) throw std::invalid_argument("support: dimension mismatch");
    double v = d.dot(s.center);
    if (s.num_generators() > 0) v += (s.generators.transpose() * d).cwiseAbs().sum();
    return v;
}

/// Support of an H-polytope, solved as an LP; throws on unbounded direction.
inline double support(const HPolytope& s, const VectorXd& d) {
    if (d.size() != s.dim()) throw std::invalid_argument("support: dimension mismatch");
    auto r = polytope_support(s.A, s.b, d);
    if (!r.bounded)
        throw std::runtime_error("support: polytope unbounded in requested direction");
    return r.value;
}

inline Zonotope minkowski_sum(const Zonotope& a, const Zonotope& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("minkowski_sum: dimension mismatch");
    MatrixXd G(a.dim(), a.num_generators() + b.num_generators());
    G << a.generators, b.generators;
    return Zonotope(a.center + b.center, std::move(G));
}

inline Zonotope minkowski_sum(const Zonotope& a, const Box& b) {
    return minkowski_sum(a, Zonotope::from_box(b));
}

inline Zonotope minkowski_sum(const Box& a, const Box& b) {
    return minkowski_sum(Zonotope::from_box(a), Zonotope::from_box(b));
}

inline Zonotope linear_map(const MatrixXd& M, const Zonotope& s) {
    if (M.cols() != s.dim()) throw std::invalid_argument("linear_map: dimension mismatch");
    return Zonotope(M * s.center, M * s.generators);
}

inline Zonotope linear_map(const MatrixXd& M, const Box& s) {
    return linear_map(M, Zonotope::from_box(s));
}

/// Per-coordinate Pontryagin difference of a box and an inner set:
/// [lo_i + h(inner, -e_i), up_i - h(inner, e_i)]. Exact because the outer set
/// is a box. An empty result throws: the tightening is infeasible.
template <typename InnerSet>
inline Box pontryagin_diff_box(const Box& outer, const InnerSet& inner) {
    const int n = outer.dim();
    VectorXd lo(n), hi(n);
    VectorXd e = VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) {
        e(i) = 1.0;
        double hp = support(inner, e);
        e(i) = -1.0;
        double hm = support(inner, e);
        e(i) = 0.0;
        lo(i) = outer.lower(i) + hm;
        hi(i) = outer.upper(i) - hp;
        if (lo(i) > hi(i))
            throw std::runtime_error(
                "pontryagin_diff_box: empty difference in coordinate " +
                std::to_string(i) + " (tightening infeasible)");
    }
    return Box(std::move(lo), std::move(hi));
}

/// Deterministic direction set used for set-inclusion certification:
/// +-canonical directions plus `extra` pseudorandom unit vectors.
inline std::vector<VectorXd> certification_directions(int dim, int extra,
                                                      unsigned seed = 9001) {
    std::vector<VectorXd> dirs;
    for (int i = 0; i < dim; ++i) {
        VectorXd e = VectorXd::Zero(dim);
        e(i) = 1.0;
        dirs.push_back(e);
        dirs.push_back(-e);
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int k = 0; k < extra; ++k) {
        VectorXd d(dim);
        for (int i = 0; i < dim; ++i) d(i) = gauss(rng);
        double nrm = d.norm();
        if (nrm < 1e-12) {
            --k;
            continue;
        }
        dirs.push_back(d / nrm);
    }
    return dirs;
}

/// Max over directions of h(F E + M W, d) - h(E, d); <= 0 means the
/// robust-invariance inclusion holds on the sampled directions.
inline double rpi_residual(const Zonotope& E, const MatrixXd& F, const MatrixXd& M,
                           const Box& W, const std::vector<VectorXd>& dirs) {
    Zonotope FE = linear_map(F, E);
    Zonotope MW = linear_map(M, W);
    Zonotope lhs = minkowski_sum(FE, MW);
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& d : dirs)
        worst = std::max(worst, support(lhs, d) - support(E, d));
    return worst;
}

/// Outer approximation of the minimal robust positively invariant set of
/// e(j+1) = F e(j) + M w, w in W, as (1-alpha)^{-1} * sum_{s<s*} F^s M W.
/// s* is the first power whose term is alpha-contained in M W on the
/// certification directions (degenerate directions of M W are handled with an
/// absolute slack). The result is re-certified a posteriori.
inline Zonotope compute_rpi(const MatrixXd& F, const MatrixXd& M, const Box& W,
                            double alpha = 1e-3, int cap = 500) {
    const int n = static_cast<int>(F.rows());
    if (F.cols() != n || M.rows() != n)
        throw std::invalid_argument("compute_rpi: dimension mismatch");
    if (spectral_radius(F) >= 1.0)
        throw std::runtime_error("compute_rpi: closed-loop matrix is not contractive");
    if (W.center().lpNorm<Eigen::Infinity>() > 1e-12)
        throw std::invalid_argument("compute_rpi: disturbance box must be origin-symmetric");

    Zonotope MW = linear_map(M, W);
    auto dirs = certification_directions(n, 128);
    const double abs_tol = 1e-10 * (1.0 + MW.generators.cwiseAbs().sum());

    std::vector<MatrixXd> gen_blocks;
    Zonotope term = MW;
    int sstar = -1;
    for (int s = 0; s < cap; ++s) {
        if (term.num_generators() > 0) gen_blocks.push_back(term.generators);
        Zonotope next = linear_map(F, term);
        bool contained = true;
        for (const auto& d : dirs) {
            if (support(next, d) - next.center.dot(d) >
                alpha * (support(MW, d) - MW.center.dot(d)) + abs_tol) {
                contained = false;
                break;
            }
        }
        if (contained) {
            sstar = s + 1;
            break;
        }
        term = next;
    }
    if (sstar < 0)
        throw std::runtime_error("compute_rpi: series did not contract within cap");

    int total = 0;
    for (const auto& g : gen_blocks) total += static_cast<int>(g.cols());
    MatrixXd G(n, total);
    int col = 0;
    for (const auto& g : gen_blocks) {
        G.middleCols(col, g.cols()) = g;
        col += static_cast<int>(g.cols());
    }
    Zonotope E(VectorXd::Zero(n), G / (1.0 - alpha));
    // W and hence E are origin-symmetric here; centers stay zero
    double res = rpi_residual(E, F, M, W, dirs);
    if (res > 1e-8)
        throw std::runtime_error("compute_rpi: a-posteriori invariance check failed, residual " +
                                 std::to_string(res));
    return E;
}

/// Girard-style order reduction: keep the largest generators, replace the
/// rest with their interval hull. The result contains the input.
inline Zonotope reduce_zonotope(const Zonotope& z, int max_generators) {
    const int n = z.dim();
    const int g = z.num_generators();
    if (g <= max_generators) return z;
    const int keep = std::max(0, max_generators - n);
    std::vector<int> order(g);
    for (int i = 0; i < g; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return z.generators.col(a).lpNorm<1>() > z.generators.col(b).lpNorm<1>();
    });
    MatrixXd G(n, keep + n);
    VectorXd boxr = VectorXd::Zero(n);
    for (int i = 0; i < g; ++i) {
        if (i < keep)
            G.col(i) = z.generators.col(order[i]);
        else
            boxr += z.generators.col(order[i]).cwiseAbs();
    }
    G.rightCols(n) = MatrixXd(boxr.asDiagonal());
    // drop all-zero columns
    std::vector<int> nz;
    for (int j = 0; j < G.cols(); ++j)
        if (G.col(j).lpNorm<1>() > 0) nz.push_back(j);
    MatrixXd Gc(n, static_cast<int>(nz.size()));
    for (size_t j = 0; j < nz.size(); ++j) Gc.col(static_cast<int>(j)) = G.col(nz[j]);
    return Zonotope(z.center, std::move(Gc));
}

/// Exact halfspace representation of a zonotope. Full-dimensional facets are
/// enumerated from (r-1)-subsets of generators inside the affine hull; flat
/// directions become paired inequalities. Intended for modest generator
/// counts (facet enumeration is combinatorial).
inline HPolytope zonotope_hrep(const Zonotope& z) {
    const int n = z.dim();
    const int g = z.num_generators();
    std::vector<VectorXd> normals;

    // affine hull via SVD of the generator matrix
    int rank = 0;
    MatrixXd range(n, 0);
    MatrixXd null_dirs(n, 0);
    if (g > 0) {
        Eigen::JacobiSVD<MatrixXd> svd(z.generators, Eigen::ComputeFullU);
        double smax = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
        for (int i = 0; i < svd.singularValues().size(); ++i)
            if (svd.singularValues()(i) > 1e-12 * (1.0 + smax)) ++rank;
        range = svd.matrixU().leftCols(rank);
        null_dirs = svd.matrixU().rightCols(n - rank);
    } else {
        null_dirs = MatrixXd::Identity(n, n);
    }

    for (int i = 0; i < null_dirs.cols(); ++i) {
        normals.push_back(null_dirs.col(i));
        normals.push_back(-null_dirs.col(i));
    }

    if (rank == 1) {
        normals.push_back(range.col(0));
        normals.push_back(-range.col(0));
    } else if (rank >= 2) {
        // generators projected into the rank-dimensional hull
        MatrixXd Gp = range.transpose() * z.generators;  // rank x g
        std::vector<int> subset(rank - 1);
        std::vector<int> stack;
        // enumerate all (rank-1)-subsets of columns
        std::function<void(int, int)> rec = [&](int start, int depth) {
            if (depth == rank - 1) {
                MatrixXd S(rank, rank - 1);
                for (int j = 0; j < rank - 1; ++j) S.col(j) = Gp.col(subset[j]);
                Eigen::JacobiSVD<MatrixXd> svd(S, Eigen::ComputeFullU);
                if (rank - 1 > 0) {
                    double smax = svd.singularValues()(0);
                    int r = 0;
                    for (int i = 0; i < svd.singularValues().size(); ++i)
                        if (svd.singularValues()(i) > 1e-10 * (1.0 + smax)) ++r;
                    if (r < rank - 1) return;  // degenerate subset, no facet
                }
                VectorXd np = svd.matrixU().col(rank - 1);
                VectorXd nfull = range * np;
                nfull.normalize();
                normals.push_back(nfull);
                normals.push_back(-nfull);
                return;
            }
            for (int j = start; j <= g - (rank - 1 - depth); ++j) {
                subset[depth] = j;
                rec(j + 1, depth + 1);
            }
        };
        rec(0, 0);
    }

    // deduplicate normals
    std::vector<VectorXd> uniq;
    for (const auto& d : normals) {
        bool dup = false;
        for (const auto& u : uniq)
            if ((u - d).lpNorm<Eigen::Infinity>() < 1e-9) dup = true;
        if (!dup) uniq.push_back(d);
    }

    HPolytope h;
    h.A.resize(static_cast<int>(uniq.size()), n);
    h.b.resize(static_cast<int>(uniq.size()));
    for (size_t i = 0; i < uniq.size(); ++i) {
        h.A.row(static_cast<int>(i)) = uniq[i].transpose();
        h.b(static_cast<int>(i)) = support(z, uniq[i]);
    }
    return h;
}

/// Membership residual of x in {A y <= b}: max_i (A x - b)_i.
inline double hpoly_residual(const HPolytope& h, const VectorXd& x) {
    if (h.num_rows() == 0) return 0.0;
    return (h.A * x - h.b).maxCoeff();
}

/// Maximal positively invariant set of x(j+1) = F x(j) inside {G x <= g},
/// via constraint backpropagation: Omega_{t+1} = Omega_t /\ {G F^{t+1} x <= g},
/// stopping when every new row is certified redundant by an LP.
inline HPolytope compute_terminal_set(const MatrixXd& F, const MatrixXd& G,
                                      const VectorXd& g, int cap = 200,
                                      double tol = 1e-9) {
    const int n = static_cast<int>(F.rows());
    if (spectral_radius(F) >= 1.0)
        throw std::runtime_error("compute_terminal_set: F is not Schur stable");
    if (G.cols() != n || g.size() != G.rows())
        throw std::invalid_argument("compute_terminal_set: dimension mismatch");

    MatrixXd A = G;
    VectorXd b = g;
    // boundedness of the seed set (unbounded seeds need a bounding box)
    for (int i = 0; i < n; ++i) {
        for (double sgn : {1.0, -1.0}) {
            VectorXd d = VectorXd::Zero(n);
            d(i) = sgn;
            if (!polytope_support(A, b, d).bounded)
                throw std::runtime_error(
                    "compute_terminal_set: seed constraint set unbounded; supply a bounding box");
        }
    }

    MatrixXd Fp = F;
    for (int t = 0; t < cap; ++t) {
        MatrixXd newA = G * Fp;
        bool all_redundant = true;
        std::vector<int> add;
        for (int i = 0; i < newA.rows(); ++i) {
            double h = polytope_support(A, b, newA.row(i).transpose()).value;
            if (h > g(i) + tol) {
                all_redundant = false;
                add.push_back(i);
            }
        }
        if (all_redundant) {
            HPolytope res{A, b};
            // certify nonemptiness (origin must satisfy every row for the
            // invariant sets used here; a general interior witness would be a
            // Chebyshev-center LP, overkill for g >= 0 seeds)
            if (b.minCoeff() < -tol)
                throw std::runtime_error("compute_terminal_set: empty terminal set");
            return res;
        }
        MatrixXd A2(A.rows() + static_cast<int>(add.size()), n);
        VectorXd b2(A2.rows());
        A2.topRows(A.rows()) = A;
        b2.head(b.size()) = b;
        for (size_t k = 0; k < add.size(); ++k) {
            A2.row(A.rows() + static_cast<int>(k)) = newA.row(add[k]);
            b2(b.size() + static_cast<int>(k)) = g(add[k]);
        }
        A = std::move(A2);
        b = std::move(b2);
        Fp = Fp * F;
    }
    throw std::runtime_error("compute_terminal_set: iteration cap exceeded");
}

/// Verify F X_F subset of X_F by LP: max over X_F of each row of A F must not
/// exceed b. Returns the worst violation (<= 0 means invariant).
inline double invariance_residual(const HPolytope& h, const MatrixXd& F) {
    double worst = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < h.num_rows(); ++i) {
        VectorXd d = (h.A.row(i) * F).transpose();
        worst = std::max(worst, polytope_support(h.A, h.b, d).value - h.b(i));
    }
    return worst;
}

}  // namespace msmpc
