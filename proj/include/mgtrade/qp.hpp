#pragma once

// Sparse convex quadratic programming by a primal-dual interior point method
// (Mehrotra predictor-corrector) on the regularized KKT system.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "mgtrade/error.hpp"

namespace mgtrade {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Index = Eigen::Index;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// minimize    ½ zᵀ P z + qᵀ z
/// subject to  Aeq z = beq,  Gineq z ≤ hineq,  lb ≤ z ≤ ub
///
/// P must be symmetric positive semidefinite with both triangles stored.
/// Bounds may be ±infinity. Empty Aeq/Gineq (zero rows) are allowed.
struct QpProblem {
    SparseMatrix P;
    Vector q;
    SparseMatrix Aeq;
    Vector beq;
    Vector lb;
    Vector ub;
    SparseMatrix Gineq;
    Vector hineq;

    Index num_variables() const { return q.size(); }
    double objective(const Vector& z) const { return 0.5 * z.dot(P * z) + q.dot(z); }
};

enum class QpStatus { optimal, infeasible, max_iters };

inline const char* to_string(QpStatus s) {
    switch (s) {
    case QpStatus::optimal: return "optimal";
    case QpStatus::infeasible: return "infeasible";
    case QpStatus::max_iters: return "max_iters";
    }
    return "unknown";
}

/// Multipliers satisfy the stationarity condition
///
///     P z + q − Aeqᵀ dual_eq + Gineqᵀ dual_ineq + dual_box = 0
///
/// so dual_eq is the shadow price of beq, dual_ineq ≥ 0, and dual_box[k] is
/// positive at an active upper bound and negative at an active lower bound.
struct QpSolution {
    Vector z;
    Vector dual_eq;
    Vector dual_ineq;
    Vector dual_box;
    QpStatus status = QpStatus::max_iters;
    double kkt_residual = kInfinity;
    int iterations = 0;
    double objective = kInfinity;
};

struct QpSettings {
    double tol = 1e-8;
    int max_iters = 100;
    // Adds this curvature to coordinates with zero curvature and zero linear
    // cost, selecting a minimum-norm optimum among ties. 0 disables it.
    double flat_regularization = 0.0;
};

struct KktResiduals {
    double primal = 0.0;
    double dual = 0.0;
    double complementarity = 0.0;

    double max() const { return std::max({primal, dual, complementarity}); }
};

namespace detail {

inline void check_dimensions(const QpProblem& p) {
    const Index n = p.q.size();
    if (p.P.rows() != n || p.P.cols() != n)
        throw DimensionError("qp: P must be n x n");
    if (p.lb.size() != n || p.ub.size() != n)
        throw DimensionError("qp: bounds must have length n");
    if (p.Aeq.cols() != n && p.Aeq.rows() > 0)
        throw DimensionError("qp: Aeq must have n columns");
    if (p.Aeq.rows() != p.beq.size())
        throw DimensionError("qp: Aeq rows must match beq");
    if (p.Gineq.cols() != n && p.Gineq.rows() > 0)
        throw DimensionError("qp: Gineq must have n columns");
    if (p.Gineq.rows() != p.hineq.size())
        throw DimensionError("qp: Gineq rows must match hineq");
}

inline SparseMatrix rows_or_empty(const SparseMatrix& m, Index n) {
    if (m.rows() == 0) return SparseMatrix(0, n);
    return m;
}

inline void check_psd(const SparseMatrix& P) {
    const Index n = P.rows();
    if (n == 0) return;
    double scale = 0.0;
    for (Index k = 0; k < P.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(P, k); it; ++it) scale = std::max(scale, std::abs(it.value()));
    if (P.nonZeros() == 0) return;
    const SparseMatrix diff = P - SparseMatrix(P.transpose());
    double asym = 0.0;
    for (Index k = 0; k < diff.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(diff, k); it; ++it) asym = std::max(asym, std::abs(it.value()));
    if (asym > 1e-12 * (1.0 + scale)) throw ValidationError("qp: P is not symmetric");

    // Factorization probe: P + τI is positive definite iff P is PSD (up to τ).
    const double tau = 1e-10 * (1.0 + scale);
    SparseMatrix shifted = P;
    for (Index i = 0; i < n; ++i) shifted.coeffRef(i, i) += tau;
    Eigen::SimplicialLDLT<SparseMatrix> ldlt(shifted);
    if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= 0.0)
        throw ValidationError("qp: P is not positive semidefinite");
}

// Interior point on a problem without fixed variables (lb < ub everywhere).
inline QpSolution interior_point(const QpProblem& p, const QpSettings& settings) {
    const Index n = p.q.size();
    const Index neq = p.Aeq.rows();
    const Index nin = p.Gineq.rows();
    const SparseMatrix A = rows_or_empty(p.Aeq, n);
    const SparseMatrix G = rows_or_empty(p.Gineq, n);
    const SparseMatrix At = A.transpose();
    const SparseMatrix Gt = G.transpose();

    std::vector<Index> lower, upper;
    for (Index i = 0; i < n; ++i) {
        if (std::isfinite(p.lb[i])) lower.push_back(i);
        if (std::isfinite(p.ub[i])) upper.push_back(i);
    }
    const Index nl = static_cast<Index>(lower.size());
    const Index nu = static_cast<Index>(upper.size());
    const Index ncomp = nin + nl + nu;

    Vector z = Vector::Zero(n);
    for (Index i = 0; i < n; ++i) {
        const double lo = p.lb[i], hi = p.ub[i];
        if (std::isfinite(lo) && std::isfinite(hi)) z[i] = 0.5 * (lo + hi);
        else if (std::isfinite(lo)) z[i] = std::max(0.0, lo + 1.0);
        else if (std::isfinite(hi)) z[i] = std::min(0.0, hi - 1.0);
    }
    Vector y = Vector::Zero(neq);
    Vector sG = (p.hineq - G * z).cwiseMax(1.0);
    Vector u = Vector::Ones(nin);
    Vector sL(nl), vL = Vector::Ones(nl), sU(nu), vU = Vector::Ones(nu);
    for (Index k = 0; k < nl; ++k) sL[k] = std::max(z[lower[k]] - p.lb[lower[k]], 1.0);
    for (Index k = 0; k < nu; ++k) sU[k] = std::max(p.ub[upper[k]] - z[upper[k]], 1.0);

    Vector rd(n), rp(neq), rG(nin), rL(nl), rU(nu);
    auto residuals = [&] {
        rd = p.P * z + p.q + At * y + Gt * u;
        for (Index k = 0; k < nl; ++k) rd[lower[k]] -= vL[k];
        for (Index k = 0; k < nu; ++k) rd[upper[k]] += vU[k];
        rp = A * z - p.beq;
        rG = G * z + sG - p.hineq;
        for (Index k = 0; k < nl; ++k) rL[k] = sL[k] - (z[lower[k]] - p.lb[lower[k]]);
        for (Index k = 0; k < nu; ++k) rU[k] = z[upper[k]] + sU[k] - p.ub[upper[k]];
    };
    auto inf_norm = [](const Vector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; };
    auto max_product = [](const Vector& a, const Vector& b) {
        return a.size() ? a.cwiseProduct(b).cwiseAbs().maxCoeff() : 0.0;
    };

    const double delta = 1e-10;
    const Index dim = n + neq + nin;
    Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt;
    Vector diag(n), winv(nin);
    bool analyzed = false;

    // Quasi-definite system [P + D, Aᵀ, Gᵀ; A, −δ, 0; G, 0, −S/U], with the
    // inequality multipliers kept as unknowns rather than condensed into P.
    auto assemble = [&] {
        winv = sG.cwiseQuotient(u);
        diag.setZero();
        for (Index k = 0; k < nl; ++k) diag[lower[k]] += vL[k] / sL[k];
        for (Index k = 0; k < nu; ++k) diag[upper[k]] += vU[k] / sU[k];
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(static_cast<std::size_t>(p.P.nonZeros() + A.nonZeros() + G.nonZeros() + dim));
        for (Index c = 0; c < p.P.outerSize(); ++c)
            for (SparseMatrix::InnerIterator it(p.P, c); it; ++it)
                if (it.row() >= it.col()) trip.emplace_back(it.row(), it.col(), it.value());
        for (Index i = 0; i < n; ++i) trip.emplace_back(i, i, diag[i] + delta);
        for (Index c = 0; c < A.outerSize(); ++c)
            for (SparseMatrix::InnerIterator it(A, c); it; ++it) trip.emplace_back(n + it.row(), it.col(), it.value());
        for (Index i = 0; i < neq; ++i) trip.emplace_back(n + i, n + i, -delta);
        for (Index c = 0; c < G.outerSize(); ++c)
            for (SparseMatrix::InnerIterator it(G, c); it; ++it)
                trip.emplace_back(n + neq + it.row(), it.col(), it.value());
        for (Index i = 0; i < nin; ++i) trip.emplace_back(n + neq + i, n + neq + i, -winv[i] - delta);
        SparseMatrix K(dim, dim);
        K.setFromTriplets(trip.begin(), trip.end());
        if (!analyzed) {
            ldlt.analyzePattern(K);
            analyzed = true;
        }
        // Near the solution the barrier terms span many orders of magnitude and a
        // pivot can vanish; retry with a larger shift (refinement works against
        // the unshifted system).
        for (double shift = 0.0; shift <= 1e-6; shift = shift == 0.0 ? 1e-8 : shift * 100.0) {
            if (shift > 0.0)
                for (Index i = 0; i < dim; ++i) K.coeffRef(i, i) += i < n ? shift : -shift;
            ldlt.factorize(K);
            if (ldlt.info() == Eigen::Success) return true;
        }
        return false;
    };

    // Unregularized KKT product, used for iterative refinement.
    auto kkt_apply = [&](const Vector& x) {
        Vector out(dim);
        const Vector xz = x.head(n);
        const Vector xy = x.segment(n, neq);
        const Vector xu = x.tail(nin);
        out.head(n) = p.P * xz + diag.cwiseProduct(xz) + At * xy + Gt * xu;
        out.segment(n, neq) = A * xz;
        out.tail(nin) = G * xz - winv.cwiseProduct(xu);
        return out;
    };

    auto kkt_solve = [&](const Vector& rhs) {
        Vector x = ldlt.solve(rhs);
        double last = inf_norm(rhs - kkt_apply(x));
        for (int it = 0; it < 8 && last > 0.0; ++it) {
            Vector r = rhs - kkt_apply(x);
            Vector cand = x + ldlt.solve(r);
            const double res = inf_norm(rhs - kkt_apply(cand));
            if (!(res < last)) break;
            x = std::move(cand);
            last = res;
        }
        return x;
    };

    struct Direction {
        Vector dz, dy, dsG, du, dsL, dvL, dsU, dvU;
    };

    auto newton = [&](const Vector& rcG, const Vector& rcL, const Vector& rcU) {
        Direction d;
        Vector rhs(dim);
        Vector top = -rd;
        for (Index k = 0; k < nl; ++k) top[lower[k]] -= (rcL[k] - vL[k] * rL[k]) / sL[k];
        for (Index k = 0; k < nu; ++k) top[upper[k]] -= (-rcU[k] + vU[k] * rU[k]) / sU[k];
        rhs.head(n) = top;
        rhs.segment(n, neq) = -rp;
        rhs.tail(nin) = (rcG - u.cwiseProduct(rG)).cwiseQuotient(u);
        const Vector x = kkt_solve(rhs);
        d.dz = x.head(n);
        d.dy = x.segment(n, neq);
        d.du = x.tail(nin);
        d.dsG = -rG - G * d.dz;
        d.dsL.resize(nl);
        d.dvL.resize(nl);
        for (Index k = 0; k < nl; ++k) {
            d.dsL[k] = -rL[k] + d.dz[lower[k]];
            d.dvL[k] = (-rcL[k] - vL[k] * d.dsL[k]) / sL[k];
        }
        d.dsU.resize(nu);
        d.dvU.resize(nu);
        for (Index k = 0; k < nu; ++k) {
            d.dsU[k] = -rU[k] - d.dz[upper[k]];
            d.dvU[k] = (-rcU[k] - vU[k] * d.dsU[k]) / sU[k];
        }
        return d;
    };

    auto max_step = [](const Vector& x, const Vector& dx) {
        double a = 1.0;
        for (Index i = 0; i < x.size(); ++i)
            if (dx[i] < 0.0) a = std::min(a, -x[i] / dx[i]);
        return a;
    };
    auto step_to_boundary = [&](const Direction& d) {
        return std::min({max_step(sG, d.dsG), max_step(u, d.du), max_step(sL, d.dsL), max_step(vL, d.dvL),
                         max_step(sU, d.dsU), max_step(vU, d.dvU)});
    };
    auto complementarity_mean = [&](const Vector& s1, const Vector& v1, const Vector& s2, const Vector& v2,
                                    const Vector& s3, const Vector& v3) {
        if (ncomp == 0) return 0.0;
        return (s1.dot(v1) + s2.dot(v2) + s3.dot(v3)) / static_cast<double>(ncomp);
    };

    QpSolution sol;
    std::vector<double> primal_history;
    const double target = 0.1 * settings.tol;
    int iter = 0;
    for (; iter < settings.max_iters; ++iter) {
        residuals();
        const double pres = std::max({inf_norm(rp), inf_norm(rG), inf_norm(rL), inf_norm(rU)});
        const double dres = inf_norm(rd);
        const double comp = std::max({max_product(sG, u), max_product(sL, vL), max_product(sU, vU)});
        primal_history.push_back(pres);
        if (pres <= target && dres <= target && comp <= target) {
            sol.status = QpStatus::optimal;
            break;
        }
        // Diverging multipliers with a stuck primal residual certify infeasibility.
        const double dual_size = std::max({inf_norm(y), inf_norm(u), inf_norm(vL), inf_norm(vU)});
        if (!std::isfinite(dres) || !std::isfinite(comp) || !std::isfinite(pres) ||
            (dual_size > 1e12 && pres > settings.tol)) {
            sol.status = pres > settings.tol || !std::isfinite(pres) ? QpStatus::infeasible : QpStatus::max_iters;
            break;
        }
        if (iter >= 30 && pres > settings.tol) {
            const double earlier = primal_history[primal_history.size() - 21];
            if (pres > 0.5 * earlier) {
                sol.status = QpStatus::infeasible;
                break;
            }
        }
        if (!assemble()) {
            sol.status = pres > settings.tol ? QpStatus::infeasible : QpStatus::max_iters;
            break;
        }

        const double mu = complementarity_mean(sG, u, sL, vL, sU, vU);
        // Predictor.
        const Direction aff = newton(sG.cwiseProduct(u), sL.cwiseProduct(vL), sU.cwiseProduct(vU));
        const double a_aff = step_to_boundary(aff);
        double sigma = 0.0;
        if (ncomp > 0 && mu > 0.0) {
            const double mu_aff = complementarity_mean(
                sG + a_aff * aff.dsG, u + a_aff * aff.du, sL + a_aff * aff.dsL, vL + a_aff * aff.dvL,
                sU + a_aff * aff.dsU, vU + a_aff * aff.dvU);
            sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3);
        }
        // Corrector.
        const Vector rcG = sG.cwiseProduct(u) + aff.dsG.cwiseProduct(aff.du) - Vector::Constant(nin, sigma * mu);
        const Vector rcL = sL.cwiseProduct(vL) + aff.dsL.cwiseProduct(aff.dvL) - Vector::Constant(nl, sigma * mu);
        const Vector rcU = sU.cwiseProduct(vU) + aff.dsU.cwiseProduct(aff.dvU) - Vector::Constant(nu, sigma * mu);
        const Direction d = newton(rcG, rcL, rcU);
        const double alpha = std::min(1.0, 0.995 * step_to_boundary(d));

        z += alpha * d.dz;
        y += alpha * d.dy;
        sG += alpha * d.dsG;
        u += alpha * d.du;
        sL += alpha * d.dsL;
        vL += alpha * d.dvL;
        sU += alpha * d.dsU;
        vU += alpha * d.dvU;
    }

    sol.iterations = iter;
    sol.z = z;
    sol.dual_eq = -y;
    sol.dual_ineq = u;
    sol.dual_box = Vector::Zero(n);
    for (Index k = 0; k < nl; ++k) sol.dual_box[lower[k]] -= vL[k];
    for (Index k = 0; k < nu; ++k) sol.dual_box[upper[k]] += vU[k];
    return sol;
}

} // namespace detail

/// Primal, dual and complementarity residuals of a candidate (z, multipliers),
/// all measured in the infinity norm against the original problem data.
inline KktResiduals kkt_residuals(const QpProblem& p, const QpSolution& s) {
    detail::check_dimensions(p);
    const Index n = p.q.size();
    if (s.z.size() != n || s.dual_box.size() != n || s.dual_eq.size() != p.beq.size() ||
        s.dual_ineq.size() != p.hineq.size())
        throw DimensionError("kkt_residual: solution dimensions do not match the problem");
    const SparseMatrix A = detail::rows_or_empty(p.Aeq, n);
    const SparseMatrix G = detail::rows_or_empty(p.Gineq, n);

    KktResiduals r;
    if (p.beq.size()) r.primal = (A * s.z - p.beq).cwiseAbs().maxCoeff();
    const Vector slack = p.hineq - G * s.z;
    for (Index i = 0; i < slack.size(); ++i) {
        r.primal = std::max(r.primal, -slack[i]);
        r.dual = std::max(r.dual, -s.dual_ineq[i]);
        r.complementarity = std::max(r.complementarity, std::abs(s.dual_ineq[i] * slack[i]));
    }
    for (Index i = 0; i < n; ++i) {
        r.primal = std::max({r.primal, p.lb[i] - s.z[i], s.z[i] - p.ub[i]});
        const double w = s.dual_box[i];
        if (w > 0.0) {
            if (!std::isfinite(p.ub[i])) r.dual = std::max(r.dual, w);
            else r.complementarity = std::max(r.complementarity, std::abs(w * (p.ub[i] - s.z[i])));
        } else if (w < 0.0) {
            if (!std::isfinite(p.lb[i])) r.dual = std::max(r.dual, -w);
            else r.complementarity = std::max(r.complementarity, std::abs(w * (s.z[i] - p.lb[i])));
        }
    }
    Vector stat = p.P * s.z + p.q + s.dual_box;
    if (p.beq.size()) stat -= A.transpose() * s.dual_eq;
    if (p.hineq.size()) stat += G.transpose() * s.dual_ineq;
    if (n) r.dual = std::max(r.dual, stat.cwiseAbs().maxCoeff());
    return r;
}

inline double kkt_residual(const QpProblem& p, const QpSolution& s) { return kkt_residuals(p, s).max(); }

/// Solves a convex QP. Variables with lb == ub are eliminated before the
/// interior point iterations and their bound multipliers recovered afterwards.
inline QpSolution solve_qp(const QpProblem& problem, const QpSettings& settings = {}) {
    detail::check_dimensions(problem);
    if (!(settings.tol > 0.0)) throw ValidationError("qp: tol must be positive");
    detail::check_psd(problem.P);

    const Index n = problem.q.size();
    QpProblem p = problem;
    p.Aeq = detail::rows_or_empty(problem.Aeq, n);
    p.Gineq = detail::rows_or_empty(problem.Gineq, n);

    if (settings.flat_regularization > 0.0) {
        for (Index i = 0; i < n; ++i)
            if (p.P.col(i).nonZeros() == 0 && p.q[i] == 0.0) p.P.coeffRef(i, i) = settings.flat_regularization;
    }

    auto infeasible = [&] {
        QpSolution s;
        s.status = QpStatus::infeasible;
        s.z = Vector::Zero(n);
        s.dual_eq = Vector::Zero(p.beq.size());
        s.dual_ineq = Vector::Zero(p.hineq.size());
        s.dual_box = Vector::Zero(n);
        return s;
    };

    // Fixed-variable elimination.
    std::vector<Index> map(static_cast<std::size_t>(n), -1);
    Vector fixed_value = Vector::Zero(n);
    Index nfree = 0;
    for (Index i = 0; i < n; ++i) {
        const double lo = p.lb[i], hi = p.ub[i];
        if (lo > hi) return infeasible();
        if (std::isfinite(lo) && std::isfinite(hi) && hi - lo <= 1e-13 * std::max(1.0, std::abs(lo))) fixed_value[i] = lo;
        else map[static_cast<std::size_t>(i)] = nfree++;
    }
    auto is_free = [&](Index i) { return map[static_cast<std::size_t>(i)] >= 0; };
    const double row_tol = settings.tol;

    QpProblem r;
    r.q = Vector::Zero(nfree);
    r.lb.resize(nfree);
    r.ub.resize(nfree);
    for (Index i = 0; i < n; ++i)
        if (is_free(i)) {
            r.q[map[i]] = p.q[i];
            r.lb[map[i]] = p.lb[i];
            r.ub[map[i]] = p.ub[i];
        }
    {
        std::vector<Eigen::Triplet<double>> trip;
        for (Index c = 0; c < p.P.outerSize(); ++c)
            for (SparseMatrix::InnerIterator it(p.P, c); it; ++it) {
                const Index i = it.row(), j = it.col();
                if (is_free(i) && is_free(j)) trip.emplace_back(map[i], map[j], it.value());
                else if (is_free(i)) r.q[map[i]] += it.value() * fixed_value[j];
            }
        r.P.resize(nfree, nfree);
        r.P.setFromTriplets(trip.begin(), trip.end());
    }

    // Reduces a constraint block; rows left without free variables are dropped.
    auto reduce_rows = [&](const SparseMatrix& M, const Vector& rhs, bool equality, SparseMatrix& out,
                           Vector& out_rhs, std::vector<Index>& kept) -> bool {
        Vector adjusted = rhs;
        std::vector<int> free_count(static_cast<std::size_t>(M.rows()), 0);
        for (Index c = 0; c < M.outerSize(); ++c)
            for (SparseMatrix::InnerIterator it(M, c); it; ++it) {
                if (is_free(it.col())) {
                    if (it.value() != 0.0) ++free_count[static_cast<std::size_t>(it.row())];
                } else {
                    adjusted[it.row()] -= it.value() * fixed_value[it.col()];
                }
            }
        std::vector<Index> row_map(static_cast<std::size_t>(M.rows()), -1);
        for (Index i = 0; i < M.rows(); ++i) {
            if (free_count[static_cast<std::size_t>(i)] > 0) {
                row_map[static_cast<std::size_t>(i)] = static_cast<Index>(kept.size());
                kept.push_back(i);
            } else if (equality ? std::abs(adjusted[i]) > row_tol : adjusted[i] < -row_tol) {
                return false;
            }
        }
        std::vector<Eigen::Triplet<double>> trip;
        for (Index c = 0; c < M.outerSize(); ++c)
            for (SparseMatrix::InnerIterator it(M, c); it; ++it)
                if (is_free(it.col()) && row_map[static_cast<std::size_t>(it.row())] >= 0)
                    trip.emplace_back(row_map[it.row()], map[it.col()], it.value());
        out.resize(static_cast<Index>(kept.size()), nfree);
        out.setFromTriplets(trip.begin(), trip.end());
        out_rhs.resize(static_cast<Index>(kept.size()));
        for (std::size_t k = 0; k < kept.size(); ++k) out_rhs[static_cast<Index>(k)] = adjusted[kept[k]];
        return true;
    };
    std::vector<Index> eq_rows, in_rows;
    if (!reduce_rows(p.Aeq, p.beq, true, r.Aeq, r.beq, eq_rows)) return infeasible();
    if (!reduce_rows(p.Gineq, p.hineq, false, r.Gineq, r.hineq, in_rows)) return infeasible();

    const QpSolution red = detail::interior_point(r, settings);

    QpSolution sol;
    sol.status = red.status;
    sol.iterations = red.iterations;
    sol.z = fixed_value;
    sol.dual_box = Vector::Zero(n);
    for (Index i = 0; i < n; ++i)
        if (is_free(i)) {
            sol.z[i] = red.z[map[i]];
            sol.dual_box[i] = red.dual_box[map[i]];
        }
    sol.dual_eq = Vector::Zero(p.beq.size());
    for (std::size_t k = 0; k < eq_rows.size(); ++k) sol.dual_eq[eq_rows[k]] = red.dual_eq[static_cast<Index>(k)];
    sol.dual_ineq = Vector::Zero(p.hineq.size());
    for (std::size_t k = 0; k < in_rows.size(); ++k) sol.dual_ineq[in_rows[k]] = red.dual_ineq[static_cast<Index>(k)];

    // Bound multipliers of eliminated variables absorb their stationarity residual.
    Vector stat = p.P * sol.z + p.q;
    if (p.beq.size()) stat -= p.Aeq.transpose() * sol.dual_eq;
    if (p.hineq.size()) stat += p.Gineq.transpose() * sol.dual_ineq;
    for (Index i = 0; i < n; ++i)
        if (!is_free(i)) sol.dual_box[i] = -stat[i];

    sol.objective = problem.objective(sol.z);
    sol.kkt_residual = kkt_residual(p, sol);
    if (sol.status != QpStatus::infeasible)
        sol.status = sol.kkt_residual <= settings.tol ? QpStatus::optimal : QpStatus::max_iters;
    return sol;
}

/// Row-oriented assembly helper for QpProblem.
class QpBuilder {
public:
    struct Term {
        Index var;
        double coef;
    };

    /// Adds a variable with objective contribution linear·z + ½·curvature·z².
    Index add_variable(double lb, double ub, double linear = 0.0, double curvature = 0.0) {
        const Index idx = static_cast<Index>(lb_.size());
        lb_.push_back(lb);
        ub_.push_back(ub);
        q_.push_back(linear);
        if (curvature != 0.0) p_.emplace_back(idx, idx, curvature);
        return idx;
    }

    void add_linear(Index var, double value) { q_.at(static_cast<std::size_t>(var)) += value; }

    void add_curvature(Index i, Index j, double value) {
        p_.emplace_back(i, j, value);
        if (i != j) p_.emplace_back(j, i, value);
    }

    void add_equality(const std::vector<Term>& terms, double rhs) { add_row(eq_, beq_, terms, rhs); }

    /// Σ coef·z ≤ rhs
    void add_inequality(const std::vector<Term>& terms, double rhs) { add_row(in_, hin_, terms, rhs); }

    Index num_variables() const { return static_cast<Index>(lb_.size()); }

    QpProblem build() const {
        const Index n = num_variables();
        QpProblem p;
        p.P.resize(n, n);
        p.P.setFromTriplets(p_.begin(), p_.end());
        p.q = Eigen::Map<const Vector>(q_.data(), n);
        p.lb = Eigen::Map<const Vector>(lb_.data(), n);
        p.ub = Eigen::Map<const Vector>(ub_.data(), n);
        p.Aeq.resize(static_cast<Index>(beq_.size()), n);
        p.Aeq.setFromTriplets(eq_.begin(), eq_.end());
        p.beq = Eigen::Map<const Vector>(beq_.data(), static_cast<Index>(beq_.size()));
        p.Gineq.resize(static_cast<Index>(hin_.size()), n);
        p.Gineq.setFromTriplets(in_.begin(), in_.end());
        p.hineq = Eigen::Map<const Vector>(hin_.data(), static_cast<Index>(hin_.size()));
        return p;
    }

private:
    static void add_row(std::vector<Eigen::Triplet<double>>& trip, std::vector<double>& rhs_store,
                        const std::vector<Term>& terms, double rhs) {
        const Index row = static_cast<Index>(rhs_store.size());
        for (const Term& t : terms)
            if (t.coef != 0.0) trip.emplace_back(row, t.var, t.coef);
        rhs_store.push_back(rhs);
    }

    std::vector<double> lb_, ub_, q_, beq_, hin_;
    std::vector<Eigen::Triplet<double>> p_, eq_, in_;
};

} // namespace mgtrade
