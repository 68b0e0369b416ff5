#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "sgl/partition.hpp"
#include "sgl/penalty.hpp"
#include "sgl/problem.hpp"

namespace sgl {

enum class SphereKind { gap, static_region, dynamic_region, dst3 };

/// Ball B(center, radius) certified to contain the optimal dual point.
struct SafeSphere {
    Vector center;
    double radius = 0.0;
    SphereKind kind = SphereKind::gap;
};

/// Point of the dual feasible set, together with the dual norm of X^T theta
/// it had at construction (always <= 1 up to rounding).
struct DualPoint {
    Vector theta;
    double dual_norm_value = 0.0;
};

struct GapReport {
    double primal = 0.0;
    double dual = 0.0;
    double gap = 0.0;
    double lambda = 0.0;
};

/// Group-level and feature-level masks of the not-yet-screened variables.
/// A feature can be active only when its group is.
struct ActiveSet {
    std::vector<std::uint8_t> groups;
    std::vector<std::uint8_t> features;

    static ActiveSet all_active(const GroupPartition& partition)
    {
        ActiveSet s;
        s.groups.assign(static_cast<std::size_t>(partition.num_groups()), 1);
        s.features.assign(static_cast<std::size_t>(partition.p()), 1);
        return s;
    }

    bool group_active(Index g) const { return groups[static_cast<std::size_t>(g)] != 0; }
    bool feature_active(Index j) const { return features[static_cast<std::size_t>(j)] != 0; }

    Index active_group_count() const
    {
        return static_cast<Index>(std::count(groups.begin(), groups.end(), std::uint8_t{1}));
    }
    Index active_feature_count() const
    {
        return static_cast<Index>(std::count(features.begin(), features.end(), std::uint8_t{1}));
    }
};

inline double primal_value(const Vector& beta, const Problem& problem,
                           const PenaltyParams& penalty, const GroupPartition& partition,
                           double lambda)
{
    if (beta.size() != problem.p())
        throw std::invalid_argument("primal_value: beta has wrong length");
    const double fit = 0.5 * (problem.y() - problem.X() * beta).squaredNorm();
    return fit + lambda * sgl_norm(beta, penalty, partition);
}

inline double dual_value(const Vector& theta, const Vector& y, double lambda)
{
    return 0.5 * y.squaredNorm() - 0.5 * lambda * lambda * (theta - y / lambda).squaredNorm();
}

/// Dual scaling of a residual: theta = rho / max(lambda, Omega^D(X^T rho)).
/// The caller supplies dual_norm = Omega^D(X^T rho).
inline DualPoint dual_point_from_residual(const Vector& rho, double lambda, double dual_norm)
{
    if (!(lambda > 0.0))
        throw std::invalid_argument("dual_point_from_residual: lambda must be positive");
    const double scale = std::max(lambda, dual_norm);
    DualPoint pt;
    pt.theta = rho / scale;
    pt.dual_norm_value = dual_norm / scale;
    return pt;
}

/// Radius of the duality-gap safe sphere, sqrt(2 (P - D)) / lambda. The gap
/// is clamped at zero: rounding can push it slightly negative at convergence.
inline double gap_radius(const GapReport& report)
{
    return std::sqrt(2.0 * std::max(report.gap, 0.0)) / report.lambda;
}

inline SafeSphere gap_sphere(const DualPoint& point, const GapReport& report)
{
    return SafeSphere{point.theta, gap_radius(report), SphereKind::gap};
}

/// Critical regularization: the all-zero vector is optimal iff
/// lambda >= Omega^D(X^T y).
inline double lambda_max(const Problem& problem, const PenaltyParams& penalty,
                         const GroupPartition& partition)
{
    return sgl_dual_norm(problem.X().transpose() * problem.y(), penalty, partition);
}

/// Upper bound T_g on max over the sphere of ||ST_tau(X_g^T theta)||.
/// The group is certified inactive when T_g < (1 - tau) w_g.
inline double group_test(const SafeSphere& sphere, const Vector& Xg_theta_c, double tau,
                         double spectral_norm_g)
{
    const double linf = Xg_theta_c.size() == 0 ? 0.0 : Xg_theta_c.cwiseAbs().maxCoeff();
    if (linf > tau)
        return soft_threshold(Xg_theta_c, tau).norm() + sphere.radius * spectral_norm_g;
    return std::max(linf + sphere.radius * spectral_norm_g - tau, 0.0);
}

/// Feature-level certificate: true when |X_j^T theta| < tau over the whole
/// sphere, i.e. the coefficient is zero at the optimum.
inline bool feature_test(const SafeSphere& sphere, double Xj_theta_c, double tau,
                         double col_norm_j)
{
    return std::abs(Xj_theta_c) + sphere.radius * col_norm_j < tau;
}

/// One screening pass over the currently-active variables. Screening is
/// permanent within a solve: only active groups/features are tested, and the
/// result never reactivates anything.
inline ActiveSet apply_screening(const SafeSphere& sphere, const Problem& problem,
                                 const PenaltyParams& penalty, const GroupPartition& partition,
                                 const std::vector<double>& group_spectral_norms,
                                 const ActiveSet& current)
{
    const double tau = penalty.tau();
    ActiveSet next = current;
    Vector xi_g;
    for (Index g = 0; g < partition.num_groups(); ++g) {
        if (!current.group_active(g))
            continue;
        const auto& idx = partition.group(g);
        xi_g.resize(static_cast<Index>(idx.size()));
        for (std::size_t l = 0; l < idx.size(); ++l)
            xi_g[static_cast<Index>(l)] = problem.X().col(idx[l]).dot(sphere.center);

        const double Tg =
            group_test(sphere, xi_g, tau, group_spectral_norms[static_cast<std::size_t>(g)]);
        if (Tg < (1.0 - tau) * penalty.weight(g)) {
            next.groups[static_cast<std::size_t>(g)] = 0;
            for (Index j : idx)
                next.features[static_cast<std::size_t>(j)] = 0;
            continue;
        }
        for (std::size_t l = 0; l < idx.size(); ++l) {
            const Index j = idx[l];
            if (!current.feature_active(j))
                continue;
            if (feature_test(sphere, xi_g[static_cast<Index>(l)], tau, problem.col_norm(j)))
                next.features[static_cast<std::size_t>(j)] = 0;
        }
    }
    return next;
}

/// Inputs shared by the reference sphere constructions: the critical
/// parameter, and for the hyperplane-projection sphere the normal eta built
/// at y/lambda_max from the group attaining the dual-norm maximum.
struct ReferenceContext {
    double lambda_max = 0.0;
    Index gstar = -1;
    double gstar_scale = 0.0;
    Vector eta;  // empty unless built for the dst3 sphere
};

inline ReferenceContext make_reference_context(const Problem& problem,
                                               const PenaltyParams& penalty,
                                               const GroupPartition& partition,
                                               bool with_dst3_normal)
{
    const Vector xty = problem.X().transpose() * problem.y();
    const EpsilonParams ep = EpsilonParams::from(penalty);

    ReferenceContext ctx;
    Vector buf;
    for (Index g = 0; g < partition.num_groups(); ++g) {
        gather(xty, partition.group(g), buf);
        const double val =
            generalized_epsilon_norm(buf, 1.0 - ep.eps[g], ep.eps[g]) / ep.scale[g];
        if (val > ctx.lambda_max) {  // strict: ties keep the smallest index
            ctx.lambda_max = val;
            ctx.gstar = g;
        }
    }
    if (ctx.gstar < 0)
        throw std::invalid_argument("make_reference_context: X^T y vanishes, lambda_max is zero");
    ctx.gstar_scale = ep.scale[ctx.gstar];

    if (with_dst3_normal) {
        gather(xty, partition.group(ctx.gstar), buf);
        buf /= ctx.lambda_max;  // X_{g*}^T (y / lambda_max)
        const Vector grad = epsilon_norm_gradient(buf, ep.eps[ctx.gstar]);
        ctx.eta = Vector::Zero(problem.n());
        const auto& idx = partition.group(ctx.gstar);
        for (std::size_t l = 0; l < idx.size(); ++l)
            ctx.eta += grad[static_cast<Index>(l)] * problem.X().col(idx[l]);
        if (ctx.eta.norm() == 0.0)
            throw std::invalid_argument("make_reference_context: degenerate dst3 normal");
    }
    return ctx;
}

/// Reference safe spheres: the fixed sphere B(y/lambda, ||y/lambda_max - y/lambda||),
/// its dual-scaling refinement B(y/lambda, ||theta_k - y/lambda||), and the
/// hyperplane-projection sphere. theta_k is required for the latter two.
inline SafeSphere reference_sphere(SphereKind kind, const Vector& y, double lambda,
                                   const ReferenceContext& ctx, const Vector* theta_k = nullptr)
{
    const Vector center0 = y / lambda;
    switch (kind) {
    case SphereKind::static_region:
        return SafeSphere{center0, (y / ctx.lambda_max - center0).norm(),
                          SphereKind::static_region};
    case SphereKind::dynamic_region: {
        if (theta_k == nullptr)
            throw std::invalid_argument("reference_sphere: dynamic sphere needs a dual point");
        return SafeSphere{center0, (*theta_k - center0).norm(), SphereKind::dynamic_region};
    }
    case SphereKind::dst3: {
        if (theta_k == nullptr)
            throw std::invalid_argument("reference_sphere: dst3 sphere needs a dual point");
        if (ctx.eta.size() == 0)
            throw std::invalid_argument("reference_sphere: dst3 sphere needs the normal vector");
        if (lambda > ctx.lambda_max * (1.0 + 1e-12))
            throw std::invalid_argument("reference_sphere: dst3 requires lambda <= lambda_max");
        const double eta_sq = ctx.eta.squaredNorm();
        const double offset = (ctx.eta.dot(center0) - ctx.gstar_scale) / eta_sq;
        const Vector center = center0 - offset * ctx.eta;
        const double r2 =
            (center0 - *theta_k).squaredNorm() - (center0 - center).squaredNorm();
        return SafeSphere{center, std::sqrt(std::max(r2, 0.0)), SphereKind::dst3};
    }
    case SphereKind::gap:
        break;
    }
    throw std::invalid_argument("reference_sphere: gap spheres are built from a gap report");
}

/// Boundary sets of the dual optimum: groups whose thresholded correlation
/// sits on the penalty boundary, and their features at or above level tau.
/// Tolerances absorb the numerical error of the supplied theta.
inline ActiveSet equicorrelation_sets(const Vector& theta, const Problem& problem,
                                      const PenaltyParams& penalty,
                                      const GroupPartition& partition, double group_tol,
                                      double feature_tol)
{
    const double tau = penalty.tau();
    ActiveSet out;
    out.groups.assign(static_cast<std::size_t>(partition.num_groups()), 0);
    out.features.assign(static_cast<std::size_t>(partition.p()), 0);
    Vector xi_g;
    for (Index g = 0; g < partition.num_groups(); ++g) {
        const auto& idx = partition.group(g);
        xi_g.resize(static_cast<Index>(idx.size()));
        for (std::size_t l = 0; l < idx.size(); ++l)
            xi_g[static_cast<Index>(l)] = problem.X().col(idx[l]).dot(theta);
        if (soft_threshold(xi_g, tau).norm() < (1.0 - tau) * penalty.weight(g) - group_tol)
            continue;
        out.groups[static_cast<std::size_t>(g)] = 1;
        for (std::size_t l = 0; l < idx.size(); ++l)
            if (std::abs(xi_g[static_cast<Index>(l)]) >= tau - feature_tol)
                out.features[static_cast<std::size_t>(idx[l])] = 1;
    }
    return out;
}

} // namespace sgl
