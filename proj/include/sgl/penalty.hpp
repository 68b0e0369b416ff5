#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "sgl/partition.hpp"

namespace sgl {

/// Mixing weight tau in [0,1] between the l1 term and the weighted group-l2
/// term, plus one nonnegative weight per group. tau = 1 gives the Lasso,
/// tau = 0 the Group-Lasso. tau = 0 together with a zero weight is rejected:
/// the penalty is no longer a norm.
class PenaltyParams {
public:
    PenaltyParams(double tau, Vector weights) : tau_(tau), weights_(std::move(weights))
    {
        if (!(tau >= 0.0 && tau <= 1.0))
            throw std::invalid_argument("PenaltyParams: tau must lie in [0,1]");
        for (Index g = 0; g < weights_.size(); ++g) {
            if (!(weights_[g] >= 0.0))
                throw std::invalid_argument("PenaltyParams: group weights must be nonnegative");
            if (tau_ == 0.0 && weights_[g] == 0.0)
                throw std::invalid_argument(
                    "PenaltyParams: tau = 0 with a zero group weight is not a norm");
        }
    }

    double tau() const { return tau_; }
    const Vector& weights() const { return weights_; }
    double weight(Index g) const { return weights_[g]; }
    Index num_groups() const { return weights_.size(); }

private:
    double tau_;
    Vector weights_;
};

/// Per-group constants derived from (tau, w): eps_g = (1-tau)w_g / scale_g
/// and scale_g = tau + (1-tau)w_g. eps_g parameterizes the group's
/// epsilon-norm; scale_g is the group's overall penalty scale.
struct EpsilonParams {
    Vector eps;
    Vector scale;

    static EpsilonParams from(const PenaltyParams& penalty)
    {
        const double tau = penalty.tau();
        EpsilonParams out;
        out.eps.resize(penalty.num_groups());
        out.scale.resize(penalty.num_groups());
        for (Index g = 0; g < penalty.num_groups(); ++g) {
            const double s = tau + (1.0 - tau) * penalty.weight(g);
            out.scale[g] = s;
            out.eps[g] = (1.0 - tau) * penalty.weight(g) / s;
        }
        return out;
    }
};

inline double soft_threshold(double x, double level)
{
    const double v = std::abs(x) - level;
    return v > 0.0 ? std::copysign(v, x) : 0.0;
}

/// Componentwise soft-thresholding at the given level.
inline Vector soft_threshold(const Vector& x, double level)
{
    Vector out(x.size());
    for (Index i = 0; i < x.size(); ++i)
        out[i] = soft_threshold(x[i], level);
    return out;
}

/// Block soft-thresholding: (1 - level/||x||)_+ x, with 0 mapped to 0.
inline Vector group_soft_threshold(const Vector& x, double level)
{
    const double nrm = x.norm();
    if (nrm <= level)
        return Vector::Zero(x.size());
    return (1.0 - level / nrm) * x;
}

namespace detail {

struct EpsilonNormRoot {
    double value = 0.0;
    Index support_size = 0;  // number of sorted coordinates entering the quadratic
};

/// General branch of the threshold-scaling equation, assuming alpha > 0,
/// R > 0 and x != 0. Sorts the coordinates above the elimination bound
/// alpha*||x||_inf/(alpha+R) in decreasing absolute value (stable, so ties
/// keep their original order), locates the support size j0 by the running
/// interval test, and solves the resulting quadratic for the smaller root.
inline EpsilonNormRoot epsilon_norm_root_sorted(const Vector& x, double alpha, double R)
{
    const double xinf = x.cwiseAbs().maxCoeff();
    const double bound = alpha * xinf / (alpha + R);

    std::vector<double> a;
    a.reserve(static_cast<std::size_t>(x.size()));
    for (Index i = 0; i < x.size(); ++i) {
        const double v = std::abs(x[i]);
        if (v > bound)
            a.push_back(v);
    }
    std::stable_sort(a.begin(), a.end(), std::greater<double>());

    const std::size_t m = a.size();
    const double q = (R / alpha) * (R / alpha);

    // Running sums S_k, S2_k over the k largest entries. The interval test
    // compares q against the value of sum_i ST(x_i/nu, alpha)^2 / alpha^2 at
    // the breakpoint nu = a[k] / alpha, which equals S2_k/a[k]^2 - 2 S_k/a[k] + k.
    double S = 0.0, S2 = 0.0;
    std::size_t j0 = m;
    for (std::size_t k = 1; k <= m; ++k) {
        S += a[k - 1];
        S2 += a[k - 1] * a[k - 1];
        if (k == m)
            break;
        const double psi_next = S2 / (a[k] * a[k]) - 2.0 * S / a[k] + static_cast<double>(k);
        if (q < psi_next) {
            j0 = k;
            break;
        }
    }

    const double lead = alpha * alpha * static_cast<double>(j0) - R * R;
    EpsilonNormRoot root;
    root.support_size = static_cast<Index>(j0);
    if (std::abs(lead) < 1e-12 * std::max(alpha * alpha * static_cast<double>(j0), R * R)) {
        root.value = S2 / (2.0 * alpha * S);
        return root;
    }
    double disc = alpha * alpha * S * S - S2 * lead;
    if (disc < 0.0 && disc > -1e-12 * alpha * alpha * S * S)
        disc = 0.0;  // analytically nonnegative; guard rounding
    root.value = (alpha * S - std::sqrt(disc)) / lead;
    return root;
}

} // namespace detail

/// Unique nonnegative root nu of ||ST_{nu*alpha}(x)|| = nu*R, the scaling at
/// which the soft-thresholded norm of x meets the line nu*R. This is the
/// workhorse behind the epsilon-norm and the SGL dual norm. Degenerate
/// branches: alpha = R = 0 has no finite root (+inf is returned); alpha = 0
/// gives ||x||/R; R = 0 gives ||x||_inf/alpha; x = 0 gives 0.
inline double generalized_epsilon_norm(const Vector& x, double alpha, double R)
{
    if (alpha == 0.0 && R == 0.0)
        return std::numeric_limits<double>::infinity();
    if (alpha == 0.0)
        return x.norm() / R;
    if (R == 0.0)
        return x.size() == 0 ? 0.0 : x.cwiseAbs().maxCoeff() / alpha;
    if (x.size() == 0 || x.cwiseAbs().maxCoeff() == 0.0)
        return 0.0;
    return detail::epsilon_norm_root_sorted(x, alpha, R).value;
}

/// Epsilon-norm of x: the nonnegative nu solving
/// sum_i (|x_i| - (1-eps) nu)_+^2 = (eps nu)^2.
/// eps = 1 is the Euclidean norm, eps = 0 the sup norm.
inline double epsilon_norm(const Vector& x, double eps)
{
    return generalized_epsilon_norm(x, 1.0 - eps, eps);
}

/// Dual of the epsilon-norm: eps ||x|| + (1-eps) ||x||_1.
inline double epsilon_dual_norm(const Vector& x, double eps)
{
    return eps * x.norm() + (1.0 - eps) * x.lpNorm<1>();
}

/// Splits xi into xi_eps + xi_rest with ||xi_eps|| = eps ||xi||_eps and
/// ||xi_rest||_inf = (1-eps) ||xi||_eps.
inline std::pair<Vector, Vector> epsilon_decomposition(const Vector& xi, double eps)
{
    const double nu = epsilon_norm(xi, eps);
    Vector xi_eps = soft_threshold(xi, (1.0 - eps) * nu);
    Vector xi_rest = xi - xi_eps;
    return {std::move(xi_eps), std::move(xi_rest)};
}

/// Gradient of the epsilon-norm at xi != 0: xi_eps / ||xi_eps||_eps^D where
/// xi_eps is the epsilon part of the decomposition. Undefined when the
/// thresholded part vanishes (xi = 0, or eps = 0).
inline Vector epsilon_norm_gradient(const Vector& xi, double eps)
{
    auto [xi_eps, xi_rest] = epsilon_decomposition(xi, eps);
    const double denom = epsilon_dual_norm(xi_eps, eps);
    if (denom == 0.0)
        throw std::domain_error("epsilon_norm_gradient: norm not differentiable here");
    return xi_eps / denom;
}

/// SGL norm: tau ||beta||_1 + (1-tau) sum_g w_g ||beta_g||.
inline double sgl_norm(const Vector& beta, const PenaltyParams& penalty,
                       const GroupPartition& partition)
{
    if (beta.size() != partition.p() || penalty.num_groups() != partition.num_groups())
        throw std::invalid_argument("sgl_norm: dimension mismatch");
    const double tau = penalty.tau();
    double group_part = 0.0;
    for (Index g = 0; g < partition.num_groups(); ++g) {
        double sq = 0.0;
        for (Index j : partition.group(g))
            sq += beta[j] * beta[j];
        group_part += penalty.weight(g) * std::sqrt(sq);
    }
    return tau * beta.lpNorm<1>() + (1.0 - tau) * group_part;
}

/// SGL dual norm: max_g ||xi_g||_{eps_g} / scale_g, each group evaluated
/// through the threshold-scaling root.
inline double sgl_dual_norm(const Vector& xi, const PenaltyParams& penalty,
                            const GroupPartition& partition)
{
    if (xi.size() != partition.p() || penalty.num_groups() != partition.num_groups())
        throw std::invalid_argument("sgl_dual_norm: dimension mismatch");
    const EpsilonParams ep = EpsilonParams::from(penalty);
    double best = 0.0;
    Vector buf;
    for (Index g = 0; g < partition.num_groups(); ++g) {
        gather(xi, partition.group(g), buf);
        const double nu = generalized_epsilon_norm(buf, 1.0 - ep.eps[g], ep.eps[g]);
        best = std::max(best, nu / ep.scale[g]);
    }
    return best;
}

} // namespace sgl
