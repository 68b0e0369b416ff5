#pragma once

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "sgl/partition.hpp"
#include "sgl/penalty.hpp"
#include "sgl/problem.hpp"
#include "sgl/screening.hpp"

namespace sgl {

enum class ScreeningRule { gap, static_region, dynamic_region, dst3, none };

struct SolverConfig {
    double tolerance = 1e-8;     // duality-gap stopping threshold
    Index max_passes = 100000;   // budget of full passes over the active groups
    Index gap_check_every = 10;  // passes between gap evaluations
    ScreeningRule rule = ScreeningRule::gap;
    bool check_descent = false;  // track the worst objective increase per block update
};

struct PathConfig {
    Index num_points = 100;  // grid length T
    double delta = 3.0;      // grid spans [lambda_max, lambda_max * 10^-delta]
    std::vector<double> explicit_lambdas;  // overrides the generated grid when nonempty
};

struct SolveResult {
    Vector beta;
    std::vector<std::pair<Index, double>> gap_trace;  // (pass, gap) at each evaluation
    std::vector<std::tuple<Index, Index, Index>> screening_trace;  // (pass, groups, features)
    ActiveSet active;
    Index passes_used = 0;
    double final_gap = std::numeric_limits<double>::infinity();
    double final_primal = std::numeric_limits<double>::infinity();
    bool converged = false;
    double wall_time_sec = 0.0;
    double max_descent_violation = 0.0;  // only filled under check_descent
};

struct PathResult {
    double lambda_max = 0.0;
    std::vector<double> lambdas;
    std::vector<SolveResult> points;
    double wall_time_sec = 0.0;

    bool all_converged() const
    {
        for (const auto& pt : points)
            if (!pt.converged)
                return false;
        return true;
    }
};

namespace detail {

// Largest eigenvalue of the PSD operator v -> mul(v), power iteration with a
// fixed start vector. Relative tolerance 1e-10, capped at 1000 iterations.
template <class Mul>
double top_eigenvalue(Mul&& mul, Index dim)
{
    Vector v = Vector::Ones(dim) / std::sqrt(static_cast<double>(dim));
    Vector w = mul(v);
    double value = v.dot(w);
    for (int it = 0; it < 1000; ++it) {
        const double wn = w.norm();
        if (wn == 0.0)
            return 0.0;
        v = w / wn;
        w = mul(v);
        const double next = v.dot(w);
        if (std::abs(next - value) <= 1e-10 * next) {
            value = next;
            break;
        }
        value = next;
    }
    return value;
}

} // namespace detail

/// Squared spectral norm of a design block, the block-wise Lipschitz
/// constant of the quadratic fit term. Zero blocks give 0.
inline double block_lipschitz(const Eigen::Ref<const Matrix>& Xg)
{
    return detail::top_eigenvalue(
        [&](const Vector& v) { return Vector(Xg.transpose() * (Xg * v)); }, Xg.cols());
}

/// Spectral norms ||X_g||_2 for every group.
inline std::vector<double> group_spectral_norms(const Problem& problem,
                                                const GroupPartition& partition)
{
    std::vector<double> out(static_cast<std::size_t>(partition.num_groups()));
    Vector u(problem.n());
    for (Index g = 0; g < partition.num_groups(); ++g) {
        const auto& idx = partition.group(g);
        const double lam = detail::top_eigenvalue(
            [&](const Vector& v) {
                u.setZero();
                for (std::size_t l = 0; l < idx.size(); ++l)
                    u += v[static_cast<Index>(l)] * problem.X().col(idx[l]);
                Vector w(static_cast<Index>(idx.size()));
                for (std::size_t l = 0; l < idx.size(); ++l)
                    w[static_cast<Index>(l)] = problem.X().col(idx[l]).dot(u);
                return w;
            },
            static_cast<Index>(idx.size()));
        out[static_cast<std::size_t>(g)] = std::sqrt(std::max(lam, 0.0));
    }
    return out;
}

/// Exact minimizer of the majorized block problem: a feature-level
/// soft-threshold at tau * lambda / L_g followed by a block soft-threshold
/// at (1-tau) w_g lambda / L_g.
inline Vector block_update(const Vector& beta_g, const Vector& grad_g, double L_g, double lambda,
                           double tau, double w_g)
{
    const double alpha_g = lambda / L_g;
    const Vector z = soft_threshold(Vector(beta_g - grad_g / L_g), tau * alpha_g);
    return group_soft_threshold(z, (1.0 - tau) * w_g * alpha_g);
}

namespace detail {

inline void validate_config(const SolverConfig& config)
{
    if (!(config.tolerance > 0.0))
        throw std::invalid_argument("SolverConfig: tolerance must be positive");
    if (config.max_passes < 1)
        throw std::invalid_argument("SolverConfig: max_passes must be at least 1");
    if (config.gap_check_every < 1)
        throw std::invalid_argument("SolverConfig: gap_check_every must be at least 1");
}

} // namespace detail

/// Block coordinate descent for one regularization level, with periodic
/// duality-gap checks and safe screening per config.rule. Cycles over active
/// groups in ascending index; screened variables are zeroed and never
/// revisited within this solve.
inline SolveResult solve(const Problem& problem, const PenaltyParams& penalty,
                         const GroupPartition& partition, double lambda, const Vector& init_beta,
                         const SolverConfig& config, const ReferenceContext* ref_ctx = nullptr,
                         const std::vector<double>* group_norms = nullptr)
{
    detail::validate_config(config);
    if (!(lambda > 0.0))
        throw std::invalid_argument("solve: lambda must be positive");
    if (init_beta.size() != problem.p())
        throw std::invalid_argument("solve: init_beta has wrong length");
    const auto t0 = std::chrono::steady_clock::now();

    const Index G = partition.num_groups();
    const double tau = penalty.tau();

    std::vector<double> snorms = group_norms ? *group_norms
                                             : group_spectral_norms(problem, partition);

    ReferenceContext local_ctx;
    const ReferenceContext* ctx = ref_ctx;
    if (ctx == nullptr &&
        (config.rule == ScreeningRule::static_region || config.rule == ScreeningRule::dst3)) {
        local_ctx = make_reference_context(problem, penalty, partition,
                                           config.rule == ScreeningRule::dst3);
        ctx = &local_ctx;
    }

    SolveResult res;
    res.active = ActiveSet::all_active(partition);
    res.beta = init_beta;

    // Zero design blocks contribute nothing to the fit; their optimum is 0.
    for (Index g = 0; g < G; ++g) {
        if (snorms[static_cast<std::size_t>(g)] > 0.0)
            continue;
        res.active.groups[static_cast<std::size_t>(g)] = 0;
        for (Index j : partition.group(g)) {
            res.active.features[static_cast<std::size_t>(j)] = 0;
            res.beta[j] = 0.0;
        }
    }

    Vector rho = problem.y() - problem.X() * res.beta;
    const double y_sq = problem.y().squaredNorm();
    Vector xi(problem.p());
    const EpsilonParams ep = EpsilonParams::from(penalty);

    Vector z;       // block workspace
    Vector xi_buf;  // per-group slice of xi
    Index passes_done = 0;
    double obj_track = 0.0;

    for (;;) {
        const bool budget_spent = passes_done >= config.max_passes;
        if (passes_done % config.gap_check_every == 0 || budget_spent) {
            rho.noalias() = problem.y() - problem.X() * res.beta;
            xi.noalias() = problem.X().transpose() * rho;
            double dual_norm = 0.0;
            for (Index g = 0; g < G; ++g) {
                gather(xi, partition.group(g), xi_buf);
                dual_norm = std::max(
                    dual_norm,
                    generalized_epsilon_norm(xi_buf, 1.0 - ep.eps[g], ep.eps[g]) / ep.scale[g]);
            }
            const DualPoint point = dual_point_from_residual(rho, lambda, dual_norm);

            GapReport report;
            report.lambda = lambda;
            report.primal = 0.5 * rho.squaredNorm() + lambda * sgl_norm(res.beta, penalty, partition);
            report.dual = dual_value(point.theta, problem.y(), lambda);
            report.gap = report.primal - report.dual;
            res.gap_trace.emplace_back(passes_done, report.gap);
            res.final_gap = report.gap;
            res.final_primal = report.primal;

            if (report.gap <= config.tolerance) {
                res.converged = true;
                break;
            }
            if (budget_spent)
                break;

            if (config.rule != ScreeningRule::none) {
                SafeSphere sphere;
                switch (config.rule) {
                case ScreeningRule::gap:
                    sphere = gap_sphere(point, report);
                    break;
                case ScreeningRule::static_region:
                    sphere = reference_sphere(SphereKind::static_region, problem.y(), lambda, *ctx);
                    break;
                case ScreeningRule::dynamic_region:
                    sphere = SafeSphere{problem.y() / lambda,
                                        (point.theta - problem.y() / lambda).norm(),
                                        SphereKind::dynamic_region};
                    break;
                case ScreeningRule::dst3:
                    sphere = reference_sphere(SphereKind::dst3, problem.y(), lambda, *ctx,
                                              &point.theta);
                    break;
                case ScreeningRule::none:
                    break;
                }
                const ActiveSet next = apply_screening(sphere, problem, penalty, partition,
                                                       snorms, res.active);
                for (Index j = 0; j < problem.p(); ++j) {
                    if (res.active.feature_active(j) && !next.feature_active(j) &&
                        res.beta[j] != 0.0) {
                        rho += res.beta[j] * problem.X().col(j);
                        res.beta[j] = 0.0;
                    }
                }
                res.active = next;
                res.screening_trace.emplace_back(passes_done, res.active.active_group_count(),
                                                 res.active.active_feature_count());
            }
        }

        if (config.check_descent)
            obj_track = 0.5 * rho.squaredNorm() + lambda * sgl_norm(res.beta, penalty, partition);

        // one cyclic pass over the active groups
        for (Index g = 0; g < G; ++g) {
            if (!res.active.group_active(g))
                continue;
            const auto& idx = partition.group(g);
            const double L = snorms[static_cast<std::size_t>(g)] *
                             snorms[static_cast<std::size_t>(g)];
            const double alpha_g = lambda / L;
            const double level1 = tau * alpha_g;
            const double level2 = (1.0 - tau) * penalty.weight(g) * alpha_g;

            // majorized block step anchored at the block's current state
            z.resize(static_cast<Index>(idx.size()));
            double sq = 0.0;
            for (std::size_t l = 0; l < idx.size(); ++l) {
                const Index j = idx[l];
                if (!res.active.feature_active(j)) {
                    z[static_cast<Index>(l)] = 0.0;  // screened features stay at zero
                    continue;
                }
                const double target = res.beta[j] + problem.X().col(j).dot(rho) / L;
                const double v = soft_threshold(target, level1);
                z[static_cast<Index>(l)] = v;
                sq += v * v;
            }
            const double nrm = std::sqrt(sq);
            const double shrink = nrm > level2 ? 1.0 - level2 / nrm : 0.0;

            for (std::size_t l = 0; l < idx.size(); ++l) {
                const Index j = idx[l];
                const double nb = z[static_cast<Index>(l)] * shrink;
                const double d = nb - res.beta[j];
                if (d != 0.0) {
                    rho -= d * problem.X().col(j);
                    res.beta[j] = nb;
                }
            }

            if (config.check_descent) {
                const double obj =
                    0.5 * rho.squaredNorm() + lambda * sgl_norm(res.beta, penalty, partition);
                res.max_descent_violation =
                    std::max(res.max_descent_violation, obj - obj_track);
                obj_track = obj;
            }
        }
        ++passes_done;
    }

    res.passes_used = passes_done;
    res.wall_time_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

/// Geometric grid lambda_t = lambda_max * 10^(-delta t / (T-1)), t = 0..T-1.
inline std::vector<double> lambda_grid(double lambda_max_value, Index num_points, double delta)
{
    if (num_points < 1)
        throw std::invalid_argument("lambda_grid: need at least one point");
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(num_points));
    if (num_points == 1) {
        out.push_back(lambda_max_value);
        return out;
    }
    for (Index t = 0; t < num_points; ++t)
        out.push_back(lambda_max_value *
                      std::pow(10.0, -delta * static_cast<double>(t) /
                                         static_cast<double>(num_points - 1)));
    return out;
}

/// Warm-started solves along a decreasing grid. The generated grid starts at
/// lambda_max, where beta = 0 is optimal and emitted without iterating.
inline PathResult solve_path(const Problem& problem, const PenaltyParams& penalty,
                             const GroupPartition& partition, const PathConfig& path_config,
                             const SolverConfig& config)
{
    detail::validate_config(config);
    const auto t0 = std::chrono::steady_clock::now();

    const std::vector<double> snorms = group_spectral_norms(problem, partition);

    ReferenceContext ctx;
    bool have_ctx = false;
    PathResult out;
    if (config.rule == ScreeningRule::static_region || config.rule == ScreeningRule::dst3) {
        ctx = make_reference_context(problem, penalty, partition,
                                     config.rule == ScreeningRule::dst3);
        have_ctx = true;
        out.lambda_max = ctx.lambda_max;
    } else {
        out.lambda_max = lambda_max(problem, penalty, partition);
    }

    const bool generated = path_config.explicit_lambdas.empty();
    if (generated) {
        if (!(out.lambda_max > 0.0))
            throw std::invalid_argument("solve_path: lambda_max is zero, no grid to build");
        out.lambdas = lambda_grid(out.lambda_max, path_config.num_points, path_config.delta);
    } else {
        out.lambdas = path_config.explicit_lambdas;
    }

    Vector warm = Vector::Zero(problem.p());
    for (std::size_t t = 0; t < out.lambdas.size(); ++t) {
        const double lambda = out.lambdas[t];
        if (generated && t == 0) {
            // closed form at the critical parameter
            const auto p0 = std::chrono::steady_clock::now();
            SolveResult r;
            r.beta = Vector::Zero(problem.p());
            r.active = ActiveSet::all_active(partition);
            r.converged = true;
            r.final_gap = 0.0;
            r.final_primal = 0.5 * problem.y().squaredNorm();
            r.gap_trace.emplace_back(0, 0.0);
            if (config.rule != ScreeningRule::none) {
                const DualPoint point =
                    dual_point_from_residual(problem.y(), lambda, out.lambda_max);
                SafeSphere sphere{point.theta, 0.0, SphereKind::gap};
                if (config.rule == ScreeningRule::dst3)
                    sphere = reference_sphere(SphereKind::dst3, problem.y(), lambda, ctx,
                                              &point.theta);
                r.active = apply_screening(sphere, problem, penalty, partition, snorms, r.active);
                r.screening_trace.emplace_back(0, r.active.active_group_count(),
                                               r.active.active_feature_count());
            }
            r.wall_time_sec =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - p0).count();
            out.points.push_back(std::move(r));
            continue;
        }
        SolveResult r = solve(problem, penalty, partition, lambda, warm, config,
                              have_ctx ? &ctx : nullptr, &snorms);
        warm = r.beta;
        out.points.push_back(std::move(r));
    }

    out.wall_time_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

} // namespace sgl
