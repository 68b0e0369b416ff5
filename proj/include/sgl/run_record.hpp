#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "sgl/solver.hpp"

namespace sgl {

/// Per-lambda slice of a run: effort, convergence, and the active-set
/// fractions observed at each gap evaluation.
struct PointRecord {
    double lambda = 0.0;
    long passes = 0;
    bool converged = false;
    double final_gap = 0.0;
    double objective = 0.0;
    double wall_time_sec = 0.0;
    std::vector<double> active_feature_fraction;
    std::vector<double> active_group_fraction;

    friend bool operator==(const PointRecord&, const PointRecord&) = default;
};

/// One path execution under a single rule and tolerance.
struct RuleRunRecord {
    std::string rule;
    double eps = 0.0;
    std::vector<PointRecord> points;
    double total_wall_time_sec = 0.0;
    double mean_active_feature_fraction = 1.0;
    double mean_active_group_fraction = 1.0;
    bool all_converged = true;

    friend bool operator==(const RuleRunRecord&, const RuleRunRecord&) = default;
};

/// Machine-readable outcome of a CLI invocation: the full effective
/// configuration plus one RuleRunRecord per executed path.
struct RunRecord {
    std::string command;
    nlohmann::json config;
    double lambda_max = 0.0;
    std::vector<RuleRunRecord> runs;

    friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

inline void to_json(nlohmann::json& j, const PointRecord& r)
{
    j = nlohmann::json{{"lambda", r.lambda},
                       {"passes", r.passes},
                       {"converged", r.converged},
                       {"final_gap", r.final_gap},
                       {"objective", r.objective},
                       {"wall_time_sec", r.wall_time_sec},
                       {"active_feature_fraction", r.active_feature_fraction},
                       {"active_group_fraction", r.active_group_fraction}};
}

inline void from_json(const nlohmann::json& j, PointRecord& r)
{
    j.at("lambda").get_to(r.lambda);
    j.at("passes").get_to(r.passes);
    j.at("converged").get_to(r.converged);
    j.at("final_gap").get_to(r.final_gap);
    j.at("objective").get_to(r.objective);
    j.at("wall_time_sec").get_to(r.wall_time_sec);
    j.at("active_feature_fraction").get_to(r.active_feature_fraction);
    j.at("active_group_fraction").get_to(r.active_group_fraction);
}

inline void to_json(nlohmann::json& j, const RuleRunRecord& r)
{
    j = nlohmann::json{{"rule", r.rule},
                       {"eps", r.eps},
                       {"points", r.points},
                       {"total_wall_time_sec", r.total_wall_time_sec},
                       {"mean_active_feature_fraction", r.mean_active_feature_fraction},
                       {"mean_active_group_fraction", r.mean_active_group_fraction},
                       {"all_converged", r.all_converged}};
}

inline void from_json(const nlohmann::json& j, RuleRunRecord& r)
{
    j.at("rule").get_to(r.rule);
    j.at("eps").get_to(r.eps);
    j.at("points").get_to(r.points);
    j.at("total_wall_time_sec").get_to(r.total_wall_time_sec);
    j.at("mean_active_feature_fraction").get_to(r.mean_active_feature_fraction);
    j.at("mean_active_group_fraction").get_to(r.mean_active_group_fraction);
    j.at("all_converged").get_to(r.all_converged);
}

inline void to_json(nlohmann::json& j, const RunRecord& r)
{
    j = nlohmann::json{{"command", r.command},
                       {"config", r.config},
                       {"lambda_max", r.lambda_max},
                       {"runs", r.runs}};
}

inline void from_json(const nlohmann::json& j, RunRecord& r)
{
    j.at("command").get_to(r.command);
    r.config = j.at("config");
    j.at("lambda_max").get_to(r.lambda_max);
    j.at("runs").get_to(r.runs);
}

inline const char* rule_name(ScreeningRule rule)
{
    switch (rule) {
    case ScreeningRule::gap:
        return "gap";
    case ScreeningRule::static_region:
        return "static";
    case ScreeningRule::dynamic_region:
        return "dynamic";
    case ScreeningRule::dst3:
        return "dst3";
    case ScreeningRule::none:
        return "none";
    }
    return "unknown";
}

inline ScreeningRule rule_from_name(const std::string& name)
{
    if (name == "gap")
        return ScreeningRule::gap;
    if (name == "static")
        return ScreeningRule::static_region;
    if (name == "dynamic")
        return ScreeningRule::dynamic_region;
    if (name == "dst3")
        return ScreeningRule::dst3;
    if (name == "none")
        return ScreeningRule::none;
    throw std::invalid_argument("unknown screening rule '" + name + "'");
}

/// Flattens a solved path into a record row. Active fractions are sampled at
/// every gap evaluation; without screening they stay at the full set.
inline RuleRunRecord make_rule_record(ScreeningRule rule, double eps, const PathResult& path)
{
    RuleRunRecord rec;
    rec.rule = rule_name(rule);
    rec.eps = eps;
    rec.total_wall_time_sec = path.wall_time_sec;

    double frac_feat_sum = 0.0, frac_group_sum = 0.0;
    long frac_count = 0;
    for (std::size_t t = 0; t < path.points.size(); ++t) {
        const SolveResult& res = path.points[t];
        const auto num_groups = static_cast<double>(res.active.groups.size());
        const auto num_features = static_cast<double>(res.active.features.size());

        PointRecord pt;
        pt.lambda = path.lambdas[t];
        pt.passes = static_cast<long>(res.passes_used);
        pt.converged = res.converged;
        pt.final_gap = res.final_gap;
        pt.objective = res.final_primal;
        pt.wall_time_sec = res.wall_time_sec;

        std::size_t si = 0;
        double cur_groups = num_groups, cur_features = num_features;
        for (const auto& [pass, gap] : res.gap_trace) {
            while (si < res.screening_trace.size() && std::get<0>(res.screening_trace[si]) <= pass) {
                cur_groups = static_cast<double>(std::get<1>(res.screening_trace[si]));
                cur_features = static_cast<double>(std::get<2>(res.screening_trace[si]));
                ++si;
            }
            pt.active_group_fraction.push_back(cur_groups / num_groups);
            pt.active_feature_fraction.push_back(cur_features / num_features);
            frac_group_sum += cur_groups / num_groups;
            frac_feat_sum += cur_features / num_features;
            ++frac_count;
        }
        rec.all_converged = rec.all_converged && res.converged;
        rec.points.push_back(std::move(pt));
    }
    if (frac_count > 0) {
        rec.mean_active_feature_fraction = frac_feat_sum / static_cast<double>(frac_count);
        rec.mean_active_group_fraction = frac_group_sum / static_cast<double>(frac_count);
    }
    return rec;
}

} // namespace sgl
