#pragma once

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace sgl {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Disjoint feature groups covering [0, p). Groups are arbitrary index sets,
/// stored in the order given and never reordered.
class GroupPartition {
public:
    GroupPartition(Index p, std::vector<std::vector<Index>> groups)
        : p_(p), groups_(std::move(groups)), group_of_(static_cast<std::size_t>(p), -1)
    {
        if (p <= 0)
            throw std::invalid_argument("GroupPartition: p must be positive");
        if (groups_.empty())
            throw std::invalid_argument("GroupPartition: no groups given");
        for (std::size_t g = 0; g < groups_.size(); ++g) {
            if (groups_[g].empty())
                throw std::invalid_argument(
                    "GroupPartition: group " + std::to_string(g) + " is empty");
            for (Index j : groups_[g]) {
                if (j < 0 || j >= p)
                    throw std::invalid_argument(
                        "GroupPartition: feature index " + std::to_string(j) + " out of range");
                if (group_of_[static_cast<std::size_t>(j)] != -1)
                    throw std::invalid_argument(
                        "GroupPartition: feature " + std::to_string(j) +
                        " assigned to more than one group");
                group_of_[static_cast<std::size_t>(j)] = static_cast<Index>(g);
            }
        }
        for (Index j = 0; j < p; ++j)
            if (group_of_[static_cast<std::size_t>(j)] == -1)
                throw std::invalid_argument(
                    "GroupPartition: feature " + std::to_string(j) + " not covered by any group");
    }

    /// Contiguous blocks of equal size. p must be divisible by group_size.
    static GroupPartition contiguous(Index p, Index group_size)
    {
        if (group_size <= 0 || p % group_size != 0)
            throw std::invalid_argument("GroupPartition::contiguous: p not divisible by group size");
        std::vector<std::vector<Index>> groups(static_cast<std::size_t>(p / group_size));
        for (Index j = 0; j < p; ++j)
            groups[static_cast<std::size_t>(j / group_size)].push_back(j);
        return GroupPartition(p, std::move(groups));
    }

    Index p() const { return p_; }
    Index num_groups() const { return static_cast<Index>(groups_.size()); }
    const std::vector<Index>& group(Index g) const { return groups_[static_cast<std::size_t>(g)]; }
    Index group_size(Index g) const { return static_cast<Index>(group(g).size()); }
    Index group_of(Index j) const { return group_of_[static_cast<std::size_t>(j)]; }

private:
    Index p_;
    std::vector<std::vector<Index>> groups_;
    std::vector<Index> group_of_;
};

/// Default group weights w_g = sqrt(n_g).
inline Vector sqrt_size_weights(const GroupPartition& partition)
{
    Vector w(partition.num_groups());
    for (Index g = 0; g < partition.num_groups(); ++g)
        w[g] = std::sqrt(static_cast<double>(partition.group_size(g)));
    return w;
}

/// Gather v restricted to the given index set into out (resized as needed).
inline void gather(const Vector& v, const std::vector<Index>& idx, Vector& out)
{
    out.resize(static_cast<Index>(idx.size()));
    for (std::size_t l = 0; l < idx.size(); ++l)
        out[static_cast<Index>(l)] = v[idx[l]];
}

} // namespace sgl
