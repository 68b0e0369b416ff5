#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "sgl/partition.hpp"
#include "sgl/problem.hpp"

namespace sgl {

/// Synthetic benchmark design: rows of X are i.i.d. Gaussian with
/// corr(X_i, X_j) = rho^|i-j|, groups are a random permutation of [p] cut
/// into contiguous blocks, gamma1 groups carry gamma2 nonzero coefficients
/// each, and y = X beta + noise_scale * standard normal noise.
struct SyntheticConfig {
    Index n = 100;
    Index p = 10000;
    Index group_size = 10;
    double rho = 0.5;
    Index gamma1 = 10;
    Index gamma2 = 4;
    double noise_scale = 0.01;
    std::uint64_t seed = 0;
};

struct SyntheticData {
    Problem problem;
    GroupPartition partition;
    Vector true_beta;
};

inline SyntheticData generate_synthetic(const SyntheticConfig& config)
{
    if (config.n < 1 || config.p < 1)
        throw std::invalid_argument("generate_synthetic: n and p must be positive");
    if (config.group_size < 1 || config.p % config.group_size != 0)
        throw std::invalid_argument("generate_synthetic: p must be divisible by group_size");
    const Index num_groups = config.p / config.group_size;
    if (config.gamma1 < 0 || config.gamma1 > num_groups)
        throw std::invalid_argument("generate_synthetic: gamma1 exceeds the number of groups");
    if (config.gamma2 < 0 || config.gamma2 > config.group_size)
        throw std::invalid_argument("generate_synthetic: gamma2 exceeds the group size");
    if (!(config.rho >= 0.0 && config.rho < 1.0))
        throw std::invalid_argument("generate_synthetic: rho must lie in [0,1)");

    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    // AR(1) recurrence per row gives corr(X_i, X_j) = rho^|i-j| exactly.
    Matrix X(config.n, config.p);
    const double blend = std::sqrt(1.0 - config.rho * config.rho);
    for (Index i = 0; i < config.n; ++i) {
        double z = gauss(rng);
        X(i, 0) = z;
        for (Index j = 1; j < config.p; ++j) {
            z = config.rho * z + blend * gauss(rng);
            X(i, j) = z;
        }
    }

    std::vector<Index> perm(static_cast<std::size_t>(config.p));
    std::iota(perm.begin(), perm.end(), Index{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<std::vector<Index>> groups(static_cast<std::size_t>(num_groups));
    for (Index j = 0; j < config.p; ++j)
        groups[static_cast<std::size_t>(j / config.group_size)].push_back(
            perm[static_cast<std::size_t>(j)]);

    std::vector<Index> group_ids(static_cast<std::size_t>(num_groups));
    std::iota(group_ids.begin(), group_ids.end(), Index{0});
    std::vector<Index> active_groups;
    std::sample(group_ids.begin(), group_ids.end(), std::back_inserter(active_groups),
                static_cast<std::size_t>(config.gamma1), rng);

    std::uniform_real_distribution<double> magnitude(0.5, 10.0);
    std::uniform_real_distribution<double> sign_draw(-1.0, 1.0);
    Vector beta = Vector::Zero(config.p);
    for (Index g : active_groups) {
        std::vector<Index> coords;
        std::sample(groups[static_cast<std::size_t>(g)].begin(),
                    groups[static_cast<std::size_t>(g)].end(), std::back_inserter(coords),
                    static_cast<std::size_t>(config.gamma2), rng);
        for (Index j : coords) {
            const double sgn = sign_draw(rng) < 0.0 ? -1.0 : 1.0;
            beta[j] = sgn * magnitude(rng);
        }
    }

    Vector y = X * beta;
    for (Index i = 0; i < config.n; ++i)
        y[i] += config.noise_scale * gauss(rng);

    return SyntheticData{Problem(std::move(X), std::move(y)),
                         GroupPartition(config.p, std::move(groups)), std::move(beta)};
}

namespace detail {

inline std::string format_double(double v)
{
    std::array<char, 32> buf;
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

inline double parse_double(const std::string& token, const std::string& where)
{
    double v = 0.0;
    const char* first = token.data();
    const char* last = token.data() + token.size();
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc{} || res.ptr != last)
        throw std::runtime_error(where + ": cannot parse number '" + token + "'");
    return v;
}

inline void write_u64_le(std::ostream& os, std::uint64_t v)
{
    std::array<char, 8> b;
    for (int i = 0; i < 8; ++i)
        b[static_cast<std::size_t>(i)] = static_cast<char>((v >> (8 * i)) & 0xff);
    os.write(b.data(), 8);
}

inline std::uint64_t read_u64_le(std::istream& is)
{
    std::array<unsigned char, 8> b;
    is.read(reinterpret_cast<char*>(b.data()), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
        v |= static_cast<std::uint64_t>(b[static_cast<std::size_t>(i)]) << (8 * i);
    return v;
}

inline void write_f64_le(std::ostream& os, double d)
{
    write_u64_le(os, std::bit_cast<std::uint64_t>(d));
}

inline double read_f64_le(std::istream& is)
{
    return std::bit_cast<double>(read_u64_le(is));
}

} // namespace detail

inline constexpr char kMatrixMagic[4] = {'S', 'G', 'L', 'B'};

/// Binary matrix layout: magic "SGLB", two little-endian uint64 dims (n, p),
/// then n*p little-endian IEEE-754 doubles in row-major order.
inline void save_matrix_binary(const std::string& path, const Matrix& X)
{
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw std::runtime_error("save_matrix_binary: cannot open " + path);
    os.write(kMatrixMagic, 4);
    detail::write_u64_le(os, static_cast<std::uint64_t>(X.rows()));
    detail::write_u64_le(os, static_cast<std::uint64_t>(X.cols()));
    for (Index i = 0; i < X.rows(); ++i)
        for (Index j = 0; j < X.cols(); ++j)
            detail::write_f64_le(os, X(i, j));
    if (!os)
        throw std::runtime_error("save_matrix_binary: write failed for " + path);
}

inline Matrix load_matrix_binary(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw std::runtime_error("load_matrix_binary: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMatrixMagic, 4) != 0)
        throw std::runtime_error("load_matrix_binary: " + path + " lacks the SGLB magic");
    const auto n = static_cast<Index>(detail::read_u64_le(is));
    const auto p = static_cast<Index>(detail::read_u64_le(is));
    Matrix X(n, p);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < p; ++j)
            X(i, j) = detail::read_f64_le(is);
    if (!is)
        throw std::runtime_error("load_matrix_binary: " + path + " is truncated");
    return X;
}

inline void save_matrix_csv(const std::string& path, const Matrix& X)
{
    std::ofstream os(path);
    if (!os)
        throw std::runtime_error("save_matrix_csv: cannot open " + path);
    std::string line;
    for (Index i = 0; i < X.rows(); ++i) {
        line.clear();
        for (Index j = 0; j < X.cols(); ++j) {
            if (j > 0)
                line += ',';
            line += detail::format_double(X(i, j));
        }
        line += '\n';
        os << line;
    }
    if (!os)
        throw std::runtime_error("save_matrix_csv: write failed for " + path);
}

inline Matrix load_matrix_csv(const std::string& path)
{
    std::ifstream is(path);
    if (!is)
        throw std::runtime_error("load_matrix_csv: cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    Index ncols = -1;
    Index lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty())
            continue;
        std::vector<double> row;
        std::size_t start = 0;
        while (start <= line.size()) {
            std::size_t comma = line.find(',', start);
            if (comma == std::string::npos)
                comma = line.size();
            row.push_back(detail::parse_double(line.substr(start, comma - start),
                                               path + ":" + std::to_string(lineno)));
            start = comma + 1;
        }
        if (ncols == -1)
            ncols = static_cast<Index>(row.size());
        else if (static_cast<Index>(row.size()) != ncols)
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected " +
                                     std::to_string(ncols) + " values, got " +
                                     std::to_string(row.size()));
        rows.push_back(std::move(row));
    }
    if (rows.empty())
        throw std::runtime_error(path + ": no data rows");
    Matrix X(static_cast<Index>(rows.size()), ncols);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (Index j = 0; j < ncols; ++j)
            X(static_cast<Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
    return X;
}

/// Loads a design matrix, accepting either the binary layout (recognized by
/// its magic bytes) or headerless CSV.
inline Matrix load_matrix(const std::string& path)
{
    std::ifstream probe(path, std::ios::binary);
    if (!probe)
        throw std::runtime_error("load_matrix: cannot open " + path);
    char magic[4] = {0, 0, 0, 0};
    probe.read(magic, 4);
    probe.close();
    if (std::memcmp(magic, kMatrixMagic, 4) == 0)
        return load_matrix_binary(path);
    return load_matrix_csv(path);
}

inline void save_vector_csv(const std::string& path, const Vector& v)
{
    std::ofstream os(path);
    if (!os)
        throw std::runtime_error("save_vector_csv: cannot open " + path);
    for (Index i = 0; i < v.size(); ++i)
        os << detail::format_double(v[i]) << '\n';
    if (!os)
        throw std::runtime_error("save_vector_csv: write failed for " + path);
}

inline Vector load_vector_csv(const std::string& path)
{
    std::ifstream is(path);
    if (!is)
        throw std::runtime_error("load_vector_csv: cannot open " + path);
    std::vector<double> vals;
    std::string line;
    Index lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty())
            continue;
        vals.push_back(detail::parse_double(line, path + ":" + std::to_string(lineno)));
    }
    return Eigen::Map<const Vector>(vals.data(), static_cast<Index>(vals.size()));
}

/// Groups file: one line per group with space-separated 0-based feature
/// indices, optionally followed by "| weight". Missing weights default to
/// sqrt of the group size.
inline void save_groups(const std::string& path, const GroupPartition& partition,
                        const Vector& weights)
{
    if (weights.size() != partition.num_groups())
        throw std::invalid_argument("save_groups: one weight per group required");
    std::ofstream os(path);
    if (!os)
        throw std::runtime_error("save_groups: cannot open " + path);
    for (Index g = 0; g < partition.num_groups(); ++g) {
        std::string line;
        for (Index j : partition.group(g)) {
            if (!line.empty())
                line += ' ';
            line += std::to_string(j);
        }
        line += " | ";
        line += detail::format_double(weights[g]);
        os << line << '\n';
    }
    if (!os)
        throw std::runtime_error("save_groups: write failed for " + path);
}

struct LoadedGroups {
    std::vector<std::vector<Index>> groups;
    Vector weights;
};

inline LoadedGroups load_groups(const std::string& path, Index p)
{
    std::ifstream is(path);
    if (!is)
        throw std::runtime_error("load_groups: cannot open " + path);
    LoadedGroups out;
    std::vector<double> weights;
    std::vector<Index> owner(static_cast<std::size_t>(p), -1);
    std::string line;
    Index lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty())
            continue;
        const std::string where = path + ":" + std::to_string(lineno);
        std::string index_part = line;
        double weight = -1.0;
        bool have_weight = false;
        if (const auto bar = line.find('|'); bar != std::string::npos) {
            index_part = line.substr(0, bar);
            weight = detail::parse_double(
                [&] {
                    std::string w = line.substr(bar + 1);
                    const auto b = w.find_first_not_of(" \t");
                    const auto e = w.find_last_not_of(" \t");
                    return b == std::string::npos ? std::string() : w.substr(b, e - b + 1);
                }(),
                where);
            have_weight = true;
        }

        std::vector<Index> idx;
        std::size_t pos = 0;
        while (pos < index_part.size()) {
            while (pos < index_part.size() && std::isspace(static_cast<unsigned char>(index_part[pos])))
                ++pos;
            if (pos >= index_part.size())
                break;
            std::size_t end = pos;
            while (end < index_part.size() && !std::isspace(static_cast<unsigned char>(index_part[end])))
                ++end;
            const std::string token = index_part.substr(pos, end - pos);
            long long j = -1;
            const auto res = std::from_chars(token.data(), token.data() + token.size(), j);
            if (res.ec != std::errc{} || res.ptr != token.data() + token.size())
                throw std::runtime_error(where + ": cannot parse index '" + token + "'");
            if (j < 0 || j >= p)
                throw std::runtime_error(where + ": index " + token + " out of range for p = " +
                                         std::to_string(p));
            if (owner[static_cast<std::size_t>(j)] != -1)
                throw std::runtime_error(where + ": feature " + token +
                                         " already assigned to group " +
                                         std::to_string(owner[static_cast<std::size_t>(j)]));
            owner[static_cast<std::size_t>(j)] = static_cast<Index>(out.groups.size());
            idx.push_back(static_cast<Index>(j));
            pos = end;
        }
        if (idx.empty())
            throw std::runtime_error(where + ": group has no feature indices");
        weights.push_back(have_weight ? weight
                                      : std::sqrt(static_cast<double>(idx.size())));
        if (weights.back() < 0.0)
            throw std::runtime_error(where + ": negative group weight");
        out.groups.push_back(std::move(idx));
    }
    for (Index j = 0; j < p; ++j)
        if (owner[static_cast<std::size_t>(j)] == -1)
            throw std::runtime_error(path + ": feature " + std::to_string(j) +
                                     " not covered by any group");
    out.weights = Eigen::Map<const Vector>(weights.data(), static_cast<Index>(weights.size()));
    return out;
}

struct LoadedProblem {
    Problem problem;
    GroupPartition partition;
    Vector weights;
};

inline LoadedProblem load_problem(const std::string& x_path, const std::string& y_path,
                                  const std::string& groups_path)
{
    Matrix X = load_matrix(x_path);
    Vector y = load_vector_csv(y_path);
    if (y.size() != X.rows())
        throw std::runtime_error(y_path + ": " + std::to_string(y.size()) +
                                 " responses for " + std::to_string(X.rows()) + " rows of X");
    const Index p = X.cols();
    auto groups = load_groups(groups_path, p);
    GroupPartition partition(p, std::move(groups.groups));
    return LoadedProblem{Problem(std::move(X), std::move(y)), std::move(partition),
                         std::move(groups.weights)};
}

/// Augmented design for the Elastic-Net reduction: stacking sqrt(lambda2) I
/// under X and zeros under y makes the ridge term part of the fit.
inline Problem elastic_net_augment(const Problem& problem, double lambda2)
{
    if (!(lambda2 >= 0.0))
        throw std::invalid_argument("elastic_net_augment: lambda2 must be nonnegative");
    const Index n = problem.n(), p = problem.p();
    Matrix Xt(n + p, p);
    Xt.topRows(n) = problem.X();
    Xt.bottomRows(p) = std::sqrt(lambda2) * Matrix::Identity(p, p);
    Vector yt = Vector::Zero(n + p);
    yt.head(n) = problem.y();
    return Problem(std::move(Xt), std::move(yt));
}

} // namespace sgl
