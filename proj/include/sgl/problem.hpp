#pragma once

#include <stdexcept>
#include <utility>

#include <Eigen/Core>

#include "sgl/partition.hpp"

namespace sgl {

/// Regression data: dense design matrix X (n x p, column access) and
/// response y, with column norms precomputed once.
class Problem {
public:
    Problem(Matrix X, Vector y) : X_(std::move(X)), y_(std::move(y))
    {
        if (X_.rows() != y_.size())
            throw std::invalid_argument("Problem: X and y row counts differ");
        if (X_.cols() == 0 || X_.rows() == 0)
            throw std::invalid_argument("Problem: empty design matrix");
        col_norms_ = X_.colwise().norm();
    }

    Index n() const { return X_.rows(); }
    Index p() const { return X_.cols(); }
    const Matrix& X() const { return X_; }
    const Vector& y() const { return y_; }
    const Vector& col_norms() const { return col_norms_; }
    double col_norm(Index j) const { return col_norms_[j]; }

private:
    Matrix X_;
    Vector y_;
    Vector col_norms_;
};

} // namespace sgl
