#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace krrdp {

using Vector = Eigen::VectorXd;
// One state per row.
using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class FactorizationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace krrdp
