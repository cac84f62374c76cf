#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <functional>
#include <stdexcept>
#include <string>

namespace romdot {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

/// Matrix-free symmetric operator x -> A x.
using LinOp = std::function<Vec(const Vec&)>;

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct SolverError : std::runtime_error {
    explicit SolverError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace romdot
