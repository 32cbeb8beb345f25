#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace bonet {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

// Flat view of all trainable parameters of a network. Layout is layer-major:
// for each layer, the weight matrix in row-major order followed by the bias.
using ParamVector = Eigen::VectorXd;

// Thrown when an input does not match the shape a routine expects.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Thrown when a configuration value violates a documented constraint.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Thrown when an iteration produces non-finite values or a solver blows up.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace bonet
