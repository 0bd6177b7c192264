#pragma once

#include <vector>

#include <Eigen/Core>

namespace cel {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// One supervised window: a short sequence of lag vectors and the scalar that
// immediately follows the last window.
struct Sample {
  std::vector<Vector> inputs;
  double target = 0.0;
};

using Batch = std::vector<Sample>;

}  // namespace cel
