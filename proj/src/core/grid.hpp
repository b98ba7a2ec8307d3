#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "core/functionals.hpp"

namespace mfggp {

/// Uniform evaluation grid over a box. Nodes along axis a are
/// lo[a] + i * (hi[a] - lo[a]) / shape[a] for i in [0, shape[a]): the node set
/// tiles one period of the torus without duplicating the seam. Values are
/// stored row-major with the last axis fastest.
struct Grid {
  std::vector<int> shape;
  Eigen::VectorXd lo, hi;
  Eigen::VectorXd values;

  Eigen::Index size() const { return values.size(); }
  Eigen::VectorXd node(Eigen::Index flat) const;
};

Grid make_grid(const Box& box, const std::vector<int>& shape);

/// Evaluates a field on the grid nodes (value only).
Grid eval_on_grid(const FieldFn& field, const Box& box, const std::vector<int>& shape,
                  unsigned threads = 0);

/// sqrt(mean over grid nodes of (a - b)^2). Requires identical shapes.
double l2_grid_error(const Grid& a, const Grid& b);

/// Mean of the values times the box volume: the grid approximation of the
/// integral over the torus.
double grid_integral(const Grid& g);

void write_grid_csv(const Grid& g, const std::string& path);
Grid read_grid_csv(const std::string& path);

}  // namespace mfggp
