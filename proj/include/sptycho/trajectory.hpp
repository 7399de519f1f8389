#pragma once

#include <Eigen/Core>

#include <vector>

namespace sptycho {

// Per-frame 2D positional shifts (x_j, y_j) of the speckle pattern in
// detector-pixel units, relative to the reference frame whose shift is
// (0, 0). `sharpness` carries per-frame registration confidence when the
// trajectory came from phase correlation; it is empty for synthetic truth.
struct ScanTrajectory {
  std::vector<Eigen::Vector2d> shifts;
  int reference = 0;
  std::vector<double> sharpness;

  std::size_t size() const { return shifts.size(); }
};

}  // namespace sptycho
