#pragma once

#include "sptycho/field.hpp"
#include "sptycho/simulate.hpp"
#include "sptycho/trajectory.hpp"

namespace sptycho {

// Location and quality of a phase-correlation peak. `shift_int` is the
// translation of the second image relative to the first, disambiguated to
// the representative in [-M/2, M/2) per axis; `subpixel` refines it from a
// 3x3 parabolic fit and stays inside (-1, 1).
struct CorrelationPeak {
  Eigen::Vector2i shift_int = Eigen::Vector2i::Zero();
  Eigen::Vector2d subpixel = Eigen::Vector2d::Zero();
  double sharpness = 0.0;  // peak over mean of the correlation surface, >= 1

  Eigen::Vector2d shift() const { return shift_int.cast<double>() + subpixel; }
  bool reliable() const { return sharpness >= 3.0; }
};

// Shift of frame_b relative to frame_a from the normalized cross-power
// spectrum of the mean-subtracted, Hann-windowed frames.
CorrelationPeak phase_correlate(const ArrayXXd& frame_a, const ArrayXXd& frame_b);

enum class RegistrationMode { chain, to_reference };

// Speckle-shift trajectory for the whole stack, reported relative to frame
// 0. Chain mode correlates consecutive frames and accumulates; to-reference
// correlates everything against frame 0. Fails when more than 25% of the
// pairs are unreliable.
ScanTrajectory estimate_trajectory(const FrameStack& frames, RegistrationMode mode = RegistrationMode::chain);

}  // namespace sptycho
