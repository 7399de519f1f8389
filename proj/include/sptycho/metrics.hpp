#pragma once

#include <vector>

#include "sptycho/field.hpp"

namespace sptycho {

// Relative RMSE of a recovered complex field against truth over a mask,
// with the global complex scale c* = argmin |c O_rec - O_true| removed in
// closed form; invariant under O_rec -> a O_rec by construction.
double phase_aligned_rmse(const ArrayXXcd& recovered, const ArrayXXcd& truth, const Rect& mask);

// Amplitude-only relative RMSE after the same complex alignment.
double amplitude_rmse(const ArrayXXcd& recovered, const ArrayXXcd& truth, const Rect& mask);

// RMS of the wrapped phase error in radians, after removing the global
// piston (circular mean weighted by |truth|^2).
double phase_rms_error(const ArrayXXcd& recovered, const ArrayXXcd& truth, const Rect& mask);

// Michelson contrast (Imax - Imin)/(Imax + Imin) of the column profile of
// an intensity image averaged over the region's rows.
double profile_contrast(const ArrayXXd& intensity, const Rect& region);

// Same, from the squared magnitude of a recovered field; the stated bar
// period (in this grid's pixels) must be resolvable on the grid.
double bar_contrast(const ArrayXXcd& recovered, int period_px, const Rect& region);

struct HeightProfile {
  std::vector<double> position_um;
  std::vector<double> height_um;
  bool unwrap_suspect = false;  // a post-unwrap step still exceeded pi/2
};

// Unwrapped phase along the segment from (r0,c0) to (r1,c1), converted to
// physical height h = phi lambda / (2 pi dn).
HeightProfile phase_height_profile(const ArrayXXcd& recovered, double pitch_um, double wavelength_um,
                                   double refractive_delta, Eigen::Vector2d start_rc,
                                   Eigen::Vector2d end_rc, int samples);

struct EvalReport {
  double rmse = 0.0;
  double amp_rmse = 0.0;
  double phase_rms = 0.0;
  Rect mask;
  // optional extras, set when the scene geometry is known
  double bar_contrast_value = -1.0;
  int bar_period_px = 0;
  double trajectory_rms_px = -1.0;
  double trajectory_max_px = -1.0;
};

}  // namespace sptycho
