#include "sptycho/metrics.hpp"

#include <cmath>
#include <complex>

namespace sptycho {

namespace {

void check_mask(const ArrayXXcd& a, const ArrayXXcd& b, const Rect& mask, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ValidationError(std::string(what) + ": grid mismatch");
  if (mask.empty()) throw ValidationError(std::string(what) + ": empty mask");
  if (mask.r0 < 0 || mask.c0 < 0 || mask.r0 + mask.rows > a.rows() || mask.c0 + mask.cols > a.cols())
    throw ValidationError(std::string(what) + ": mask exceeds the grid");
}

std::complex<double> alignment_scale(const ArrayXXcd& recovered, const ArrayXXcd& truth, const Rect& mask) {
  std::complex<double> num = 0.0;
  double den = 0.0;
  for (Index c = mask.c0; c < mask.c0 + mask.cols; ++c)
    for (Index r = mask.r0; r < mask.r0 + mask.rows; ++r) {
      num += std::conj(recovered(r, c)) * truth(r, c);
      den += std::norm(recovered(r, c));
    }
  return den > 0.0 ? num / den : std::complex<double>(0.0, 0.0);
}

double truth_energy(const ArrayXXcd& truth, const Rect& mask, const char* what) {
  double e = 0.0;
  for (Index c = mask.c0; c < mask.c0 + mask.cols; ++c)
    for (Index r = mask.r0; r < mask.r0 + mask.rows; ++r)
      e += std::norm(truth(r, c));
  if (!(e > 0.0)) throw ValidationError(std::string(what) + ": truth has zero energy on the mask");
  return e;
}

}  // namespace

double phase_aligned_rmse(const ArrayXXcd& recovered, const ArrayXXcd& truth, const Rect& mask) {
  check_mask(recovered, truth, mask, "phase_aligned_rmse");
  const double energy = truth_energy(truth, mask, "phase_aligned_rmse");
  const std::complex<double> scale = alignment_scale(recovered, truth, mask);
  double err = 0.0;
  for (Index c = mask.c0; c < mask.c0 + mask.cols; ++c)
    for (Index r = mask.r0; r < mask.r0 + mask.rows; ++r)
      err += std::norm(scale * recovered(r, c) - truth(r, c));
  return std::sqrt(err / energy);
}

double amplitude_rmse(const ArrayXXcd& recovered, const ArrayXXcd& truth, const Rect& mask) {
  check_mask(recovered, truth, mask, "amplitude_rmse");
  const double energy = truth_energy(truth, mask, "amplitude_rmse");
  const double scale = std::abs(alignment_scale(recovered, truth, mask));
  double err = 0.0;
  for (Index c = mask.c0; c < mask.c0 + mask.cols; ++c)
    for (Index r = mask.r0; r < mask.r0 + mask.rows; ++r) {
      const double d = scale * std::abs(recovered(r, c)) - std::abs(truth(r, c));
      err += d * d;
    }
  return std::sqrt(err / energy);
}

double phase_rms_error(const ArrayXXcd& recovered, const ArrayXXcd& truth, const Rect& mask) {
  check_mask(recovered, truth, mask, "phase_rms_error");
  truth_energy(truth, mask, "phase_rms_error");
  std::complex<double> piston = 0.0;
  for (Index c = mask.c0; c < mask.c0 + mask.cols; ++c)
    for (Index r = mask.r0; r < mask.r0 + mask.rows; ++r)
      piston += std::norm(truth(r, c)) *
                std::polar(1.0, std::arg(recovered(r, c) * std::conj(truth(r, c))));
  const double p = std::arg(piston);
  double num = 0.0, den = 0.0;
  for (Index c = mask.c0; c < mask.c0 + mask.cols; ++c)
    for (Index r = mask.r0; r < mask.r0 + mask.rows; ++r) {
      const double w = std::norm(truth(r, c));
      double e = std::arg(recovered(r, c) * std::conj(truth(r, c))) - p;
      e = std::remainder(e, 2.0 * M_PI);
      num += w * e * e;
      den += w;
    }
  return std::sqrt(num / den);
}

double profile_contrast(const ArrayXXd& intensity, const Rect& region) {
  if (region.empty()) throw ValidationError("profile_contrast: empty region");
  if (region.r0 < 0 || region.c0 < 0 || region.r0 + region.rows > intensity.rows() ||
      region.c0 + region.cols > intensity.cols())
    throw ValidationError("profile_contrast: region exceeds the image");

  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (Index c = region.c0; c < region.c0 + region.cols; ++c) {
    double acc = 0.0;
    for (Index r = region.r0; r < region.r0 + region.rows; ++r) acc += intensity(r, c);
    const double v = acc / region.rows;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double denom = hi + lo;
  return denom > 0.0 ? (hi - lo) / denom : 0.0;
}

double bar_contrast(const ArrayXXcd& recovered, int period_px, const Rect& region) {
  if (period_px < 2) throw ValidationError("bar_contrast: period below 2 pixels is not resolvable");
  ArrayXXd intensity = recovered.abs2();
  return profile_contrast(intensity, region);
}

HeightProfile phase_height_profile(const ArrayXXcd& recovered, double pitch_um, double wavelength_um,
                                   double refractive_delta, Eigen::Vector2d start_rc,
                                   Eigen::Vector2d end_rc, int samples) {
  if (samples < 2) throw ValidationError("phase_height_profile: need at least 2 samples");
  if (!(pitch_um > 0.0 && wavelength_um > 0.0) || refractive_delta == 0.0)
    throw ValidationError("phase_height_profile: bad physical parameters");

  HeightProfile profile;
  profile.position_um.reserve(samples);
  profile.height_um.reserve(samples);

  const double h_per_rad = wavelength_um / (2.0 * M_PI * refractive_delta);
  double prev_phase = 0.0;
  double offset = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double t = static_cast<double>(i) / (samples - 1);
    const Eigen::Vector2d rc = start_rc + t * (end_rc - start_rc);
    const Index r = std::clamp<Index>(static_cast<Index>(std::llround(rc.x())), 0, recovered.rows() - 1);
    const Index c = std::clamp<Index>(static_cast<Index>(std::llround(rc.y())), 0, recovered.cols() - 1);
    const std::complex<double> v = recovered(r, c);
    if (std::abs(v) <= 0.0)
      throw ValidationError("phase_height_profile: zero magnitude on the path");
    double phase = std::arg(v);
    if (i > 0) {
      // 1D unwrap: fold jumps beyond pi back by 2 pi
      while (phase + offset - prev_phase > M_PI) offset -= 2.0 * M_PI;
      while (phase + offset - prev_phase < -M_PI) offset += 2.0 * M_PI;
      if (std::abs(phase + offset - prev_phase) > M_PI / 2.0) profile.unwrap_suspect = true;
    }
    prev_phase = phase + offset;
    profile.position_um.push_back(t * (end_rc - start_rc).norm() * pitch_um);
    profile.height_um.push_back(prev_phase * h_per_rad);
  }
  return profile;
}

}  // namespace sptycho
