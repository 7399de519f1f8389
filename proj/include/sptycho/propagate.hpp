#pragma once

#include <cmath>

#include "sptycho/fft.hpp"
#include "sptycho/field.hpp"

namespace sptycho {

// Signed DFT frequency of bin k on an n-sample axis with the given pitch,
// standard (unshifted) ordering; |f| tops out at 1/(2*pitch).
inline double dft_frequency(Index k, Index n, double pitch_um) {
  const Index signed_k = 2 * k <= n ? k : k - n;
  return static_cast<double>(signed_k) / (static_cast<double>(n) * pitch_um);
}

// Angular-spectrum transfer function exp(i 2 pi d sqrt(1/lambda^2 - f^2))
// sampled on the DFT frequency grid. Unit modulus on the propagating band,
// zero on evanescent bins, so propagation is unitary and exactly inverted
// by the opposite distance.
template <typename Scalar>
struct PropagationKernel {
  ComplexArray<Scalar> values;
  double distance_um = 0.0;
  double pitch_um = 1.0;
  double wavelength_um = 0.532;

  Index rows() const { return values.rows(); }
  Index cols() const { return values.cols(); }
};

template <typename Scalar = double>
PropagationKernel<Scalar> make_kernel(Index rows, Index cols, double pitch_um,
                                      double wavelength_um, double distance_um) {
  if (rows < 1 || cols < 1) throw ValidationError("make_kernel: empty grid");
  if (!(pitch_um > 0.0)) throw ValidationError("make_kernel: pitch must be positive");
  if (!(wavelength_um > 0.0)) throw ValidationError("make_kernel: wavelength must be positive");

  PropagationKernel<Scalar> k;
  k.values.resize(rows, cols);
  k.distance_um = distance_um;
  k.pitch_um = pitch_um;
  k.wavelength_um = wavelength_um;

  const double inv_lambda_sq = 1.0 / (wavelength_um * wavelength_um);
  for (Index c = 0; c < cols; ++c) {
    const double fx = dft_frequency(c, cols, pitch_um);
    for (Index r = 0; r < rows; ++r) {
      const double fy = dft_frequency(r, rows, pitch_um);
      const double arg = inv_lambda_sq - fx * fx - fy * fy;
      if (arg >= 0.0) {
        const double phase = 2.0 * M_PI * distance_um * std::sqrt(arg);
        k.values(r, c) = std::complex<Scalar>(static_cast<Scalar>(std::cos(phase)),
                                              static_cast<Scalar>(std::sin(phase)));
      } else {
        k.values(r, c) = std::complex<Scalar>(0, 0);
      }
    }
  }
  return k;
}

// Free-space propagation over distance_um: inverse DFT of the kernel applied
// to the field's spectrum.
template <typename Scalar>
ComplexField<Scalar> propagate(const ComplexField<Scalar>& f, const PropagationKernel<Scalar>& kernel) {
  validate_field(f, "propagate");
  if (kernel.rows() != f.rows() || kernel.cols() != f.cols())
    throw ValidationError("propagate: kernel/field grid mismatch");
  ComplexArray<Scalar> spec(f.rows(), f.cols());
  fft::transform2d(f.data, spec, false);
  const Scalar scale = static_cast<Scalar>(1.0 / static_cast<double>(f.data.size()));
  spec *= kernel.values * scale;
  ComplexField<Scalar> out;
  out.pitch_um = f.pitch_um;
  out.wavelength_um = f.wavelength_um;
  out.data.resize(f.rows(), f.cols());
  fft::transform2d(spec, out.data, true);
  return out;
}

template <typename Scalar>
ComplexField<Scalar> propagate(const ComplexField<Scalar>& f, double distance_um) {
  validate_field(f, "propagate");
  const auto kernel = make_kernel<Scalar>(f.rows(), f.cols(), f.pitch_um, f.wavelength_um, distance_um);
  return propagate(f, kernel);
}

// Sub-pixel shift via a Fourier-domain phase ramp; coincides with
// circular_shift at integer offsets.
template <typename Scalar>
ComplexField<Scalar> fourier_shift(const ComplexField<Scalar>& f, double dx, double dy) {
  validate_field(f, "fourier_shift");
  ComplexArray<Scalar> spec(f.rows(), f.cols());
  fft::transform2d(f.data, spec, false);
  const double scale = 1.0 / static_cast<double>(f.data.size());
  for (Index c = 0; c < f.cols(); ++c) {
    const double fx = dft_frequency(c, f.cols(), 1.0);
    for (Index r = 0; r < f.rows(); ++r) {
      const double fy = dft_frequency(r, f.rows(), 1.0);
      const double phase = -2.0 * M_PI * (fx * dx + fy * dy);
      spec(r, c) *= std::complex<Scalar>(static_cast<Scalar>(std::cos(phase) * scale),
                                         static_cast<Scalar>(std::sin(phase) * scale));
    }
  }
  ComplexField<Scalar> out;
  out.pitch_um = f.pitch_um;
  out.wavelength_um = f.wavelength_um;
  out.data.resize(f.rows(), f.cols());
  fft::transform2d(spec, out.data, true);
  return out;
}

}  // namespace sptycho
