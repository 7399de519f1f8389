#pragma once

#include <utility>
#include <vector>

#include "sptycho/fft.hpp"
#include "sptycho/field.hpp"

namespace sptycho {

namespace detail {

// Where input spectrum bin k of an n-axis lands in the padded s*n-axis
// spectrum. The shared Nyquist bin of an even axis is split half-and-half
// between +n/2 and -n/2 so band-limited interpolation stays real for real
// inputs and reproduces the original samples exactly on the stride-s
// lattice.
inline std::vector<std::pair<Index, double>> pad_targets(Index k, Index n, Index out_n) {
  const Index signed_k = 2 * k <= n ? k : k - n;
  if (n % 2 == 0 && k == n / 2) {
    const Index pos = n / 2;
    const Index neg = wrap_index(-n / 2, out_n);
    if (pos == neg) return {{pos, 1.0}};
    return {{pos, 0.5}, {neg, 0.5}};
  }
  return {{wrap_index(signed_k, out_n), 1.0}};
}

}  // namespace detail

// Band-limited upsampling by integer factor s: zero-pad the spectrum
// symmetrically to (s*rows) x (s*cols) and inverse-transform, scaled so the
// original samples are reproduced at the stride-s lattice (offset 0).
template <typename Scalar>
ComplexArray<Scalar> fourier_upsample(const ComplexArray<Scalar>& in, int s) {
  if (s < 1) throw ValidationError("fourier_upsample: factor must be >= 1");
  const Index h = in.rows(), w = in.cols();
  if (h < 1 || w < 1) throw ValidationError("fourier_upsample: empty input");

  ComplexArray<Scalar> spec(h, w);
  fft::transform2d(in, spec, false);

  const Index oh = h * s, ow = w * s;
  std::vector<std::vector<std::pair<Index, double>>> row_targets(h);
  for (Index r = 0; r < h; ++r) row_targets[r] = detail::pad_targets(r, h, oh);

  ComplexArray<Scalar> padded = ComplexArray<Scalar>::Zero(oh, ow);
  for (Index c = 0; c < w; ++c) {
    const auto cts = detail::pad_targets(c, w, ow);
    for (Index r = 0; r < h; ++r) {
      for (const auto& [oc, wc] : cts)
        for (const auto& [orr, wr] : row_targets[r])
          padded(orr, oc) += static_cast<Scalar>(wc * wr) * spec(r, c);
    }
  }

  ComplexArray<Scalar> out(oh, ow);
  fft::transform2d(padded, out, true);
  // Unnormalized forward+backward contribute h*w*s^2 at the retained bins;
  // dividing by h*w leaves the lattice samples equal to the input.
  out *= static_cast<Scalar>(1.0 / (static_cast<double>(h) * static_cast<double>(w)));
  return out;
}

template <typename Scalar>
ComplexArray<Scalar> fourier_upsample(const RealArray<Scalar>& in, int s) {
  ComplexArray<Scalar> cin = in.template cast<std::complex<Scalar>>();
  return fourier_upsample(cin, s);
}

// Field variant; the output pitch shrinks by the factor.
template <typename Scalar>
ComplexField<Scalar> fourier_upsample(const ComplexField<Scalar>& f, int s) {
  validate_field(f, "fourier_upsample");
  return {fourier_upsample(f.data, s), f.pitch_um / s, f.wavelength_um};
}

}  // namespace sptycho
