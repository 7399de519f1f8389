#pragma once

#include <string>

#include "sptycho/field.hpp"

namespace sptycho {
namespace fft {

// Plan selection policy. `deterministic` uses heuristic plans only, so a
// given build produces bit-identical transforms on every run with no state
// on disk. `measured` times candidate plans (faster execution, slower first
// planning); pair it with a wisdom file to keep separate processes on the
// same plan.
enum class Planning { deterministic, measured };

void set_planning(Planning p);
Planning planning();

bool import_wisdom(const std::string& path);
bool export_wisdom(const std::string& path);

// Unnormalized 2D transforms over the whole array (inverse = unscaled
// backward transform). Plans are cached per (shape, direction, placement)
// and reused; creation is serialized, execution is thread-safe.
void transform2d(ComplexArray<double>& inout, bool inverse);
void transform2d(ComplexArray<float>& inout, bool inverse);
void transform2d(const ComplexArray<double>& in, ComplexArray<double>& out, bool inverse);
void transform2d(const ComplexArray<float>& in, ComplexArray<float>& out, bool inverse);

}  // namespace fft

// Unitary DFT pair: dft2_inverse(dft2_forward(f)) == f and Parseval holds
// without bookkeeping factors.
template <typename Scalar>
ComplexArray<Scalar> dft2_forward(const ComplexArray<Scalar>& a) {
  ComplexArray<Scalar> out(a.rows(), a.cols());
  fft::transform2d(a, out, false);
  out *= static_cast<Scalar>(1.0 / std::sqrt(static_cast<double>(a.size())));
  return out;
}

template <typename Scalar>
ComplexArray<Scalar> dft2_inverse(const ComplexArray<Scalar>& a) {
  ComplexArray<Scalar> out(a.rows(), a.cols());
  fft::transform2d(a, out, true);
  out *= static_cast<Scalar>(1.0 / std::sqrt(static_cast<double>(a.size())));
  return out;
}

template <typename Scalar>
ComplexField<Scalar> dft2_forward(const ComplexField<Scalar>& f) {
  validate_field(f, "dft2_forward");
  return {dft2_forward(f.data), f.pitch_um, f.wavelength_um};
}

template <typename Scalar>
ComplexField<Scalar> dft2_inverse(const ComplexField<Scalar>& f) {
  validate_field(f, "dft2_inverse");
  return {dft2_inverse(f.data), f.pitch_um, f.wavelength_um};
}

}  // namespace sptycho
