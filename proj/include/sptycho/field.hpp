#pragma once

#include <Eigen/Core>

#include <cmath>
#include <complex>
#include <string>

#include "sptycho/common.hpp"

namespace sptycho {

using Eigen::Index;

template <typename Scalar>
using ComplexArray = Eigen::Array<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using RealArray = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using ArrayXXcd = ComplexArray<double>;
using ArrayXXd = RealArray<double>;

// A sampled complex wavefield on a uniform grid. Rows run along y, columns
// along x; `pitch_um` is the sample spacing and `wavelength_um` the
// illumination wavelength, both in micrometers.
template <typename Scalar>
struct ComplexField {
  ComplexArray<Scalar> data;
  double pitch_um = 1.0;
  double wavelength_um = 0.532;

  ComplexField() = default;
  ComplexField(ComplexArray<Scalar> d, double pitch, double wavelength)
      : data(std::move(d)), pitch_um(pitch), wavelength_um(wavelength) {}

  Index rows() const { return data.rows(); }
  Index cols() const { return data.cols(); }

  static ComplexField zero(Index rows, Index cols, double pitch, double wavelength) {
    return {ComplexArray<Scalar>::Zero(rows, cols), pitch, wavelength};
  }
};

using Field = ComplexField<double>;
using FieldF = ComplexField<float>;

template <typename Scalar>
bool all_finite(const ComplexArray<Scalar>& a) {
  const std::complex<Scalar>* p = a.data();
  const Index n = a.size();
  for (Index i = 0; i < n; ++i) {
    if (!std::isfinite(p[i].real()) || !std::isfinite(p[i].imag())) return false;
  }
  return true;
}

template <typename Scalar>
void validate_field(const ComplexField<Scalar>& f, const std::string& what) {
  if (f.rows() < 1 || f.cols() < 1)
    throw ValidationError(what + ": empty grid");
  if (!(f.pitch_um > 0.0))
    throw ValidationError(what + ": pitch must be positive");
  if (!(f.wavelength_um > 0.0))
    throw ValidationError(what + ": wavelength must be positive");
}

inline Index wrap_index(Index i, Index n) {
  i %= n;
  return i < 0 ? i + n : i;
}

// Axis-aligned evaluation window.
struct Rect {
  Index r0 = 0, c0 = 0, rows = 0, cols = 0;

  bool empty() const { return rows <= 0 || cols <= 0; }

  static Rect centered(Index grid_rows, Index grid_cols, double fraction) {
    Rect m;
    m.rows = std::max<Index>(1, static_cast<Index>(std::llround(grid_rows * fraction)));
    m.cols = std::max<Index>(1, static_cast<Index>(std::llround(grid_cols * fraction)));
    m.r0 = (grid_rows - m.rows) / 2;
    m.c0 = (grid_cols - m.cols) / 2;
    return m;
  }
};

// Toroidal shift: out(r, c) = in((r - dy) mod H, (c - dx) mod W), i.e. the
// content moves by +dx columns and +dy rows. Realizes P(x - x_j, y - y_j)
// for integer shifts.
template <typename Derived>
auto circular_shift(const Eigen::ArrayBase<Derived>& in, Index dx, Index dy) {
  using Plain = typename Derived::PlainObject;
  const Index h = in.rows(), w = in.cols();
  Plain out(h, w);
  const Index sr = wrap_index(dy, h);
  const Index sc = wrap_index(dx, w);
  for (Index c = 0; c < w; ++c) {
    const Index src_c = c >= sc ? c - sc : c - sc + w;
    const Index split = sr;  // out rows [0, sr) come from the bottom of the source column
    if (split > 0) out.col(c).segment(0, split) = in.col(src_c).segment(h - split, split);
    out.col(c).segment(split, h - split) = in.col(src_c).segment(0, h - split);
  }
  return out;
}

template <typename Scalar>
ComplexField<Scalar> circular_shift(const ComplexField<Scalar>& f, Index dx, Index dy) {
  return {circular_shift(f.data, dx, dy), f.pitch_um, f.wavelength_um};
}

}  // namespace sptycho
