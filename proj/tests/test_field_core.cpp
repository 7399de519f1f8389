#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <complex>
#include <cstring>

#include "sptycho/fft.hpp"
#include "sptycho/field.hpp"
#include "sptycho/propagate.hpp"
#include "sptycho/resample.hpp"
#include "sptycho/rng.hpp"

using namespace sptycho;

namespace {

ArrayXXcd random_complex(Index rows, Index cols, std::uint64_t seed) {
  Rng rng(seed);
  ArrayXXcd a(rows, cols);
  for (Index c = 0; c < cols; ++c)
    for (Index r = 0; r < rows; ++r)
      a(r, c) = std::complex<double>(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
  return a;
}

double rel_error(const ArrayXXcd& got, const ArrayXXcd& want) {
  return std::sqrt((got - want).abs2().sum() / want.abs2().sum());
}

// Direct-summation 2D DFT, the independent oracle for the transform
// contract (layout, sign and normalization).
ArrayXXcd dft2_bruteforce(const ArrayXXcd& a) {
  const Index h = a.rows(), w = a.cols();
  ArrayXXcd out(h, w);
  for (Index uc = 0; uc < w; ++uc) {
    for (Index ur = 0; ur < h; ++ur) {
      std::complex<double> acc = 0.0;
      for (Index c = 0; c < w; ++c)
        for (Index r = 0; r < h; ++r) {
          const double phase = -2.0 * M_PI * (static_cast<double>(ur * r) / h + static_cast<double>(uc * c) / w);
          acc += a(r, c) * std::polar(1.0, phase);
        }
      out(ur, uc) = acc / std::sqrt(static_cast<double>(h * w));
    }
  }
  return out;
}

}  // namespace

TEST_CASE("dft2 matches direct summation on a rectangular grid") {
  const ArrayXXcd a = random_complex(6, 7, 11);
  const ArrayXXcd want = dft2_bruteforce(a);
  const ArrayXXcd got = dft2_forward(a);
  CHECK(rel_error(got, want) < 1e-12);
}

TEST_CASE("dft2 of a constant field concentrates in the DC bin") {
  const std::complex<double> c(0.7, -0.3);
  ArrayXXcd a = ArrayXXcd::Constant(16, 8, c);
  const ArrayXXcd spec = dft2_forward(a);
  CHECK(std::abs(spec(0, 0) - c * std::sqrt(16.0 * 8.0)) < 1e-12);
  double off_dc = 0.0;
  for (Index cc = 0; cc < spec.cols(); ++cc)
    for (Index rr = 0; rr < spec.rows(); ++rr)
      if (rr != 0 || cc != 0) off_dc = std::max(off_dc, std::abs(spec(rr, cc)));
  CHECK(off_dc < 1e-12);
}

TEST_CASE("dft2 round trip is the identity") {
  const ArrayXXcd a = random_complex(32, 32, 3);
  CHECK(rel_error(dft2_inverse(dft2_forward(a)), a) < 1e-12);
}

TEST_CASE("dft2 is unitary (Parseval)") {
  const ArrayXXcd a = random_complex(24, 40, 5);
  const ArrayXXcd spec = dft2_forward(a);
  CHECK(std::abs(spec.abs2().sum() - a.abs2().sum()) / a.abs2().sum() < 1e-10);
}

TEST_CASE("dft2 is bit-deterministic") {
  const ArrayXXcd a = random_complex(48, 48, 17);
  const ArrayXXcd s1 = dft2_forward(a);
  const ArrayXXcd s2 = dft2_forward(a);
  CHECK(std::memcmp(s1.data(), s2.data(), sizeof(std::complex<double>) * s1.size()) == 0);
}

TEST_CASE("make_kernel at zero distance is unity on the propagating band") {
  const auto k = make_kernel(16, 16, 1.67, 0.532, 0.0);
  for (Index c = 0; c < 16; ++c)
    for (Index r = 0; r < 16; ++r)
      CHECK(std::abs(k.values(r, c) - std::complex<double>(1.0, 0.0)) < 1e-15);
}

TEST_CASE("make_kernel DC bin carries the on-axis phase") {
  const auto k = make_kernel(8, 8, 1.67, 0.532, 500.0);
  const auto want = std::polar(1.0, 2.0 * M_PI * 500.0 / 0.532);
  CHECK(std::abs(k.values(0, 0) - want) < 1e-9);
}

TEST_CASE("make_kernel zeroes evanescent frequencies") {
  // Nyquist 2.5 cycles/um exceeds 1/lambda, so the corner is evanescent.
  const auto k = make_kernel(16, 16, 0.2, 0.532, 100.0);
  CHECK(k.values(8, 8) == std::complex<double>(0.0, 0.0));
  CHECK(std::abs(std::abs(k.values(0, 0)) - 1.0) < 1e-12);
}

TEST_CASE("make_kernel is unit modulus and inverted by the opposite distance") {
  const auto kf = make_kernel(24, 20, 1.67, 0.532, 713.0);
  const auto kb = make_kernel(24, 20, 1.67, 0.532, -713.0);
  for (Index c = 0; c < 20; ++c)
    for (Index r = 0; r < 24; ++r) {
      CHECK(std::abs(std::abs(kf.values(r, c)) - 1.0) < 1e-12);
      CHECK(std::abs(kf.values(r, c) * kb.values(r, c) - 1.0) < 1e-12);
    }
}

TEST_CASE("make_kernel rejects nonpositive pitch and wavelength") {
  CHECK_THROWS_AS(make_kernel(8, 8, 0.0, 0.532, 10.0), ValidationError);
  CHECK_THROWS_AS(make_kernel(8, 8, 1.0, -0.5, 10.0), ValidationError);
}

TEST_CASE("propagate at zero distance is the identity") {
  Field f{random_complex(32, 32, 7), 1.67, 0.532};
  const Field g = propagate(f, 0.0);
  CHECK(rel_error(g.data, f.data) < 1e-12);
}

TEST_CASE("propagate conserves energy on the propagating band") {
  Field f{random_complex(64, 64, 9), 1.67, 0.532};
  const Field g = propagate(f, 812.0);
  CHECK(std::abs(g.data.abs2().sum() - f.data.abs2().sum()) / f.data.abs2().sum() < 1e-10);
  CHECK(all_finite(g.data));
}

TEST_CASE("propagate is inverted by the opposite distance") {
  Field f{random_complex(48, 48, 13), 1.67, 0.532};
  const Field g = propagate(propagate(f, 650.0), -650.0);
  CHECK(rel_error(g.data, f.data) < 1e-10);
}

TEST_CASE("propagate reproduces analytic Gaussian beam spreading") {
  const Index n = 256;
  const double pitch = 1.0, lambda = 0.5;
  const double w0 = 20.0 * pitch;
  Field f = Field::zero(n, n, pitch, lambda);
  const double c0 = (n / 2) * pitch;
  for (Index c = 0; c < n; ++c)
    for (Index r = 0; r < n; ++r) {
      const double x = c * pitch - c0, y = r * pitch - c0;
      f.data(r, c) = std::exp(-(x * x + y * y) / (w0 * w0));
    }

  const double z_r = M_PI * w0 * w0 / lambda;
  const double d = 2000.0;
  const double w_expected = w0 * std::sqrt(1.0 + (d / z_r) * (d / z_r));

  const Field g = propagate(f, d);
  // Second moment of intensity: <x^2> = w^2/4 for a Gaussian beam.
  double sum_i = 0.0, sum_x2 = 0.0;
  for (Index c = 0; c < n; ++c)
    for (Index r = 0; r < n; ++r) {
      const double x = c * pitch - c0;
      const double intensity = std::norm(g.data(r, c));
      sum_i += intensity;
      sum_x2 += intensity * x * x;
    }
  const double w_measured = 2.0 * std::sqrt(sum_x2 / sum_i);
  CHECK(std::abs(w_measured - w_expected) / w_expected < 0.01);
}

TEST_CASE("fourier_upsample with factor 1 is the identity") {
  const ArrayXXcd a = random_complex(16, 16, 21);
  CHECK(rel_error(fourier_upsample(a, 1), a) < 1e-12);
}

TEST_CASE("fourier_upsample maps a constant to the same constant") {
  ArrayXXcd a = ArrayXXcd::Constant(12, 12, std::complex<double>(2.5, 0.0));
  const ArrayXXcd up = fourier_upsample(a, 3);
  REQUIRE(up.rows() == 36);
  for (Index c = 0; c < up.cols(); ++c)
    for (Index r = 0; r < up.rows(); ++r)
      CHECK(std::abs(up(r, c) - std::complex<double>(2.5, 0.0)) < 1e-10);
}

TEST_CASE("fourier_upsample is exact at the original lattice") {
  const ArrayXXcd a = random_complex(16, 16, 23);
  const ArrayXXcd up = fourier_upsample(a, 3);
  for (Index c = 0; c < 16; ++c)
    for (Index r = 0; r < 16; ++r)
      CHECK(std::abs(up(3 * r, 3 * c) - a(r, c)) < 1e-10);
}

TEST_CASE("fourier_upsample is linear") {
  const ArrayXXcd a = random_complex(8, 8, 25);
  const ArrayXXcd b = random_complex(8, 8, 27);
  const std::complex<double> alpha(0.3, -1.1);
  const ArrayXXcd lhs = fourier_upsample<double>((alpha * a + b).eval(), 3);
  const ArrayXXcd rhs = alpha * fourier_upsample(a, 3) + fourier_upsample(b, 3);
  CHECK(rel_error(lhs, rhs) < 1e-11);
}

TEST_CASE("fourier_upsample rejects factors below one and shrinks the pitch") {
  Field f{random_complex(8, 8, 29), 1.67, 0.532};
  CHECK_THROWS_AS(fourier_upsample(f, 0), ValidationError);
  const Field up = fourier_upsample(f, 3);
  CHECK(up.pitch_um == doctest::Approx(1.67 / 3.0));
}

TEST_CASE("circular_shift basics") {
  const ArrayXXcd a = random_complex(16, 12, 31);

  SUBCASE("zero shift is the identity") {
    CHECK((circular_shift(a, 0, 0) - a).abs().maxCoeff() == 0.0);
  }
  SUBCASE("shift by the full period is the identity") {
    CHECK((circular_shift(a, 12, 16) - a).abs().maxCoeff() == 0.0);
  }
  SUBCASE("a delta moves to the shift") {
    ArrayXXcd d = ArrayXXcd::Zero(16, 12);
    d(0, 0) = 1.0;
    const ArrayXXcd moved = circular_shift(d, 5, 3);
    CHECK(moved(3, 5) == std::complex<double>(1.0, 0.0));
    CHECK(moved.abs().sum() == 1.0);
  }
  SUBCASE("forward then backward shift is exact") {
    const ArrayXXcd back = circular_shift(circular_shift(a, 7, -5), -7, 5);
    CHECK((back - a).abs().maxCoeff() == 0.0);
  }
  SUBCASE("negative shifts wrap") {
    const ArrayXXcd x = circular_shift(a, -3, -9);
    const ArrayXXcd y = circular_shift(a, 12 - 3, 16 - 9);
    CHECK((x - y).abs().maxCoeff() == 0.0);
  }
}

TEST_CASE("fourier_shift at integer offsets matches circular_shift") {
  Field f{random_complex(24, 24, 33), 1.0, 0.5};
  const Field g = fourier_shift(f, 4.0, -6.0);
  const ArrayXXcd want = circular_shift(f.data, 4, -6);
  CHECK(rel_error(g.data, want) < 1e-12);
}
