#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sptycho/metrics.hpp"
#include "sptycho/rng.hpp"

using namespace sptycho;

namespace {

ArrayXXcd random_complex(Index n, std::uint64_t seed) {
  Rng rng(seed);
  ArrayXXcd a(n, n);
  for (Index c = 0; c < n; ++c)
    for (Index r = 0; r < n; ++r)
      a(r, c) = std::complex<double>(rng.uniform(-1, 1), rng.uniform(-1, 1));
  return a;
}

}  // namespace

TEST_CASE("phase_aligned_rmse is zero for the truth itself and under global scaling") {
  const ArrayXXcd truth = random_complex(32, 1);
  const Rect mask = Rect::centered(32, 32, 0.5);
  CHECK(phase_aligned_rmse(truth, truth, mask) < 1e-14);

  const ArrayXXcd scaled = (std::complex<double>(0.3, 0.4) * truth).eval();
  CHECK(phase_aligned_rmse(scaled, truth, mask) < 1e-12);
}

TEST_CASE("phase_aligned_rmse of a small perturbation is slightly below its norm") {
  const ArrayXXcd truth = random_complex(48, 3);
  const Rect mask = Rect::centered(48, 48, 0.5);

  ArrayXXcd noise = random_complex(48, 4);
  double t_norm = 0.0, n_norm = 0.0;
  for (Index c = mask.c0; c < mask.c0 + mask.cols; ++c)
    for (Index r = mask.r0; r < mask.r0 + mask.rows; ++r) {
      t_norm += std::norm(truth(r, c));
      n_norm += std::norm(noise(r, c));
    }
  const ArrayXXcd perturbed = truth + noise * (0.05 * std::sqrt(t_norm / n_norm));

  const double rmse = phase_aligned_rmse(perturbed, truth, mask);
  CHECK(rmse >= 0.045);
  CHECK(rmse <= 0.05 + 1e-12);
}

TEST_CASE("phase_aligned_rmse rejects zero truth and bad masks") {
  const ArrayXXcd x = random_complex(16, 5);
  const Rect mask = Rect::centered(16, 16, 0.5);
  CHECK_THROWS_AS(phase_aligned_rmse(x, ArrayXXcd::Zero(16, 16), mask), ValidationError);
  Rect overrun = mask;
  overrun.c0 = 12;
  CHECK_THROWS_AS(phase_aligned_rmse(x, x, overrun), ValidationError);
}

TEST_CASE("amplitude and phase errors vanish on a scaled copy") {
  const ArrayXXcd truth = random_complex(24, 7) + std::complex<double>(2.0, 0.0);
  const Rect mask = Rect::centered(24, 24, 0.75);
  const ArrayXXcd scaled = (std::complex<double>(0.0, 1.7) * truth).eval();
  CHECK(amplitude_rmse(scaled, truth, mask) < 1e-12);
  CHECK(phase_rms_error(scaled, truth, mask) < 1e-12);
}

TEST_CASE("bar_contrast is 1 for ideal bars and 0 for a uniform field") {
  ArrayXXcd field = ArrayXXcd::Constant(32, 32, 1.0);
  Rect region{8, 8, 16, 12};

  SUBCASE("uniform") { CHECK(bar_contrast(field, 4, region) == 0.0); }

  SUBCASE("square wave") {
    for (Index c = 8; c < 20; ++c)
      if ((c / 2) % 2 == 0)
        for (Index r = 0; r < 32; ++r) field(r, c) = 0.0;
    CHECK(bar_contrast(field, 4, region) == doctest::Approx(1.0));
  }

  SUBCASE("period below two pixels is rejected") {
    CHECK_THROWS_AS(bar_contrast(field, 1, region), ValidationError);
  }
}

TEST_CASE("bar_contrast is invariant under global intensity scaling") {
  ArrayXXcd field = ArrayXXcd::Constant(32, 32, 1.0);
  for (Index c = 8; c < 20; ++c)
    if ((c / 2) % 2 == 0)
      for (Index r = 0; r < 32; ++r) field(r, c) = 0.25;
  Rect region{8, 8, 16, 12};
  const double base = bar_contrast(field, 4, region);
  const double scaled = bar_contrast((field * 7.5).eval(), 4, region);
  CHECK(base == doctest::Approx(scaled));
}

TEST_CASE("phase_height_profile basics") {
  SUBCASE("zero phase gives zero height") {
    const ArrayXXcd flat = ArrayXXcd::Constant(32, 32, 1.0);
    const auto profile = phase_height_profile(flat, 0.5, 0.532, 0.5, {16, 2}, {16, 30}, 29);
    for (double h : profile.height_um) CHECK(h == 0.0);
    CHECK_FALSE(profile.unwrap_suspect);
  }

  SUBCASE("a 1 rad disk maps to the analytic height") {
    ArrayXXcd field = ArrayXXcd::Constant(64, 64, 1.0);
    for (Index c = 0; c < 64; ++c)
      for (Index r = 0; r < 64; ++r)
        if (std::hypot(double(r) - 32, double(c) - 32) < 12) field(r, c) = std::polar(1.0, 1.0);
    const auto profile = phase_height_profile(field, 0.5, 0.532, 0.5, {32, 4}, {32, 60}, 57);
    const double expected = 1.0 * 0.532 / (2.0 * M_PI * 0.5);
    // center of the path crosses the disk
    CHECK(profile.height_um[28] == doctest::Approx(expected).epsilon(1e-9));
    CHECK(profile.height_um.front() == doctest::Approx(0.0));
  }

  SUBCASE("zero magnitude on the path is rejected") {
    ArrayXXcd field = ArrayXXcd::Constant(16, 16, 1.0);
    field(8, 8) = 0.0;
    CHECK_THROWS_AS(phase_height_profile(field, 0.5, 0.532, 0.5, {8, 0}, {8, 15}, 16),
                    ValidationError);
  }
}
