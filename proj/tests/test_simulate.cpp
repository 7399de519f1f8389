#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>

#include "sptycho/field.hpp"
#include "sptycho/propagate.hpp"
#include "sptycho/rng.hpp"
#include "sptycho/simulate.hpp"

using namespace sptycho;

namespace {

// Independent forward-model oracle: angular-spectrum propagation evaluated
// by direct DFT summation (no shared transform code), then point sampling.
ArrayXXd forward_frame_bruteforce(const Field& object, const Field& probe,
                                  const Eigen::Vector2d& shift_px, double distance_um, int s) {
  const Index n = object.rows();
  const Index sx = static_cast<Index>(std::llround(s * shift_px.x()));
  const Index sy = static_cast<Index>(std::llround(s * shift_px.y()));

  ArrayXXcd exit(n, n);
  for (Index c = 0; c < n; ++c)
    for (Index r = 0; r < n; ++r)
      exit(r, c) = object.data(r, c) * probe.data(wrap_index(r - sy, n), wrap_index(c - sx, n));

  // spectrum by direct summation
  ArrayXXcd spec = ArrayXXcd::Zero(n, n);
  for (Index uc = 0; uc < n; ++uc)
    for (Index ur = 0; ur < n; ++ur) {
      std::complex<double> acc = 0.0;
      for (Index c = 0; c < n; ++c)
        for (Index r = 0; r < n; ++r)
          acc += exit(r, c) * std::polar(1.0, -2.0 * M_PI * (double(ur * r) / n + double(uc * c) / n));
      spec(ur, uc) = acc;
    }

  const double inv_l2 = 1.0 / (object.wavelength_um * object.wavelength_um);
  for (Index uc = 0; uc < n; ++uc) {
    const double fx = dft_frequency(uc, n, object.pitch_um);
    for (Index ur = 0; ur < n; ++ur) {
      const double fy = dft_frequency(ur, n, object.pitch_um);
      const double arg = inv_l2 - fx * fx - fy * fy;
      spec(ur, uc) *= arg >= 0.0 ? std::polar(1.0, 2.0 * M_PI * distance_um * std::sqrt(arg))
                                 : std::complex<double>(0.0, 0.0);
    }
  }

  ArrayXXd frame(n / s, n / s);
  for (Index c = 0; c < n / s; ++c)
    for (Index r = 0; r < n / s; ++r) {
      std::complex<double> acc = 0.0;
      for (Index uc = 0; uc < n; ++uc)
        for (Index ur = 0; ur < n; ++ur)
          acc += spec(ur, uc) *
                 std::polar(1.0, 2.0 * M_PI * (double(ur * s * r) / n + double(uc * s * c) / n));
      frame(r, c) = std::norm(acc / double(n * n));
    }
  return frame;
}

Field random_field(Index n, double pitch, double lambda, std::uint64_t seed) {
  Rng rng(seed);
  Field f;
  f.pitch_um = pitch;
  f.wavelength_um = lambda;
  f.data.resize(n, n);
  for (Index c = 0; c < n; ++c)
    for (Index r = 0; r < n; ++r)
      f.data(r, c) = std::complex<double>(rng.uniform(-1, 1), rng.uniform(-1, 1));
  return f;
}

}  // namespace

TEST_CASE("make_object uniform source gives the unit field") {
  SceneSpec spec;
  spec.pattern = "uniform";
  spec.grid = 32;
  spec.pitch_um = 0.5;
  const Field f = make_object(spec);
  for (Index c = 0; c < 32; ++c)
    for (Index r = 0; r < 32; ++r)
      CHECK(f.data(r, c) == std::complex<double>(1.0, 0.0));
}

TEST_CASE("make_object phase disk is unit amplitude with the stated phase") {
  SceneSpec spec;
  spec.pattern = "disk";
  spec.grid = 96;
  spec.pitch_um = 0.5;
  spec.disk_phase_rad = 1.0;
  spec.disk_radius_frac = 0.3;
  const Field f = make_object(spec);
  const double radius = 0.3 * 48.0;
  for (Index c = 0; c < 96; ++c)
    for (Index r = 0; r < 96; ++r) {
      CHECK(std::abs(std::abs(f.data(r, c)) - 1.0) < 1e-12);
      const double dist = std::hypot(double(r) - 48, double(c) - 48);
      if (dist < radius - 1.5) CHECK(std::arg(f.data(r, c)) == doctest::Approx(1.0));
      if (dist > radius + 1.5) CHECK(std::arg(f.data(r, c)) == doctest::Approx(0.0));
    }
}

TEST_CASE("make_object bar chart puts its spectral peak at the bar frequency") {
  SceneSpec spec;
  spec.pattern = "bars";
  spec.grid = 128;
  spec.pitch_um = 0.5;
  spec.bar_period_px = 2;  // alternating columns over the bar group
  const Field f = make_object(spec);

  // Fold the central rows into a 1D profile and DFT it directly; the peak
  // away from DC must sit at 1/(2 px) = Nyquist for a period of 2 px.
  const Rect region = bar_chart_region(128, 2);
  std::vector<double> profile(region.cols);
  for (Index c = 0; c < region.cols; ++c) {
    double acc = 0.0;
    for (Index r = 0; r < region.rows; ++r) acc += std::abs(f.data(region.r0 + r, region.c0 + c));
    profile[c] = acc / region.rows;
  }
  const std::size_t np = profile.size();
  double best = 0.0;
  std::size_t best_k = 0;
  for (std::size_t k = 1; k <= np / 2; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t i = 0; i < np; ++i)
      acc += profile[i] * std::polar(1.0, -2.0 * M_PI * double(k * i) / double(np));
    if (std::abs(acc) > best) {
      best = std::abs(acc);
      best_k = k;
    }
  }
  const double cycles_per_px = double(best_k) / double(np);
  CHECK(cycles_per_px == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("make_object rejects unknown patterns and bad phase ranges") {
  SceneSpec spec;
  spec.grid = 16;
  spec.pitch_um = 1.0;
  spec.pattern = "nonesuch";
  CHECK_THROWS_AS(make_object(spec), ValidationError);
}

TEST_CASE("make_speckle with zero phase depth is a plane wave") {
  DiffuserSpec spec;
  spec.phase_depth_rad = 0.0;
  const Field p = make_speckle(spec, 64, 0.5567, 0.532);
  const double a0 = std::abs(p.data(0, 0));
  for (Index c = 0; c < 64; ++c)
    for (Index r = 0; r < 64; ++r)
      CHECK(std::abs(std::abs(p.data(r, c)) - a0) < 1e-10);
}

TEST_CASE("make_speckle is deterministic per seed") {
  DiffuserSpec spec;
  spec.seed = 42;
  const Field a = make_speckle(spec, 96, 0.5567, 0.532);
  const Field b = make_speckle(spec, 96, 0.5567, 0.532);
  CHECK(std::memcmp(a.data.data(), b.data.data(), sizeof(std::complex<double>) * a.data.size()) == 0);
  spec.seed = 43;
  const Field c = make_speckle(spec, 96, 0.5567, 0.532);
  CHECK((a.data - c.data).abs().maxCoeff() > 1e-6);
}

TEST_CASE("make_speckle rejects feature sizes below the pitch") {
  DiffuserSpec spec;
  spec.feature_um = 0.1;
  CHECK_THROWS_AS(make_speckle(spec, 32, 0.5567, 0.532), ValidationError);
}

TEST_CASE("make_speckle develops near-unit contrast") {
  // Fully developed speckle has intensity contrast ~= 1; Monte-Carlo over
  // 10 seeds at the default diffuser parameters.
  DiffuserSpec spec;
  spec.phase_depth_rad = 2.0 * M_PI;
  spec.feature_um = 5.0;
  spec.distance_um = 3000.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    spec.seed = seed;
    const Field p = make_speckle(spec, 256, 0.5567, 0.532);
    ArrayXXd intensity = p.data.abs2();
    const double mean = intensity.mean();
    const double contrast = std::sqrt((intensity - mean).square().mean()) / mean;
    CHECK(contrast > 0.7);
    CHECK(contrast < 1.1);
  }
}

TEST_CASE("make_trajectory basics") {
  TrajectorySpec spec;

  SUBCASE("single frame sits at the origin") {
    spec.frame_count = 1;
    const auto t = make_trajectory(spec, 16.0);
    REQUIRE(t.size() == 1);
    CHECK(t.shifts[0] == Eigen::Vector2d::Zero());
  }

  SUBCASE("steps stay inside the jittered band and the margin") {
    spec.frame_count = 100;
    spec.mean_step_px = 2.5;
    spec.jitter = 0.2;
    const double margin = 16.0;
    const auto t = make_trajectory(spec, margin);
    REQUIRE(t.size() == 100);
    CHECK(t.shifts[0] == Eigen::Vector2d::Zero());
    for (int j = 1; j < 100; ++j) {
      const double step = (t.shifts[j] - t.shifts[j - 1]).norm();
      CHECK(step >= 2.0 * (1.0 - 0.2) - 1e-12);
      CHECK(step <= 3.0 * (1.0 + 0.2) + 1e-12);
      CHECK(std::abs(t.shifts[j].x()) <= margin);
      CHECK(std::abs(t.shifts[j].y()) <= margin);
    }
  }

  SUBCASE("same seed reproduces the trajectory") {
    spec.frame_count = 50;
    const auto a = make_trajectory(spec, 16.0);
    const auto b = make_trajectory(spec, 16.0);
    for (int j = 0; j < 50; ++j) CHECK(a.shifts[j] == b.shifts[j]);
  }

  SUBCASE("raster trajectories that overrun the margin are rejected") {
    spec.pattern = "raster";
    spec.frame_count = 100;
    spec.mean_step_px = 2.5;
    CHECK_THROWS_AS(make_trajectory(spec, 4.0), ValidationError);
  }

  SUBCASE("raster fits when the margin allows it") {
    spec.pattern = "raster";
    spec.frame_count = 9;
    spec.mean_step_px = 2.0;
    spec.jitter = 0.1;
    const auto t = make_trajectory(spec, 8.0);
    REQUIRE(t.size() == 9);
    CHECK(t.shifts[0] == Eigen::Vector2d::Zero());
  }
}

TEST_CASE("forward_frame trivial cases") {
  const Index n = 24;
  const int s = 3;
  Field obj = Field::zero(n, n, 1.67 / 3, 0.532);
  Field probe = Field::zero(n, n, 1.67 / 3, 0.532);

  SUBCASE("zero object gives a zero frame") {
    probe.data.setConstant(std::complex<double>(0.8, 0.1));
    const ArrayXXd frame = forward_frame(obj, probe, {1.0, -2.0}, 500.0, s);
    CHECK(frame.abs().maxCoeff() == 0.0);
  }

  SUBCASE("plane-wave probe with unit object gives a flat frame") {
    obj.data.setConstant(1.0);
    probe.data.setConstant(std::complex<double>(1.5, 0.0));
    const ArrayXXd frame = forward_frame(obj, probe, {2.0, 1.0}, 731.0, s);
    for (Index c = 0; c < n / s; ++c)
      for (Index r = 0; r < n / s; ++r)
        CHECK(frame(r, c) == doctest::Approx(2.25).epsilon(1e-10));
  }

  SUBCASE("grid mismatch is rejected") {
    Field small = Field::zero(n / 2, n / 2, 1.67 / 3, 0.532);
    CHECK_THROWS_AS(forward_frame(obj, small, {0, 0}, 500.0, s), ValidationError);
  }
}

TEST_CASE("forward_frame matches the brute-force propagation oracle") {
  const Index n = 24;  // 8x8 detector at s = 3
  const int s = 3;
  const Field obj = random_field(n, 1.67 / 3, 0.532, 101);
  const Field probe = random_field(n, 1.67 / 3, 0.532, 102);
  const Eigen::Vector2d shift(1.4, -2.2);

  const ArrayXXd got = forward_frame(obj, probe, shift, 500.0, s);
  const ArrayXXd want = forward_frame_bruteforce(obj, probe, shift, 500.0, s);
  const double rel = std::sqrt((got - want).square().sum() / want.square().sum());
  CHECK(rel < 1e-8);
}

TEST_CASE("add_noise behaviour") {
  SUBCASE("disabled noise is the identity") {
    std::vector<ArrayXXd> frames{ArrayXXd::Constant(8, 8, 3.0)};
    NoiseSpec spec;  // photons 0, sigma 0
    add_noise(frames, spec);
    CHECK((frames[0] - 3.0).abs().maxCoeff() == 0.0);
  }

  SUBCASE("zero frames stay zero under pure shot noise") {
    std::vector<ArrayXXd> frames{ArrayXXd::Zero(8, 8), ArrayXXd::Constant(8, 8, 1.0)};
    NoiseSpec spec;
    spec.photons_per_pixel = 100.0;
    add_noise(frames, spec);
    CHECK(frames[0].abs().maxCoeff() == 0.0);
  }

  SUBCASE("photon budget sets the relative fluctuation") {
    std::vector<ArrayXXd> frames{ArrayXXd::Constant(128, 128, 2.0)};
    NoiseSpec spec;
    spec.photons_per_pixel = 1e4;
    spec.seed = 3;
    add_noise(frames, spec);
    const double mean = frames[0].mean();
    const double rel_std = std::sqrt((frames[0] - mean).square().mean()) / mean;
    CHECK(rel_std == doctest::Approx(0.01).epsilon(0.2));
  }

  SUBCASE("deterministic per seed") {
    std::vector<ArrayXXd> a{ArrayXXd::Constant(16, 16, 1.0)};
    std::vector<ArrayXXd> b{ArrayXXd::Constant(16, 16, 1.0)};
    NoiseSpec spec;
    spec.photons_per_pixel = 50.0;
    spec.read_sigma = 0.05;
    add_noise(a, spec);
    add_noise(b, spec);
    CHECK((a[0] - b[0]).abs().maxCoeff() == 0.0);
  }
}

TEST_CASE("simulate produces a consistent deterministic dataset") {
  SimulationSpec spec;
  spec.detector_size = 32;
  spec.upsampling = 3;
  spec.trajectory.frame_count = 6;
  spec.trajectory.mean_step_px = 1.5;
  spec.scene.pattern = "cells";
  spec.scene.cell_count = 6;

  const Simulation a = simulate(spec);
  CHECK(a.frames.count() == 6);
  CHECK(a.frames.frame_size() == 32);
  CHECK(a.object.rows() == 96);
  validate_frame_stack(a.frames);

  const Simulation b = simulate(spec);
  for (int j = 0; j < 6; ++j)
    CHECK(std::memcmp(a.frames.frames[j].data(), b.frames.frames[j].data(),
                      sizeof(double) * a.frames.frames[j].size()) == 0);

  SUBCASE("parallel synthesis matches serial") {
    SimulationSpec par = spec;
    par.threads = 4;
    const Simulation c = simulate(par);
    for (int j = 0; j < 6; ++j)
      CHECK(std::memcmp(a.frames.frames[j].data(), c.frames.frames[j].data(),
                        sizeof(double) * a.frames.frames[j].size()) == 0);
  }
}

TEST_CASE("simulate energy sanity with unit object and plane-wave probe") {
  SimulationSpec spec;
  spec.detector_size = 24;
  spec.upsampling = 3;
  spec.trajectory.mean_step_px = 1.5;
  spec.scene.pattern = "uniform";
  spec.diffuser.phase_depth_rad = 0.0;  // plane-wave probe
  spec.trajectory.frame_count = 4;
  const Simulation sim = simulate(spec);

  // mean frame intensity must match |P|^2 sampled at the lattice
  ArrayXXd probe_lattice(24, 24);
  for (Index c = 0; c < 24; ++c)
    for (Index r = 0; r < 24; ++r)
      probe_lattice(r, c) = std::norm(sim.probe.data(3 * r, 3 * c));
  for (const auto& frame : sim.frames.frames) {
    CHECK(std::abs(frame.mean() - probe_lattice.mean()) / probe_lattice.mean() < 1e-6);
  }
}
