#include "sptycho/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "sptycho/dataset_io.hpp"
#include "sptycho/fft.hpp"
#include "sptycho/rng.hpp"
#include "sptycho/threading.hpp"

namespace sptycho {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError(msg);
}

ArrayXXd load_scaled_pgm(const std::string& file, Index grid, double lo, double hi) {
  const PgmImage img = read_pgm(file);
  require(img.pixels.rows() == grid && img.pixels.cols() == grid,
          "make_object: image '" + file + "' is " + std::to_string(img.pixels.rows()) + "x" +
              std::to_string(img.pixels.cols()) + ", expected " + std::to_string(grid) + "x" +
              std::to_string(grid));
  return lo + (img.pixels / static_cast<double>(img.maxval)) * (hi - lo);
}

void paint_bars(ArrayXXd& amp, const SceneSpec& spec, Index cx, Index cy) {
  const int p = spec.bar_period_px;
  require(p >= 2, "make_object: bar period must be at least 2 high-res pixels");
  const Index wb = std::max<Index>(1, p / 2);
  const Index len = bar_chart_length(amp.rows(), p);
  const Index r0 = cy - len / 2;
  for (int i = -1; i <= 1; ++i) {
    const Index c0 = cx + i * p - wb / 2;
    for (Index c = c0; c < c0 + wb; ++c)
      for (Index r = r0; r < r0 + len; ++r)
        amp(wrap_index(r, amp.rows()), wrap_index(c, amp.cols())) = spec.bar_low_amplitude;
  }
}

void paint_disk(ArrayXXd& phase, Index cx, Index cy, double radius, double value) {
  const double r2 = radius * radius;
  for (Index c = 0; c < phase.cols(); ++c)
    for (Index r = 0; r < phase.rows(); ++r) {
      const double dx = static_cast<double>(c) - cx, dy = static_cast<double>(r) - cy;
      if (dx * dx + dy * dy <= r2) phase(r, c) = value;
    }
}

// Cosine-tapered bump, 1 well inside the radius and 0 outside edge_px past it.
double soft_disk_weight(double dist, double radius, double edge_px) {
  const double d = dist - radius;
  if (d <= -edge_px / 2) return 1.0;
  if (d >= edge_px / 2) return 0.0;
  return 0.5 * (1.0 - std::sin(M_PI * d / edge_px));
}

void paint_cells(ArrayXXd& amp, ArrayXXd& phase, const SceneSpec& spec) {
  const auto cells = cell_layout(spec);
  const double edge = 2.0;
  for (const auto& [center, radius] : cells) {
    const Index lo_c = std::max<Index>(0, static_cast<Index>(center.x() - radius - edge));
    const Index hi_c = std::min<Index>(amp.cols() - 1, static_cast<Index>(center.x() + radius + edge));
    const Index lo_r = std::max<Index>(0, static_cast<Index>(center.y() - radius - edge));
    const Index hi_r = std::min<Index>(amp.rows() - 1, static_cast<Index>(center.y() + radius + edge));
    for (Index c = lo_c; c <= hi_c; ++c)
      for (Index r = lo_r; r <= hi_r; ++r) {
        const double dist = std::hypot(c - center.x(), r - center.y());
        const double w = soft_disk_weight(dist, radius, edge);
        amp(r, c) -= 0.45 * w;
        phase(r, c) += 0.6 * w;
      }
  }
}

}  // namespace

Index bar_chart_length(Index grid, int period_px) {
  return std::min<Index>(grid / 2, std::max<Index>(6 * period_px, 12));
}

Rect bar_chart_region(Index grid, int period_px) {
  const Index cx = grid / 2;
  const Index len = bar_chart_length(grid, period_px);
  Rect r;
  r.cols = 3 * period_px;
  r.c0 = cx - r.cols / 2;
  r.rows = len / 2;
  r.r0 = grid / 2 - r.rows / 2;
  return r;
}

std::vector<std::pair<Eigen::Vector2d, double>> cell_layout(const SceneSpec& spec) {
  Rng rng(spec.cell_seed);
  const double n = static_cast<double>(spec.grid);
  const double rmin = n / 60.0, rmax = n / 35.0;
  std::vector<std::pair<Eigen::Vector2d, double>> cells;
  const int attempts_cap = 60 * std::max(1, spec.cell_count);
  for (int attempt = 0; attempt < attempts_cap && static_cast<int>(cells.size()) < spec.cell_count; ++attempt) {
    const Eigen::Vector2d center(n / 2 + rng.uniform(-0.30, 0.30) * n, n / 2 + rng.uniform(-0.30, 0.30) * n);
    const double radius = rng.uniform(rmin, rmax);
    bool ok = true;
    for (const auto& [c, cr] : cells) {
      if ((c - center).norm() < 1.35 * (cr + radius)) {
        ok = false;
        break;
      }
    }
    if (ok) cells.emplace_back(center, radius);
  }
  return cells;
}

Field make_object(const SceneSpec& spec) {
  require(spec.grid >= 1, "make_object: grid size not set");
  require(spec.pitch_um > 0.0, "make_object: pitch not set");
  const Index n = spec.grid;

  ArrayXXd amp = ArrayXXd::Ones(n, n);
  ArrayXXd phase = ArrayXXd::Zero(n, n);

  if (!spec.amplitude_file.empty() || !spec.phase_file.empty()) {
    if (!spec.amplitude_file.empty()) amp = load_scaled_pgm(spec.amplitude_file, n, 0.0, 1.0);
    if (!spec.phase_file.empty()) {
      require(std::abs(spec.phase_range_rad) <= M_PI,
              "make_object: phase range must lie within (-pi, pi]");
      phase = load_scaled_pgm(spec.phase_file, n, 0.0, spec.phase_range_rad);
    }
  } else if (spec.pattern == "uniform") {
    // unit field
  } else if (spec.pattern == "bars") {
    paint_bars(amp, spec, n / 2, n / 2);
  } else if (spec.pattern == "disk") {
    paint_disk(phase, n / 2, n / 2, spec.disk_radius_frac * (n / 2.0), spec.disk_phase_rad);
  } else if (spec.pattern == "cells") {
    paint_cells(amp, phase, spec);
  } else if (spec.pattern == "mixed") {
    SceneSpec bars = spec;
    bars.bar_period_px = std::max(2, spec.bar_period_px);
    paint_bars(amp, bars, n / 2 - n / 6, n / 2);
    paint_disk(phase, n / 2 + n / 6, n / 2, n / 12.0, spec.disk_phase_rad);
    const double sigma = n / 5.0;
    for (Index c = 0; c < n; ++c)
      for (Index r = 0; r < n; ++r) {
        const double dx = static_cast<double>(c) - n / 2.0;
        const double dy = static_cast<double>(r) - (n / 2.0 + n / 8.0);
        amp(r, c) *= 1.0 - 0.3 * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      }
  } else {
    throw ValidationError("make_object: unknown pattern '" + spec.pattern + "'");
  }

  require((amp >= -1e-12).all() && (amp <= 1.0 + 1e-9).all(), "make_object: amplitude outside [0, 1]");
  require((phase > -M_PI - 1e-12).all() && (phase <= M_PI + 1e-12).all(),
          "make_object: phase outside (-pi, pi]");

  Field f;
  f.pitch_um = spec.pitch_um;
  f.data.resize(n, n);
  for (Index c = 0; c < n; ++c)
    for (Index r = 0; r < n; ++r)
      f.data(r, c) = std::polar(amp(r, c), phase(r, c));
  return f;
}

Field make_speckle(const DiffuserSpec& spec, Index grid, double pitch_um, double wavelength_um) {
  require(grid >= 1, "make_speckle: empty grid");
  require(pitch_um > 0.0 && wavelength_um > 0.0, "make_speckle: bad pitch/wavelength");
  require(spec.feature_um >= pitch_um, "make_speckle: feature size below the grid pitch");
  require(spec.phase_depth_rad >= 0.0, "make_speckle: negative phase depth");

  Rng rng(spec.seed);
  ArrayXXd screen(grid, grid);
  for (Index c = 0; c < grid; ++c)
    for (Index r = 0; r < grid; ++r)
      screen(r, c) = rng.uniform(0.0, spec.phase_depth_rad);

  if (spec.phase_depth_rad > 0.0) {
    // Low-pass to the feature size, then restore the nominal depth so the
    // screen statistics stay those of a uniform [0, depth] phase.
    ArrayXXcd spec_c = screen.cast<std::complex<double>>();
    ArrayXXcd freq(grid, grid);
    fft::transform2d(spec_c, freq, false);
    const double sigma = spec.feature_um / 2.0;
    const double k = 2.0 * M_PI * M_PI * sigma * sigma;
    for (Index c = 0; c < grid; ++c) {
      const double fx = dft_frequency(c, grid, pitch_um);
      for (Index r = 0; r < grid; ++r) {
        const double fy = dft_frequency(r, grid, pitch_um);
        freq(r, c) *= std::exp(-k * (fx * fx + fy * fy));
      }
    }
    fft::transform2d(freq, spec_c, true);
    screen = spec_c.real() / static_cast<double>(grid * grid);

    const double mean = screen.mean();
    const double sd = std::sqrt((screen - mean).square().mean());
    const double target_sd = spec.phase_depth_rad / std::sqrt(12.0);
    if (sd > 0.0) screen = (screen - mean) * (target_sd / sd) + spec.phase_depth_rad / 2.0;
  }

  Field seed_field;
  seed_field.pitch_um = pitch_um;
  seed_field.wavelength_um = wavelength_um;
  seed_field.data.resize(grid, grid);
  for (Index c = 0; c < grid; ++c)
    for (Index r = 0; r < grid; ++r)
      seed_field.data(r, c) = std::polar(1.0, screen(r, c));

  return propagate(seed_field, spec.distance_um);
}

ScanTrajectory make_trajectory(const TrajectorySpec& spec, double margin_px) {
  require(spec.frame_count >= 1, "make_trajectory: frame count must be >= 1");
  require(spec.mean_step_px > 0.0, "make_trajectory: mean step must be positive");
  require(spec.jitter >= 0.0 && spec.jitter < 1.0, "make_trajectory: jitter must be in [0, 1)");

  const int J = spec.frame_count;
  ScanTrajectory traj;
  traj.shifts.assign(J, Eigen::Vector2d::Zero());
  if (J == 1) return traj;

  Rng rng(spec.seed);
  if (spec.pattern == "walk") {
    const double max_step = (spec.mean_step_px + 0.5) * (1.0 + spec.jitter);
    require(margin_px >= max_step, "make_trajectory: margin too small for the step size");
    Eigen::Vector2d pos = Eigen::Vector2d::Zero();
    for (int j = 1; j < J; ++j) {
      const double base = rng.uniform(std::max(0.0, spec.mean_step_px - 0.5), spec.mean_step_px + 0.5);
      const double factor = 1.0 + spec.jitter * rng.uniform(-1.0, 1.0);
      const double angle = rng.uniform(0.0, 2.0 * M_PI);
      Eigen::Vector2d step = base * factor * Eigen::Vector2d(std::cos(angle), std::sin(angle));
      if (std::abs(pos.x() + step.x()) > margin_px) step.x() = -step.x();
      if (std::abs(pos.y() + step.y()) > margin_px) step.y() = -step.y();
      pos += step;
      traj.shifts[j] = pos;
    }
  } else if (spec.pattern == "raster") {
    const int side = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(J))));
    const double step = spec.mean_step_px;
    std::vector<Eigen::Vector2d> pts;
    pts.reserve(J);
    for (int row = 0; row < side && static_cast<int>(pts.size()) < J; ++row) {
      for (int k = 0; k < side && static_cast<int>(pts.size()) < J; ++k) {
        const int col = (row % 2 == 0) ? k : side - 1 - k;  // serpentine
        Eigen::Vector2d p(col * step, row * step);
        p.x() += spec.jitter * step * rng.uniform(-1.0, 1.0);
        p.y() += spec.jitter * step * rng.uniform(-1.0, 1.0);
        pts.push_back(p);
      }
    }
    const Eigen::Vector2d origin = pts.front();
    for (int j = 0; j < J; ++j) {
      traj.shifts[j] = pts[j] - origin;
      if (std::abs(traj.shifts[j].x()) > margin_px || std::abs(traj.shifts[j].y()) > margin_px)
        throw ValidationError("make_trajectory: raster trajectory exceeds the margin");
    }
    traj.shifts[0] = Eigen::Vector2d::Zero();
  } else {
    throw ValidationError("make_trajectory: unknown pattern '" + spec.pattern + "'");
  }
  return traj;
}

ArrayXXd forward_frame(const Field& object, const Field& probe, const Eigen::Vector2d& shift_px,
                       const PropagationKernel<double>& kernel, int s) {
  validate_field(object, "forward_frame.object");
  validate_field(probe, "forward_frame.probe");
  require(s >= 1, "forward_frame: upsampling factor must be >= 1");
  require(object.rows() == probe.rows() && object.cols() == probe.cols(),
          "forward_frame: object/probe grid mismatch");
  require(object.rows() == kernel.rows() && object.cols() == kernel.cols(),
          "forward_frame: kernel grid mismatch");
  require(object.rows() % s == 0 && object.cols() % s == 0,
          "forward_frame: grid is not a multiple of the upsampling factor");

  const Index sx = static_cast<Index>(std::llround(s * shift_px.x()));
  const Index sy = static_cast<Index>(std::llround(s * shift_px.y()));

  Field exit;
  exit.pitch_um = object.pitch_um;
  exit.wavelength_um = object.wavelength_um;
  exit.data = object.data * circular_shift(probe.data, sx, sy);

  const Field psi = propagate(exit, kernel);

  const Index m_rows = object.rows() / s, m_cols = object.cols() / s;
  ArrayXXd frame(m_rows, m_cols);
  for (Index c = 0; c < m_cols; ++c)
    for (Index r = 0; r < m_rows; ++r)
      frame(r, c) = std::norm(psi.data(s * r, s * c));
  return frame;
}

ArrayXXd forward_frame(const Field& object, const Field& probe, const Eigen::Vector2d& shift_px,
                       double distance_um, int s) {
  const auto kernel =
      make_kernel(object.rows(), object.cols(), object.pitch_um, object.wavelength_um, distance_um);
  return forward_frame(object, probe, shift_px, kernel, s);
}

void add_noise(std::vector<ArrayXXd>& frames, const NoiseSpec& spec) {
  require(spec.photons_per_pixel >= 0.0, "add_noise: negative photon budget");
  require(spec.read_sigma >= 0.0, "add_noise: negative read noise");
  if (spec.photons_per_pixel <= 0.0 && spec.read_sigma <= 0.0) return;

  double total = 0.0;
  std::size_t count = 0;
  for (const auto& f : frames) {
    total += f.sum();
    count += static_cast<std::size_t>(f.size());
  }
  const double mean_intensity = count > 0 ? total / static_cast<double>(count) : 0.0;
  if (mean_intensity <= 0.0 && spec.read_sigma <= 0.0) return;

  for (std::size_t j = 0; j < frames.size(); ++j) {
    Rng rng(derive_seed(spec.seed, j));
    auto& f = frames[j];
    double* p = f.data();
    for (Index i = 0; i < f.size(); ++i) {
      double v = p[i];
      if (spec.photons_per_pixel > 0.0 && mean_intensity > 0.0) {
        const double gain = spec.photons_per_pixel / mean_intensity;
        v = static_cast<double>(rng.poisson(v * gain)) / gain;
      }
      if (spec.read_sigma > 0.0) v += spec.read_sigma * rng.normal();
      p[i] = std::max(0.0, v);
    }
  }
}

void validate_frame_stack(const FrameStack& fs) {
  require(!fs.frames.empty(), "frame stack is empty");
  require(fs.detector_pitch_um > 0.0 && fs.wavelength_um > 0.0, "frame stack: bad pitch/wavelength");
  const Index m = fs.frames.front().rows();
  for (std::size_t j = 0; j < fs.frames.size(); ++j) {
    const auto& f = fs.frames[j];
    if (f.rows() != m || f.cols() != m)
      throw ValidationError("frame stack: frame " + std::to_string(j) + " size mismatch");
    const double* p = f.data();
    for (Index i = 0; i < f.size(); ++i)
      if (!std::isfinite(p[i]) || p[i] < 0.0)
        throw ValidationError("frame stack: frame " + std::to_string(j) + " has invalid intensities");
  }
}

Simulation simulate(const SimulationSpec& spec) {
  require(spec.detector_size >= 1, "simulate: detector size must be >= 1");
  require(spec.upsampling >= 1, "simulate: upsampling must be >= 1");
  require(spec.detector_pitch_um > 0.0, "simulate: detector pitch must be positive");
  require(spec.wavelength_um > 0.0, "simulate: wavelength must be positive");

  const Index grid = spec.detector_size * spec.upsampling;
  const double pitch_hi = spec.detector_pitch_um / spec.upsampling;

  SceneSpec scene = spec.scene;
  if (scene.grid == 0) scene.grid = grid;
  if (scene.pitch_um == 0.0) scene.pitch_um = pitch_hi;
  require(scene.grid == grid, "simulate: scene grid disagrees with detector_size * upsampling");

  Simulation sim;
  sim.object = make_object(scene);
  sim.object.wavelength_um = spec.wavelength_um;
  sim.probe = make_speckle(spec.diffuser, grid, pitch_hi, spec.wavelength_um);
  sim.trajectory = make_trajectory(spec.trajectory, static_cast<double>(spec.detector_size) / 8.0);

  const auto kernel = make_kernel(grid, grid, pitch_hi, spec.wavelength_um, spec.distance_um);

  const int J = spec.trajectory.frame_count;
  sim.frames.frames.resize(J);
  parallel_for(static_cast<std::size_t>(J), spec.threads, [&](std::size_t j) {
    sim.frames.frames[j] =
        forward_frame(sim.object, sim.probe, sim.trajectory.shifts[j], kernel, spec.upsampling);
  });

  add_noise(sim.frames.frames, spec.noise);

  sim.frames.detector_pitch_um = spec.detector_pitch_um;
  sim.frames.wavelength_um = spec.wavelength_um;
  sim.frames.nominal_distance_um = spec.distance_um;
  sim.frames.upsampling_hint = spec.upsampling;
  sim.frames.order_tags.resize(J);
  for (int j = 0; j < J; ++j) {
    char name[32];
    std::snprintf(name, sizeof(name), "frames/frame_%04d.pgm", j);
    sim.frames.order_tags[j] = name;
  }
  return sim;
}

}  // namespace sptycho
