#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sptycho/field.hpp"
#include "sptycho/propagate.hpp"
#include "sptycho/trajectory.hpp"

namespace sptycho {

// Ground-truth object description. Built-in patterns are addressed by id;
// alternatively amplitude/phase PGM files (sized grid x grid) drive the
// object directly, with file values mapped to [0,1] and [0, phase_range].
struct SceneSpec {
  std::string pattern = "mixed";  // uniform | bars | disk | cells | mixed
  Index grid = 0;                 // sM; filled in by the pipeline when 0
  double pitch_um = 0.0;          // high-res pitch; filled in when 0

  int bar_period_px = 12;         // full period of the three-bar chart, high-res px
  double bar_low_amplitude = 0.0;
  double disk_phase_rad = 1.0;
  double disk_radius_frac = 0.22;  // of grid/2
  int cell_count = 24;
  std::uint64_t cell_seed = 5;

  std::string amplitude_file;
  std::string phase_file;
  double phase_range_rad = 1.0;
};

// Random phase screen standing in for the physical diffuser.
struct DiffuserSpec {
  std::uint64_t seed = 1;
  double feature_um = 5.0;         // correlation length of the screen
  double phase_depth_rad = 2.0 * M_PI;
  double distance_um = 3000.0;     // diffuser-to-object propagation
};

struct TrajectorySpec {
  int frame_count = 100;  // J
  double mean_step_px = 2.5;
  double jitter = 0.2;
  std::string pattern = "walk";  // walk | raster
  std::uint64_t seed = 2;
};

struct NoiseSpec {
  double photons_per_pixel = 0.0;  // mean photon count at the mean intensity; 0 = noiseless
  double read_sigma = 0.0;         // additive Gaussian, physical intensity units
  std::uint64_t seed = 7;
};

// Ordered stack of detector intensity frames plus acquisition metadata.
struct FrameStack {
  std::vector<ArrayXXd> frames;  // J nonnegative M x M intensities
  double detector_pitch_um = 1.67;
  double wavelength_um = 0.532;
  double nominal_distance_um = 500.0;
  int upsampling_hint = 3;
  std::vector<std::string> order_tags;  // frame file names in acquisition order

  Index frame_size() const { return frames.empty() ? 0 : frames.front().rows(); }
  int count() const { return static_cast<int>(frames.size()); }
};

void validate_frame_stack(const FrameStack& fs);

Field make_object(const SceneSpec& spec);

Field make_speckle(const DiffuserSpec& spec, Index grid, double pitch_um, double wavelength_um);

// Random-walk or jittered-raster scan, first frame pinned at (0,0); every
// cumulative shift stays within margin_px per axis.
ScanTrajectory make_trajectory(const TrajectorySpec& spec, double margin_px);

// One detector frame of the forward model: exit wave object x shifted
// probe, propagated, intensity point-sampled at the stride-s lattice.
ArrayXXd forward_frame(const Field& object, const Field& probe, const Eigen::Vector2d& shift_px,
                       const PropagationKernel<double>& kernel, int s);
ArrayXXd forward_frame(const Field& object, const Field& probe, const Eigen::Vector2d& shift_px,
                       double distance_um, int s);

void add_noise(std::vector<ArrayXXd>& frames, const NoiseSpec& spec);

// Geometry helpers shared with the evaluation side.
Rect bar_chart_region(Index grid, int period_px);
Index bar_chart_length(Index grid, int period_px);
std::vector<std::pair<Eigen::Vector2d, double>> cell_layout(const SceneSpec& spec);

// Full synthetic acquisition.
struct SimulationSpec {
  SceneSpec scene;
  DiffuserSpec diffuser;
  TrajectorySpec trajectory;
  NoiseSpec noise;
  Index detector_size = 128;  // M
  int upsampling = 3;         // s
  double detector_pitch_um = 1.67;
  double wavelength_um = 0.532;
  double distance_um = 500.0;
  int threads = 1;
};

struct Simulation {
  Field object;  // sM x sM ground truth
  Field probe;
  ScanTrajectory trajectory;  // true shifts, detector px
  FrameStack frames;
};

Simulation simulate(const SimulationSpec& spec);

}  // namespace sptycho
