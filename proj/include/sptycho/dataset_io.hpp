#pragma once

#include <filesystem>
#include <optional>

#include "sptycho/field.hpp"
#include "sptycho/simulate.hpp"
#include "sptycho/trajectory.hpp"

namespace sptycho {

// 16-bit big-endian binary PGM (P5, maxval 65535).
void write_pgm16(const std::filesystem::path& path, const Eigen::Array<std::uint16_t, Eigen::Dynamic, Eigen::Dynamic>& img);

// 8-bit preview; values clamped from [0, 1].
void write_pgm8(const std::filesystem::path& path, const ArrayXXd& values01);

struct PgmImage {
  ArrayXXd pixels;  // raw counts
  int maxval = 0;
};
PgmImage read_pgm(const std::filesystem::path& path);

// Raw complex field: magic "SPTY", u32 rows, u32 cols, then row-major
// little-endian float64 (re, im) pairs.
void write_field_raw(const std::filesystem::path& path, const ArrayXXcd& field);
ArrayXXcd read_field_raw(const std::filesystem::path& path);

// Registration output: {"shifts": [[x, y], ...], "sharpness": [...]}.
// The truth sidecar stores the bare [[x, y], ...] array; both parse.
void write_trajectory_json(const std::filesystem::path& path, const ScanTrajectory& traj, bool bare_array = false);
ScanTrajectory read_trajectory_json(const std::filesystem::path& path);

// Dataset directory: manifest.json, frames/frame_NNNN.pgm, and an optional
// truth/ sidecar with the ground-truth fields and trajectory.
void write_dataset(const FrameStack& fs, const std::filesystem::path& dir,
                   const ScanTrajectory* truth_trajectory = nullptr,
                   const Field* truth_object = nullptr, const Field* truth_probe = nullptr);

FrameStack read_dataset(const std::filesystem::path& dir);

struct DatasetTruth {
  std::optional<Field> object;
  std::optional<Field> probe;
  std::optional<ScanTrajectory> trajectory;
};
DatasetTruth read_truth(const std::filesystem::path& dir);

}  // namespace sptycho
