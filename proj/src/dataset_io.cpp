#include "sptycho/dataset_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

namespace sptycho {

namespace fs = std::filesystem;
using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "raw field files are written little-endian by memcpy");

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
  return f;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path.string() + "' for reading");
  return f;
}

json load_json(const fs::path& path) {
  auto f = open_in(path);
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw IoError("bad JSON in '" + path.string() + "': " + e.what());
  }
  return j;
}

int pgm_next_token(std::istream& in) {
  // Skips whitespace and '#' comments, returns the next integer.
  for (;;) {
    int ch = in.peek();
    if (ch == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(ch)) {
      in.get();
    } else {
      break;
    }
  }
  int value = -1;
  in >> value;
  return value;
}

}  // namespace

void write_pgm16(const fs::path& path, const Eigen::Array<std::uint16_t, Eigen::Dynamic, Eigen::Dynamic>& img) {
  auto f = open_out(path);
  f << "P5\n" << img.cols() << " " << img.rows() << "\n65535\n";
  std::vector<unsigned char> row(static_cast<std::size_t>(img.cols()) * 2);
  for (Index r = 0; r < img.rows(); ++r) {
    for (Index c = 0; c < img.cols(); ++c) {
      const std::uint16_t v = img(r, c);
      row[2 * c] = static_cast<unsigned char>(v >> 8);  // big-endian per P5
      row[2 * c + 1] = static_cast<unsigned char>(v & 0xff);
    }
    f.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!f) throw IoError("short write to '" + path.string() + "'");
}

void write_pgm8(const fs::path& path, const ArrayXXd& values01) {
  auto f = open_out(path);
  f << "P5\n" << values01.cols() << " " << values01.rows() << "\n255\n";
  std::vector<unsigned char> row(static_cast<std::size_t>(values01.cols()));
  for (Index r = 0; r < values01.rows(); ++r) {
    for (Index c = 0; c < values01.cols(); ++c) {
      const double v = std::clamp(values01(r, c), 0.0, 1.0);
      row[c] = static_cast<unsigned char>(std::llround(v * 255.0));
    }
    f.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!f) throw IoError("short write to '" + path.string() + "'");
}

PgmImage read_pgm(const fs::path& path) {
  auto f = open_in(path);
  char magic[2] = {0, 0};
  f.read(magic, 2);
  if (magic[0] != 'P' || magic[1] != '5')
    throw IoError("'" + path.string() + "' is not a binary PGM (P5)");
  const int w = pgm_next_token(f);
  const int h = pgm_next_token(f);
  const int maxval = pgm_next_token(f);
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535)
    throw IoError("'" + path.string() + "' has a bad PGM header");
  f.get();  // the single whitespace after maxval

  PgmImage img;
  img.maxval = maxval;
  img.pixels.resize(h, w);
  const bool wide = maxval > 255;
  std::vector<unsigned char> row(static_cast<std::size_t>(w) * (wide ? 2 : 1));
  for (Index r = 0; r < h; ++r) {
    f.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()));
    if (!f) throw IoError("truncated PGM data in '" + path.string() + "'");
    for (Index c = 0; c < w; ++c) {
      img.pixels(r, c) = wide ? static_cast<double>((row[2 * c] << 8) | row[2 * c + 1])
                              : static_cast<double>(row[c]);
    }
  }
  return img;
}

void write_field_raw(const fs::path& path, const ArrayXXcd& field) {
  auto f = open_out(path);
  f.write("SPTY", 4);
  const std::uint32_t rows = static_cast<std::uint32_t>(field.rows());
  const std::uint32_t cols = static_cast<std::uint32_t>(field.cols());
  f.write(reinterpret_cast<const char*>(&rows), 4);
  f.write(reinterpret_cast<const char*>(&cols), 4);
  std::vector<double> row(static_cast<std::size_t>(field.cols()) * 2);
  for (Index r = 0; r < field.rows(); ++r) {
    for (Index c = 0; c < field.cols(); ++c) {
      row[2 * c] = field(r, c).real();
      row[2 * c + 1] = field(r, c).imag();
    }
    f.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(double)));
  }
  if (!f) throw IoError("short write to '" + path.string() + "'");
}

ArrayXXcd read_field_raw(const fs::path& path) {
  auto f = open_in(path);
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, "SPTY", 4) != 0)
    throw IoError("'" + path.string() + "' is not a raw field file");
  std::uint32_t rows = 0, cols = 0;
  f.read(reinterpret_cast<char*>(&rows), 4);
  f.read(reinterpret_cast<char*>(&cols), 4);
  if (!f || rows == 0 || cols == 0)
    throw IoError("'" + path.string() + "' has a bad field header");
  ArrayXXcd field(rows, cols);
  std::vector<double> row(static_cast<std::size_t>(cols) * 2);
  for (std::uint32_t r = 0; r < rows; ++r) {
    f.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(double)));
    if (!f) throw IoError("truncated field data in '" + path.string() + "'");
    for (std::uint32_t c = 0; c < cols; ++c)
      field(r, c) = std::complex<double>(row[2 * c], row[2 * c + 1]);
  }
  return field;
}

void write_trajectory_json(const fs::path& path, const ScanTrajectory& traj, bool bare_array) {
  json shifts = json::array();
  for (const auto& s : traj.shifts) shifts.push_back({s.x(), s.y()});
  json out;
  if (bare_array) {
    out = shifts;
  } else {
    out["shifts"] = shifts;
    out["reference"] = traj.reference;
    if (!traj.sharpness.empty()) out["sharpness"] = traj.sharpness;
  }
  auto f = open_out(path);
  f << out.dump(2) << "\n";
}

ScanTrajectory read_trajectory_json(const fs::path& path) {
  const json j = load_json(path);
  ScanTrajectory traj;
  const json* shifts = nullptr;
  if (j.is_array()) {
    shifts = &j;
  } else if (j.is_object() && j.contains("shifts")) {
    shifts = &j.at("shifts");
    traj.reference = j.value("reference", 0);
    if (j.contains("sharpness")) traj.sharpness = j.at("sharpness").get<std::vector<double>>();
  } else {
    throw IoError("'" + path.string() + "' is not a trajectory file");
  }
  for (const auto& pair : *shifts) {
    if (!pair.is_array() || pair.size() != 2)
      throw IoError("'" + path.string() + "' has a malformed shift entry");
    traj.shifts.emplace_back(pair[0].get<double>(), pair[1].get<double>());
  }
  return traj;
}

void write_dataset(const FrameStack& fs_in, const fs::path& dir, const ScanTrajectory* truth_trajectory,
                   const Field* truth_object, const Field* truth_probe) {
  validate_frame_stack(fs_in);
  if (!fs_in.order_tags.empty() && fs_in.order_tags.size() != fs_in.frames.size())
    throw ValidationError("write_dataset: order tag count disagrees with frame count");

  std::error_code ec;
  fs::create_directories(dir / "frames", ec);
  if (ec) throw IoError("cannot create dataset directory '" + (dir / "frames").string() + "': " + ec.message());

  double max_intensity = 0.0;
  for (const auto& f : fs_in.frames) max_intensity = std::max(max_intensity, f.maxCoeff());
  const double scale = max_intensity > 0.0 ? 65535.0 / max_intensity : 1.0;

  json manifest;
  manifest["schema_version"] = 1;
  manifest["wavelength_um"] = fs_in.wavelength_um;
  manifest["detector_pitch_um"] = fs_in.detector_pitch_um;
  manifest["nominal_distance_um"] = fs_in.nominal_distance_um;
  manifest["frame_count"] = fs_in.count();
  manifest["frame_size"] = static_cast<int>(fs_in.frame_size());
  manifest["upsampling_hint"] = fs_in.upsampling_hint;
  manifest["intensity_scale"] = scale;

  json names = json::array();
  for (int j = 0; j < fs_in.count(); ++j) {
    std::string name;
    if (!fs_in.order_tags.empty()) {
      name = fs_in.order_tags[j];
    } else {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "frames/frame_%04d.pgm", j);
      name = buf;
    }
    names.push_back(name);

    const auto& frame = fs_in.frames[j];
    Eigen::Array<std::uint16_t, Eigen::Dynamic, Eigen::Dynamic> quantized(frame.rows(), frame.cols());
    for (Index c = 0; c < frame.cols(); ++c)
      for (Index r = 0; r < frame.rows(); ++r)
        quantized(r, c) = static_cast<std::uint16_t>(
            std::clamp<long long>(std::llround(frame(r, c) * scale), 0, 65535));
    write_pgm16(dir / name, quantized);
  }
  manifest["frames"] = names;

  {
    auto f = open_out(dir / "manifest.json");
    f << manifest.dump(2) << "\n";
  }

  if (truth_trajectory || truth_object || truth_probe) {
    fs::create_directories(dir / "truth", ec);
    if (ec) throw IoError("cannot create '" + (dir / "truth").string() + "': " + ec.message());
    if (truth_object) write_field_raw(dir / "truth" / "object.spty", truth_object->data);
    if (truth_probe) write_field_raw(dir / "truth" / "probe.spty", truth_probe->data);
    if (truth_trajectory) write_trajectory_json(dir / "truth" / "trajectory.json", *truth_trajectory, true);
  }
}

FrameStack read_dataset(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path))
    throw IoError("no dataset manifest at '" + manifest_path.string() + "'");
  const json manifest = load_json(manifest_path);

  for (const char* key : {"schema_version", "wavelength_um", "detector_pitch_um", "nominal_distance_um",
                          "frame_count", "frame_size", "upsampling_hint", "intensity_scale", "frames"}) {
    if (!manifest.contains(key))
      throw IoError("manifest '" + manifest_path.string() + "' is missing key '" + std::string(key) + "'");
  }
  if (manifest["schema_version"].get<int>() != 1)
    throw IoError("manifest '" + manifest_path.string() + "': unsupported schema version");

  FrameStack fs_out;
  fs_out.wavelength_um = manifest["wavelength_um"].get<double>();
  fs_out.detector_pitch_um = manifest["detector_pitch_um"].get<double>();
  fs_out.nominal_distance_um = manifest["nominal_distance_um"].get<double>();
  fs_out.upsampling_hint = manifest["upsampling_hint"].get<int>();
  const double scale = manifest["intensity_scale"].get<double>();
  if (!(scale > 0.0)) throw IoError("manifest '" + manifest_path.string() + "': bad intensity_scale");

  const int frame_size = manifest["frame_size"].get<int>();
  const auto names = manifest["frames"].get<std::vector<std::string>>();
  if (static_cast<int>(names.size()) != manifest["frame_count"].get<int>())
    throw IoError("manifest '" + manifest_path.string() + "': frame list disagrees with frame_count");

  fs_out.order_tags = names;
  fs_out.frames.reserve(names.size());
  for (const auto& name : names) {
    PgmImage img = read_pgm(dir / name);
    if (img.pixels.rows() != frame_size || img.pixels.cols() != frame_size)
      throw IoError("frame '" + (dir / name).string() + "' size disagrees with the manifest");
    fs_out.frames.push_back(img.pixels / scale);
  }
  validate_frame_stack(fs_out);
  return fs_out;
}

DatasetTruth read_truth(const fs::path& dir) {
  DatasetTruth truth;
  const json manifest = load_json(dir / "manifest.json");
  const double pitch_hi =
      manifest["detector_pitch_um"].get<double>() / manifest["upsampling_hint"].get<int>();
  const double wavelength = manifest["wavelength_um"].get<double>();

  const fs::path obj = dir / "truth" / "object.spty";
  const fs::path prb = dir / "truth" / "probe.spty";
  const fs::path trj = dir / "truth" / "trajectory.json";
  if (fs::exists(obj)) truth.object = Field{read_field_raw(obj), pitch_hi, wavelength};
  if (fs::exists(prb)) truth.probe = Field{read_field_raw(prb), pitch_hi, wavelength};
  if (fs::exists(trj)) truth.trajectory = read_trajectory_json(trj);
  return truth;
}

}  // namespace sptycho
