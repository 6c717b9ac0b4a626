#pragma once

// On-disk dataset: a text manifest, one directory per sequence with PGM
// masks, PPM input images, a text index and flat little-endian binaries for
// labels and motion history.
//
//   <root>/manifest.txt
//     egospan-dataset 1
//     intrinsics <width> <height> <fov> <cx> <cy> <focal>
//     window <T>
//     seed <s>
//     images <0|1>
//     sequences <S>
//     frames <F>
//     sequence <name> <motion> <seed> <frames> <standing_height> <ground_y>   (S lines)
//   <root>/<name>/index.txt
//     frames <n>
//     labels 133 float64 little
//     mhi <T> 13 float64 little
//     <frame> <timestamp> <mask path> <image path or ->              (n lines)
//   <root>/<name>/labels.bin   n records of 133 doubles, see kLabelLayout
//   <root>/<name>/mhi.bin      n records of T x 13 doubles, row-major
//   <root>/<name>/masks/NNNNNN.pgm, images/NNNNNN.ppm

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "egospan/binio.hpp"
#include "egospan/synth.hpp"

namespace egospan {

inline constexpr std::size_t kLabelSize = 133;
inline constexpr const char* kLabelLayout =
    "body[45] head_f[3] head_u[3] camera_rotation[9] camera_position[3] tracked_rotation[9] tracked_position[3] "
    "world_body[45] local_rotation[9] local_origin[3] local_scale[1]";

struct SequenceEntry {
  std::string name;
  std::string motion;  // procedural motion id or "bvh"
  std::uint64_t seed = 0;
  std::size_t frames = 0;
  HeightCalibration calibration;
};

struct DatasetManifest {
  FisheyeIntrinsics intrinsics;
  std::size_t window = 64;
  std::uint64_t seed = 0;
  bool images = true;
  std::vector<SequenceEntry> sequences;

  std::size_t frame_count() const {
    std::size_t n = 0;
    for (const auto& s : sequences) n += s.frames;
    return n;
  }
};

namespace detail {

inline std::string frame_file(std::size_t index, const char* ext) {
  std::ostringstream s;
  s << std::setw(6) << std::setfill('0') << index << ext;
  return s.str();
}

inline void put_mat(std::string& out, const Mat3& m) {
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) put_f64(out, m(r, c));
}

inline void put_vec(std::string& out, const Eigen::Ref<const Eigen::VectorXd>& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) put_f64(out, v[i]);
}

struct Cursor {
  const char* p;
  double next() {
    const double v = get_f64(p);
    p += 8;
    return v;
  }
  Vec3 vec3() {
    const double x = next(), y = next(), z = next();
    return {x, y, z};
  }
  Mat3 mat3() {
    Mat3 m;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) m(r, c) = next();
    return m;
  }
  BodyPose body() {
    BodyPose b;
    for (std::size_t k = 0; k < kNumKeypoints; ++k) b.set(k, vec3());
    return b;
  }
};

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

inline void expect_token(std::istream& in, const std::string& want, const std::string& where) {
  std::string got;
  if (!(in >> got) || got != want) throw DataError(where + ": expected '" + want + "', got '" + got + "'");
}

}  // namespace detail

inline void write_sequence(const std::filesystem::path& root, const std::string& name, const Sequence& seq) {
  namespace fs = std::filesystem;
  const fs::path dir = root / name;
  fs::create_directories(dir / "masks");
  const bool images = !seq.frames.empty() && seq.frames.front().image.has_value();
  if (images) fs::create_directories(dir / "images");
  const std::size_t T = seq.frames.empty() ? 0 : seq.frames.front().mhi.window();
  std::ostringstream index;
  index << std::setprecision(17) << "frames " << seq.frames.size() << "\nlabels " << kLabelSize
        << " float64 little\nmhi " << T << " " << kMotionColumnSize << " float64 little\n";
  std::string labels, mhi;
  labels.reserve(seq.frames.size() * kLabelSize * 8);
  for (const auto& f : seq.frames) {
    const std::string mask_file = "masks/" + detail::frame_file(f.index, ".pgm");
    write_pgm((dir / mask_file).string(), f.mask);
    std::string image_file = "-";
    if (f.image) {
      image_file = "images/" + detail::frame_file(f.index, ".ppm");
      write_ppm((dir / image_file).string(), *f.image);
    }
    index << f.index << " " << f.timestamp << " " << mask_file << " " << image_file << "\n";
    detail::put_vec(labels, f.body.flat());
    detail::put_vec(labels, f.head.flat());
    detail::put_mat(labels, f.camera.rotation);
    detail::put_vec(labels, f.camera.position);
    detail::put_mat(labels, f.tracked_camera.rotation);
    detail::put_vec(labels, f.tracked_camera.position);
    detail::put_vec(labels, f.world_body.flat());
    detail::put_mat(labels, f.to_local.rotation);
    detail::put_vec(labels, f.to_local.origin);
    put_f64(labels, f.to_local.scale);
    if (f.mhi.window() != T) throw DataError("sequence '" + name + "' mixes motion history windows");
    for (Eigen::Index r = 0; r < f.mhi.grid.rows(); ++r)
      for (Eigen::Index c = 0; c < f.mhi.grid.cols(); ++c) put_f64(mhi, f.mhi.grid(r, c));
  }
  detail::write_file(dir / "index.txt", index.str());
  detail::write_file(dir / "labels.bin", labels);
  detail::write_file(dir / "mhi.bin", mhi);
}

inline void write_manifest(const std::filesystem::path& root, const DatasetManifest& m) {
  std::ostringstream s;
  const auto& k = m.intrinsics;
  s << std::setprecision(17) << "egospan-dataset 1\nintrinsics " << k.width << " " << k.height << " " << k.fov << " "
    << k.center.x() << " " << k.center.y() << " " << k.focal << "\nwindow " << m.window << "\nseed " << m.seed
    << "\nimages " << (m.images ? 1 : 0) << "\nsequences " << m.sequences.size() << "\nframes " << m.frame_count()
    << "\n";
  for (const auto& e : m.sequences)
    s << "sequence " << e.name << " " << e.motion << " " << e.seed << " " << e.frames << " "
      << e.calibration.standing_height << " " << e.calibration.ground_y << "\n";
  detail::write_file(root / "manifest.txt", s.str());
}

inline DatasetManifest read_manifest(const std::filesystem::path& root) {
  const std::string where = (root / "manifest.txt").string();
  std::istringstream in(detail::read_file(root / "manifest.txt"));
  DatasetManifest m;
  int version = 0;
  detail::expect_token(in, "egospan-dataset", where);
  if (!(in >> version) || version != 1) throw DataError(where + ": unsupported version");
  auto& k = m.intrinsics;
  detail::expect_token(in, "intrinsics", where);
  if (!(in >> k.width >> k.height >> k.fov >> k.center.x() >> k.center.y() >> k.focal))
    throw DataError(where + ": bad intrinsics");
  int images = 0;
  std::size_t count = 0, frames = 0;
  detail::expect_token(in, "window", where);
  in >> m.window;
  detail::expect_token(in, "seed", where);
  in >> m.seed;
  detail::expect_token(in, "images", where);
  in >> images;
  detail::expect_token(in, "sequences", where);
  in >> count;
  detail::expect_token(in, "frames", where);
  in >> frames;
  if (!in) throw DataError(where + ": bad header");
  m.images = images != 0;
  for (std::size_t i = 0; i < count; ++i) {
    SequenceEntry e;
    detail::expect_token(in, "sequence", where);
    if (!(in >> e.name >> e.motion >> e.seed >> e.frames >> e.calibration.standing_height >> e.calibration.ground_y))
      throw DataError(where + ": bad sequence line " + std::to_string(i + 1));
    m.sequences.push_back(std::move(e));
  }
  if (m.frame_count() != frames) throw DataError(where + ": frame count does not match sequence lines");
  return m;
}

// Reads one sequence back. Images are skipped unless asked for.
inline Sequence read_sequence(const std::filesystem::path& root, const SequenceEntry& e, bool images = false) {
  const std::filesystem::path dir = root / e.name;
  const std::string where = (dir / "index.txt").string();
  std::istringstream index(detail::read_file(dir / "index.txt"));
  std::size_t n = 0, label_size = 0, T = 0, cols = 0;
  std::string type, order;
  detail::expect_token(index, "frames", where);
  index >> n;
  detail::expect_token(index, "labels", where);
  index >> label_size >> type >> order;
  if (!index || label_size != kLabelSize || type != "float64" || order != "little")
    throw DataError(where + ": unsupported label layout");
  detail::expect_token(index, "mhi", where);
  index >> T >> cols >> type >> order;
  if (!index || cols != kMotionColumnSize || type != "float64" || order != "little")
    throw DataError(where + ": unsupported motion history layout");
  if (n != e.frames) throw DataError(where + ": frame count does not match the manifest");
  const std::string labels = detail::read_file(dir / "labels.bin");
  const std::string mhi = detail::read_file(dir / "mhi.bin");
  if (labels.size() != n * kLabelSize * 8) throw DataError("'" + (dir / "labels.bin").string() + "' has the wrong size");
  if (mhi.size() != n * T * cols * 8) throw DataError("'" + (dir / "mhi.bin").string() + "' has the wrong size");
  Sequence seq;
  seq.name = e.name;
  seq.calibration = e.calibration;
  seq.frames.resize(n);
  detail::Cursor lc{labels.data()}, mc{mhi.data()};
  for (std::size_t i = 0; i < n; ++i) {
    LabeledFrame& f = seq.frames[i];
    std::string mask_file, image_file;
    if (!(index >> f.index >> f.timestamp >> mask_file >> image_file))
      throw DataError(where + ": bad frame line " + std::to_string(i + 1));
    f.mask = read_pgm((dir / mask_file).string());
    if (images) {
      if (image_file == "-") throw DataError(where + ": frame " + std::to_string(f.index) + " has no input image");
      f.image = read_ppm((dir / image_file).string());
    }
    f.body = lc.body();
    f.head.f = lc.vec3();
    f.head.u = lc.vec3();
    f.camera.rotation = lc.mat3();
    f.camera.position = lc.vec3();
    f.camera.timestamp = f.timestamp;
    f.tracked_camera.rotation = lc.mat3();
    f.tracked_camera.position = lc.vec3();
    f.tracked_camera.timestamp = f.timestamp;
    f.world_body = lc.body();
    f.to_local.rotation = lc.mat3();
    f.to_local.origin = lc.vec3();
    f.to_local.scale = lc.next();
    f.mhi.grid.resize(static_cast<Eigen::Index>(T), kMotionColumnSize);
    for (std::size_t r = 0; r < T; ++r)
      for (std::size_t c = 0; c < cols; ++c)
        f.mhi.grid(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = mc.next();
  }
  return seq;
}

}  // namespace egospan
