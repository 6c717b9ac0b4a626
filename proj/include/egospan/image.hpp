#pragma once

#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "egospan/error.hpp"

namespace egospan {

// Binary wearer silhouette, row-major, 1 = foreground.
struct ForegroundMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  ForegroundMask() = default;
  ForegroundMask(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h, 0) {}

  std::uint8_t at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  std::size_t count() const {
    std::size_t n = 0;
    for (auto v : data) n += v;
    return n;
  }
  bool operator==(const ForegroundMask&) const = default;
};

// Per-pixel foreground probability from the shape net.
struct ProbabilityMap {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  ForegroundMask threshold(double level = 0.5) const {
    ForegroundMask m(width, height);
    for (std::size_t i = 0; i < data.size(); ++i) m.data[i] = data[i] > level ? 1 : 0;
    return m;
  }
};

// 8-bit interleaved RGB; channel values map to [0, 1] by /255.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, 0) {}

  std::uint8_t& at(int x, int y, int c) { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  std::uint8_t at(int x, int y, int c) const { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  double value(int x, int y, int c) const { return at(x, y, c) / 255.0; }
  bool operator==(const RgbImage&) const = default;
};

inline double mask_iou(const ForegroundMask& a, const ForegroundMask& b, std::size_t* inter = nullptr,
                       std::size_t* uni = nullptr) {
  if (a.width != b.width || a.height != b.height) throw ShapeError("mask size mismatch");
  std::size_t i = 0, u = 0;
  for (std::size_t k = 0; k < a.data.size(); ++k) {
    i += a.data[k] & b.data[k];
    u += a.data[k] | b.data[k];
  }
  if (inter) *inter = i;
  if (uni) *uni = u;
  return u == 0 ? 1.0 : static_cast<double>(i) / static_cast<double>(u);
}

namespace detail {

inline void write_pnm_header(std::ostream& out, const char* magic, int w, int h) {
  out << magic << "\n" << w << " " << h << "\n255\n";
}

inline void read_pnm_header(std::istream& in, const std::string& magic, int& w, int& h,
                            const std::string& path) {
  std::string m;
  int maxval = 0;
  in >> m;
  const auto skip_comments = [&] {
    in >> std::ws;
    while (in.peek() == '#') {
      std::string line;
      std::getline(in, line);
      in >> std::ws;
    }
  };
  skip_comments();
  in >> w;
  skip_comments();
  in >> h;
  skip_comments();
  in >> maxval;
  if (!in || m != magic || w <= 0 || h <= 0 || maxval != 255)
    throw DataError("bad " + magic + " header in '" + path + "'");
  in.get();  // single whitespace before raster
}

}  // namespace detail

// Binary PGM (P5), foreground stored as 255.
inline void write_pgm(const std::string& path, const ForegroundMask& mask) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  detail::write_pnm_header(out, "P5", mask.width, mask.height);
  std::vector<char> raster(mask.data.size());
  for (std::size_t i = 0; i < raster.size(); ++i) raster[i] = static_cast<char>(mask.data[i] ? 255 : 0);
  out.write(raster.data(), static_cast<std::streamsize>(raster.size()));
  if (!out) throw DataError("failed writing '" + path + "'");
}

inline ForegroundMask read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  int w = 0, h = 0;
  detail::read_pnm_header(in, "P5", w, h, path);
  ForegroundMask m(w, h);
  std::vector<char> raster(m.data.size());
  in.read(raster.data(), static_cast<std::streamsize>(raster.size()));
  if (in.gcount() != static_cast<std::streamsize>(raster.size())) throw DataError("truncated PGM '" + path + "'");
  for (std::size_t i = 0; i < raster.size(); ++i) m.data[i] = static_cast<unsigned char>(raster[i]) >= 128 ? 1 : 0;
  return m;
}

inline void write_ppm(const std::string& path, const RgbImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  detail::write_pnm_header(out, "P6", img.width, img.height);
  out.write(reinterpret_cast<const char*>(img.data.data()), static_cast<std::streamsize>(img.data.size()));
  if (!out) throw DataError("failed writing '" + path + "'");
}

inline RgbImage read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  int w = 0, h = 0;
  detail::read_pnm_header(in, "P6", w, h, path);
  RgbImage img(w, h);
  in.read(reinterpret_cast<char*>(img.data.data()), static_cast<std::streamsize>(img.data.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.data.size())) throw DataError("truncated PPM '" + path + "'");
  return img;
}

}  // namespace egospan
