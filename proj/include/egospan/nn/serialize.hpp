#pragma once

// Weight files: a text header naming the layers and every parameter tensor
// with its shape, then the values as little-endian IEEE doubles in header
// order.
//
//   egospan-weights 1
//   endian little
//   layers <L>
//   <one description per line>
//   tensors <K>
//   <name> <rank> <d0> ... <d(rank-1)>
//   payload <bytes>
//   <raw bytes>

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "egospan/binio.hpp"
#include "egospan/nn/network.hpp"

namespace egospan::nn {

inline void save_weights(std::ostream& out, const std::vector<std::string>& layers, const ParamList& params) {
  out << "egospan-weights 1\nendian little\nlayers " << layers.size() << "\n";
  for (const auto& l : layers) out << l << "\n";
  out << "tensors " << params.size() << "\n";
  for (const auto& p : params) {
    out << p.name << " " << p.value->rank();
    for (int d : p.value->shape) out << " " << d;
    out << "\n";
  }
  out << "payload " << scalar_count(params) * 8 << "\n";
  std::string bytes;
  bytes.reserve(scalar_count(params) * 8);
  for (const auto& p : params)
    for (double v : p.value->data) put_f64(bytes, v);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing weights");
}

namespace detail {

inline std::string header_line(std::istream& in, const char* what) {
  std::string line;
  if (!std::getline(in, line)) throw DataError(std::string("weights: missing ") + what);
  return line;
}

inline std::size_t header_count(std::istream& in, const std::string& key) {
  std::istringstream s(header_line(in, key.c_str()));
  std::string k;
  long long n = -1;
  if (!(s >> k >> n) || k != key || n < 0) throw DataError("weights: bad '" + key + "' line");
  return static_cast<std::size_t>(n);
}

}  // namespace detail

// Loads into params, which must match the file's layer list, names and
// shapes exactly.
inline void load_weights(std::istream& in, const std::vector<std::string>& layers, const ParamList& params) {
  if (detail::header_line(in, "magic") != "egospan-weights 1") throw DataError("weights: bad magic line");
  if (detail::header_line(in, "endianness") != "endian little") throw DataError("weights: unsupported endianness");
  const std::size_t nl = detail::header_count(in, "layers");
  if (nl != layers.size())
    throw DataError("weights: file has " + std::to_string(nl) + " layers, model has " + std::to_string(layers.size()));
  for (std::size_t i = 0; i < nl; ++i) {
    const std::string line = detail::header_line(in, "layer");
    if (line != layers[i]) throw DataError("weights: layer '" + line + "' does not match model layer '" + layers[i] + "'");
  }
  const std::size_t nt = detail::header_count(in, "tensors");
  if (nt != params.size())
    throw DataError("weights: file has " + std::to_string(nt) + " tensors, model has " + std::to_string(params.size()));
  for (const auto& p : params) {
    std::istringstream s(detail::header_line(in, "tensor"));
    std::string name;
    int rank = 0;
    if (!(s >> name >> rank) || rank < 1 || rank > 5) throw DataError("weights: bad tensor line for " + p.name);
    Shape shape(static_cast<std::size_t>(rank));
    for (auto& d : shape)
      if (!(s >> d)) throw DataError("weights: bad tensor line for " + p.name);
    if (name != p.name || shape != p.value->shape)
      throw DataError("weights: tensor " + name + " " + shape_string(shape) + " does not match " + p.name + " " +
                      shape_string(p.value->shape));
  }
  if (detail::header_count(in, "payload") != scalar_count(params) * 8) throw DataError("weights: payload size mismatch");
  std::string bytes(scalar_count(params) * 8, '\0');
  in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (static_cast<std::size_t>(in.gcount()) != bytes.size()) throw DataError("weights: truncated payload");
  std::size_t pos = 0;
  for (const auto& p : params)
    for (double& v : p.value->data) {
      v = get_f64(bytes.data() + pos);
      pos += 8;
    }
}

}  // namespace egospan::nn
