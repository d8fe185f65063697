#pragma once

// Binary ParamSet container:
//   "BWLK" | u32 version | u32 entry count |
//   per entry: u32 name length, UTF-8 name, u32 rank, u32 dims[rank],
//              f32 values (row-major)
// All integers and floats little-endian.

#include "barlowwalk/nn/param_set.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

namespace barlowwalk::nn {

inline constexpr std::array<char, 4> kContainerMagic{'B', 'W', 'L', 'K'};
inline constexpr std::uint32_t kContainerVersion = 1;

namespace io {

inline void write_u32(std::ostream& os, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                              static_cast<char>((v >> 16) & 0xFF),
                              static_cast<char>((v >> 24) & 0xFF)};
  os.write(b.data(), 4);
}

inline std::uint32_t read_u32(std::istream& is) {
  std::array<unsigned char, 4> b{};
  if (!is.read(reinterpret_cast<char*>(b.data()), 4)) {
    throw ConfigError("container: unexpected end of file");
  }
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline void write_u64(std::ostream& os, std::uint64_t v) {
  write_u32(os, static_cast<std::uint32_t>(v & 0xFFFFFFFFu));
  write_u32(os, static_cast<std::uint32_t>(v >> 32));
}

inline std::uint64_t read_u64(std::istream& is) {
  const std::uint64_t lo = read_u32(is);
  const std::uint64_t hi = read_u32(is);
  return lo | (hi << 32);
}

inline void write_f32(std::ostream& os, float v) { write_u32(os, std::bit_cast<std::uint32_t>(v)); }
inline float read_f32(std::istream& is) { return std::bit_cast<float>(read_u32(is)); }

}  // namespace io

template <typename Scalar>
void write_params(std::ostream& os, const ParamSet<Scalar>& params) {
  os.write(kContainerMagic.data(), 4);
  io::write_u32(os, kContainerVersion);
  io::write_u32(os, static_cast<std::uint32_t>(params.size()));
  for (const auto& e : params.entries()) {
    io::write_u32(os, static_cast<std::uint32_t>(e.name.size()));
    os.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    io::write_u32(os, static_cast<std::uint32_t>(e.dims.size()));
    for (auto d : e.dims) io::write_u32(os, d);
    for (Eigen::Index r = 0; r < e.values.rows(); ++r) {
      for (Eigen::Index c = 0; c < e.values.cols(); ++c) {
        io::write_f32(os, static_cast<float>(e.values(r, c)));
      }
    }
  }
  if (!os) throw ConfigError("container: write failed");
}

template <typename Scalar>
ParamSet<Scalar> read_params(std::istream& is) {
  std::array<char, 4> magic{};
  if (!is.read(magic.data(), 4) || magic != kContainerMagic) {
    throw ConfigError("container: bad magic (expected BWLK)");
  }
  const std::uint32_t version = io::read_u32(is);
  if (version != kContainerVersion) {
    throw ConfigError("container: unsupported version " + std::to_string(version));
  }
  const std::uint32_t count = io::read_u32(is);
  ParamSet<Scalar> params;
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::uint32_t len = io::read_u32(is);
    if (len > (1u << 20)) throw ConfigError("container: implausible name length");
    std::string name(len, '\0');
    if (!is.read(name.data(), len)) throw ConfigError("container: truncated name");
    const std::uint32_t rank = io::read_u32(is);
    if (rank < 1 || rank > 2) {
      throw ConfigError("container: entry '" + name + "' has unsupported rank " +
                        std::to_string(rank));
    }
    std::vector<std::uint32_t> dims(rank);
    for (auto& d : dims) d = io::read_u32(is);
    auto& e = params.add(name, dims);
    for (Eigen::Index r = 0; r < e.values.rows(); ++r) {
      for (Eigen::Index c = 0; c < e.values.cols(); ++c) {
        e.values(r, c) = static_cast<Scalar>(io::read_f32(is));
      }
    }
  }
  return params;
}

/// Copies values from a loaded set into a set built from configuration.
/// Throws naming the first entry whose name or shape differs.
template <typename Scalar>
void assign_params(ParamSet<Scalar>& target, const ParamSet<Scalar>& loaded) {
  const auto& t = target.entries();
  const auto& l = loaded.entries();
  const std::size_t n = std::max(t.size(), l.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (i >= t.size()) {
      throw ConfigError("checkpoint has unexpected extra entry '" + l[i].name + "'");
    }
    if (i >= l.size()) {
      throw ConfigError("checkpoint is missing entry '" + t[i].name + "'");
    }
    if (t[i].name != l[i].name || t[i].dims != l[i].dims) {
      auto shape = [](const std::vector<std::uint32_t>& d) {
        std::string s;
        for (std::size_t j = 0; j < d.size(); ++j) s += (j ? "x" : "") + std::to_string(d[j]);
        return s;
      };
      throw ConfigError("checkpoint entry mismatch at '" + t[i].name + "' (" +
                        shape(t[i].dims) + "): checkpoint has '" + l[i].name + "' (" +
                        shape(l[i].dims) + ")");
    }
  }
  for (std::size_t i = 0; i < n; ++i) target.entries()[i].values = l[i].values;
}

}  // namespace barlowwalk::nn
