#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "rnls/field.hpp"

namespace rnls {

/// Binary field snapshot, all integers u32 and reals IEEE-754 f64, little
/// endian:
///
///   "RNLS" | version (=1) | d | {N_j, L_j} for j < d | t | (re, im) * prod N_j
///
/// Samples are in row-major order, axis 0 slowest.
namespace snapshot {

inline constexpr std::uint32_t kVersion = 1;
inline constexpr char kMagic[4] = {'R', 'N', 'L', 'S'};

struct Snapshot {
  ComplexField field;
  double time = 0.0;
};

namespace detail {

inline void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<unsigned char>((v >> (8 * b)) & 0xFFu));
}

inline void put_f64(std::vector<unsigned char>& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<unsigned char>((bits >> (8 * b)) & 0xFFu));
}

class Reader {
public:
  explicit Reader(std::span<const unsigned char> bytes) : bytes_(bytes) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) v |= std::uint32_t(bytes_[pos_ + b]) << (8 * b);
    pos_ += 4;
    return v;
  }

  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int b = 0; b < 8; ++b) v |= std::uint64_t(bytes_[pos_ + b]) << (8 * b);
    pos_ += 8;
    return std::bit_cast<double>(v);
  }

  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw io_error("MalformedSnapshot", "snapshot truncated");
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }
  std::size_t position() const { return pos_; }

private:
  std::span<const unsigned char> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::vector<unsigned char> encode(const ComplexField& field, double time) {
  const GridSpec& g = field.grid();
  std::vector<unsigned char> out;
  out.reserve(4 + 8 + 12 * std::size_t(g.dim) + 8 + 16 * field.size());
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  detail::put_u32(out, kVersion);
  detail::put_u32(out, std::uint32_t(g.dim));
  for (int j = 0; j < g.dim; ++j) {
    detail::put_u32(out, std::uint32_t(g.points[j]));
    detail::put_f64(out, g.half_width[j]);
  }
  detail::put_f64(out, time);
  for (const auto& v : field.values()) {
    detail::put_f64(out, v.real());
    detail::put_f64(out, v.imag());
  }
  return out;
}

inline Snapshot decode(std::span<const unsigned char> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw io_error("MalformedSnapshot", "bad magic bytes");
  detail::Reader r(bytes.subspan(4));
  const auto version = r.u32();
  if (version != kVersion)
    throw io_error("MalformedSnapshot", "unsupported snapshot version " + std::to_string(version));
  const auto d = r.u32();
  if (d < 1 || d > std::uint32_t(kMaxDim)) throw io_error("MalformedSnapshot", "bad dimension");
  std::array<std::size_t, kMaxDim> n{};
  std::array<double, kMaxDim> L{};
  for (std::uint32_t j = 0; j < d; ++j) {
    n[j] = r.u32();
    L[j] = r.f64();
  }
  GridSpec g;
  try {
    g = make_grid(int(d), std::span<const double>(L.data(), d), std::span<const std::size_t>(n.data(), d));
  } catch (const Error& e) {
    throw io_error("MalformedSnapshot", std::string("invalid grid header: ") + e.what());
  }
  const double t = r.f64();
  if (r.remaining() != 16 * g.size())
    throw io_error("MalformedSnapshot", "sample payload has the wrong length");
  ComplexField f(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double re = r.f64();
    const double im = r.f64();
    f[i] = Complex(re, im);
  }
  f.set_blown_up(!f.all_finite());
  return Snapshot{std::move(f), t};
}

inline void write(const std::string& path, const ComplexField& field, double time) {
  const auto bytes = encode(field, time);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw io_error("WriteFailed", "cannot open " + path);
  os.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  if (!os) throw io_error("WriteFailed", "short write to " + path);
}

inline Snapshot read(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw io_error("ReadFailed", "cannot open " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return decode(bytes);
}

}  // namespace snapshot
}  // namespace rnls
