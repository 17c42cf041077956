#pragma once

// Checkpoint file: a versioned header with the parameter layout followed by the
// flat parameters as little-endian IEEE-754 doubles. All integers are
// little-endian.
//
//   char[8]  "SAMLCKPT"
//   u32      version (= 1)
//   u32      number of layout entries
//   per entry:
//     u32    name length, then that many bytes of name
//     u32    rank, then rank x u64 dimensions
//     u64    offset into the flat vector
//   u64      number of values
//   f64[]    values

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "samlab/error.hpp"
#include "samlab/tensor.hpp"

namespace samlab::harness {

inline constexpr std::array<char, 8> kCheckpointMagic = {'S', 'A', 'M', 'L', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

template <class T>
void put_le(std::vector<std::uint8_t>& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& buf) : buf_(buf) {}

  template <class T>
  T get() {
    need(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(T{buf_[pos_ + i]} << (8 * i));
    pos_ += sizeof(T);
    return v;
  }

  std::string bytes(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(buf_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  bool at_end() const { return pos_ == buf_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > buf_.size()) throw LengthError("checkpoint: truncated file");
  }
  const std::vector<std::uint8_t>& buf_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::vector<std::uint8_t> encode_checkpoint(const ParameterVector& params) {
  std::vector<std::uint8_t> out(kCheckpointMagic.begin(), kCheckpointMagic.end());
  detail::put_le<std::uint32_t>(out, kCheckpointVersion);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(params.layout().size()));
  for (const auto& e : params.layout()) {
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(e.name.size()));
    out.insert(out.end(), e.name.begin(), e.name.end());
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(e.shape.size()));
    for (auto d : e.shape) detail::put_le<std::uint64_t>(out, d);
    detail::put_le<std::uint64_t>(out, e.offset);
  }
  detail::put_le<std::uint64_t>(out, params.size());
  for (double v : params.values()) detail::put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  return out;
}

inline ParameterVector decode_checkpoint(const std::vector<std::uint8_t>& buf) {
  detail::Reader in(buf);
  const std::string magic = in.bytes(8);
  if (std::memcmp(magic.data(), kCheckpointMagic.data(), 8) != 0) {
    throw FormatError("checkpoint: bad magic, expected SAMLCKPT");
  }
  const auto version = in.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  }
  Layout layout(in.get<std::uint32_t>());
  for (auto& e : layout) {
    e.name = in.bytes(in.get<std::uint32_t>());
    e.shape.resize(in.get<std::uint32_t>());
    for (auto& d : e.shape) d = in.get<std::uint64_t>();
    e.offset = in.get<std::uint64_t>();
  }
  std::vector<double> values(in.get<std::uint64_t>());
  for (auto& v : values) v = std::bit_cast<double>(in.get<std::uint64_t>());
  if (!in.at_end()) throw FormatError("checkpoint: trailing bytes");
  return ParameterVector(std::move(layout), std::move(values));
}

inline void write_checkpoint(const std::filesystem::path& path, const ParameterVector& params) {
  const auto bytes = encode_checkpoint(params);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline ParameterVector read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> buf{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return decode_checkpoint(buf);
}

}  // namespace samlab::harness
