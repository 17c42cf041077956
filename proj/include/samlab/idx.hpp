#pragma once

// IDX reader/writer for unsigned-byte files (the MNIST container).
// Layout: 4-byte big-endian magic 0x000008DD where DD is the number of
// dimensions, DD big-endian uint32 sizes, then the raw bytes.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "samlab/data.hpp"
#include "samlab/error.hpp"

namespace samlab {

inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;
inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;

namespace detail {

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::uint32_t read_be32(const std::vector<std::uint8_t>& buf, std::size_t pos,
                               const std::string& what) {
  if (pos + 4 > buf.size()) throw LengthError(what + ": truncated header");
  return (std::uint32_t{buf[pos]} << 24) | (std::uint32_t{buf[pos + 1]} << 16) |
         (std::uint32_t{buf[pos + 2]} << 8) | std::uint32_t{buf[pos + 3]};
}

inline std::string hex32(std::uint32_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s = "0x";
  for (int shift = 28; shift >= 0; shift -= 4) s += digits[(v >> shift) & 0xF];
  return s;
}

struct IdxPayload {
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> bytes;
};

inline IdxPayload read_idx(const std::filesystem::path& path, std::uint32_t expected_magic) {
  auto buf = read_file(path);
  const std::string what = path.string();
  const std::uint32_t magic = read_be32(buf, 0, what);
  if (magic != expected_magic) {
    throw FormatError(what + ": bad magic " + hex32(magic) + ", expected " + hex32(expected_magic));
  }
  const std::size_t ndim = expected_magic & 0xFF;
  IdxPayload p;
  std::size_t count = 1;
  for (std::size_t i = 0; i < ndim; ++i) {
    p.dims.push_back(read_be32(buf, 4 + 4 * i, what));
    count *= p.dims.back();
  }
  const std::size_t header = 4 + 4 * ndim;
  if (buf.size() < header + count) {
    throw LengthError(what + ": expected " + std::to_string(count) + " data bytes, found " +
                      std::to_string(buf.size() - header));
  }
  p.bytes.assign(buf.begin() + static_cast<std::ptrdiff_t>(header),
                 buf.begin() + static_cast<std::ptrdiff_t>(header + count));
  return p;
}

inline void write_be32(std::ofstream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                     static_cast<char>(v >> 8), static_cast<char>(v)};
  out.write(b, 4);
}

}  // namespace detail

/// Loads an image file (n x rows x cols) and a label file (n). Pixels are
/// scaled to [0, 1]; n_classes is max(label) + 1.
inline Dataset load_idx(const std::filesystem::path& images_path,
                        const std::filesystem::path& labels_path) {
  const auto images = detail::read_idx(images_path, kIdxImageMagic);
  const auto labels = detail::read_idx(labels_path, kIdxLabelMagic);
  const std::size_t n = images.dims[0];
  if (labels.dims[0] != n) {
    throw LengthError("load_idx: " + std::to_string(n) + " images but " +
                      std::to_string(labels.dims[0]) + " labels");
  }
  const std::size_t features = std::size_t{images.dims[1]} * images.dims[2];
  Dataset d;
  d.features = Tensor::matrix(n, features);
  for (std::size_t i = 0; i < n * features; ++i) {
    d.features.data()[i] = static_cast<double>(images.bytes[i]) / 255.0;
  }
  int max_label = 0;
  d.labels.reserve(n);
  for (std::uint8_t y : labels.bytes) {
    d.labels.push_back(y);
    max_label = std::max<int>(max_label, y);
  }
  d.n_classes = max_label + 1;
  return d;
}

inline void write_idx_images(const std::filesystem::path& path, std::uint32_t rows,
                             std::uint32_t cols, const std::vector<std::uint8_t>& pixels) {
  const std::size_t per_image = std::size_t{rows} * cols;
  if (per_image == 0 || pixels.size() % per_image != 0) {
    throw LengthError("write_idx_images: pixel count not a multiple of rows * cols");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  detail::write_be32(out, kIdxImageMagic);
  detail::write_be32(out, static_cast<std::uint32_t>(pixels.size() / per_image));
  detail::write_be32(out, rows);
  detail::write_be32(out, cols);
  out.write(reinterpret_cast<const char*>(pixels.data()),
            static_cast<std::streamsize>(pixels.size()));
}

inline void write_idx_labels(const std::filesystem::path& path,
                             const std::vector<std::uint8_t>& labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  detail::write_be32(out, kIdxLabelMagic);
  detail::write_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.write(reinterpret_cast<const char*>(labels.data()),
            static_cast<std::streamsize>(labels.size()));
}

}  // namespace samlab
