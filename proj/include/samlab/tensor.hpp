#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "samlab/error.hpp"

namespace samlab {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

inline std::string shape_string(const Shape& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + ")";
}

/// Dense row-major tensor of doubles.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(Shape shape, double fill = 0.0)
      : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

  Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_size(shape_) != data_.size()) {
      throw ShapeError("Tensor: shape " + shape_string(shape_) + " needs " +
                       std::to_string(shape_size(shape_)) + " values, got " +
                       std::to_string(data_.size()));
    }
  }

  static Tensor matrix(std::size_t rows, std::size_t cols, double fill = 0.0) {
    return Tensor({rows, cols}, fill);
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }

  /// Rows/cols of a rank-2 tensor; a rank-1 tensor is treated as one row.
  std::size_t rows() const noexcept { return shape_.size() == 2 ? shape_[0] : 1; }
  std::size_t cols() const noexcept { return shape_.empty() ? 1 : shape_.back(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols() + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols() + c]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  std::vector<double>& storage() noexcept { return data_; }

  bool all_finite() const noexcept {
    for (double v : data_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

/// One named block inside a flat parameter vector.
struct LayoutEntry {
  std::string name;
  Shape shape;
  std::size_t offset = 0;

  std::size_t size() const { return shape_size(shape); }
  friend bool operator==(const LayoutEntry&, const LayoutEntry&) = default;
};

using Layout = std::vector<LayoutEntry>;

inline std::size_t layout_size(const Layout& layout) {
  std::size_t n = 0;
  for (const auto& e : layout) n += e.size();
  return n;
}

/// Throws unless entries are contiguous, in order, starting at zero.
inline void validate_layout(const Layout& layout) {
  std::size_t expected = 0;
  for (const auto& e : layout) {
    if (e.offset != expected) {
      throw LengthError("layout entry '" + e.name + "' at offset " + std::to_string(e.offset) +
                        ", expected " + std::to_string(expected));
    }
    expected += e.size();
  }
}

/// Flat, ordered view of all model parameters together with the block layout.
class ParameterVector {
 public:
  ParameterVector() = default;

  explicit ParameterVector(Layout layout)
      : layout_(std::move(layout)), data_(layout_size(layout_), 0.0) {
    validate_layout(layout_);
  }

  ParameterVector(Layout layout, std::vector<double> data)
      : layout_(std::move(layout)), data_(std::move(data)) {
    validate_layout(layout_);
    if (data_.size() != layout_size(layout_)) {
      throw LengthError("parameter data has " + std::to_string(data_.size()) +
                        " values, layout needs " + std::to_string(layout_size(layout_)));
    }
  }

  const Layout& layout() const noexcept { return layout_; }
  std::size_t size() const noexcept { return data_.size(); }
  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  std::vector<double>& storage() noexcept { return data_; }

  std::span<const double> block(std::size_t i) const {
    return std::span<const double>(data_).subspan(layout_.at(i).offset, layout_[i].size());
  }

  friend bool operator==(const ParameterVector&, const ParameterVector&) = default;

 private:
  Layout layout_;
  std::vector<double> data_;
};

/// Splits a flat vector into one tensor per layout entry.
inline std::vector<Tensor> unflatten(const ParameterVector& params) {
  std::vector<Tensor> out;
  out.reserve(params.layout().size());
  for (std::size_t i = 0; i < params.layout().size(); ++i) {
    const auto b = params.block(i);
    out.emplace_back(params.layout()[i].shape, std::vector<double>(b.begin(), b.end()));
  }
  return out;
}

/// Inverse of unflatten; tensor shapes must match the layout.
inline ParameterVector flatten(const std::vector<Tensor>& tensors, const Layout& layout) {
  if (tensors.size() != layout.size()) {
    throw LengthError("flatten: " + std::to_string(tensors.size()) + " tensors for " +
                      std::to_string(layout.size()) + " layout entries");
  }
  std::vector<double> data;
  data.reserve(layout_size(layout));
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    if (tensors[i].shape() != layout[i].shape) {
      throw ShapeError("flatten: '" + layout[i].name + "' expects " +
                       shape_string(layout[i].shape) + ", got " +
                       shape_string(tensors[i].shape()));
    }
    const auto d = tensors[i].data();
    data.insert(data.end(), d.begin(), d.end());
  }
  return ParameterVector(layout, std::move(data));
}

}  // namespace samlab
