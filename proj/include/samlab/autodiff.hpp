#pragma once

// Reverse-mode automatic differentiation over dense rank-1/rank-2 tensors.
//
// A Tape records operations as they execute and replays them backwards to
// accumulate gradients into a flat parameter gradient. Tapes are built per
// evaluation and thrown away; nothing persists between calls.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "samlab/error.hpp"
#include "samlab/tensor.hpp"

namespace samlab::ad {

struct Var {
  std::size_t id = 0;
};

class Tape {
 public:
  Var constant(Tensor value) { return push(Op::Constant, kNone, kNone, std::move(value), false); }

  /// Leaf whose gradient is written to flat_grad[offset, offset + size).
  Var parameter(Tensor value, std::size_t offset) {
    Var v = push(Op::Parameter, kNone, kNone, std::move(value), true);
    nodes_[v.id].param_offset = offset;
    return v;
  }

  /// (m x k) * (k x n)
  Var matmul(Var a, Var b) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    if (A.cols() != B.rows()) {
      throw ShapeError("matmul: " + shape_string(A.shape()) + " x " + shape_string(B.shape()));
    }
    const std::size_t m = A.rows(), k = A.cols(), n = B.cols();
    Tensor C = Tensor::matrix(m, n);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t p = 0; p < k; ++p) {
        const double aip = A(i, p);
        if (aip == 0.0) continue;
        for (std::size_t j = 0; j < n; ++j) C(i, j) += aip * B(p, j);
      }
    }
    return push_checked(Op::MatMul, a.id, b.id, std::move(C), "matmul");
  }

  /// Adds a length-n bias to every row of an (m x n) matrix.
  Var add_bias(Var x, Var bias) {
    const Tensor& X = value(x);
    const Tensor& b = value(bias);
    if (b.size() != X.cols()) {
      throw ShapeError("add_bias: bias of size " + std::to_string(b.size()) + " for " +
                       std::to_string(X.cols()) + " columns");
    }
    Tensor Y = X;
    for (std::size_t i = 0; i < Y.rows(); ++i) {
      for (std::size_t j = 0; j < Y.cols(); ++j) Y(i, j) += b.data()[j];
    }
    return push_checked(Op::AddBias, x.id, bias.id, std::move(Y), "add_bias");
  }

  Var relu(Var x) {
    Tensor Y = value(x);
    for (auto& v : Y.data()) v = v > 0.0 ? v : 0.0;
    return push_checked(Op::Relu, x.id, kNone, std::move(Y), "relu");
  }

  Var tanh(Var x) {
    Tensor Y = value(x);
    for (auto& v : Y.data()) v = std::tanh(v);
    return push_checked(Op::Tanh, x.id, kNone, std::move(Y), "tanh");
  }

  /// Mean over rows of -log softmax(logits)[label].
  Var softmax_cross_entropy(Var logits, std::span<const int> labels) {
    const Tensor& Z = value(logits);
    const std::size_t m = Z.rows(), k = Z.cols();
    if (labels.size() != m) {
      throw ShapeError("softmax_cross_entropy: " + std::to_string(labels.size()) +
                       " labels for " + std::to_string(m) + " rows");
    }
    Tensor probs = Tensor::matrix(m, k);
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const int y = labels[i];
      if (y < 0 || static_cast<std::size_t>(y) >= k) {
        throw ShapeError("softmax_cross_entropy: label " + std::to_string(y) + " outside [0, " +
                         std::to_string(k) + ")");
      }
      double zmax = Z(i, 0);
      for (std::size_t j = 1; j < k; ++j) zmax = std::max(zmax, Z(i, j));
      double sum = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        probs(i, j) = std::exp(Z(i, j) - zmax);
        sum += probs(i, j);
      }
      for (std::size_t j = 0; j < k; ++j) probs(i, j) /= sum;
      total += std::log(sum) + zmax - Z(i, static_cast<std::size_t>(y));
    }
    Var out = push_checked(Op::SoftmaxXent, logits.id, kNone,
                           Tensor({1}, std::vector<double>{total / static_cast<double>(m)}),
                           "softmax_cross_entropy");
    nodes_[out.id].aux = std::move(probs);
    nodes_[out.id].labels.assign(labels.begin(), labels.end());
    return out;
  }

  /// Mean over rows of 0.5 * sum_j (y_ij - t_ij)^2.
  Var half_squared_error(Var y, Tensor target) {
    const Tensor& Y = value(y);
    if (Y.rows() != target.rows() || Y.cols() != target.cols()) {
      throw ShapeError("half_squared_error: prediction " + shape_string(Y.shape()) +
                       " vs target " + shape_string(target.shape()));
    }
    double total = 0.0;
    for (std::size_t i = 0; i < Y.size(); ++i) {
      const double d = Y.data()[i] - target.data()[i];
      total += 0.5 * d * d;
    }
    Var out = push_checked(Op::HalfSqErr, y.id, kNone,
                           Tensor({1}, std::vector<double>{total / static_cast<double>(Y.rows())}),
                           "half_squared_error");
    nodes_[out.id].aux = std::move(target);
    return out;
  }

  const Tensor& value(Var v) const { return nodes_.at(v.id).value; }

  std::size_t size() const noexcept { return nodes_.size(); }

  /// Back-propagates d(root)/d(parameter) into flat_grad (accumulating).
  /// root must be a scalar.
  void backward(Var root, std::span<double> flat_grad) {
    Node& r = nodes_.at(root.id);
    if (r.value.size() != 1) throw ShapeError("backward: root is not a scalar");
    for (auto& n : nodes_) n.grad = Tensor();
    r.grad = Tensor(r.value.shape(), 1.0);

    for (std::size_t id = root.id + 1; id-- > 0;) {
      Node& n = nodes_[id];
      if (!n.requires_grad || n.grad.size() == 0) continue;
      switch (n.op) {
        case Op::Constant:
          break;
        case Op::Parameter: {
          if (n.param_offset + n.grad.size() > flat_grad.size()) {
            throw LengthError("backward: parameter block exceeds gradient buffer");
          }
          for (std::size_t i = 0; i < n.grad.size(); ++i) {
            flat_grad[n.param_offset + i] += n.grad.data()[i];
          }
          break;
        }
        case Op::MatMul:
          backward_matmul(n);
          break;
        case Op::AddBias: {
          Tensor& gx = grad_of(n.a);
          if (gx.size()) add_into(gx, n.grad);
          if (nodes_[n.b].requires_grad) {
            Tensor& gb = grad_of(n.b);
            for (std::size_t i = 0; i < n.grad.rows(); ++i) {
              for (std::size_t j = 0; j < n.grad.cols(); ++j) gb.data()[j] += n.grad(i, j);
            }
          }
          break;
        }
        case Op::Relu: {
          Tensor& gx = grad_of(n.a);
          if (!gx.size()) break;
          const auto x = nodes_[n.a].value.data();
          for (std::size_t i = 0; i < gx.size(); ++i) {
            if (x[i] > 0.0) gx.data()[i] += n.grad.data()[i];
          }
          break;
        }
        case Op::Tanh: {
          Tensor& gx = grad_of(n.a);
          if (!gx.size()) break;
          const auto y = n.value.data();
          for (std::size_t i = 0; i < gx.size(); ++i) {
            gx.data()[i] += n.grad.data()[i] * (1.0 - y[i] * y[i]);
          }
          break;
        }
        case Op::SoftmaxXent: {
          Tensor& gz = grad_of(n.a);
          if (!gz.size()) break;
          const double upstream = n.grad.data()[0] / static_cast<double>(n.aux.rows());
          for (std::size_t i = 0; i < n.aux.rows(); ++i) {
            for (std::size_t j = 0; j < n.aux.cols(); ++j) {
              const double onehot = static_cast<std::size_t>(n.labels[i]) == j ? 1.0 : 0.0;
              gz(i, j) += upstream * (n.aux(i, j) - onehot);
            }
          }
          break;
        }
        case Op::HalfSqErr: {
          Tensor& gy = grad_of(n.a);
          if (!gy.size()) break;
          const double upstream = n.grad.data()[0] / static_cast<double>(n.aux.rows());
          const auto y = nodes_[n.a].value.data();
          for (std::size_t i = 0; i < gy.size(); ++i) {
            gy.data()[i] += upstream * (y[i] - n.aux.data()[i]);
          }
          break;
        }
      }
    }
  }

 private:
  enum class Op { Constant, Parameter, MatMul, AddBias, Relu, Tanh, SoftmaxXent, HalfSqErr };
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

  struct Node {
    Op op;
    std::size_t a;
    std::size_t b;
    Tensor value;
    Tensor grad;
    Tensor aux;
    std::vector<int> labels;
    std::size_t param_offset = 0;
    bool requires_grad = false;
  };

  Var push(Op op, std::size_t a, std::size_t b, Tensor value, bool requires_grad) {
    nodes_.push_back(Node{op, a, b, std::move(value), Tensor(), Tensor(), {}, 0, requires_grad});
    return Var{nodes_.size() - 1};
  }

  Var push_checked(Op op, std::size_t a, std::size_t b, Tensor value, const char* name) {
    if (!value.all_finite()) {
      throw NumericError(std::string(name) + ": non-finite value (numeric overflow)");
    }
    const bool rg = nodes_[a].requires_grad || (b != kNone && nodes_[b].requires_grad);
    return push(op, a, b, std::move(value), rg);
  }

  /// Gradient buffer of an input node, allocated on first use; empty tensor if
  /// the input does not need a gradient.
  Tensor& grad_of(std::size_t id) {
    Node& n = nodes_[id];
    if (n.requires_grad && n.grad.size() == 0) n.grad = Tensor(n.value.shape(), 0.0);
    return n.grad;
  }

  static void add_into(Tensor& dst, const Tensor& src) {
    for (std::size_t i = 0; i < dst.size(); ++i) dst.data()[i] += src.data()[i];
  }

  void backward_matmul(Node& n) {
    const Tensor& A = nodes_[n.a].value;
    const Tensor& B = nodes_[n.b].value;
    const Tensor& G = n.grad;
    const std::size_t m = A.rows(), k = A.cols(), cols = B.cols();
    if (nodes_[n.a].requires_grad) {
      Tensor& gA = grad_of(n.a);
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          double acc = 0.0;
          for (std::size_t j = 0; j < cols; ++j) acc += G(i, j) * B(p, j);
          gA(i, p) += acc;
        }
      }
    }
    if (nodes_[n.b].requires_grad) {
      Tensor& gB = grad_of(n.b);
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = A(i, p);
          if (aip == 0.0) continue;
          for (std::size_t j = 0; j < cols; ++j) gB(p, j) += aip * G(i, j);
        }
      }
    }
  }

  std::vector<Node> nodes_;
};

}  // namespace samlab::ad
