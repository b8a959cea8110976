#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace head::ad {

// Dense row-major tensor. Rank is 1 or 2 everywhere in this project; a scalar
// is a 1-vector.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::vector<std::size_t> s, std::vector<double> d);

  static Tensor scalar(double v);
  static Tensor vector(std::vector<double> v);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> d);
  static Tensor zeros(std::vector<std::size_t> shape);

  std::size_t size() const { return data.size(); }
  bool is_scalar() const { return data.size() == 1; }
  std::size_t rank() const { return shape.size(); }
  std::size_t rows() const { return shape.at(0); }
  std::size_t cols() const { return shape.at(1); }
  double& at(std::size_t r, std::size_t c) { return data[r * shape[1] + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * shape[1] + c]; }
};

// Operator inventory. Forward values are computed eagerly on record; backward
// walks the tape once in reverse.
enum class OpKind {
  kLeaf,
  kAdd,
  kSub,
  kMul,
  kMatmul,
  kConv1d,
  kMaxPoolTime,
  kConcat,
  kMean,
  kTanh,
  kSigmoid,
  kRelu,
  kCosh,
  kSinh,
  kNorm2,
  kDivScalar,
  kLog,
  kSquare,
  kMaxZero,
  kGrl,
};

// Handle into a Tape. Only meaningful together with the tape that issued it.
class Var {
 public:
  Var() = default;
  int id() const { return id_; }
  bool valid() const { return id_ >= 0; }

 private:
  friend class Tape;
  explicit Var(int id) : id_(id) {}
  int id_ = -1;
};

// Append-only record of operations. Single-owner while being written;
// read-only tapes are shareable. backward() is deterministic: identical
// tapes produce bitwise-identical gradients.
class Tape {
 public:
  Var leaf(Tensor value);

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  // Elementwise product; one operand may be a scalar.
  Var mul(Var a, Var b);
  // w: [m x n], x: [n] -> [m].
  Var matmul(Var w, Var x);
  // x: [n x d], w: [f x width*d], bias: [f] -> [f x (n-width+1)].
  // Sliding dot product over the first axis of x, bias added per filter.
  Var conv1d(Var x, Var w, Var bias, std::size_t width);
  // [f x t] -> [f] (or [t] -> [1]); max per row, ties resolved to the lowest
  // time index.
  Var max_pool_time(Var y);
  // Flattens all inputs into one vector, in argument order.
  Var concat(std::span<const Var> parts);
  Var concat(std::initializer_list<Var> parts);
  Var mean(Var x);
  Var tanh(Var x);
  Var sigmoid(Var x);
  Var relu(Var x);
  Var cosh(Var x);
  Var sinh(Var x);
  // Euclidean norm -> scalar. Gradient guard: x / max(||x||, 1e-12).
  Var norm2(Var x);
  // x / s with s scalar.
  Var div_scalar(Var x, Var s);
  Var log(Var x);
  Var square(Var x);
  // max(x, 0) elementwise; the corner subgradient takes the zero branch.
  Var max_zero(Var x);
  // Identity forward; backward multiplies the incoming gradient by -1.
  Var grl(Var x);

  // Resets all gradients, then seeds root (which must be scalar) with 1 and
  // accumulates into every node. Leaves not reachable from root keep zero
  // gradient.
  void backward(Var root);

  const Tensor& value(Var v) const;
  const Tensor& grad(Var v) const;
  OpKind op_kind(Var v) const;
  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    OpKind op;
    std::vector<int> inputs;
    Tensor value;
    Tensor grad;
    std::vector<std::size_t> aux;  // conv width; pooling argmax indices
  };

  Var push(Node node);
  const Node& at(Var v) const;
  Node& at_mut(Var v);
  void check_owned(Var v, const char* where) const;

  std::vector<Node> nodes_;
};

// --- Composite helpers -------------------------------------------------
// Everything below expands to the operator set above; nothing new is taped.

Var scalar_leaf(Tape& t, double v);

// sum(x) == mean(x) * size(x).
Var sum(Tape& t, Var x);
// dot(a, b) == sum(a * b).
Var dot(Tape& t, Var a, Var b);
// matmul(w, x) + b.
Var affine(Tape& t, Var w, Var x, Var b);
// s^(-1/2) == exp(-log(s)/2), with exp(m) == cosh(m) + sinh(m).
Var inv_sqrt(Tape& t, Var s);
// Clamp a scalar into [lo, hi] with zero gradient outside.
Var clamp(Tape& t, Var x, double lo, double hi);
// Clamp a scalar from below only.
Var clamp_min(Tape& t, Var x, double lo);

namespace testing {
// Backward multiplier applied on grl edges. -1 in production; tests flip it
// to verify that the self-check suite catches a sign regression.
extern double grl_backward_sign;
}  // namespace testing

}  // namespace head::ad
