#include "head/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "head/errors.hpp"

namespace head::ad {

namespace testing {
double grl_backward_sign = -1.0;
}

namespace {

constexpr double kNormGuard = 1e-12;

std::size_t shape_size(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t s : shape) n *= s;
  return n;
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> s, std::vector<double> d)
    : shape(std::move(s)), data(std::move(d)) {
  if (shape_size(shape) != data.size()) {
    throw UsageError("Tensor: shape does not match data size");
  }
}

Tensor Tensor::scalar(double v) { return Tensor({1}, {v}); }

Tensor Tensor::vector(std::vector<double> v) {
  std::size_t n = v.size();
  return Tensor({n}, std::move(v));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> d) {
  return Tensor({rows, cols}, std::move(d));
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
  std::vector<double> d(shape_size(shape), 0.0);
  return Tensor(std::move(shape), std::move(d));
}

void Tape::check_owned(Var v, const char* where) const {
  if (!v.valid() || static_cast<std::size_t>(v.id()) >= nodes_.size()) {
    throw UsageError(std::string(where) + ": variable does not belong to this tape");
  }
}

const Tape::Node& Tape::at(Var v) const { return nodes_[static_cast<std::size_t>(v.id())]; }
Tape::Node& Tape::at_mut(Var v) { return nodes_[static_cast<std::size_t>(v.id())]; }

Var Tape::push(Node node) {
  node.grad = Tensor::zeros(node.value.shape);
  nodes_.push_back(std::move(node));
  return Var(static_cast<int>(nodes_.size()) - 1);
}

Var Tape::leaf(Tensor value) {
  Node n;
  n.op = OpKind::kLeaf;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::add(Var a, Var b) {
  check_owned(a, "add");
  check_owned(b, "add");
  const Tensor& ta = at(a).value;
  const Tensor& tb = at(b).value;
  if (ta.shape != tb.shape) throw UsageError("add: shape mismatch");
  Node n;
  n.op = OpKind::kAdd;
  n.inputs = {a.id(), b.id()};
  n.value = ta;
  for (std::size_t i = 0; i < tb.size(); ++i) n.value.data[i] += tb.data[i];
  return push(std::move(n));
}

Var Tape::sub(Var a, Var b) {
  check_owned(a, "sub");
  check_owned(b, "sub");
  const Tensor& ta = at(a).value;
  const Tensor& tb = at(b).value;
  if (ta.shape != tb.shape) throw UsageError("sub: shape mismatch");
  Node n;
  n.op = OpKind::kSub;
  n.inputs = {a.id(), b.id()};
  n.value = ta;
  for (std::size_t i = 0; i < tb.size(); ++i) n.value.data[i] -= tb.data[i];
  return push(std::move(n));
}

Var Tape::mul(Var a, Var b) {
  check_owned(a, "mul");
  check_owned(b, "mul");
  const Tensor& ta = at(a).value;
  const Tensor& tb = at(b).value;
  if (ta.shape != tb.shape && !ta.is_scalar() && !tb.is_scalar()) {
    throw UsageError("mul: shape mismatch (shapes must match or one side be scalar)");
  }
  Node n;
  n.op = OpKind::kMul;
  n.inputs = {a.id(), b.id()};
  if (tb.is_scalar() && !ta.is_scalar()) {
    n.value = ta;
    for (double& x : n.value.data) x *= tb.data[0];
  } else if (ta.is_scalar() && !tb.is_scalar()) {
    n.value = tb;
    for (double& x : n.value.data) x *= ta.data[0];
  } else {
    n.value = ta;
    for (std::size_t i = 0; i < tb.size(); ++i) n.value.data[i] *= tb.data[i];
  }
  return push(std::move(n));
}

Var Tape::matmul(Var w, Var x) {
  check_owned(w, "matmul");
  check_owned(x, "matmul");
  const Tensor& tw = at(w).value;
  const Tensor& tx = at(x).value;
  if (tw.rank() != 2 || tx.rank() != 1 || tw.cols() != tx.size()) {
    throw UsageError("matmul: expected [m x n] * [n]");
  }
  Node n;
  n.op = OpKind::kMatmul;
  n.inputs = {w.id(), x.id()};
  n.value = Tensor::zeros({tw.rows()});
  for (std::size_t i = 0; i < tw.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < tw.cols(); ++j) s += tw.at(i, j) * tx.data[j];
    n.value.data[i] = s;
  }
  return push(std::move(n));
}

Var Tape::conv1d(Var x, Var w, Var bias, std::size_t width) {
  check_owned(x, "conv1d");
  check_owned(w, "conv1d");
  check_owned(bias, "conv1d");
  const Tensor& tx = at(x).value;
  const Tensor& tw = at(w).value;
  const Tensor& tb = at(bias).value;
  if (tx.rank() != 2 || tw.rank() != 2) throw UsageError("conv1d: x and w must be matrices");
  const std::size_t seq = tx.rows();
  const std::size_t dim = tx.cols();
  if (width == 0 || width > seq) throw UsageError("conv1d: width must be in [1, rows(x)]");
  if (tw.cols() != width * dim) throw UsageError("conv1d: w must be [f x width*d]");
  const std::size_t filters = tw.rows();
  if (tb.rank() != 1 || tb.size() != filters) throw UsageError("conv1d: bias must be [f]");

  const std::size_t steps = seq - width + 1;
  Node n;
  n.op = OpKind::kConv1d;
  n.inputs = {x.id(), w.id(), bias.id()};
  n.aux = {width};
  n.value = Tensor::zeros({filters, steps});
  for (std::size_t f = 0; f < filters; ++f) {
    for (std::size_t t = 0; t < steps; ++t) {
      double s = tb.data[f];
      for (std::size_t j = 0; j < width; ++j) {
        for (std::size_t c = 0; c < dim; ++c) {
          s += tw.at(f, j * dim + c) * tx.at(t + j, c);
        }
      }
      n.value.at(f, t) = s;
    }
  }
  return push(std::move(n));
}

Var Tape::max_pool_time(Var y) {
  check_owned(y, "max_pool_time");
  const Tensor& ty = at(y).value;
  std::size_t filters, steps;
  if (ty.rank() == 2) {
    filters = ty.rows();
    steps = ty.cols();
  } else if (ty.rank() == 1) {
    filters = 1;
    steps = ty.size();
  } else {
    throw UsageError("max_pool_time: expected [f x t] or [t]");
  }
  if (steps == 0) throw UsageError("max_pool_time: empty time axis");

  Node n;
  n.op = OpKind::kMaxPoolTime;
  n.inputs = {y.id()};
  n.value = Tensor::zeros({filters});
  n.aux.resize(filters);
  for (std::size_t f = 0; f < filters; ++f) {
    std::size_t best = 0;
    double best_v = ty.data[f * steps];
    for (std::size_t t = 1; t < steps; ++t) {
      const double v = ty.data[f * steps + t];
      if (v > best_v) {  // strict: ties keep the lowest index
        best_v = v;
        best = t;
      }
    }
    n.value.data[f] = best_v;
    n.aux[f] = best;
  }
  return push(std::move(n));
}

Var Tape::concat(std::span<const Var> parts) {
  if (parts.empty()) throw UsageError("concat: no inputs");
  Node n;
  n.op = OpKind::kConcat;
  std::size_t total = 0;
  for (Var p : parts) {
    check_owned(p, "concat");
    n.inputs.push_back(p.id());
    total += at(p).value.size();
  }
  n.value = Tensor::zeros({total});
  std::size_t offset = 0;
  for (Var p : parts) {
    const Tensor& tp = at(p).value;
    std::copy(tp.data.begin(), tp.data.end(), n.value.data.begin() + offset);
    offset += tp.size();
  }
  return push(std::move(n));
}

Var Tape::concat(std::initializer_list<Var> parts) {
  std::vector<Var> v(parts);
  return concat(std::span<const Var>(v));
}

Var Tape::mean(Var x) {
  check_owned(x, "mean");
  const Tensor& tx = at(x).value;
  if (tx.size() == 0) throw UsageError("mean: empty input");
  Node n;
  n.op = OpKind::kMean;
  n.inputs = {x.id()};
  double s = 0.0;
  for (double v : tx.data) s += v;
  n.value = Tensor::scalar(s / static_cast<double>(tx.size()));
  return push(std::move(n));
}

namespace {

Tensor map_unary(const Tensor& t, double (*fn)(double)) {
  Tensor out = t;
  for (double& v : out.data) v = fn(v);
  return out;
}

}  // namespace

Var Tape::tanh(Var x) {
  check_owned(x, "tanh");
  Node n;
  n.op = OpKind::kTanh;
  n.inputs = {x.id()};
  n.value = map_unary(at(x).value, [](double v) { return std::tanh(v); });
  return push(std::move(n));
}

Var Tape::sigmoid(Var x) {
  check_owned(x, "sigmoid");
  Node n;
  n.op = OpKind::kSigmoid;
  n.inputs = {x.id()};
  n.value = map_unary(at(x).value, [](double v) { return 1.0 / (1.0 + std::exp(-v)); });
  return push(std::move(n));
}

Var Tape::relu(Var x) {
  check_owned(x, "relu");
  Node n;
  n.op = OpKind::kRelu;
  n.inputs = {x.id()};
  n.value = map_unary(at(x).value, [](double v) { return v > 0.0 ? v : 0.0; });
  return push(std::move(n));
}

Var Tape::cosh(Var x) {
  check_owned(x, "cosh");
  Node n;
  n.op = OpKind::kCosh;
  n.inputs = {x.id()};
  n.value = map_unary(at(x).value, [](double v) { return std::cosh(v); });
  return push(std::move(n));
}

Var Tape::sinh(Var x) {
  check_owned(x, "sinh");
  Node n;
  n.op = OpKind::kSinh;
  n.inputs = {x.id()};
  n.value = map_unary(at(x).value, [](double v) { return std::sinh(v); });
  return push(std::move(n));
}

Var Tape::norm2(Var x) {
  check_owned(x, "norm2");
  const Tensor& tx = at(x).value;
  Node n;
  n.op = OpKind::kNorm2;
  n.inputs = {x.id()};
  double s = 0.0;
  for (double v : tx.data) s += v * v;
  n.value = Tensor::scalar(std::sqrt(s));
  return push(std::move(n));
}

Var Tape::div_scalar(Var x, Var s) {
  check_owned(x, "div_scalar");
  check_owned(s, "div_scalar");
  const Tensor& ts = at(s).value;
  if (!ts.is_scalar()) throw UsageError("div_scalar: divisor must be scalar");
  Node n;
  n.op = OpKind::kDivScalar;
  n.inputs = {x.id(), s.id()};
  n.value = at(x).value;
  const double d = ts.data[0];
  for (double& v : n.value.data) v /= d;
  return push(std::move(n));
}

Var Tape::log(Var x) {
  check_owned(x, "log");
  Node n;
  n.op = OpKind::kLog;
  n.inputs = {x.id()};
  n.value = map_unary(at(x).value, [](double v) { return std::log(v); });
  return push(std::move(n));
}

Var Tape::square(Var x) {
  check_owned(x, "square");
  Node n;
  n.op = OpKind::kSquare;
  n.inputs = {x.id()};
  n.value = map_unary(at(x).value, [](double v) { return v * v; });
  return push(std::move(n));
}

Var Tape::max_zero(Var x) {
  check_owned(x, "max_zero");
  Node n;
  n.op = OpKind::kMaxZero;
  n.inputs = {x.id()};
  n.value = map_unary(at(x).value, [](double v) { return v > 0.0 ? v : 0.0; });
  return push(std::move(n));
}

Var Tape::grl(Var x) {
  check_owned(x, "grl");
  Node n;
  n.op = OpKind::kGrl;
  n.inputs = {x.id()};
  n.value = at(x).value;
  return push(std::move(n));
}

const Tensor& Tape::value(Var v) const {
  check_owned(v, "value");
  return at(v).value;
}

const Tensor& Tape::grad(Var v) const {
  check_owned(v, "grad");
  return at(v).grad;
}

OpKind Tape::op_kind(Var v) const {
  check_owned(v, "op_kind");
  return at(v).op;
}

void Tape::backward(Var root) {
  check_owned(root, "backward");
  if (!at(root).value.is_scalar()) throw UsageError("backward: root must be scalar");

  for (Node& n : nodes_) std::fill(n.grad.data.begin(), n.grad.data.end(), 0.0);
  at_mut(root).grad.data[0] = 1.0;

  for (std::size_t idx = static_cast<std::size_t>(root.id()) + 1; idx-- > 0;) {
    Node& n = nodes_[idx];
    const Tensor& g = n.grad;
    bool any = false;
    for (double v : g.data) {
      if (v != 0.0) {
        any = true;
        break;
      }
    }
    if (!any || n.op == OpKind::kLeaf) continue;

    switch (n.op) {
      case OpKind::kAdd: {
        Tensor& ga = nodes_[n.inputs[0]].grad;
        Tensor& gb = nodes_[n.inputs[1]].grad;
        for (std::size_t i = 0; i < g.size(); ++i) {
          ga.data[i] += g.data[i];
          gb.data[i] += g.data[i];
        }
        break;
      }
      case OpKind::kSub: {
        Tensor& ga = nodes_[n.inputs[0]].grad;
        Tensor& gb = nodes_[n.inputs[1]].grad;
        for (std::size_t i = 0; i < g.size(); ++i) {
          ga.data[i] += g.data[i];
          gb.data[i] -= g.data[i];
        }
        break;
      }
      case OpKind::kMul: {
        Node& a = nodes_[n.inputs[0]];
        Node& b = nodes_[n.inputs[1]];
        if (b.value.is_scalar() && !a.value.is_scalar()) {
          double acc = 0.0;
          for (std::size_t i = 0; i < g.size(); ++i) {
            a.grad.data[i] += g.data[i] * b.value.data[0];
            acc += g.data[i] * a.value.data[i];
          }
          b.grad.data[0] += acc;
        } else if (a.value.is_scalar() && !b.value.is_scalar()) {
          double acc = 0.0;
          for (std::size_t i = 0; i < g.size(); ++i) {
            b.grad.data[i] += g.data[i] * a.value.data[0];
            acc += g.data[i] * b.value.data[i];
          }
          a.grad.data[0] += acc;
        } else {
          for (std::size_t i = 0; i < g.size(); ++i) {
            a.grad.data[i] += g.data[i] * b.value.data[i];
            b.grad.data[i] += g.data[i] * a.value.data[i];
          }
        }
        break;
      }
      case OpKind::kMatmul: {
        Node& w = nodes_[n.inputs[0]];
        Node& x = nodes_[n.inputs[1]];
        const std::size_t rows = w.value.rows();
        const std::size_t cols = w.value.cols();
        for (std::size_t i = 0; i < rows; ++i) {
          const double gi = g.data[i];
          if (gi == 0.0) continue;
          for (std::size_t j = 0; j < cols; ++j) {
            w.grad.at(i, j) += gi * x.value.data[j];
            x.grad.data[j] += gi * w.value.at(i, j);
          }
        }
        break;
      }
      case OpKind::kConv1d: {
        Node& x = nodes_[n.inputs[0]];
        Node& w = nodes_[n.inputs[1]];
        Node& b = nodes_[n.inputs[2]];
        const std::size_t width = n.aux[0];
        const std::size_t dim = x.value.cols();
        const std::size_t filters = w.value.rows();
        const std::size_t steps = n.value.cols();
        for (std::size_t f = 0; f < filters; ++f) {
          for (std::size_t t = 0; t < steps; ++t) {
            const double gft = g.data[f * steps + t];
            if (gft == 0.0) continue;
            b.grad.data[f] += gft;
            for (std::size_t j = 0; j < width; ++j) {
              for (std::size_t c = 0; c < dim; ++c) {
                w.grad.at(f, j * dim + c) += gft * x.value.at(t + j, c);
                x.grad.at(t + j, c) += gft * w.value.at(f, j * dim + c);
              }
            }
          }
        }
        break;
      }
      case OpKind::kMaxPoolTime: {
        Node& y = nodes_[n.inputs[0]];
        const std::size_t steps = y.value.rank() == 2 ? y.value.cols() : y.value.size();
        for (std::size_t f = 0; f < n.value.size(); ++f) {
          y.grad.data[f * steps + n.aux[f]] += g.data[f];
        }
        break;
      }
      case OpKind::kConcat: {
        std::size_t offset = 0;
        for (int in : n.inputs) {
          Tensor& gi = nodes_[in].grad;
          for (std::size_t i = 0; i < gi.size(); ++i) gi.data[i] += g.data[offset + i];
          offset += gi.size();
        }
        break;
      }
      case OpKind::kMean: {
        Node& x = nodes_[n.inputs[0]];
        const double share = g.data[0] / static_cast<double>(x.value.size());
        for (double& v : x.grad.data) v += share;
        break;
      }
      case OpKind::kTanh: {
        Node& x = nodes_[n.inputs[0]];
        for (std::size_t i = 0; i < g.size(); ++i) {
          const double y = n.value.data[i];
          x.grad.data[i] += g.data[i] * (1.0 - y * y);
        }
        break;
      }
      case OpKind::kSigmoid: {
        Node& x = nodes_[n.inputs[0]];
        for (std::size_t i = 0; i < g.size(); ++i) {
          const double y = n.value.data[i];
          x.grad.data[i] += g.data[i] * y * (1.0 - y);
        }
        break;
      }
      case OpKind::kRelu:
      case OpKind::kMaxZero: {
        Node& x = nodes_[n.inputs[0]];
        for (std::size_t i = 0; i < g.size(); ++i) {
          if (x.value.data[i] > 0.0) x.grad.data[i] += g.data[i];
        }
        break;
      }
      case OpKind::kCosh: {
        Node& x = nodes_[n.inputs[0]];
        for (std::size_t i = 0; i < g.size(); ++i) {
          x.grad.data[i] += g.data[i] * std::sinh(x.value.data[i]);
        }
        break;
      }
      case OpKind::kSinh: {
        Node& x = nodes_[n.inputs[0]];
        for (std::size_t i = 0; i < g.size(); ++i) {
          x.grad.data[i] += g.data[i] * std::cosh(x.value.data[i]);
        }
        break;
      }
      case OpKind::kNorm2: {
        Node& x = nodes_[n.inputs[0]];
        const double denom = std::max(n.value.data[0], kNormGuard);
        const double g0 = g.data[0];
        for (std::size_t i = 0; i < x.value.size(); ++i) {
          x.grad.data[i] += g0 * x.value.data[i] / denom;
        }
        break;
      }
      case OpKind::kDivScalar: {
        Node& x = nodes_[n.inputs[0]];
        Node& s = nodes_[n.inputs[1]];
        const double sv = s.value.data[0];
        double acc = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
          x.grad.data[i] += g.data[i] / sv;
          acc += g.data[i] * x.value.data[i];
        }
        s.grad.data[0] -= acc / (sv * sv);
        break;
      }
      case OpKind::kLog: {
        Node& x = nodes_[n.inputs[0]];
        for (std::size_t i = 0; i < g.size(); ++i) {
          x.grad.data[i] += g.data[i] / x.value.data[i];
        }
        break;
      }
      case OpKind::kSquare: {
        Node& x = nodes_[n.inputs[0]];
        for (std::size_t i = 0; i < g.size(); ++i) {
          x.grad.data[i] += g.data[i] * 2.0 * x.value.data[i];
        }
        break;
      }
      case OpKind::kGrl: {
        Node& x = nodes_[n.inputs[0]];
        for (std::size_t i = 0; i < g.size(); ++i) {
          x.grad.data[i] += testing::grl_backward_sign * g.data[i];
        }
        break;
      }
      case OpKind::kLeaf:
        break;
    }
  }
}

// --- Composite helpers -------------------------------------------------

Var scalar_leaf(Tape& t, double v) { return t.leaf(Tensor::scalar(v)); }

Var sum(Tape& t, Var x) {
  const double n = static_cast<double>(t.value(x).size());
  return t.mul(t.mean(x), scalar_leaf(t, n));
}

Var dot(Tape& t, Var a, Var b) { return sum(t, t.mul(a, b)); }

Var affine(Tape& t, Var w, Var x, Var b) { return t.add(t.matmul(w, x), b); }

Var inv_sqrt(Tape& t, Var s) {
  Var m = t.mul(t.log(s), scalar_leaf(t, -0.5));
  return t.add(t.cosh(m), t.sinh(m));
}

Var clamp(Tape& t, Var x, double lo, double hi) {
  if (!t.value(x).is_scalar()) throw UsageError("clamp: expected scalar");
  Var hi_c = scalar_leaf(t, hi);
  Var lower = clamp_min(t, x, lo);
  return t.sub(hi_c, t.max_zero(t.sub(hi_c, lower)));
}

Var clamp_min(Tape& t, Var x, double lo) {
  if (!t.value(x).is_scalar()) throw UsageError("clamp_min: expected scalar");
  Var lo_c = scalar_leaf(t, lo);
  return t.add(t.max_zero(t.sub(x, lo_c)), lo_c);
}

}  // namespace head::ad
