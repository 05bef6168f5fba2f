#pragma once

// Dense 2-D tensors with a define-by-run reverse-mode tape.
//
// Values are row-major Eigen matrices. Vectors are 1 x d rows, so a linear
// layer reads y = x * W + b with W stored (d_in x d_out).

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "lcr/errors.hpp"

namespace lcr {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Matrix = MatrixX<double>;

template <typename Derived>
std::string shape_str(const Eigen::EigenBase<Derived>& m) {
  std::ostringstream os;
  os << '[' << m.rows() << " x " << m.cols() << ']';
  return os.str();
}

template <typename Scalar>
class BasicTape;

// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
template <typename Scalar>
class BasicVar {
 public:
  using Mat = MatrixX<Scalar>;

  BasicVar() = default;
  BasicVar(BasicTape<Scalar>* tape, int id) : tape_(tape), id_(id) {}

  const Mat& value() const { return tape_->value(id_); }
  Mat grad() const { return tape_->grad(id_); }
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  Scalar item() const {
    if (rows() != 1 || cols() != 1) throw DimensionError("item() on non-scalar " + shape_str(value()));
    return value()(0, 0);
  }
  bool requires_grad() const { return tape_->requires_grad(id_); }
  int id() const { return id_; }
  BasicTape<Scalar>* tape() const { return tape_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  BasicTape<Scalar>* tape_ = nullptr;
  int id_ = -1;
};

template <typename Scalar>
class BasicTape {
 public:
  using Mat = MatrixX<Scalar>;
  using Var = BasicVar<Scalar>;
  // Receives the gradient of the node's output; accumulates into its inputs.
  using BackwardFn = std::function<void(BasicTape&, const Mat&)>;

  BasicTape() = default;
  BasicTape(const BasicTape&) = delete;
  BasicTape& operator=(const BasicTape&) = delete;

  Var constant(Mat value) { return push(std::move(value), {}, nullptr, false); }
  Var variable(Mat value) { return push(std::move(value), {}, nullptr, true); }

  // Records an operation. The node requires grad iff any input does.
  Var record(Mat value, std::vector<int> inputs, BackwardFn backward) {
    bool rg = false;
    for (int i : inputs) rg = rg || nodes_.at(i).requires_grad;
    return push(std::move(value), std::move(inputs), rg ? std::move(backward) : nullptr, rg);
  }

  const Mat& value(int id) const { return nodes_.at(id).value; }
  bool requires_grad(int id) const { return nodes_.at(id).requires_grad; }
  Mat grad(int id) const {
    const Node& n = nodes_.at(id);
    if (n.grad.size() == 0) return Mat::Zero(n.value.rows(), n.value.cols());
    return n.grad;
  }
  std::size_t size() const { return nodes_.size(); }

  template <typename Derived>
  void accumulate(int id, const Eigen::MatrixBase<Derived>& g) {
    Node& n = nodes_[id];
    if (!n.requires_grad) return;
    if (n.grad.size() == 0) {
      n.grad = g;
    } else {
      n.grad += g;
    }
  }

  // Reverse sweep from a scalar loss. Each node is visited once, in reverse
  // recording order, which is a valid reverse topological order.
  void backward(const Var& loss) {
    if (loss.tape() != this) throw ContractError("backward: loss belongs to another tape");
    const Mat& lv = value(loss.id());
    if (lv.rows() != 1 || lv.cols() != 1)
      throw ContractError("backward: loss must be scalar, got " + shape_str(lv));
    for (auto& n : nodes_) n.grad.resize(0, 0);
    if (!nodes_[loss.id()].requires_grad) return;
    nodes_[loss.id()].grad = Mat::Ones(1, 1);
    for (int id = loss.id(); id >= 0; --id) {
      Node& n = nodes_[id];
      if (!n.backward || n.grad.size() == 0) continue;
      n.backward(*this, n.grad);
    }
  }

 private:
  struct Node {
    Mat value;
    Mat grad;
    std::vector<int> inputs;
    BackwardFn backward;
    bool requires_grad = false;
  };

  Var push(Mat value, std::vector<int> inputs, BackwardFn fn, bool rg) {
    // deque keeps references to earlier values stable while recording.
    nodes_.push_back(Node{std::move(value), Mat(), std::move(inputs), std::move(fn), rg});
    return Var(this, static_cast<int>(nodes_.size()) - 1);
  }

  std::deque<Node> nodes_;
};

using Tape = BasicTape<double>;
using Var = BasicVar<double>;

namespace detail {

template <typename Scalar>
BasicTape<Scalar>& same_tape(const BasicVar<Scalar>& a, const BasicVar<Scalar>& b) {
  if (a.tape() != b.tape()) throw ContractError("operands recorded on different tapes");
  return *a.tape();
}

template <typename Scalar>
void require_same_shape(const char* op, const BasicVar<Scalar>& a, const BasicVar<Scalar>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.value()) + " vs " +
                         shape_str(b.value()));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Linear algebra
// ---------------------------------------------------------------------------

template <typename Scalar>
BasicVar<Scalar> matmul(const BasicVar<Scalar>& a, const BasicVar<Scalar>& b) {
  auto& tape = detail::same_tape(a, b);
  if (a.cols() != b.rows())
    throw DimensionError("matmul: inner dimensions differ, " + shape_str(a.value()) + " * " +
                         shape_str(b.value()));
  const int ia = a.id(), ib = b.id();
  return tape.record(a.value() * b.value(), {ia, ib},
                     [ia, ib](BasicTape<Scalar>& t, const MatrixX<Scalar>& g) {
                       if (t.requires_grad(ia)) t.accumulate(ia, g * t.value(ib).transpose());
                       if (t.requires_grad(ib)) t.accumulate(ib, t.value(ia).transpose() * g);
                     });
}

template <typename Scalar>
BasicVar<Scalar> transpose(const BasicVar<Scalar>& a) {
  const int ia = a.id();
  return a.tape()->record(a.value().transpose(), {ia},
                          [ia](BasicTape<Scalar>& t, const MatrixX<Scalar>& g) {
                            t.accumulate(ia, g.transpose());
                          });
}

// a + b for equal shapes, or a (r x c) + b (1 x c) broadcast over rows.
template <typename Scalar>
BasicVar<Scalar> operator+(const BasicVar<Scalar>& a, const BasicVar<Scalar>& b) {
  auto& tape = detail::same_tape(a, b);
  const int ia = a.id(), ib = b.id();
  if (b.rows() == 1 && a.rows() != 1 && a.cols() == b.cols()) {
    MatrixX<Scalar> out = a.value();
    out.rowwise() += b.value().row(0);
    return tape.record(std::move(out), {ia, ib},
                       [ia, ib](BasicTape<Scalar>& t, const MatrixX<Scalar>& g) {
                         t.accumulate(ia, g);
                         t.accumulate(ib, g.colwise().sum());
                       });
  }
  detail::require_same_shape("add", a, b);
  return tape.record(a.value() + b.value(), {ia, ib},
                     [ia, ib](BasicTape<Scalar>& t, const MatrixX<Scalar>& g) {
                       t.accumulate(ia, g);
                       t.accumulate(ib, g);
                     });
}

template <typename Scalar>
BasicVar<Scalar> operator-(const BasicVar<Scalar>& a, const BasicVar<Scalar>& b) {
  auto& tape = detail::same_tape(a, b);
  detail::require_same_shape("sub", a, b);
  const int ia = a.id(), ib = b.id();
  return tape.record(a.value() - b.value(), {ia, ib},
                     [ia, ib](BasicTape<Scalar>& t, const MatrixX<Scalar>& g) {
                       t.accumulate(ia, g);
                       t.accumulate(ib, -g);
                     });
}

// alpha * a + beta, elementwise.
template <typename Scalar>
BasicVar<Scalar> affine(const BasicVar<Scalar>& a, Scalar alpha, Scalar beta) {
  const int ia = a.id();
  MatrixX<Scalar> out = (alpha * a.value().array() + beta).matrix();
  return a.tape()->record(std::move(out), {ia},
                          [ia, alpha](BasicTape<Scalar>& t, const MatrixX<Scalar>& g) {
                            t.accumulate(ia, alpha * g);
                          });
}

template <typename Scalar>
BasicVar<Scalar> operator*(Scalar s, const BasicVar<Scalar>& a) {
  return affine(a, s, Scalar(0));
}

template <typename Scalar>
BasicVar<Scalar> operator*(const BasicVar<Scalar>& a, Scalar s) {
  return affine(a, s, Scalar(0));
}

template <typename Scalar>
BasicVar<Scalar> cwise_product(const BasicVar<Scalar>& a, const BasicVar<Scalar>& b) {
  auto& tape = detail::same_tape(a, b);
  detail::require_same_shape("cwise_product", a, b);
  const int ia = a.id(), ib = b.id();
  return tape.record(a.value().cwiseProduct(b.value()), {ia, ib},
                     [ia, ib](BasicTape<Scalar>& t, const MatrixX<Scalar>& g) {
                       if (t.requires_grad(ia)) t.accumulate(ia, g.cwiseProduct(t.value(ib)));
                       if (t.requires_grad(ib)) t.accumulate(ib, g.cwiseProduct(t.value(ia)));
                     });
}

// ---------------------------------------------------------------------------
// Activations and normalizers
// ---------------------------------------------------------------------------

template <typename Scalar>
BasicVar<Scalar> relu(const BasicVar<Scalar>& a) {
  const int ia = a.id();
  MatrixX<Scalar> out = a.value().cwiseMax(Scalar(0));
  return a.tape()->record(std::move(out), {ia},
                          [ia](BasicTape<Scalar>& t, const MatrixX<Scalar>& g) {
                            const auto& x = t.value(ia);
                            t.accumulate(ia, (x.array() > Scalar(0)).select(g, Scalar(0)).matrix());
                          });
}

template <typename Scalar>
Scalar stable_sigmoid(Scalar x) {
  if (x >= 0) return Scalar(1) / (Scalar(1) + std::exp(-x));
  const Scalar e = std::exp(x);
  return e / (Scalar(1) + e);
}

template <typename Scalar>
BasicVar<Scalar> sigmoid(const BasicVar<Scalar>& a) {
  const int ia = a.id();
  MatrixX<Scalar> out = a.value().unaryExpr([](Scalar x) { return stable_sigmoid(x); });
  auto* tape = a.tape();
  const int io = static_cast<int>(tape->size());
  return tape->record(std::move(out), {ia},
                      [ia, io](BasicTape<Scalar>& t, const MatrixX<Scalar>& g) {
                        const auto& y = t.value(io);
                        t.accumulate(ia, (g.array() * y.array() * (Scalar(1) - y.array())).matrix());
                      });
}

// Row-wise softmax with row-max subtraction. With `causal`, entry (i, j) for
// j > i is excluded and comes out exactly zero.
template <typename Scalar>
MatrixX<Scalar> softmax_rows_value(const MatrixX<Scalar>& x, bool causal = false) {
  MatrixX<Scalar> out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Eigen::Index width = causal ? std::min<Eigen::Index>(i + 1, x.cols()) : x.cols();
    const Scalar m = x.row(i).head(width).maxCoeff();
    Scalar total = 0;
    for (Eigen::Index j = 0; j < width; ++j) {
      out(i, j) = std::exp(x(i, j) - m);
      total += out(i, j);
    }
    for (Eigen::Index j = 0; j < width; ++j) out(i, j) /= total;
    for (Eigen::Index j = width; j < x.cols(); ++j) out(i, j) = 0;
  }
  return out;
}

template <typename Scalar>
BasicVar<Scalar> softmax_rows(const BasicVar<Scalar>& a, bool causal = false) {
  const int ia = a.id();
  auto* tape = a.tape();
  const int io = static_cast<int>(tape->size());
  return tape->record(softmax_rows_value(a.value(), causal), {ia},
                      [ia, io](BasicTape<Scalar>& t, const MatrixX<Scalar>& g) {
                        const auto& p = t.value(io);
                        const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> dot =
                            (g.cwiseProduct(p)).rowwise().sum();
                        MatrixX<Scalar> dx = g;
                        dx.colwise() -= dot;
                        t.accumulate(ia, dx.cwiseProduct(p));
                      });
}

// Per-row layer normalization with learned gain and shift (both 1 x c).
template <typename Scalar>
BasicVar<Scalar> layer_norm_rows(const BasicVar<Scalar>& x, const BasicVar<Scalar>& gain,
                                 const BasicVar<Scalar>& shift, Scalar eps = Scalar(1e-5)) {
  auto& tape = detail::same_tape(x, gain);
  detail::same_tape(x, shift);
  if (gain.rows() != 1 || gain.cols() != x.cols() || shift.rows() != 1 || shift.cols() != x.cols())
    throw DimensionError("layer_norm_rows: gain/shift must be 1 x " + std::to_string(x.cols()));
  const Eigen::Index r = x.rows(), c = x.cols();
  MatrixX<Scalar> xhat(r, c);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> inv_std(r);
  for (Eigen::Index i = 0; i < r; ++i) {
    const Scalar mu = x.value().row(i).mean();
    const Scalar var = (x.value().row(i).array() - mu).square().mean();
    inv_std(i) = Scalar(1) / std::sqrt(var + eps);
    xhat.row(i) = (x.value().row(i).array() - mu) * inv_std(i);
  }
  MatrixX<Scalar> out = xhat;
  out.array().rowwise() *= gain.value().row(0).array();
  out.rowwise() += shift.value().row(0);
  const int ix = x.id(), ig = gain.id(), is = shift.id();
  return tape.record(
      std::move(out), {ix, ig, is},
      [ix, ig, is, xhat = std::move(xhat), inv_std = std::move(inv_std)](
          BasicTape<Scalar>& t, const MatrixX<Scalar>& g) {
        t.accumulate(ig, g.cwiseProduct(xhat).colwise().sum());
        t.accumulate(is, g.colwise().sum());
        if (!t.requires_grad(ix)) return;
        MatrixX<Scalar> dxhat = g;
        dxhat.array().rowwise() *= t.value(ig).row(0).array();
        const Scalar n = static_cast<Scalar>(dxhat.cols());
        MatrixX<Scalar> dx(dxhat.rows(), dxhat.cols());
        for (Eigen::Index i = 0; i < dxhat.rows(); ++i) {
          const Scalar m1 = dxhat.row(i).sum() / n;
          const Scalar m2 = dxhat.row(i).cwiseProduct(xhat.row(i)).sum() / n;
          dx.row(i) = inv_std(i) * (dxhat.row(i).array() - m1 - xhat.row(i).array() * m2).matrix();
        }
        t.accumulate(ix, dx);
      });
}

// Inverted dropout: survivors are scaled by 1 / (1 - rate). rate 0 is identity.
template <typename Scalar, typename Rng>
BasicVar<Scalar> dropout(const BasicVar<Scalar>& a, double rate, Rng& rng) {
  if (rate <= 0.0) return a;
  if (rate >= 1.0) throw ArgumentError("dropout: rate must be < 1");
  MatrixX<Scalar> mask(a.rows(), a.cols());
  const Scalar keep_scale = Scalar(1) / Scalar(1.0 - rate);
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    mask.data()[i] = u < rate ? Scalar(0) : keep_scale;
  }
  const int ia = a.id();
  MatrixX<Scalar> out = a.value().cwiseProduct(mask);
  return a.tape()->record(std::move(out), {ia},
                          [ia, mask = std::move(mask)](BasicTape<Scalar>& t,
                                                       const MatrixX<Scalar>& g) {
                            t.accumulate(ia, g.cwiseProduct(mask));
                          });
}

// ---------------------------------------------------------------------------
// Structural kernels
// ---------------------------------------------------------------------------

template <typename Scalar>
BasicVar<Scalar> vstack(std::span<const BasicVar<Scalar>> parts) {
  if (parts.empty()) throw DimensionError("vstack: no operands");
  auto* tape = parts.front().tape();
  const Eigen::Index c = parts.front().cols();
  Eigen::Index r = 0;
  std::vector<int> ids;
  for (const auto& p : parts) {
    if (p.tape() != tape) throw ContractError("vstack: operands on different tapes");
    if (p.cols() != c)
      throw DimensionError("vstack: column mismatch " + shape_str(parts.front().value()) + " vs " +
                           shape_str(p.value()));
    r += p.rows();
    ids.push_back(p.id());
  }
  MatrixX<Scalar> out(r, c);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.middleRows(at, p.rows()) = p.value();
    at += p.rows();
  }
  return tape->record(std::move(out), ids,
                      [ids](BasicTape<Scalar>& t, const MatrixX<Scalar>& g) {
                        Eigen::Index at = 0;
                        for (int id : ids) {
                          const Eigen::Index n = t.value(id).rows();
                          t.accumulate(id, g.middleRows(at, n));
                          at += n;
                        }
                      });
}

template <typename Scalar>
BasicVar<Scalar> vstack(std::initializer_list<BasicVar<Scalar>> parts) {
  return vstack(std::span<const BasicVar<Scalar>>(parts.begin(), parts.size()));
}

template <typename Scalar>
BasicVar<Scalar> vstack(const std::vector<BasicVar<Scalar>>& parts) {
  return vstack(std::span<const BasicVar<Scalar>>(parts));
}

template <typename Scalar>
BasicVar<Scalar> hstack(std::span<const BasicVar<Scalar>> parts) {
  if (parts.empty()) throw DimensionError("hstack: no operands");
  auto* tape = parts.front().tape();
  const Eigen::Index r = parts.front().rows();
  Eigen::Index c = 0;
  std::vector<int> ids;
  for (const auto& p : parts) {
    if (p.tape() != tape) throw ContractError("hstack: operands on different tapes");
    if (p.rows() != r)
      throw DimensionError("hstack: row mismatch " + shape_str(parts.front().value()) + " vs " +
                           shape_str(p.value()));
    c += p.cols();
    ids.push_back(p.id());
  }
  MatrixX<Scalar> out(r, c);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  return tape->record(std::move(out), ids,
                      [ids](BasicTape<Scalar>& t, const MatrixX<Scalar>& g) {
                        Eigen::Index at = 0;
                        for (int id : ids) {
                          const Eigen::Index n = t.value(id).cols();
                          t.accumulate(id, g.middleCols(at, n));
                          at += n;
                        }
                      });
}

template <typename Scalar>
BasicVar<Scalar> hstack(std::initializer_list<BasicVar<Scalar>> parts) {
  return hstack(std::span<const BasicVar<Scalar>>(parts.begin(), parts.size()));
}

template <typename Scalar>
BasicVar<Scalar> hstack(const std::vector<BasicVar<Scalar>>& parts) {
  return hstack(std::span<const BasicVar<Scalar>>(parts));
}

template <typename Scalar>
BasicVar<Scalar> slice_rows(const BasicVar<Scalar>& a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.rows())
    throw DimensionError("slice_rows: [" + std::to_string(start) + ", " +
                         std::to_string(start + count) + ") outside " + shape_str(a.value()));
  const int ia = a.id();
  return a.tape()->record(a.value().middleRows(start, count), {ia},
                          [ia, start, count](BasicTape<Scalar>& t, const MatrixX<Scalar>& g) {
                            const auto& x = t.value(ia);
                            MatrixX<Scalar> full = MatrixX<Scalar>::Zero(x.rows(), x.cols());
                            full.middleRows(start, count) = g;
                            t.accumulate(ia, full);
                          });
}

template <typename Scalar>
BasicVar<Scalar> slice_cols(const BasicVar<Scalar>& a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.cols())
    throw DimensionError("slice_cols: [" + std::to_string(start) + ", " +
                         std::to_string(start + count) + ") outside " + shape_str(a.value()));
  const int ia = a.id();
  return a.tape()->record(a.value().middleCols(start, count), {ia},
                          [ia, start, count](BasicTape<Scalar>& t, const MatrixX<Scalar>& g) {
                            const auto& x = t.value(ia);
                            MatrixX<Scalar> full = MatrixX<Scalar>::Zero(x.rows(), x.cols());
                            full.middleCols(start, count) = g;
                            t.accumulate(ia, full);
                          });
}

// Mean over rows: (r x c) -> (1 x c).
template <typename Scalar>
BasicVar<Scalar> mean_rows(const BasicVar<Scalar>& a) {
  if (a.rows() == 0) throw DimensionError("mean_rows: empty operand");
  const int ia = a.id();
  const Scalar inv = Scalar(1) / static_cast<Scalar>(a.rows());
  return a.tape()->record(a.value().colwise().mean(), {ia},
                          [ia, inv](BasicTape<Scalar>& t, const MatrixX<Scalar>& g) {
                            const auto& x = t.value(ia);
                            t.accumulate(ia, (inv * g).replicate(x.rows(), 1));
                          });
}

template <typename Scalar>
BasicVar<Scalar> sum(const BasicVar<Scalar>& a) {
  const int ia = a.id();
  MatrixX<Scalar> out(1, 1);
  out(0, 0) = a.value().sum();
  return a.tape()->record(std::move(out), {ia},
                          [ia](BasicTape<Scalar>& t, const MatrixX<Scalar>& g) {
                            const auto& x = t.value(ia);
                            t.accumulate(ia, MatrixX<Scalar>::Constant(x.rows(), x.cols(), g(0, 0)));
                          });
}

// Rows of `table` selected by `ids`, in order; duplicates allowed.
template <typename Scalar>
BasicVar<Scalar> gather_rows(const BasicVar<Scalar>& table, std::span<const int> ids) {
  const Eigen::Index v = table.rows();
  MatrixX<Scalar> out(static_cast<Eigen::Index>(ids.size()), table.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= v)
      throw DimensionError("gather_rows: id " + std::to_string(ids[i]) + " outside table " +
                           shape_str(table.value()));
    out.row(static_cast<Eigen::Index>(i)) = table.value().row(ids[i]);
  }
  const int it = table.id();
  std::vector<int> idx(ids.begin(), ids.end());
  return table.tape()->record(std::move(out), {it},
                              [it, idx = std::move(idx)](BasicTape<Scalar>& t,
                                                         const MatrixX<Scalar>& g) {
                                const auto& tv = t.value(it);
                                MatrixX<Scalar> full = MatrixX<Scalar>::Zero(tv.rows(), tv.cols());
                                for (std::size_t i = 0; i < idx.size(); ++i)
                                  full.row(idx[i]) += g.row(static_cast<Eigen::Index>(i));
                                t.accumulate(it, full);
                              });
}

// Weighted token cross-entropy: sum_i w_i * (logsumexp(row_i) - row_i[target_i]).
template <typename Scalar>
BasicVar<Scalar> cross_entropy_rows(const BasicVar<Scalar>& logits, std::span<const int> targets,
                                    std::span<const Scalar> weights) {
  const Eigen::Index r = logits.rows(), c = logits.cols();
  if (static_cast<Eigen::Index>(targets.size()) != r ||
      static_cast<Eigen::Index>(weights.size()) != r)
    throw DimensionError("cross_entropy_rows: " + std::to_string(targets.size()) + " targets, " +
                         std::to_string(weights.size()) + " weights for logits " +
                         shape_str(logits.value()));
  const auto& x = logits.value();
  MatrixX<Scalar> probs(r, c);
  Scalar total = 0;
  for (Eigen::Index i = 0; i < r; ++i) {
    const int tgt = targets[static_cast<std::size_t>(i)];
    if (tgt < 0 || tgt >= c)
      throw DimensionError("cross_entropy_rows: target " + std::to_string(tgt) + " outside " +
                           std::to_string(c) + " classes");
    const Scalar m = x.row(i).maxCoeff();
    const Scalar lse = m + std::log((x.row(i).array() - m).exp().sum());
    probs.row(i) = (x.row(i).array() - lse).exp();
    total += weights[static_cast<std::size_t>(i)] * (lse - x(i, tgt));
  }
  MatrixX<Scalar> out(1, 1);
  out(0, 0) = total;
  const int il = logits.id();
  std::vector<int> tg(targets.begin(), targets.end());
  std::vector<Scalar> w(weights.begin(), weights.end());
  return logits.tape()->record(
      std::move(out), {il},
      [il, probs = std::move(probs), tg = std::move(tg), w = std::move(w)](
          BasicTape<Scalar>& t, const MatrixX<Scalar>& g) {
        MatrixX<Scalar> d = probs;
        for (Eigen::Index i = 0; i < d.rows(); ++i) {
          d(i, tg[static_cast<std::size_t>(i)]) -= Scalar(1);
          d.row(i) *= w[static_cast<std::size_t>(i)] * g(0, 0);
        }
        t.accumulate(il, d);
      });
}

}  // namespace lcr
