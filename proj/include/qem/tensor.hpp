#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <new>
#include <stdexcept>
#include <string>
#include <vector>

#include "qem/errors.hpp"

namespace qem {

// 64-byte-aligned storage for tensor values. With -march=native Eigen picks
// its packet head/tail split — and therefore the floating-point accumulation
// order — from the runtime pointer alignment of the operands, so buffers that
// land at different addresses can produce results differing in the last bit.
// Pinning every tensor buffer to one alignment keeps all kernels on the same
// code path from run to run, which training reproducibility depends on.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::size_t kAlign = 64;

  AlignedAllocator() = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) {}

  T* allocate(std::size_t n) {
    return static_cast<T*>(::operator new(n * sizeof(T), std::align_val_t(kAlign)));
  }
  void deallocate(T* p, std::size_t n) {
    ::operator delete(p, n * sizeof(T), std::align_val_t(kAlign));
  }
  template <class U>
  bool operator==(const AlignedAllocator<U>&) const { return true; }
  template <class U>
  bool operator!=(const AlignedAllocator<U>&) const { return false; }
};

using AlignedVec = std::vector<double, AlignedAllocator<double>>;

// Row-major 2-D double tensor. Vectors are [1 x n] or [n x 1]; scalars [1 x 1].
struct Tensor {
  int rows = 0, cols = 0;
  AlignedVec v;

  Tensor() = default;
  Tensor(int r, int c) : rows(r), cols(c), v(static_cast<size_t>(r) * c, 0.0) {
    if (r < 0 || c < 0) throw std::invalid_argument("negative tensor dimension");
  }
  static Tensor scalar(double x) {
    Tensor t(1, 1);
    t.v[0] = x;
    return t;
  }

  double& at(int r, int c) { return v[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return v[static_cast<size_t>(r) * cols + c]; }
  size_t size() const { return v.size(); }
  bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }
};

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using EMap = Eigen::Map<EMat>;
using ECMap = Eigen::Map<const EMat>;

inline EMap emap(Tensor& t) { return EMap(t.v.data(), t.rows, t.cols); }
inline ECMap emap(const Tensor& t) { return ECMap(t.v.data(), t.rows, t.cols); }

// Reverse-mode tape. Every op records its output tensor plus a closure that
// scatters the output gradient back to its inputs; backward() replays the
// closures in reverse creation order (creation order is topological by
// construction). Inputs marked requires_grad act as gradient sinks whose
// accumulated gradient is read back with grad(). The tape owns all values
// and gradients; build a fresh tape per training step.
class Tape {
 public:
  int input(Tensor value, bool requires_grad) {
    return push(std::move(value), requires_grad, {}, "input");
  }
  int constant(Tensor value) { return push(std::move(value), false, {}, "constant"); }

  const Tensor& value(int id) const { return nodes_[check(id)].val; }
  const Tensor& grad(int id) const {
    const Node& n = nodes_[check(id)];
    if (!n.needs_grad) throw std::logic_error("grad() on a non-tracked tensor");
    return n.grad;
  }

  // ---- ops ----------------------------------------------------------------

  int matmul(int a, int b) {
    const Tensor &A = val(a), &B = val(b);
    if (A.cols != B.rows) throw std::invalid_argument("matmul: inner dimensions differ");
    Tensor out(A.rows, B.cols);
    emap(out).noalias() = emap(A) * emap(B);
    return push(std::move(out), tracked(a) || tracked(b), [this, a, b](const Tensor& g) {
      if (tracked(a)) emap(mut_grad(a)).noalias() += emap(g) * emap(val(b)).transpose();
      if (tracked(b)) emap(mut_grad(b)).noalias() += emap(val(a)).transpose() * emap(g);
    }, "matmul");
  }

  // A [n x k] times B-transpose, B [m x k] -> [n x m].
  int matmul_nt(int a, int b) {
    const Tensor &A = val(a), &B = val(b);
    if (A.cols != B.cols) throw std::invalid_argument("matmul_nt: inner dimensions differ");
    Tensor out(A.rows, B.rows);
    emap(out).noalias() = emap(A) * emap(B).transpose();
    return push(std::move(out), tracked(a) || tracked(b), [this, a, b](const Tensor& g) {
      if (tracked(a)) emap(mut_grad(a)).noalias() += emap(g) * emap(val(b));
      if (tracked(b)) emap(mut_grad(b)).noalias() += emap(g).transpose() * emap(val(a));
    }, "matmul_nt");
  }

  // X·W + row-broadcast bias; b is [1 x out].
  int linear(int x, int w, int b) {
    const Tensor &X = val(x), &W = val(w), &B = val(b);
    if (X.cols != W.rows) throw std::invalid_argument("linear: inner dimensions differ");
    if (B.rows != 1 || B.cols != W.cols) throw std::invalid_argument("linear: bias shape");
    Tensor out(X.rows, W.cols);
    emap(out).noalias() = emap(X) * emap(W);
    emap(out).rowwise() += Eigen::Map<const Eigen::RowVectorXd>(B.v.data(), B.cols);
    return push(std::move(out), tracked(x) || tracked(w) || tracked(b),
                [this, x, w, b](const Tensor& g) {
      if (tracked(x)) emap(mut_grad(x)).noalias() += emap(g) * emap(val(w)).transpose();
      if (tracked(w)) emap(mut_grad(w)).noalias() += emap(val(x)).transpose() * emap(g);
      if (tracked(b))
        Eigen::Map<Eigen::RowVectorXd>(mut_grad(b).v.data(), val(b).cols) +=
            emap(g).colwise().sum();
    }, "linear");
  }

  int add(int a, int b) {
    const Tensor &A = val(a), &B = val(b);
    if (!A.same_shape(B)) throw std::invalid_argument("add: shape mismatch");
    Tensor out = A;
    emap(out) += emap(B);
    return push(std::move(out), tracked(a) || tracked(b), [this, a, b](const Tensor& g) {
      if (tracked(a)) emap(mut_grad(a)) += emap(g);
      if (tracked(b)) emap(mut_grad(b)) += emap(g);
    }, "add");
  }

  int mul(int a, int b) {  // elementwise
    const Tensor &A = val(a), &B = val(b);
    if (!A.same_shape(B)) throw std::invalid_argument("mul: shape mismatch");
    Tensor out = A;
    emap(out).array() *= emap(B).array();
    return push(std::move(out), tracked(a) || tracked(b), [this, a, b](const Tensor& g) {
      if (tracked(a)) emap(mut_grad(a)).array() += emap(g).array() * emap(val(b)).array();
      if (tracked(b)) emap(mut_grad(b)).array() += emap(g).array() * emap(val(a)).array();
    }, "mul");
  }

  int scale(int a, double c) {
    Tensor out = val(a);
    emap(out) *= c;
    return push(std::move(out), tracked(a), [this, a, c](const Tensor& g) {
      emap(mut_grad(a)) += c * emap(g);
    }, "scale");
  }

  int relu(int a) {
    Tensor out = val(a);
    for (double& x : out.v) x = x > 0.0 ? x : 0.0;
    return push(std::move(out), tracked(a), [this, a](const Tensor& g) {
      Tensor& ga = mut_grad(a);
      const Tensor& A = val(a);
      for (size_t i = 0; i < g.v.size(); ++i)
        if (A.v[i] > 0.0) ga.v[i] += g.v[i];
    }, "relu");
  }

  int tanh_op(int a) {
    Tensor out = val(a);
    for (double& x : out.v) x = std::tanh(x);
    const int id = push(std::move(out), tracked(a), {}, "tanh");
    if (tracked(a)) {
      nodes_[id].back = [this, a, id](const Tensor& g) {
        Tensor& ga = mut_grad(a);
        const Tensor& Y = val(id);
        for (size_t i = 0; i < g.v.size(); ++i) ga.v[i] += g.v[i] * (1.0 - Y.v[i] * Y.v[i]);
      };
    }
    return id;
  }

  // Per-row softmax restricted to entries where mask != 0; masked entries emit
  // 0 and a fully masked row emits all zeros (degenerate rows must not poison
  // downstream pooling with NaN). Empty mask tensor means "nothing masked".
  int masked_softmax(int scores, const Tensor& mask) {
    const Tensor& S = val(scores);
    const bool use_mask = mask.size() > 0;
    if (use_mask && !S.same_shape(mask))
      throw std::invalid_argument("masked_softmax: mask shape mismatch");
    Tensor out(S.rows, S.cols);
    for (int r = 0; r < S.rows; ++r) {
      double hi = -HUGE_VAL;
      for (int c = 0; c < S.cols; ++c)
        if (!use_mask || mask.at(r, c) != 0.0) hi = std::max(hi, S.at(r, c));
      if (hi == -HUGE_VAL) continue;  // fully masked row stays zero
      double z = 0.0;
      for (int c = 0; c < S.cols; ++c) {
        if (!use_mask || mask.at(r, c) != 0.0) {
          const double e = std::exp(S.at(r, c) - hi);
          out.at(r, c) = e;
          z += e;
        }
      }
      for (int c = 0; c < S.cols; ++c) out.at(r, c) /= z;
    }
    const int id = push(std::move(out), tracked(scores), {}, "masked_softmax");
    if (tracked(scores)) {
      nodes_[id].back = [this, scores, id](const Tensor& g) {
        const Tensor& P = val(id);
        Tensor& gs = mut_grad(scores);
        for (int r = 0; r < P.rows; ++r) {
          double dot = 0.0;
          for (int c = 0; c < P.cols; ++c) dot += g.at(r, c) * P.at(r, c);
          for (int c = 0; c < P.cols; ++c)
            gs.at(r, c) += P.at(r, c) * (g.at(r, c) - dot);
        }
      };
    }
    return id;
  }

  // Per-row layer norm with learned gain/bias; gamma and beta are [1 x d].
  int layer_norm(int x, int gamma, int beta, double eps = 1e-5) {
    const Tensor &X = val(x), &G = val(gamma), &B = val(beta);
    if (G.rows != 1 || G.cols != X.cols || !G.same_shape(B))
      throw std::invalid_argument("layer_norm: gain/bias must be [1 x d]");
    Tensor out(X.rows, X.cols);
    auto xhat = std::make_shared<Tensor>(X.rows, X.cols);
    auto inv_std = std::make_shared<std::vector<double>>(X.rows);
    const int d = X.cols;
    for (int r = 0; r < X.rows; ++r) {
      double mean = 0.0;
      for (int c = 0; c < d; ++c) mean += X.at(r, c);
      mean /= d;
      double var = 0.0;
      for (int c = 0; c < d; ++c) {
        const double t = X.at(r, c) - mean;
        var += t * t;
      }
      var /= d;
      const double is = 1.0 / std::sqrt(var + eps);
      (*inv_std)[r] = is;
      for (int c = 0; c < d; ++c) {
        const double h = (X.at(r, c) - mean) * is;
        xhat->at(r, c) = h;
        out.at(r, c) = h * G.at(0, c) + B.at(0, c);
      }
    }
    return push(std::move(out), tracked(x) || tracked(gamma) || tracked(beta),
                [this, x, gamma, beta, xhat, inv_std](const Tensor& g) {
      const Tensor& G = val(gamma);
      const int d = xhat->cols;
      if (tracked(gamma) || tracked(beta)) {
        Tensor* gg = tracked(gamma) ? &mut_grad(gamma) : nullptr;
        Tensor* gb = tracked(beta) ? &mut_grad(beta) : nullptr;
        for (int r = 0; r < xhat->rows; ++r)
          for (int c = 0; c < d; ++c) {
            if (gg) gg->at(0, c) += g.at(r, c) * xhat->at(r, c);
            if (gb) gb->at(0, c) += g.at(r, c);
          }
      }
      if (tracked(x)) {
        Tensor& gx = mut_grad(x);
        for (int r = 0; r < xhat->rows; ++r) {
          double dsum = 0.0, dxsum = 0.0;
          for (int c = 0; c < d; ++c) {
            const double dh = g.at(r, c) * G.at(0, c);
            dsum += dh;
            dxsum += dh * xhat->at(r, c);
          }
          const double is = (*inv_std)[r];
          for (int c = 0; c < d; ++c) {
            const double dh = g.at(r, c) * G.at(0, c);
            gx.at(r, c) += is * (dh - dsum / d - xhat->at(r, c) * dxsum / d);
          }
        }
      }
    }, "layer_norm");
  }

  int slice_cols(int a, int first, int width) {
    const Tensor& A = val(a);
    if (first < 0 || width <= 0 || first + width > A.cols)
      throw std::invalid_argument("slice_cols: range outside tensor");
    Tensor out(A.rows, width);
    emap(out) = emap(A).middleCols(first, width);
    return push(std::move(out), tracked(a), [this, a, first, width](const Tensor& g) {
      emap(mut_grad(a)).middleCols(first, width) += emap(g);
    }, "slice_cols");
  }

  int concat_cols(const std::vector<int>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
    int total = 0;
    const int rows = val(parts[0]).rows;
    bool track = false;
    for (int p : parts) {
      if (val(p).rows != rows) throw std::invalid_argument("concat_cols: row mismatch");
      total += val(p).cols;
      track = track || tracked(p);
    }
    Tensor out(rows, total);
    int off = 0;
    for (int p : parts) {
      emap(out).middleCols(off, val(p).cols) = emap(val(p));
      off += val(p).cols;
    }
    return push(std::move(out), track, [this, parts](const Tensor& g) {
      int off2 = 0;
      for (int p : parts) {
        const int w = val(p).cols;
        if (tracked(p)) emap(mut_grad(p)) += emap(g).middleCols(off2, w);
        off2 += w;
      }
    }, "concat_cols");
  }

  int concat_rows(const std::vector<int>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_rows: no inputs");
    int total = 0;
    const int cols = val(parts[0]).cols;
    bool track = false;
    for (int p : parts) {
      if (val(p).cols != cols) throw std::invalid_argument("concat_rows: column mismatch");
      total += val(p).rows;
      track = track || tracked(p);
    }
    Tensor out(total, cols);
    int off = 0;
    for (int p : parts) {
      emap(out).middleRows(off, val(p).rows) = emap(val(p));
      off += val(p).rows;
    }
    return push(std::move(out), track, [this, parts](const Tensor& g) {
      int off2 = 0;
      for (int p : parts) {
        const int h = val(p).rows;
        if (tracked(p)) emap(mut_grad(p)) += emap(g).middleRows(off2, h);
        off2 += h;
      }
    }, "concat_rows");
  }

  int gather_rows(int a, std::vector<int> rows) {
    const Tensor& A = val(a);
    if (rows.empty()) throw std::invalid_argument("gather_rows: empty selection");
    for (int r : rows)
      if (r < 0 || r >= A.rows) throw std::invalid_argument("gather_rows: row out of range");
    Tensor out(static_cast<int>(rows.size()), A.cols);
    for (size_t i = 0; i < rows.size(); ++i)
      emap(out).row(static_cast<int>(i)) = emap(A).row(rows[i]);
    return push(std::move(out), tracked(a), [this, a, rows](const Tensor& g) {
      Tensor& ga = mut_grad(a);
      for (size_t i = 0; i < rows.size(); ++i)
        emap(ga).row(rows[i]) += emap(g).row(static_cast<int>(i));
    }, "gather_rows");
  }

  // Mean over a nonempty subset of rows -> [1 x d].
  int mean_pool_rows(int a, std::vector<int> rows) {
    const Tensor& A = val(a);
    if (rows.empty()) throw std::invalid_argument("mean_pool_rows: empty selection");
    for (int r : rows)
      if (r < 0 || r >= A.rows)
        throw std::invalid_argument("mean_pool_rows: row out of range");
    Tensor out(1, A.cols);
    for (int r : rows) emap(out).row(0) += emap(A).row(r);
    emap(out) /= static_cast<double>(rows.size());
    return push(std::move(out), tracked(a), [this, a, rows](const Tensor& g) {
      Tensor& ga = mut_grad(a);
      const double w = 1.0 / static_cast<double>(rows.size());
      for (int r : rows) emap(ga).row(r) += w * emap(g).row(0);
    }, "mean_pool_rows");
  }

  int mean_pool_all_rows(int a) {
    std::vector<int> rows(val(a).rows);
    for (size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<int>(i);
    return mean_pool_rows(a, std::move(rows));
  }

  // Stack scalar nodes into a [k x 1] column.
  int stack_scalars(const std::vector<int>& scalars) {
    if (scalars.empty()) throw std::invalid_argument("stack_scalars: no inputs");
    Tensor out(static_cast<int>(scalars.size()), 1);
    bool track = false;
    for (size_t i = 0; i < scalars.size(); ++i) {
      const Tensor& s = val(scalars[i]);
      if (s.size() != 1) throw std::invalid_argument("stack_scalars: non-scalar input");
      out.v[i] = s.v[0];
      track = track || tracked(scalars[i]);
    }
    return push(std::move(out), track, [this, scalars](const Tensor& g) {
      for (size_t i = 0; i < scalars.size(); ++i)
        if (tracked(scalars[i])) mut_grad(scalars[i]).v[0] += g.v[i];
    }, "stack_scalars");
  }

  int sum_all(int a) {
    Tensor out = Tensor::scalar(emap(val(a)).sum());
    return push(std::move(out), tracked(a), [this, a](const Tensor& g) {
      emap(mut_grad(a)).array() += g.v[0];
    }, "sum_all");
  }

  // Mean squared error against a constant target of the same shape -> scalar.
  int mse(int pred, const Tensor& target) {
    const Tensor& P = val(pred);
    if (!P.same_shape(target)) throw std::invalid_argument("mse: shape mismatch");
    const double n = static_cast<double>(P.size());
    double acc = 0.0;
    for (size_t i = 0; i < P.v.size(); ++i) {
      const double d = P.v[i] - target.v[i];
      acc += d * d;
    }
    auto tgt = std::make_shared<Tensor>(target);
    Tensor out = Tensor::scalar(acc / n);
    return push(std::move(out), tracked(pred), [this, pred, tgt, n](const Tensor& g) {
      Tensor& gp = mut_grad(pred);
      const Tensor& P = val(pred);
      const double s = 2.0 * g.v[0] / n;
      for (size_t i = 0; i < P.v.size(); ++i) gp.v[i] += s * (P.v[i] - tgt->v[i]);
    }, "mse");
  }

  // ---- backward -----------------------------------------------------------

  void backward(int loss) {
    const Tensor& L = val(loss);
    if (L.rows != 1 || L.cols != 1)
      throw std::invalid_argument("backward: loss must be a scalar");
    if (!nodes_[loss].needs_grad)
      throw std::logic_error("backward: loss does not depend on any tracked tensor");
    if (backward_done_)
      throw std::logic_error("backward: tape already consumed; build a fresh tape");
    backward_done_ = true;
    nodes_[loss].grad.v[0] = 1.0;
    for (int id = loss; id >= 0; --id) {
      Node& n = nodes_[id];
      if (n.needs_grad && n.back) n.back(n.grad);
    }
  }

  size_t n_nodes() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor val;
    Tensor grad;  // allocated only when needs_grad
    bool needs_grad = false;
    std::function<void(const Tensor&)> back;
  };

  int check(int id) const {
    if (id < 0 || id >= static_cast<int>(nodes_.size()))
      throw std::logic_error("tape: bad tensor id");
    return id;
  }
  const Tensor& val(int id) const { return nodes_[check(id)].val; }
  bool tracked(int id) const { return nodes_[check(id)].needs_grad; }
  Tensor& mut_grad(int id) { return nodes_[check(id)].grad; }

  int push(Tensor&& t, bool needs_grad, std::function<void(const Tensor&)> back,
           const char* op) {
    if (!emap(t).allFinite())
      throw NumericError(std::string("non-finite values produced by op '") + op + "'");
    Node n;
    n.val = std::move(t);
    n.needs_grad = needs_grad;
    if (needs_grad) n.grad = Tensor(n.val.rows, n.val.cols);
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

}  // namespace qem
