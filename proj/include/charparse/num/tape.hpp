#pragma once

// Reverse-mode automatic differentiation on a per-sentence tape. The tape
// records every op's output plus a backward closure; backward() walks the
// record in reverse and accumulates exact partial derivatives. Tapes are
// single-writer and rebuilt per example (sentence lengths vary, so shapes
// are dynamic).

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "charparse/num/kernels.hpp"
#include "charparse/num/tensor.hpp"
#include "charparse/util/error.hpp"
#include "charparse/util/rng.hpp"

namespace charparse::num {

/// A named, trainable tensor with a gradient slot of the same shape.
template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
  bool is_bias = false;
  int index = -1;  // slot in the owning bundle's parameter list

  Parameter() = default;
  Parameter(std::string n, Tensor<T> v, bool bias = false)
      : name(std::move(n)), value(std::move(v)), grad(value.shape), is_bias(bias) {}

  void zero_grad() { grad.fill(T(0)); }
};

using Var = std::int32_t;

template <typename T>
class Tape {
 public:
  explicit Tape(bool train = false, std::uint64_t dropout_seed = 0,
                bool check_finite = true)
      : train_(train), rng_(dropout_seed), check_finite_(check_finite) {}

  bool train() const { return train_; }

  const Tensor<T>& value(Var v) const { return nodes_[static_cast<size_t>(v)].val; }

  /// Gradient of the last backward() target with respect to node v.
  const Tensor<T>& grad(Var v) const {
    if (grads_.empty()) throw NumericError("tape: grad() before backward()");
    return grads_[static_cast<size_t>(v)];
  }

  // ---- leaves ----

  Var input(Tensor<T> t) { return push("input", std::move(t), nullptr, {}); }

  Var zeros(std::vector<int> shape) { return input(Tensor<T>(std::move(shape))); }

  Var param(Parameter<T>& p) {
    auto it = param_vars_.find(&p);
    if (it != param_vars_.end()) return it->second;
    Var v = push("param", p.value, &p, {});
    param_vars_.emplace(&p, v);
    return v;
  }

  // ---- elementwise ----

  Var add(Var a, Var b) { return ew2("add", a, b); }
  Var sub(Var a, Var b) { return ew2("sub", a, b); }
  Var mul(Var a, Var b) { return ew2("mul", a, b); }

  Var scale(Var a, T c) {
    Tensor<T> out = value(a);
    for (T& x : out.v) x *= c;
    return push("scale", std::move(out), nullptr,
                [a, c](Tape& t, const Tensor<T>& g, Var) {
                  Tensor<T>& da = t.grads_[static_cast<size_t>(a)];
                  for (size_t i = 0; i < g.v.size(); ++i) da.v[i] += c * g.v[i];
                });
  }

  Var tanh_(Var a) {
    Tensor<T> out = value(a);
    for (T& x : out.v) x = std::tanh(x);
    return push("tanh", std::move(out), nullptr,
                [a](Tape& t, const Tensor<T>& g, Var self) {
                  const Tensor<T>& y = t.value(self);
                  Tensor<T>& da = t.grads_[static_cast<size_t>(a)];
                  for (size_t i = 0; i < g.v.size(); ++i)
                    da.v[i] += g.v[i] * (T(1) - y.v[i] * y.v[i]);
                });
  }

  Var sigmoid(Var a) {
    Tensor<T> out = value(a);
    for (T& x : out.v) x = T(1) / (T(1) + std::exp(-x));
    return push("sigmoid", std::move(out), nullptr,
                [a](Tape& t, const Tensor<T>& g, Var self) {
                  const Tensor<T>& y = t.value(self);
                  Tensor<T>& da = t.grads_[static_cast<size_t>(a)];
                  for (size_t i = 0; i < g.v.size(); ++i)
                    da.v[i] += g.v[i] * y.v[i] * (T(1) - y.v[i]);
                });
  }

  Var relu(Var a) {
    Tensor<T> out = value(a);
    for (T& x : out.v) x = x > T(0) ? x : T(0);
    return push("relu", std::move(out), nullptr,
                [a](Tape& t, const Tensor<T>& g, Var) {
                  const Tensor<T>& x = t.value(a);
                  Tensor<T>& da = t.grads_[static_cast<size_t>(a)];
                  for (size_t i = 0; i < g.v.size(); ++i)
                    if (x.v[i] > T(0)) da.v[i] += g.v[i];
                });
  }

  /// Max over k contiguous pieces per unit: [units*pieces] -> [units].
  /// Ties route the gradient to the lowest piece index.
  Var maxout(Var a, int pieces) {
    const Tensor<T>& x = value(a);
    if (pieces < 1 || x.rank() != 1 || x.numel() % pieces != 0)
      throw NumericError("maxout: input " + x.shape_str() + " not divisible into " +
                         std::to_string(pieces) + " pieces");
    int units = static_cast<int>(x.numel()) / pieces;
    Tensor<T> out({units});
    std::vector<int> arg(static_cast<size_t>(units));
    for (int u = 0; u < units; ++u) {
      int base = u * pieces, best = 0;
      T bv = x.at(base);
      for (int q = 1; q < pieces; ++q)
        if (x.at(base + q) > bv) { bv = x.at(base + q); best = q; }
      out.at(u) = bv;
      arg[static_cast<size_t>(u)] = base + best;
    }
    return push("maxout", std::move(out), nullptr,
                [a, arg = std::move(arg)](Tape& t, const Tensor<T>& g, Var) {
                  Tensor<T>& da = t.grads_[static_cast<size_t>(a)];
                  for (size_t u = 0; u < g.v.size(); ++u)
                    da.v[static_cast<size_t>(arg[u])] += g.v[u];
                });
  }

  /// Inverted dropout: scales kept entries by 1/(1-rate) at train time so
  /// inference needs no rescaling. rate 0 (or inference) is the identity.
  Var dropout(Var a, double rate) {
    if (rate < 0.0 || rate >= 1.0)
      throw NumericError("dropout: rate must be in [0,1), got " + std::to_string(rate));
    if (!train_ || rate == 0.0) return a;
    const Tensor<T>& x = value(a);
    Tensor<T> out = x;
    std::vector<T> mask(x.v.size());
    T keep_scale = T(1.0 / (1.0 - rate));
    for (size_t i = 0; i < mask.size(); ++i) {
      mask[i] = rng_.bernoulli(rate) ? T(0) : keep_scale;
      out.v[i] *= mask[i];
    }
    return push("dropout", std::move(out), nullptr,
                [a, mask = std::move(mask)](Tape& t, const Tensor<T>& g, Var) {
                  Tensor<T>& da = t.grads_[static_cast<size_t>(a)];
                  for (size_t i = 0; i < g.v.size(); ++i) da.v[i] += g.v[i] * mask[i];
                });
  }

  // ---- linear algebra ----

  /// a[m,k] * b[k,n] -> [m,n]
  Var matmul(Var a, Var b) {
    const Tensor<T>& x = value(a);
    const Tensor<T>& y = value(b);
    if (x.rank() != 2 || y.rank() != 2 || x.cols() != y.rows())
      throw NumericError("matmul: shape mismatch " + x.shape_str() + " x " + y.shape_str());
    int m = x.rows(), k = x.cols(), n = y.cols();
    Tensor<T> out({m, n});
    kern::gemm(x.data(), y.data(), out.data(), m, k, n, false);
    return push("matmul", std::move(out), nullptr,
                [a, b, m, k, n](Tape& t, const Tensor<T>& g, Var) {
                  kern::gemm_bt(g.data(), t.value(b).data(),
                                t.grads_[static_cast<size_t>(a)].data(), m, n, k, true);
                  kern::gemm_at(t.value(a).data(), g.data(),
                                t.grads_[static_cast<size_t>(b)].data(), k, m, n, true);
                });
  }

  /// W[m,k] * x[k] -> [m]  (no bias)
  /// or x[L,k] -> x * W^T -> [L,m]
  Var linear(Var x, Var w) { return affine_impl("linear", x, w, -1); }

  /// linear plus a broadcast bias b[m].
  Var affine(Var x, Var w, Var b) { return affine_impl("affine", x, w, b); }

  /// Concatenate rank-1 tensors into one vector.
  Var concat(const std::vector<Var>& parts) {
    std::int64_t total = 0;
    for (Var p : parts) {
      if (value(p).rank() != 1)
        throw NumericError("concat: rank-1 inputs required, got " + value(p).shape_str());
      total += value(p).numel();
    }
    Tensor<T> out({static_cast<int>(total)});
    std::int64_t off = 0;
    for (Var p : parts) {
      const Tensor<T>& x = value(p);
      std::copy(x.v.begin(), x.v.end(), out.v.begin() + off);
      off += x.numel();
    }
    return push("concat", std::move(out), nullptr,
                [parts](Tape& t, const Tensor<T>& g, Var) {
                  std::int64_t off = 0;
                  for (Var p : parts) {
                    Tensor<T>& dp = t.grads_[static_cast<size_t>(p)];
                    for (std::int64_t i = 0; i < dp.numel(); ++i)
                      dp.v[static_cast<size_t>(i)] += g.v[static_cast<size_t>(off + i)];
                    off += dp.numel();
                  }
                });
  }

  Var concat(Var a, Var b) { return concat(std::vector<Var>{a, b}); }

  /// Stack rank-1 tensors of equal length d into a [L,d] matrix.
  Var stack_rows(const std::vector<Var>& rows) {
    if (rows.empty()) throw NumericError("stack_rows: no rows");
    int d = static_cast<int>(value(rows[0]).numel());
    Tensor<T> out({static_cast<int>(rows.size()), d});
    for (size_t r = 0; r < rows.size(); ++r) {
      const Tensor<T>& x = value(rows[r]);
      if (x.rank() != 1 || x.numel() != d)
        throw NumericError("stack_rows: row " + std::to_string(r) + " has shape " +
                           x.shape_str() + ", want [" + std::to_string(d) + "]");
      std::copy(x.v.begin(), x.v.end(), out.v.begin() + static_cast<std::int64_t>(r) * d);
    }
    return push("stack_rows", std::move(out), nullptr,
                [rows, d](Tape& t, const Tensor<T>& g, Var) {
                  for (size_t r = 0; r < rows.size(); ++r) {
                    Tensor<T>& dr = t.grads_[static_cast<size_t>(rows[r])];
                    const T* gr = g.data() + static_cast<std::int64_t>(r) * d;
                    for (int i = 0; i < d; ++i) dr.v[static_cast<size_t>(i)] += gr[i];
                  }
                });
  }

  /// Row i of a [L,d] matrix as a vector.
  Var pick_row(Var a, int i) {
    const Tensor<T>& x = value(a);
    if (x.rank() != 2 || i < 0 || i >= x.rows())
      throw NumericError("pick_row: row " + std::to_string(i) + " of " + x.shape_str());
    int d = x.cols();
    Tensor<T> out({d});
    std::copy_n(x.v.begin() + static_cast<std::int64_t>(i) * d, d, out.v.begin());
    return push("pick_row", std::move(out), nullptr,
                [a, i, d](Tape& t, const Tensor<T>& g, Var) {
                  Tensor<T>& da = t.grads_[static_cast<size_t>(a)];
                  T* dst = da.data() + static_cast<std::int64_t>(i) * d;
                  for (int j = 0; j < d; ++j) dst[j] += g.v[static_cast<size_t>(j)];
                });
  }

  /// Contiguous segment [off, off+len) of a vector.
  Var slice(Var a, int off, int len) {
    const Tensor<T>& x = value(a);
    if (x.rank() != 1 || off < 0 || len < 0 || off + len > x.numel())
      throw NumericError("slice: [" + std::to_string(off) + "," +
                         std::to_string(off + len) + ") of " + x.shape_str());
    Tensor<T> out({len});
    std::copy_n(x.v.begin() + off, len, out.v.begin());
    return push("slice", std::move(out), nullptr,
                [a, off](Tape& t, const Tensor<T>& g, Var) {
                  Tensor<T>& da = t.grads_[static_cast<size_t>(a)];
                  for (size_t j = 0; j < g.v.size(); ++j)
                    da.v[static_cast<size_t>(off) + j] += g.v[j];
                });
  }

  /// Gather rows of an embedding table: table[V,d], ids (len L) -> [L,d].
  Var embed_rows(Var table, std::vector<int> ids) {
    const Tensor<T>& tab = value(table);
    if (tab.rank() != 2) throw NumericError("embed_rows: table must be rank 2");
    int d = tab.cols();
    for (int id : ids)
      if (id < 0 || id >= tab.rows())
        throw NumericError("embed_rows: id " + std::to_string(id) +
                           " out of range for table " + tab.shape_str());
    Tensor<T> out({static_cast<int>(ids.size()), d});
    for (size_t r = 0; r < ids.size(); ++r)
      std::copy_n(tab.v.begin() + static_cast<std::int64_t>(ids[r]) * d, d,
                  out.v.begin() + static_cast<std::int64_t>(r) * d);
    return push("embed_rows", std::move(out), nullptr,
                [table, ids = std::move(ids), d](Tape& t, const Tensor<T>& g, Var) {
                  Tensor<T>& dt = t.grads_[static_cast<size_t>(table)];
                  for (size_t r = 0; r < ids.size(); ++r) {
                    T* dst = dt.data() + static_cast<std::int64_t>(ids[r]) * d;
                    const T* src = g.data() + static_cast<std::int64_t>(r) * d;
                    for (int j = 0; j < d; ++j) dst[j] += src[j];
                  }
                });
  }

  // ---- sequence ops ----

  /// Valid 1-D convolution over positions. x[L,d] with nf filters of
  /// length k (f[nf, k*d]) -> [L-k+1, nf].
  Var conv1d(Var x, Var f, int k) {
    const Tensor<T>& xs = value(x);
    const Tensor<T>& fs = value(f);
    if (xs.rank() != 2 || fs.rank() != 2 || k < 1 || fs.cols() != k * xs.cols())
      throw NumericError("conv1d: input " + xs.shape_str() + ", filters " +
                         fs.shape_str() + ", length " + std::to_string(k));
    int L = xs.rows(), d = xs.cols(), nf = fs.rows();
    if (L < k)
      throw NumericError("conv1d: sequence length " + std::to_string(L) +
                         " shorter than filter length " + std::to_string(k));
    int P = L - k + 1;
    Tensor<T> patches({P, k * d});
    for (int p = 0; p < P; ++p)
      std::copy_n(xs.v.begin() + static_cast<std::int64_t>(p) * d, k * d,
                  patches.v.begin() + static_cast<std::int64_t>(p) * k * d);
    Tensor<T> out({P, nf});
    kern::gemm_bt(patches.data(), fs.data(), out.data(), P, k * d, nf, false);
    return push("conv1d", std::move(out), nullptr,
                [x, f, k, P, d, nf, patches = std::move(patches)](
                    Tape& t, const Tensor<T>& g, Var) {
                  // df += g^T * patches
                  kern::gemm_at(g.data(), patches.data(),
                                t.grads_[static_cast<size_t>(f)].data(), nf, P, k * d, true);
                  // dpatches = g * f, then scatter-add overlapping windows
                  Tensor<T> dp({P, k * d});
                  kern::gemm(g.data(), t.value(f).data(), dp.data(), P, nf, k * d, false);
                  Tensor<T>& dx = t.grads_[static_cast<size_t>(x)];
                  for (int p = 0; p < P; ++p) {
                    const T* src = dp.data() + static_cast<std::int64_t>(p) * k * d;
                    T* dst = dx.data() + static_cast<std::int64_t>(p) * d;
                    for (int j = 0; j < k * d; ++j) dst[j] += src[j];
                  }
                });
  }

  /// Column-wise max over positions: [P,nf] -> [nf]. The gradient routes
  /// entirely to the argmax position (ties toward the earlier position).
  Var maxpool_rows(Var a) {
    const Tensor<T>& x = value(a);
    if (x.rank() != 2 || x.rows() < 1)
      throw NumericError("maxpool_rows: need a nonempty [P,nf] input, got " + x.shape_str());
    int P = x.rows(), nf = x.cols();
    Tensor<T> out({nf});
    std::vector<int> arg(static_cast<size_t>(nf), 0);
    for (int j = 0; j < nf; ++j) {
      T best = x.at(0, j);
      int bp = 0;
      for (int p = 1; p < P; ++p)
        if (x.at(p, j) > best) { best = x.at(p, j); bp = p; }
      out.at(j) = best;
      arg[static_cast<size_t>(j)] = bp;
    }
    return push("maxpool_rows", std::move(out), nullptr,
                [a, nf, arg = std::move(arg)](Tape& t, const Tensor<T>& g, Var) {
                  Tensor<T>& da = t.grads_[static_cast<size_t>(a)];
                  for (int j = 0; j < nf; ++j)
                    da.at(arg[static_cast<size_t>(j)], j) += g.v[static_cast<size_t>(j)];
                });
  }

  // ---- softmax family ----

  /// Row-wise log-softmax. Rank-1 input is treated as a single row.
  Var log_softmax_rows(Var a) {
    const Tensor<T>& x = value(a);
    int R = x.rank() == 1 ? 1 : x.rows();
    int C = x.rank() == 1 ? static_cast<int>(x.numel()) : x.cols();
    if (x.rank() > 2) throw NumericError("log_softmax: rank " + x.shape_str());
    Tensor<T> out = x;
    for (int r = 0; r < R; ++r) {
      T* row = out.data() + static_cast<std::int64_t>(r) * C;
      T lse = row_lse(row, C);
      for (int j = 0; j < C; ++j) row[j] -= lse;
    }
    return push("log_softmax", std::move(out), nullptr,
                [a, R, C](Tape& t, const Tensor<T>& g, Var self) {
                  const Tensor<T>& y = t.value(self);
                  Tensor<T>& da = t.grads_[static_cast<size_t>(a)];
                  for (int r = 0; r < R; ++r) {
                    const T* gr = g.data() + static_cast<std::int64_t>(r) * C;
                    const T* yr = y.data() + static_cast<std::int64_t>(r) * C;
                    T* dr = da.data() + static_cast<std::int64_t>(r) * C;
                    T gsum = 0;
                    for (int j = 0; j < C; ++j) gsum += gr[j];
                    for (int j = 0; j < C; ++j)
                      dr[j] += gr[j] - std::exp(yr[j]) * gsum;
                  }
                });
  }

  /// Softmax cross-entropy of one logit vector against a target id.
  Var xent(Var logits, int target) {
    const Tensor<T>& x = value(logits);
    if (x.rank() != 1 || target < 0 || target >= x.numel())
      throw NumericError("xent: logits " + x.shape_str() + ", target " +
                         std::to_string(target));
    int C = static_cast<int>(x.numel());
    T lse = row_lse(x.data(), C);
    Tensor<T> out = Tensor<T>::scalar(lse - x.at(target));
    return push("xent", std::move(out), nullptr,
                [logits, target, lse, C](Tape& t, const Tensor<T>& g, Var) {
                  const Tensor<T>& x = t.value(logits);
                  Tensor<T>& dx = t.grads_[static_cast<size_t>(logits)];
                  T gv = g.v[0];
                  for (int j = 0; j < C; ++j)
                    dx.v[static_cast<size_t>(j)] += gv * std::exp(x.at(j) - lse);
                  dx.v[static_cast<size_t>(target)] -= gv;
                });
  }

  /// Per-row softmax cross-entropy: logits [R,C], targets (len R) -> [R].
  Var xent_rows(Var logits, std::vector<int> targets) {
    const Tensor<T>& x = value(logits);
    if (x.rank() != 2 || static_cast<int>(targets.size()) != x.rows())
      throw NumericError("xent_rows: logits " + x.shape_str() + ", " +
                         std::to_string(targets.size()) + " targets");
    int R = x.rows(), C = x.cols();
    Tensor<T> out({R});
    std::vector<T> lses(static_cast<size_t>(R));
    for (int r = 0; r < R; ++r) {
      if (targets[static_cast<size_t>(r)] < 0 || targets[static_cast<size_t>(r)] >= C)
        throw NumericError("xent_rows: target out of range in row " + std::to_string(r));
      T lse = row_lse(x.data() + static_cast<std::int64_t>(r) * C, C);
      lses[static_cast<size_t>(r)] = lse;
      out.at(r) = lse - x.at(r, targets[static_cast<size_t>(r)]);
    }
    return push("xent_rows", std::move(out), nullptr,
                [logits, targets = std::move(targets), lses = std::move(lses), R,
                 C](Tape& t, const Tensor<T>& g, Var) {
                  const Tensor<T>& x = t.value(logits);
                  Tensor<T>& dx = t.grads_[static_cast<size_t>(logits)];
                  for (int r = 0; r < R; ++r) {
                    T gv = g.v[static_cast<size_t>(r)];
                    if (gv == T(0)) continue;
                    const T* xr = x.data() + static_cast<std::int64_t>(r) * C;
                    T* dr = dx.data() + static_cast<std::int64_t>(r) * C;
                    T lse = lses[static_cast<size_t>(r)];
                    for (int j = 0; j < C; ++j) dr[j] += gv * std::exp(xr[j] - lse);
                    dr[targets[static_cast<size_t>(r)]] -= gv;
                  }
                });
  }

  // ---- reductions ----

  Var sum_all(Var a) {
    const Tensor<T>& x = value(a);
    T s = 0;
    for (T v : x.v) s += v;
    return push("sum", Tensor<T>::scalar(s), nullptr,
                [a](Tape& t, const Tensor<T>& g, Var) {
                  Tensor<T>& da = t.grads_[static_cast<size_t>(a)];
                  for (T& v : da.v) v += g.v[0];
                });
  }

  Var mean_all(Var a) {
    const Tensor<T>& x = value(a);
    if (x.numel() == 0) throw NumericError("mean: empty tensor");
    T inv = T(1) / static_cast<T>(x.numel());
    T s = 0;
    for (T v : x.v) s += v;
    return push("mean", Tensor<T>::scalar(s * inv), nullptr,
                [a, inv](Tape& t, const Tensor<T>& g, Var) {
                  Tensor<T>& da = t.grads_[static_cast<size_t>(a)];
                  for (T& v : da.v) v += g.v[0] * inv;
                });
  }

  /// Sum of scalar nodes.
  Var sum_scalars(const std::vector<Var>& xs) {
    T s = 0;
    for (Var v : xs) {
      if (value(v).numel() != 1)
        throw NumericError("sum_scalars: non-scalar input " + value(v).shape_str());
      s += value(v).v[0];
    }
    return push("sum_scalars", Tensor<T>::scalar(s), nullptr,
                [xs](Tape& t, const Tensor<T>& g, Var) {
                  for (Var v : xs) t.grads_[static_cast<size_t>(v)].v[0] += g.v[0];
                });
  }

  // ---- fused pair scoring ----

  /// out[i,j] = sum_t v[t] * tanh(a[i,t] + b[j,t]) for a[n,H], b[m,H], v[H].
  /// The head scorer: a carries the dependent projection (bias folded in),
  /// b the head projection. Backward recomputes tanh per pair.
  Var pair_score_tanh(Var a, Var b, Var v) {
    const Tensor<T>& as = value(a);
    const Tensor<T>& bs = value(b);
    const Tensor<T>& vs = value(v);
    if (as.rank() != 2 || bs.rank() != 2 || vs.rank() != 1 ||
        as.cols() != bs.cols() || as.cols() != vs.numel())
      throw NumericError("pair_score: shapes " + as.shape_str() + ", " +
                         bs.shape_str() + ", " + vs.shape_str());
    int n = as.rows(), m = bs.rows(), H = as.cols();
    Tensor<T> out({n, m});
    for (int i = 0; i < n; ++i) {
      const T* ai = as.data() + static_cast<std::int64_t>(i) * H;
      for (int j = 0; j < m; ++j) {
        const T* bj = bs.data() + static_cast<std::int64_t>(j) * H;
        T s = 0;
        for (int t = 0; t < H; ++t) s += vs.at(t) * std::tanh(ai[t] + bj[t]);
        out.at(i, j) = s;
      }
    }
    return push("pair_score", std::move(out), nullptr,
                [a, b, v, n, m, H](Tape& t, const Tensor<T>& g, Var) {
                  const Tensor<T>& as = t.value(a);
                  const Tensor<T>& bs = t.value(b);
                  const Tensor<T>& vs = t.value(v);
                  Tensor<T>& da = t.grads_[static_cast<size_t>(a)];
                  Tensor<T>& db = t.grads_[static_cast<size_t>(b)];
                  Tensor<T>& dv = t.grads_[static_cast<size_t>(v)];
                  for (int i = 0; i < n; ++i) {
                    const T* ai = as.data() + static_cast<std::int64_t>(i) * H;
                    T* dai = da.data() + static_cast<std::int64_t>(i) * H;
                    for (int j = 0; j < m; ++j) {
                      T gv = g.at(i, j);
                      if (gv == T(0)) continue;
                      const T* bj = bs.data() + static_cast<std::int64_t>(j) * H;
                      T* dbj = db.data() + static_cast<std::int64_t>(j) * H;
                      for (int tt = 0; tt < H; ++tt) {
                        T e = std::tanh(ai[tt] + bj[tt]);
                        T common = gv * vs.at(tt) * (T(1) - e * e);
                        dai[tt] += common;
                        dbj[tt] += common;
                        dv.v[static_cast<size_t>(tt)] += gv * e;
                      }
                    }
                  }
                });
  }

  // ---- backward ----

  /// Reverse sweep from a scalar loss. Gradients of parameter leaves are
  /// ACCUMULATED into Parameter::grad (callers zero grads between steps).
  /// Parameters not reachable from the loss receive zero contribution.
  void backward(Var loss, T seed = T(1)) {
    run_backward(loss, seed);
    for (auto& [p, var] : param_vars_) {
      const Tensor<T>& g = grads_[static_cast<size_t>(var)];
      for (size_t i = 0; i < g.v.size(); ++i) p->grad.v[i] += g.v[i];
    }
  }

  /// Like backward(), but accumulates into sink[param->index] instead of
  /// Parameter::grad. Used by parallel training workers.
  void backward_into(Var loss, std::span<Tensor<T>> sink, T seed = T(1)) {
    run_backward(loss, seed);
    for (auto& [p, var] : param_vars_) {
      if (p->index < 0 || p->index >= static_cast<int>(sink.size()))
        throw NumericError("backward: parameter " + p->name + " has no sink slot");
      const Tensor<T>& g = grads_[static_cast<size_t>(var)];
      Tensor<T>& dst = sink[static_cast<size_t>(p->index)];
      for (size_t i = 0; i < g.v.size(); ++i) dst.v[i] += g.v[i];
    }
  }

  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor<T> val;
    std::function<void(Tape&, const Tensor<T>&, Var)> back;
    Parameter<T>* param = nullptr;
    const char* op = "";
  };

  Var push(const char* op, Tensor<T> val, Parameter<T>* p,
           std::function<void(Tape&, const Tensor<T>&, Var)> back) {
    if (check_finite_ && !val.all_finite())
      throw NumericError(std::string("op ") + op + ": non-finite value in output of shape " +
                         val.shape_str());
    Node n;
    n.val = std::move(val);
    n.back = std::move(back);
    n.param = p;
    n.op = op;
    nodes_.push_back(std::move(n));
    return static_cast<Var>(nodes_.size() - 1);
  }

  Var ew2(const char* op, Var a, Var b) {
    const Tensor<T>& x = value(a);
    const Tensor<T>& y = value(b);
    if (!x.same_shape(y))
      throw NumericError(std::string("op ") + op + ": shape mismatch " + x.shape_str() +
                         " vs " + y.shape_str());
    Tensor<T> out = x;
    bool is_add = op[0] == 'a', is_sub = op[0] == 's';
    for (size_t i = 0; i < out.v.size(); ++i)
      out.v[i] = is_add ? x.v[i] + y.v[i] : is_sub ? x.v[i] - y.v[i] : x.v[i] * y.v[i];
    if (is_add || is_sub) {
      T bsign = is_sub ? T(-1) : T(1);
      return push(op, std::move(out), nullptr,
                  [a, b, bsign](Tape& t, const Tensor<T>& g, Var) {
                    Tensor<T>& da = t.grads_[static_cast<size_t>(a)];
                    Tensor<T>& db = t.grads_[static_cast<size_t>(b)];
                    for (size_t i = 0; i < g.v.size(); ++i) {
                      da.v[i] += g.v[i];
                      db.v[i] += bsign * g.v[i];
                    }
                  });
    }
    return push(op, std::move(out), nullptr,
                [a, b](Tape& t, const Tensor<T>& g, Var) {
                  const Tensor<T>& x = t.value(a);
                  const Tensor<T>& y = t.value(b);
                  Tensor<T>& da = t.grads_[static_cast<size_t>(a)];
                  Tensor<T>& db = t.grads_[static_cast<size_t>(b)];
                  for (size_t i = 0; i < g.v.size(); ++i) {
                    da.v[i] += g.v[i] * y.v[i];
                    db.v[i] += g.v[i] * x.v[i];
                  }
                });
  }

  Var affine_impl(const char* op, Var x, Var w, Var b) {
    const Tensor<T>& xs = value(x);
    const Tensor<T>& ws = value(w);
    if (ws.rank() != 2)
      throw NumericError(std::string("op ") + op + ": weight must be rank 2, got " +
                         ws.shape_str());
    int m = ws.rows(), k = ws.cols();
    if (b >= 0) {
      const Tensor<T>& bsr = value(b);
      if (bsr.rank() != 1 || bsr.numel() != m)
        throw NumericError(std::string("op ") + op + ": bias " + bsr.shape_str() +
                           " does not match weight " + ws.shape_str());
    }
    if (xs.rank() == 1) {
      if (xs.numel() != k)
        throw NumericError(std::string("op ") + op + ": shape mismatch " + ws.shape_str() +
                           " x " + xs.shape_str());
      Tensor<T> out({m});
      kern::gemv(ws.data(), xs.data(), out.data(), m, k, false);
      if (b >= 0)
        for (int i = 0; i < m; ++i) out.at(i) += value(b).at(i);
      return push(op, std::move(out), nullptr,
                  [x, w, b, m, k](Tape& t, const Tensor<T>& g, Var) {
                    kern::gemv_t(t.value(w).data(), g.data(),
                                 t.grads_[static_cast<size_t>(x)].data(), m, k, true);
                    kern::ger(g.data(), t.value(x).data(),
                              t.grads_[static_cast<size_t>(w)].data(), m, k);
                    if (b >= 0) {
                      Tensor<T>& db = t.grads_[static_cast<size_t>(b)];
                      for (int i = 0; i < m; ++i) db.v[static_cast<size_t>(i)] += g.at(i);
                    }
                  });
    }
    if (xs.rank() == 2) {
      if (xs.cols() != k)
        throw NumericError(std::string("op ") + op + ": shape mismatch " + xs.shape_str() +
                           " x " + ws.shape_str() + "^T");
      int L = xs.rows();
      Tensor<T> out({L, m});
      kern::gemm_bt(xs.data(), ws.data(), out.data(), L, k, m, false);
      if (b >= 0) {
        const Tensor<T>& bs = value(b);
        for (int r = 0; r < L; ++r)
          for (int i = 0; i < m; ++i) out.at(r, i) += bs.at(i);
      }
      return push(op, std::move(out), nullptr,
                  [x, w, b, m, k, L](Tape& t, const Tensor<T>& g, Var) {
                    kern::gemm(g.data(), t.value(w).data(),
                               t.grads_[static_cast<size_t>(x)].data(), L, m, k, true);
                    kern::gemm_at(g.data(), t.value(x).data(),
                                  t.grads_[static_cast<size_t>(w)].data(), m, L, k, true);
                    if (b >= 0) {
                      Tensor<T>& db = t.grads_[static_cast<size_t>(b)];
                      for (int r = 0; r < L; ++r)
                        for (int i = 0; i < m; ++i) db.v[static_cast<size_t>(i)] += g.at(r, i);
                    }
                  });
    }
    throw NumericError(std::string("op ") + op + ": input must be rank 1 or 2, got " +
                       xs.shape_str());
  }

  static T row_lse(const T* row, int C) {
    T mx = row[0];
    for (int j = 1; j < C; ++j)
      if (row[j] > mx) mx = row[j];
    T s = 0;
    for (int j = 0; j < C; ++j) s += std::exp(row[j] - mx);
    return mx + std::log(s);
  }

  void run_backward(Var loss, T seed) {
    if (loss < 0 || static_cast<size_t>(loss) >= nodes_.size())
      throw NumericError("backward: bad loss var");
    if (nodes_[static_cast<size_t>(loss)].val.numel() != 1)
      throw NumericError("backward: loss must be scalar, got shape " +
                         nodes_[static_cast<size_t>(loss)].val.shape_str());
    grads_.clear();
    grads_.reserve(nodes_.size());
    for (const Node& n : nodes_) grads_.emplace_back(n.val.shape);
    grads_[static_cast<size_t>(loss)].v[0] = seed;
    for (Var i = static_cast<Var>(nodes_.size()) - 1; i >= 0; --i) {
      Node& n = nodes_[static_cast<size_t>(i)];
      if (!n.back) continue;
      const Tensor<T>& g = grads_[static_cast<size_t>(i)];
      n.back(*this, g, i);
    }
    if (check_finite_) {
      for (auto& [p, var] : param_vars_)
        if (!grads_[static_cast<size_t>(var)].all_finite())
          throw NumericError("backward: non-finite gradient for parameter " + p->name);
    }
  }

  bool train_;
  Rng rng_;
  bool check_finite_;
  std::vector<Node> nodes_;
  std::vector<Tensor<T>> grads_;
  std::unordered_map<Parameter<T>*, Var> param_vars_;
};

}  // namespace charparse::num
