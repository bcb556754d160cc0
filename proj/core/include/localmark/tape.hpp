// Copyright 2026 The Localmark Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#if __has_include(<malloc.h>)
#include <malloc.h>
#endif

#include <Eigen/Core>

#include "localmark/errors.hpp"

namespace localmark::ad {

// Tape programs cycle megabyte-sized activation buffers thousands of times
// per step; glibc serves >=128 KiB allocations via mmap by default, which
// re-faults every page on each cycle. Keep them on the heap instead.
inline void tune_allocator_once() {
#if defined(M_MMAP_THRESHOLD) && defined(M_TRIM_THRESHOLD)
  static const bool done = [] {
    mallopt(M_MMAP_THRESHOLD, 256 * 1024 * 1024);
    mallopt(M_TRIM_THRESHOLD, 256 * 1024 * 1024);
    return true;
  }();
  (void)done;
#endif
}

// Dense row-major matrix. Audio is (1, T); feature maps are (channels, T).
template <typename S>
struct Tensor {
  int rows = 0;
  int64_t cols = 0;
  std::vector<S> v;

  Tensor() = default;
  Tensor(int r, int64_t c) : rows(r), cols(c), v(static_cast<size_t>(r) * c, S(0)) {}

  static Tensor zeros(int r, int64_t c) { return Tensor(r, c); }
  static Tensor scalar(S x) {
    Tensor t(1, 1);
    t.v[0] = x;
    return t;
  }
  static Tensor row(std::vector<S> data) {
    Tensor t;
    t.rows = 1;
    t.cols = static_cast<int64_t>(data.size());
    t.v = std::move(data);
    return t;
  }

  int64_t size() const { return static_cast<int64_t>(v.size()); }
  bool empty() const { return v.empty(); }
  S& operator()(int r, int64_t c) { return v[static_cast<size_t>(r) * cols + c]; }
  const S& operator()(int r, int64_t c) const { return v[static_cast<size_t>(r) * cols + c]; }
  bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }
};

template <typename S>
Eigen::Map<Eigen::Array<S, Eigen::Dynamic, 1>> array_map(Tensor<S>& t) {
  return {t.v.data(), static_cast<Eigen::Index>(t.v.size())};
}

template <typename S>
Eigen::Map<const Eigen::Array<S, Eigen::Dynamic, 1>> const_map(const Tensor<S>& t) {
  return {t.v.data(), static_cast<Eigen::Index>(t.v.size())};
}

// Reverse-mode tape. Building an op records a backward closure; backward()
// sweeps the nodes in reverse creation order, which is a valid topological
// order by construction.
template <typename S>
class Tape {
 public:
  using Id = int32_t;

  Tape() { tune_allocator_once(); }

  Id leaf(Tensor<S> value, bool requires_grad = false) {
    return push(std::move(value), requires_grad, nullptr);
  }

  Id constant(Tensor<S> value) { return leaf(std::move(value), false); }

  const Tensor<S>& val(Id id) const { return nodes_[id].value; }

  // Zero-sized tensor if the node was never reached by backward.
  const Tensor<S>& grad(Id id) const { return nodes_[id].grad; }

  bool requires_grad(Id id) const { return nodes_[id].requires_grad; }

  size_t node_count() const { return nodes_.size(); }

  void accumulate(Id id, const Tensor<S>& g) {
    Node& n = nodes_[id];
    if (!n.requires_grad) return;
    if (n.grad.empty()) n.grad = Tensor<S>::zeros(n.value.rows, n.value.cols);
    for (int64_t i = 0; i < g.size(); ++i) n.grad.v[i] += g.v[i];
  }

  // Adds a (1, len) gradient into one row range without materializing a
  // full-size buffer; out-of-range columns are dropped.
  void accumulate_window(Id id, int row, int64_t c0, const Tensor<S>& g) {
    Node& n = nodes_[id];
    if (!n.requires_grad) return;
    if (n.grad.empty()) n.grad = Tensor<S>::zeros(n.value.rows, n.value.cols);
    for (int64_t i = 0; i < g.size(); ++i) {
      const int64_t c = c0 + i;
      if (c >= 0 && c < n.grad.cols) n.grad(row, c) += g.v[i];
    }
  }

  // Backward from a scalar node with seed 1.
  void backward(Id root) {
    if (val(root).size() != 1) throw ValidationError("backward root must be scalar");
    backward_seeded({{root, Tensor<S>::scalar(S(1))}});
  }

  // Backward with explicit seed gradients, possibly on interior nodes.
  void backward_seeded(const std::vector<std::pair<Id, Tensor<S>>>& seeds) {
    Id top = 0;
    for (const auto& [id, g] : seeds) {
      if (!val(id).same_shape(g)) throw ValidationError("seed gradient shape mismatch");
      Node& n = nodes_[id];
      if (n.grad.empty()) n.grad = Tensor<S>::zeros(n.value.rows, n.value.cols);
      for (int64_t i = 0; i < g.size(); ++i) n.grad.v[i] += g.v[i];
      top = std::max(top, id);
    }
    for (Id i = top; i >= 0; --i) {
      Node& n = nodes_[i];
      if (!n.grad.empty() && n.back) n.back(*this);
    }
  }

  void zero_grads() {
    for (Node& n : nodes_) n.grad = Tensor<S>();
  }

  // ---- elementwise -------------------------------------------------------

  Id add(Id a, Id b) {
    check_same(a, b);
    Tensor<S> out = val(a);
    for (int64_t i = 0; i < out.size(); ++i) out.v[i] += val(b).v[i];
    return push(std::move(out), requires_grad(a) || requires_grad(b),
                [a, b](Tape& t, Id self) {
                  t.accumulate(a, t.grad(self));
                  t.accumulate(b, t.grad(self));
                });
  }

  Id sub(Id a, Id b) {
    check_same(a, b);
    Tensor<S> out = val(a);
    for (int64_t i = 0; i < out.size(); ++i) out.v[i] -= val(b).v[i];
    return push(std::move(out), requires_grad(a) || requires_grad(b),
                [a, b](Tape& t, Id self) {
                  t.accumulate(a, t.grad(self));
                  if (!t.requires_grad(b)) return;
                  Tensor<S> g = t.grad(self);
                  for (auto& x : g.v) x = -x;
                  t.accumulate(b, g);
                });
  }

  Id mul(Id a, Id b) {
    check_same(a, b);
    Tensor<S> out = val(a);
    for (int64_t i = 0; i < out.size(); ++i) out.v[i] *= val(b).v[i];
    return push(std::move(out), requires_grad(a) || requires_grad(b),
                [a, b](Tape& t, Id self) {
                  const Tensor<S>& g = t.grad(self);
                  if (t.requires_grad(a)) {
                    Tensor<S> ga = g;
                    for (int64_t i = 0; i < ga.size(); ++i) ga.v[i] *= t.val(b).v[i];
                    t.accumulate(a, ga);
                  }
                  if (t.requires_grad(b)) {
                    Tensor<S> gb = g;
                    for (int64_t i = 0; i < gb.size(); ++i) gb.v[i] *= t.val(a).v[i];
                    t.accumulate(b, gb);
                  }
                });
  }

  Id scale(Id a, double s) {
    Tensor<S> out = val(a);
    for (auto& x : out.v) x = static_cast<S>(x * s);
    return push(std::move(out), requires_grad(a), [a, s](Tape& t, Id self) {
      Tensor<S> g = t.grad(self);
      for (auto& x : g.v) x = static_cast<S>(x * s);
      t.accumulate(a, g);
    });
  }

  Id add_scalar(Id a, double c) {
    Tensor<S> out = val(a);
    for (auto& x : out.v) x = static_cast<S>(x + c);
    return push(std::move(out), requires_grad(a),
                [a](Tape& t, Id self) { t.accumulate(a, t.grad(self)); });
  }

  // y = a + weight * (constant tensor); the constant does not join the graph.
  Id add_const(Id a, const Tensor<S>& c, double weight = 1.0) {
    check_shape(a, c);
    Tensor<S> out = val(a);
    for (int64_t i = 0; i < out.size(); ++i) out.v[i] += static_cast<S>(weight * c.v[i]);
    return push(std::move(out), requires_grad(a),
                [a](Tape& t, Id self) { t.accumulate(a, t.grad(self)); });
  }

  Id mul_const(Id a, const Tensor<S>& c) {
    check_shape(a, c);
    Tensor<S> out = val(a);
    for (int64_t i = 0; i < out.size(); ++i) out.v[i] *= c.v[i];
    auto cc = c;
    return push(std::move(out), requires_grad(a), [a, cc](Tape& t, Id self) {
      Tensor<S> g = t.grad(self);
      for (int64_t i = 0; i < g.size(); ++i) g.v[i] *= cc.v[i];
      t.accumulate(a, g);
    });
  }

  Id tanh_(Id a) {
    Tensor<S> out = val(a);
    array_map(out) = array_map(out).tanh();
    return push(std::move(out), requires_grad(a), [a](Tape& t, Id self) {
      Tensor<S> g = t.grad(self);
      const Tensor<S>& y = t.val(self);
      array_map(g) *= (S(1) - const_map(y).square());
      t.accumulate(a, g);
    });
  }

  Id sigmoid_(Id a) {
    Tensor<S> out = val(a);
    array_map(out) = S(1) / (S(1) + (-array_map(out)).exp());
    return push(std::move(out), requires_grad(a), [a](Tape& t, Id self) {
      Tensor<S> g = t.grad(self);
      const Tensor<S>& y = t.val(self);
      array_map(g) *= const_map(y) * (S(1) - const_map(y));
      t.accumulate(a, g);
    });
  }

  Id elu(Id a) {
    Tensor<S> out = val(a);
    array_map(out) =
        (array_map(out) > S(0)).select(array_map(out), array_map(out).exp() - S(1));
    return push(std::move(out), requires_grad(a), [a](Tape& t, Id self) {
      Tensor<S> g = t.grad(self);
      const Tensor<S>& x = t.val(a);
      const Tensor<S>& y = t.val(self);
      array_map(g) *= (const_map(x) > S(0))
                          .select(Eigen::Array<S, Eigen::Dynamic, 1>::Ones(g.size()),
                                  const_map(y) + S(1));
      t.accumulate(a, g);
    });
  }

  Id relu(Id a) {
    Tensor<S> out = val(a);
    for (auto& x : out.v) x = x > S(0) ? x : S(0);
    return push(std::move(out), requires_grad(a), [a](Tape& t, Id self) {
      Tensor<S> g = t.grad(self);
      const Tensor<S>& x = t.val(a);
      for (int64_t i = 0; i < g.size(); ++i) {
        if (x.v[i] <= S(0)) g.v[i] = S(0);
      }
      t.accumulate(a, g);
    });
  }

  Id leaky_relu(Id a, double slope) {
    Tensor<S> out = val(a);
    for (auto& x : out.v) x = x > S(0) ? x : static_cast<S>(slope * x);
    return push(std::move(out), requires_grad(a), [a, slope](Tape& t, Id self) {
      Tensor<S> g = t.grad(self);
      const Tensor<S>& x = t.val(a);
      for (int64_t i = 0; i < g.size(); ++i) {
        if (x.v[i] <= S(0)) g.v[i] = static_cast<S>(g.v[i] * slope);
      }
      t.accumulate(a, g);
    });
  }

  Id square(Id a) {
    Tensor<S> out = val(a);
    for (auto& x : out.v) x = x * x;
    return push(std::move(out), requires_grad(a), [a](Tape& t, Id self) {
      Tensor<S> g = t.grad(self);
      const Tensor<S>& x = t.val(a);
      for (int64_t i = 0; i < g.size(); ++i) g.v[i] *= S(2) * x.v[i];
      t.accumulate(a, g);
    });
  }

  Id abs_(Id a) {
    Tensor<S> out = val(a);
    for (auto& x : out.v) x = std::abs(x);
    return push(std::move(out), requires_grad(a), [a](Tape& t, Id self) {
      Tensor<S> g = t.grad(self);
      const Tensor<S>& x = t.val(a);
      for (int64_t i = 0; i < g.size(); ++i) {
        g.v[i] *= x.v[i] > S(0) ? S(1) : (x.v[i] < S(0) ? S(-1) : S(0));
      }
      t.accumulate(a, g);
    });
  }

  // ln(x + floor_offset)
  Id log_floor(Id a, double floor_offset) {
    Tensor<S> out = val(a);
    for (auto& x : out.v) x = std::log(x + static_cast<S>(floor_offset));
    return push(std::move(out), requires_grad(a), [a, floor_offset](Tape& t, Id self) {
      Tensor<S> g = t.grad(self);
      const Tensor<S>& x = t.val(a);
      for (int64_t i = 0; i < g.size(); ++i) {
        g.v[i] /= x.v[i] + static_cast<S>(floor_offset);
      }
      t.accumulate(a, g);
    });
  }

  // ---- reductions and reshuffles ----------------------------------------

  Id sum_all(Id a) {
    S acc = 0;
    for (S x : val(a).v) acc += x;
    return push(Tensor<S>::scalar(acc), requires_grad(a), [a](Tape& t, Id self) {
      const S g = t.grad(self).v[0];
      Tensor<S> ga(t.val(a).rows, t.val(a).cols);
      for (auto& x : ga.v) x = g;
      t.accumulate(a, ga);
    });
  }

  Id mean_all(Id a) {
    const double inv = 1.0 / static_cast<double>(val(a).size());
    return scale(sum_all(a), inv);
  }

  Id slice_rows(Id a, int r0, int nr) {
    const Tensor<S>& x = val(a);
    if (r0 < 0 || r0 + nr > x.rows) throw ValidationError("slice_rows out of range");
    Tensor<S> out(nr, x.cols);
    for (int r = 0; r < nr; ++r) {
      for (int64_t c = 0; c < x.cols; ++c) out(r, c) = x(r0 + r, c);
    }
    return push(std::move(out), requires_grad(a), [a, r0, nr](Tape& t, Id self) {
      const Tensor<S>& g = t.grad(self);
      Tensor<S> ga(t.val(a).rows, t.val(a).cols);
      for (int r = 0; r < nr; ++r) {
        for (int64_t c = 0; c < g.cols; ++c) ga(r0 + r, c) = g(r, c);
      }
      t.accumulate(a, ga);
    });
  }

  // One row window [c0, c0+len), zero-padded outside the tensor.
  Id row_window(Id a, int row, int64_t c0, int64_t len) {
    const Tensor<S>& x = val(a);
    if (row < 0 || row >= x.rows) throw ValidationError("row_window: bad row");
    Tensor<S> out(1, len);
    for (int64_t i = 0; i < len; ++i) {
      const int64_t c = c0 + i;
      if (c >= 0 && c < x.cols) out.v[i] = x(row, c);
    }
    return push(std::move(out), requires_grad(a), [a, row, c0](Tape& t, Id self) {
      t.accumulate_window(a, row, c0, t.grad(self));
    });
  }

  // Collects 1x1 nodes into a (rows, cols) matrix, row-major order.
  Id assemble_scalars(int rows, int64_t cols, const std::vector<Id>& cells) {
    if (static_cast<int64_t>(cells.size()) != static_cast<int64_t>(rows) * cols) {
      throw ValidationError("assemble_scalars: cell count mismatch");
    }
    Tensor<S> out(rows, cols);
    bool needs = false;
    for (size_t i = 0; i < cells.size(); ++i) {
      out.v[i] = val(cells[i]).v[0];
      needs = needs || requires_grad(cells[i]);
    }
    auto ids = cells;
    return push(std::move(out), needs, [ids](Tape& t, Id self) {
      const Tensor<S>& g = t.grad(self);
      for (size_t i = 0; i < ids.size(); ++i) {
        t.accumulate(ids[i], Tensor<S>::scalar(g.v[i]));
      }
    });
  }

  // Softmax over all entries jointly.
  Id softmax_all(Id a) {
    const Tensor<S>& x = val(a);
    Tensor<S> out = x;
    S mx = x.v[0];
    for (S v : x.v) mx = std::max(mx, v);
    double z = 0.0;
    for (auto& v : out.v) {
      v = std::exp(v - mx);
      z += v;
    }
    for (auto& v : out.v) v = static_cast<S>(v / z);
    return push(std::move(out), requires_grad(a), [a](Tape& t, Id self) {
      const Tensor<S>& y = t.val(self);
      const Tensor<S>& g = t.grad(self);
      double dot = 0.0;
      for (int64_t i = 0; i < g.size(); ++i) dot += static_cast<double>(g.v[i]) * y.v[i];
      Tensor<S> ga = g;
      for (int64_t i = 0; i < ga.size(); ++i) {
        ga.v[i] = static_cast<S>(y.v[i] * (g.v[i] - dot));
      }
      t.accumulate(a, ga);
    });
  }

  // Column-wise softmax over rows (used for the 2-channel presence head).
  Id softmax_dim0(Id a) {
    const Tensor<S>& x = val(a);
    Tensor<S> out(x.rows, x.cols);
    for (int64_t c = 0; c < x.cols; ++c) {
      S mx = x(0, c);
      for (int r = 1; r < x.rows; ++r) mx = std::max(mx, x(r, c));
      double z = 0.0;
      for (int r = 0; r < x.rows; ++r) {
        out(r, c) = std::exp(x(r, c) - mx);
        z += out(r, c);
      }
      for (int r = 0; r < x.rows; ++r) out(r, c) = static_cast<S>(out(r, c) / z);
    }
    return push(std::move(out), requires_grad(a), [a](Tape& t, Id self) {
      const Tensor<S>& y = t.val(self);
      const Tensor<S>& g = t.grad(self);
      Tensor<S> ga(y.rows, y.cols);
      for (int64_t c = 0; c < y.cols; ++c) {
        double dot = 0.0;
        for (int r = 0; r < y.rows; ++r) dot += static_cast<double>(g(r, c)) * y(r, c);
        for (int r = 0; r < y.rows; ++r) {
          ga(r, c) = static_cast<S>(y(r, c) * (g(r, c) - dot));
        }
      }
      t.accumulate(a, ga);
    });
  }

  // y = a * s where s is a (1, 1) node (learnable gain).
  Id mul_by_scalar_node(Id a, Id s) {
    if (val(s).size() != 1) throw ValidationError("mul_by_scalar_node: scalar expected");
    const S sv = val(s).v[0];
    Tensor<S> out = val(a);
    for (auto& x : out.v) x *= sv;
    return push(std::move(out), requires_grad(a) || requires_grad(s),
                [a, s](Tape& t, Id self) {
                  const Tensor<S>& g = t.grad(self);
                  if (t.requires_grad(a)) {
                    Tensor<S> ga = g;
                    const S sv = t.val(s).v[0];
                    for (auto& x : ga.v) x *= sv;
                    t.accumulate(a, ga);
                  }
                  if (t.requires_grad(s)) {
                    double acc = 0.0;
                    const Tensor<S>& av = t.val(a);
                    for (int64_t i = 0; i < g.size(); ++i) {
                      acc += static_cast<double>(g.v[i]) * av.v[i];
                    }
                    t.accumulate(s, Tensor<S>::scalar(static_cast<S>(acc)));
                  }
                });
  }

  // Keeps all rows, columns [c0, c0+len).
  Id slice_cols(Id a, int64_t c0, int64_t len) {
    const Tensor<S>& x = val(a);
    if (c0 < 0 || c0 + len > x.cols) throw ValidationError("slice_cols out of range");
    Tensor<S> out(x.rows, len);
    for (int r = 0; r < x.rows; ++r) {
      for (int64_t c = 0; c < len; ++c) out(r, c) = x(r, c0 + c);
    }
    return push(std::move(out), requires_grad(a), [a, c0, len](Tape& t, Id self) {
      const Tensor<S>& g = t.grad(self);
      Tensor<S> ga(t.val(a).rows, t.val(a).cols);
      for (int r = 0; r < g.rows; ++r) {
        for (int64_t c = 0; c < len; ++c) ga(r, c0 + c) += g(r, c);
      }
      t.accumulate(a, ga);
    });
  }

  // y[r, c] = a[r, c] + v[r, 0]
  Id add_row_broadcast(Id a, Id v) {
    const Tensor<S>& x = val(a);
    const Tensor<S>& b = val(v);
    if (b.cols != 1 || b.rows != x.rows) throw ValidationError("add_row_broadcast shape");
    Tensor<S> out = x;
    for (int r = 0; r < x.rows; ++r) {
      for (int64_t c = 0; c < x.cols; ++c) out(r, c) += b(r, 0);
    }
    return push(std::move(out), requires_grad(a) || requires_grad(v),
                [a, v](Tape& t, Id self) {
                  const Tensor<S>& g = t.grad(self);
                  t.accumulate(a, g);
                  if (!t.requires_grad(v)) return;
                  Tensor<S> gv(g.rows, 1);
                  for (int r = 0; r < g.rows; ++r) {
                    double acc = 0.0;
                    for (int64_t c = 0; c < g.cols; ++c) acc += g(r, c);
                    gv(r, 0) = static_cast<S>(acc);
                  }
                  t.accumulate(v, gv);
                });
  }

  // ---- fused losses ------------------------------------------------------

  // Mean binary cross-entropy between probabilities and {0,1} labels, with
  // probabilities clamped to [eps, 1-eps] before the logs.
  Id bce_mean(Id probs, const Tensor<S>& labels, double eps) {
    check_shape(probs, labels);
    const Tensor<S>& p = val(probs);
    const int64_t n = p.size();
    double acc = 0.0;
    for (int64_t i = 0; i < n; ++i) {
      const double pc = std::min(std::max(static_cast<double>(p.v[i]), eps), 1.0 - eps);
      const double y = labels.v[i];
      acc += -(y * std::log(pc) + (1.0 - y) * std::log(1.0 - pc));
    }
    auto lab = labels;
    return push(Tensor<S>::scalar(static_cast<S>(acc / n)), requires_grad(probs),
                [probs, lab, eps, n](Tape& t, Id self) {
                  const double g = t.grad(self).v[0];
                  const Tensor<S>& p = t.val(probs);
                  Tensor<S> gp(p.rows, p.cols);
                  for (int64_t i = 0; i < n; ++i) {
                    const double pv = p.v[i];
                    if (pv <= eps || pv >= 1.0 - eps) continue;  // clamped: flat
                    const double y = lab.v[i];
                    gp.v[i] = static_cast<S>(g * (pv - y) / (pv * (1.0 - pv) * n));
                  }
                  t.accumulate(probs, gp);
                });
  }

  // Mean over {columns where mask=1} x rows of BCE(sigmoid(logit), bit[row]).
  // Returns 0 when the mask is empty.
  Id masked_bce_logits(Id logits, const std::vector<int>& bits, const std::vector<uint8_t>& mask) {
    const Tensor<S>& l = val(logits);
    if (static_cast<int>(bits.size()) != l.rows) throw ValidationError("bit count mismatch");
    if (static_cast<int64_t>(mask.size()) != l.cols) throw ValidationError("mask length mismatch");
    int64_t active = 0;
    for (uint8_t m : mask) active += m ? 1 : 0;
    const int64_t count = active * l.rows;
    double acc = 0.0;
    if (count > 0) {
      for (int r = 0; r < l.rows; ++r) {
        const double y = bits[r];
        for (int64_t c = 0; c < l.cols; ++c) {
          if (!mask[c]) continue;
          const double z = l(r, c);
          // log(1 + e^z) computed stably.
          const double softplus = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
          acc += softplus - y * z;
        }
      }
      acc /= count;
    }
    auto b = bits;
    auto m = mask;
    return push(Tensor<S>::scalar(static_cast<S>(acc)), requires_grad(logits) && count > 0,
                [logits, b, m, count](Tape& t, Id self) {
                  if (count == 0) return;
                  const double g = t.grad(self).v[0];
                  const Tensor<S>& l = t.val(logits);
                  Tensor<S> gl(l.rows, l.cols);
                  for (int r = 0; r < l.rows; ++r) {
                    for (int64_t c = 0; c < l.cols; ++c) {
                      if (!m[c]) continue;
                      const double s = 1.0 / (1.0 + std::exp(-static_cast<double>(l(r, c))));
                      gl(r, c) = static_cast<S>(g * (s - b[r]) / count);
                    }
                  }
                  t.accumulate(logits, gl);
                });
  }

 private:
  struct Node {
    Tensor<S> value;
    Tensor<S> grad;
    std::function<void(Tape&)> back;
    bool requires_grad = false;
  };

  std::vector<Node> nodes_;

  template <typename F>
  Id push(Tensor<S> value, bool requires_grad, F&& back_fn) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    const Id id = static_cast<Id>(nodes_.size());
    if constexpr (!std::is_same_v<std::decay_t<F>, std::nullptr_t>) {
      if (requires_grad) {
        n.back = [fn = std::forward<F>(back_fn), id](Tape& t) { fn(t, id); };
      }
    }
    nodes_.push_back(std::move(n));
    return id;
  }

  Id push(Tensor<S> value, bool requires_grad, std::nullptr_t) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    nodes_.push_back(std::move(n));
    return static_cast<Id>(nodes_.size()) - 1;
  }

  void check_same(Id a, Id b) const {
    if (!val(a).same_shape(val(b))) throw ValidationError("tensor shape mismatch");
  }
  void check_shape(Id a, const Tensor<S>& c) const {
    if (!val(a).same_shape(c)) throw ValidationError("tensor shape mismatch");
  }

 public:
  // Exposed for ops defined outside the class (DSP and NN kernels).
  template <typename F>
  Id make_node(Tensor<S> value, bool requires_grad, F&& back_fn) {
    return push(std::move(value), requires_grad, std::forward<F>(back_fn));
  }
};

}  // namespace localmark::ad
