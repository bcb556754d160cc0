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

#include <memory>

#include <Eigen/Dense>

#include "localmark/tape.hpp"

namespace localmark::ad {

using FTape = Tape<float>;
using FTensor = Tensor<float>;
using MatMap = Eigen::Map<Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstMatMap =
    Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

namespace detail {

inline void im2col(const FTensor& x, int k, int stride, int64_t pad_l, int64_t t_out,
                   FTensor& col) {
  const int cin = x.rows;
  const int64_t t_in = x.cols;
  for (int ci = 0; ci < cin; ++ci) {
    for (int kk = 0; kk < k; ++kk) {
      float* dst = &col(ci * k + kk, 0);
      for (int64_t t = 0; t < t_out; ++t) {
        const int64_t src = t * stride + kk - pad_l;
        dst[t] = (src >= 0 && src < t_in) ? x(ci, src) : 0.0f;
      }
    }
  }
}

inline void col2im_add(const FTensor& col, int k, int stride, int64_t pad_l, int64_t t_in,
                       FTensor& x) {
  const int cin = x.rows;
  const int64_t t_out = col.cols;
  for (int ci = 0; ci < cin; ++ci) {
    for (int kk = 0; kk < k; ++kk) {
      const float* src = &col(ci * k + kk, 0);
      for (int64_t t = 0; t < t_out; ++t) {
        const int64_t dst = t * stride + kk - pad_l;
        if (dst >= 0 && dst < t_in) x(ci, dst) += src[t];
      }
    }
  }
}

}  // namespace detail

// 1-D convolution. x: (Cin, T); w: (Cout, Cin*K); b: (Cout, 1).
// Output length is (T + pad_l + pad_r - K) / stride + 1 (must divide evenly).
inline FTape::Id conv1d(FTape& t, FTape::Id x, FTape::Id w, FTape::Id b, int k, int stride,
                        int64_t pad_l, int64_t pad_r) {
  const FTensor& xin = t.val(x);
  const FTensor& wv = t.val(w);
  const FTensor& bv = t.val(b);
  const int cin = xin.rows;
  const int cout = wv.rows;
  if (wv.cols != static_cast<int64_t>(cin) * k) throw ValidationError("conv1d: weight shape");
  if (bv.rows != cout || bv.cols != 1) throw ValidationError("conv1d: bias shape");
  const int64_t span = xin.cols + pad_l + pad_r - k;
  if (span < 0 || span % stride != 0) throw ValidationError("conv1d: length/stride mismatch");
  const int64_t t_out = span / stride + 1;

  FTensor col(cin * k, t_out);
  detail::im2col(xin, k, stride, pad_l, t_out, col);
  FTensor out(cout, t_out);
  {
    ConstMatMap wm(wv.v.data(), cout, wv.cols);
    ConstMatMap cm(col.v.data(), col.rows, col.cols);
    MatMap om(out.v.data(), cout, t_out);
    om.noalias() = wm * cm;
  }
  for (int co = 0; co < cout; ++co) {
    const float bias = bv(co, 0);
    for (int64_t i = 0; i < t_out; ++i) out(co, i) += bias;
  }

  const bool needs = t.requires_grad(x) || t.requires_grad(w) || t.requires_grad(b);
  return t.make_node(std::move(out), needs,
                     [x, w, b, k, stride, pad_l, t_out](FTape& tp, FTape::Id self) {
                       const FTensor& g = tp.grad(self);
                       const FTensor& xin = tp.val(x);
                       const FTensor& wv = tp.val(w);
                       const int cin = xin.rows;
                       const int cout = wv.rows;

                       if (tp.requires_grad(b)) {
                         FTensor gb(cout, 1);
                         for (int co = 0; co < cout; ++co) {
                           double acc = 0.0;
                           for (int64_t i = 0; i < t_out; ++i) acc += g(co, i);
                           gb(co, 0) = static_cast<float>(acc);
                         }
                         tp.accumulate(b, gb);
                       }
                       if (tp.requires_grad(w)) {
                         FTensor col(cin * k, t_out);
                         detail::im2col(xin, k, stride, pad_l, t_out, col);
                         FTensor gw(cout, static_cast<int64_t>(cin) * k);
                         ConstMatMap gm(g.v.data(), cout, t_out);
                         ConstMatMap cm(col.v.data(), col.rows, col.cols);
                         MatMap gwm(gw.v.data(), cout, gw.cols);
                         gwm.noalias() = gm * cm.transpose();
                         tp.accumulate(w, gw);
                       }
                       if (tp.requires_grad(x)) {
                         FTensor gcol(cin * k, t_out);
                         ConstMatMap wm(wv.v.data(), cout, wv.cols);
                         ConstMatMap gm(g.v.data(), cout, t_out);
                         MatMap gc(gcol.v.data(), gcol.rows, gcol.cols);
                         gc.noalias() = wm.transpose() * gm;
                         FTensor gx(cin, xin.cols);
                         detail::col2im_add(gcol, k, stride, pad_l, xin.cols, gx);
                         tp.accumulate(x, gx);
                       }
                     });
}

// Transposed 1-D convolution. x: (Cin, Tn); w: (Cout*K, Cin); b: (Cout, 1).
// The full output of length (Tn-1)*stride + K is trimmed to
// [trim_l, trim_l + out_len).
inline FTape::Id conv_transpose1d(FTape& t, FTape::Id x, FTape::Id w, FTape::Id b, int cout,
                                  int k, int stride, int64_t trim_l, int64_t out_len) {
  const FTensor& xin = t.val(x);
  const FTensor& wv = t.val(w);
  const FTensor& bv = t.val(b);
  const int cin = xin.rows;
  const int64_t tn = xin.cols;
  if (wv.rows != static_cast<int64_t>(cout) * k || wv.cols != cin) {
    throw ValidationError("conv_transpose1d: weight shape");
  }
  if (bv.rows != cout || bv.cols != 1) throw ValidationError("conv_transpose1d: bias shape");
  const int64_t full_len = (tn - 1) * stride + k;
  if (trim_l < 0 || trim_l + out_len > full_len) {
    throw ValidationError("conv_transpose1d: trim out of range");
  }

  FTensor cols(cout * k, tn);
  {
    ConstMatMap wm(wv.v.data(), wv.rows, cin);
    ConstMatMap xm(xin.v.data(), cin, tn);
    MatMap cm(cols.v.data(), cols.rows, tn);
    cm.noalias() = wm * xm;
  }
  FTensor out(cout, out_len);
  for (int co = 0; co < cout; ++co) {
    const float bias = bv(co, 0);
    for (int64_t i = 0; i < out_len; ++i) out(co, i) = bias;
    for (int kk = 0; kk < k; ++kk) {
      const float* src = &cols(co * k + kk, 0);
      for (int64_t tt = 0; tt < tn; ++tt) {
        const int64_t pos = tt * stride + kk - trim_l;
        if (pos >= 0 && pos < out_len) out(co, pos) += src[tt];
      }
    }
  }

  const bool needs = t.requires_grad(x) || t.requires_grad(w) || t.requires_grad(b);
  return t.make_node(
      std::move(out), needs,
      [x, w, b, cout, k, stride, trim_l, out_len, tn](FTape& tp, FTape::Id self) {
        const FTensor& g = tp.grad(self);
        const FTensor& xin = tp.val(x);
        const FTensor& wv = tp.val(w);
        const int cin = xin.rows;

        if (tp.requires_grad(b)) {
          FTensor gb(cout, 1);
          for (int co = 0; co < cout; ++co) {
            double acc = 0.0;
            for (int64_t i = 0; i < out_len; ++i) acc += g(co, i);
            gb(co, 0) = static_cast<float>(acc);
          }
          tp.accumulate(b, gb);
        }

        // Gather dCols[co*k+kk, t] = dY[co, t*stride + kk - trim_l].
        FTensor gcols(cout * k, tn);
        for (int co = 0; co < cout; ++co) {
          for (int kk = 0; kk < k; ++kk) {
            float* dst = &gcols(co * k + kk, 0);
            for (int64_t tt = 0; tt < tn; ++tt) {
              const int64_t pos = tt * stride + kk - trim_l;
              dst[tt] = (pos >= 0 && pos < out_len) ? g(co, pos) : 0.0f;
            }
          }
        }
        if (tp.requires_grad(w)) {
          FTensor gw(wv.rows, cin);
          ConstMatMap gc(gcols.v.data(), gcols.rows, tn);
          ConstMatMap xm(xin.v.data(), cin, tn);
          MatMap gwm(gw.v.data(), gw.rows, cin);
          gwm.noalias() = gc * xm.transpose();
          tp.accumulate(w, gw);
        }
        if (tp.requires_grad(x)) {
          FTensor gx(cin, tn);
          ConstMatMap wm(wv.v.data(), wv.rows, cin);
          ConstMatMap gc(gcols.v.data(), gcols.rows, tn);
          MatMap gxm(gx.v.data(), cin, tn);
          gxm.noalias() = wm.transpose() * gc;
          tp.accumulate(x, gx);
        }
      });
}

// Single LSTM layer over a (C, Tn) sequence; hidden size equals C.
// w_ih, w_hh: (4C, C); bias: (4C, 1). Gate order: input, forget, cell, output.
inline FTape::Id lstm(FTape& t, FTape::Id x, FTape::Id w_ih, FTape::Id w_hh, FTape::Id b) {
  const FTensor& xin = t.val(x);
  const int h = xin.rows;
  const int64_t tn = xin.cols;
  if (t.val(w_ih).rows != 4 * h || t.val(w_ih).cols != h ||
      t.val(w_hh).rows != 4 * h || t.val(w_hh).cols != h || t.val(b).rows != 4 * h) {
    throw ValidationError("lstm: weight shape");
  }

  struct Saved {
    FTensor gates;   // (4H, Tn) post-activation
    FTensor cells;   // (H, Tn)
    FTensor tanh_c;  // (H, Tn)
    FTensor hidden;  // (H, Tn)
  };
  auto sv = std::make_shared<Saved>();
  sv->gates = FTensor(4 * h, tn);
  sv->cells = FTensor(h, tn);
  sv->tanh_c = FTensor(h, tn);
  sv->hidden = FTensor(h, tn);

  {
    const FTensor& wi = t.val(w_ih);
    const FTensor& wh = t.val(w_hh);
    const FTensor& bv = t.val(b);
    ConstMatMap wim(wi.v.data(), 4 * h, h);
    ConstMatMap whm(wh.v.data(), 4 * h, h);
    Eigen::VectorXf hprev = Eigen::VectorXf::Zero(h);
    Eigen::VectorXf cprev = Eigen::VectorXf::Zero(h);
    Eigen::VectorXf z(4 * h);
    Eigen::ArrayXf gates(4 * h), cvec(h), tcvec(h);
    for (int64_t tt = 0; tt < tn; ++tt) {
      Eigen::VectorXf xt(h);
      for (int r = 0; r < h; ++r) xt(r) = xin(r, tt);
      z.noalias() = wim * xt + whm * hprev;
      for (int r = 0; r < 4 * h; ++r) z(r) += bv(r, 0);
      gates.segment(0, 2 * h) = 1.0f / (1.0f + (-z.segment(0, 2 * h).array()).exp());
      gates.segment(2 * h, h) = z.segment(2 * h, h).array().tanh();
      gates.segment(3 * h, h) = 1.0f / (1.0f + (-z.segment(3 * h, h).array()).exp());
      cvec = gates.segment(h, h) * cprev.array() + gates.segment(0, h) * gates.segment(2 * h, h);
      tcvec = cvec.tanh();
      for (int r = 0; r < 4 * h; ++r) sv->gates(r, tt) = gates(r);
      for (int r = 0; r < h; ++r) {
        sv->cells(r, tt) = cvec(r);
        sv->tanh_c(r, tt) = tcvec(r);
        sv->hidden(r, tt) = gates(3 * h + r) * tcvec(r);
        cprev(r) = cvec(r);
        hprev(r) = sv->hidden(r, tt);
      }
    }
  }

  FTensor out = sv->hidden;
  const bool needs = t.requires_grad(x) || t.requires_grad(w_ih) || t.requires_grad(w_hh) ||
                     t.requires_grad(b);
  return t.make_node(std::move(out), needs, [x, w_ih, w_hh, b, h, tn, sv](FTape& tp,
                                                                          FTape::Id self) {
    const FTensor& g = tp.grad(self);
    const FTensor& xin = tp.val(x);
    const FTensor& wi = tp.val(w_ih);
    const FTensor& wh = tp.val(w_hh);
    ConstMatMap wim(wi.v.data(), 4 * h, h);
    ConstMatMap whm(wh.v.data(), 4 * h, h);

    FTensor gwi(4 * h, h), gwh(4 * h, h), gb(4 * h, 1), gx(h, tn);
    MatMap gwim(gwi.v.data(), 4 * h, h);
    MatMap gwhm(gwh.v.data(), 4 * h, h);

    Eigen::VectorXf dh = Eigen::VectorXf::Zero(h);
    Eigen::VectorXf dc = Eigen::VectorXf::Zero(h);
    Eigen::VectorXf dz(4 * h);
    for (int64_t tt = tn - 1; tt >= 0; --tt) {
      for (int r = 0; r < h; ++r) dh(r) += g(r, tt);
      for (int r = 0; r < h; ++r) {
        const float ig = sv->gates(r, tt);
        const float fg = sv->gates(h + r, tt);
        const float gg = sv->gates(2 * h + r, tt);
        const float og = sv->gates(3 * h + r, tt);
        const float tc = sv->tanh_c(r, tt);
        const float cprev = tt > 0 ? sv->cells(r, tt - 1) : 0.0f;
        const float dtc = dh(r) * og;
        const float dcc = dc(r) + dtc * (1.0f - tc * tc);
        const float dog = dh(r) * tc;
        const float dig = dcc * gg;
        const float dgg = dcc * ig;
        const float dfg = dcc * cprev;
        dz(r) = dig * ig * (1.0f - ig);
        dz(h + r) = dfg * fg * (1.0f - fg);
        dz(2 * h + r) = dgg * (1.0f - gg * gg);
        dz(3 * h + r) = dog * og * (1.0f - og);
        dc(r) = dcc * fg;
      }
      Eigen::VectorXf xt(h), hprev(h);
      for (int r = 0; r < h; ++r) {
        xt(r) = xin(r, tt);
        hprev(r) = tt > 0 ? sv->hidden(r, tt - 1) : 0.0f;
      }
      gwim.noalias() += dz * xt.transpose();
      gwhm.noalias() += dz * hprev.transpose();
      for (int r = 0; r < 4 * h; ++r) gb(r, 0) += dz(r);
      Eigen::VectorXf dx = wim.transpose() * dz;
      for (int r = 0; r < h; ++r) gx(r, tt) = dx(r);
      dh.noalias() = whm.transpose() * dz;
    }
    tp.accumulate(w_ih, gwi);
    tp.accumulate(w_hh, gwh);
    tp.accumulate(b, gb);
    tp.accumulate(x, gx);
  });
}

}  // namespace localmark::ad
