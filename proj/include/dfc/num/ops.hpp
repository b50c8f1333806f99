#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "dfc/num/autograd.hpp"

namespace dfc::num {

// a (n x k) * b (k x m)
template <typename S>
Var<S> matmul(Var<S> a, Var<S> b) {
  if (a.cols() != b.rows()) shape_mismatch("matmul", shape_of(a.value()), shape_of(b.value()));
  Matrix<S> out = a.value() * b.value();
  return a.tape->record("matmul", std::move(out), {a, b}, [a, b](Tape<S>& t, const Matrix<S>& g) {
    if (t.needs_grad(a.id)) t.grad(a.id).noalias() += g * t.value(b.id).transpose();
    if (t.needs_grad(b.id)) t.grad(b.id).noalias() += t.value(a.id).transpose() * g;
  });
}

// a (n x k) * b^T, b (m x k)
template <typename S>
Var<S> matmul_transposed(Var<S> a, Var<S> b) {
  if (a.cols() != b.cols()) shape_mismatch("matmul_transposed", shape_of(a.value()), shape_of(b.value()));
  Matrix<S> out = a.value() * b.value().transpose();
  return a.tape->record("matmul_transposed", std::move(out), {a, b}, [a, b](Tape<S>& t, const Matrix<S>& g) {
    if (t.needs_grad(a.id)) t.grad(a.id).noalias() += g * t.value(b.id);
    if (t.needs_grad(b.id)) t.grad(b.id).noalias() += g.transpose() * t.value(a.id);
  });
}

template <typename S>
Var<S> add(Var<S> a, Var<S> b) {
  if (shape_of(a.value()) != shape_of(b.value())) shape_mismatch("add", shape_of(a.value()), shape_of(b.value()));
  Matrix<S> out = a.value() + b.value();
  return a.tape->record("add", std::move(out), {a, b}, [a, b](Tape<S>& t, const Matrix<S>& g) {
    if (t.needs_grad(a.id)) t.grad(a.id) += g;
    if (t.needs_grad(b.id)) t.grad(b.id) += g;
  });
}

// x (n x m) plus a 1 x m row broadcast over rows.
template <typename S>
Var<S> add_row(Var<S> x, Var<S> row) {
  if (row.rows() != 1 || row.cols() != x.cols()) shape_mismatch("add_row", shape_of(x.value()), shape_of(row.value()));
  Matrix<S> out = x.value().rowwise() + row.value().row(0);
  return x.tape->record("add_row", std::move(out), {x, row}, [x, row](Tape<S>& t, const Matrix<S>& g) {
    if (t.needs_grad(x.id)) t.grad(x.id) += g;
    if (t.needs_grad(row.id)) t.grad(row.id) += g.colwise().sum();
  });
}

template <typename S>
Var<S> scale(Var<S> x, S factor) {
  Matrix<S> out = x.value() * factor;
  return x.tape->record("scale", std::move(out), {x}, [x, factor](Tape<S>& t, const Matrix<S>& g) {
    if (t.needs_grad(x.id)) t.grad(x.id) += g * factor;
  });
}

// tanh approximation of GELU
template <typename S>
Var<S> gelu(Var<S> x) {
  const S k = S(0.7978845608028654);  // sqrt(2/pi)
  const S c = S(0.044715);
  const auto& xv = x.value();
  Matrix<S> out(xv.rows(), xv.cols());
  out.array() = S(0.5) * xv.array() * (S(1) + (k * (xv.array() + c * xv.array().cube())).tanh());
  return x.tape->record("gelu", std::move(out), {x}, [x, k, c](Tape<S>& t, const Matrix<S>& g) {
    if (!t.needs_grad(x.id)) return;
    const auto& v = t.value(x.id);
    const auto th = (k * (v.array() + c * v.array().cube())).tanh().eval();
    const auto d = (S(0.5) * (S(1) + th) +
                    S(0.5) * v.array() * (S(1) - th.square()) * k * (S(1) + S(3) * c * v.array().square()))
                       .eval();
    t.grad(x.id).array() += g.array() * d;
  });
}

// Per-row normalization with learned gain and bias (1 x m each).
template <typename S>
Var<S> layer_norm(Var<S> x, Var<S> gain, Var<S> bias, S eps = S(1e-5)) {
  const auto& xv = x.value();
  const Index n = xv.rows(), m = xv.cols();
  if (gain.cols() != m || bias.cols() != m) shape_mismatch("layer_norm", shape_of(xv), shape_of(gain.value()));
  Matrix<S> xhat(n, m);
  std::vector<S> rstd(static_cast<std::size_t>(n));
  for (Index r = 0; r < n; ++r) {
    const S mean = xv.row(r).mean();
    const S var = (xv.row(r).array() - mean).square().mean();
    rstd[static_cast<std::size_t>(r)] = S(1) / std::sqrt(var + eps);
    xhat.row(r) = (xv.row(r).array() - mean) * rstd[static_cast<std::size_t>(r)];
  }
  Matrix<S> out = (xhat.array().rowwise() * gain.value().row(0).array()).matrix();
  out.rowwise() += bias.value().row(0);
  return x.tape->record(
      "layer_norm", std::move(out), {x, gain, bias},
      [x, gain, bias, xhat = std::move(xhat), rstd = std::move(rstd)](Tape<S>& t, const Matrix<S>& g) {
        if (t.needs_grad(gain.id)) t.grad(gain.id) += (g.array() * xhat.array()).colwise().sum().matrix();
        if (t.needs_grad(bias.id)) t.grad(bias.id) += g.colwise().sum();
        if (!t.needs_grad(x.id)) return;
        auto& gx = t.grad(x.id);
        const auto& gv = t.value(gain.id);
        for (Index r = 0; r < g.rows(); ++r) {
          const RowVector<S> dxhat = (g.row(r).array() * gv.row(0).array()).matrix();
          const S mean_d = dxhat.mean();
          const S mean_dx = (dxhat.array() * xhat.row(r).array()).mean();
          gx.row(r).array() +=
              rstd[static_cast<std::size_t>(r)] * (dxhat.array() - mean_d - xhat.row(r).array() * mean_dx);
        }
      });
}

// Gathers table rows by id.
template <typename S>
Var<S> embedding(Var<S> table, std::span<const int> ids) {
  const auto& tv = table.value();
  Matrix<S> out(static_cast<Index>(ids.size()), tv.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= tv.rows()) {
      fail(ErrorKind::shape, "embedding: id " + std::to_string(ids[i]) + " outside table of " +
                                 std::to_string(tv.rows()) + " rows");
    }
    out.row(static_cast<Index>(i)) = tv.row(ids[i]);
  }
  std::vector<int> idx(ids.begin(), ids.end());
  return table.tape->record("embedding", std::move(out), {table},
                            [table, idx = std::move(idx)](Tape<S>& t, const Matrix<S>& g) {
                              if (!t.needs_grad(table.id)) return;
                              auto& gt = t.grad(table.id);
                              for (std::size_t i = 0; i < idx.size(); ++i) gt.row(idx[i]) += g.row(static_cast<Index>(i));
                            });
}

template <typename S>
Var<S> slice_rows(Var<S> x, Index start, Index count) {
  if (start < 0 || count < 0 || start + count > x.rows()) {
    fail(ErrorKind::shape, "slice_rows: [" + std::to_string(start) + ", " + std::to_string(start + count) +
                               ") outside " + std::to_string(x.rows()) + " rows");
  }
  Matrix<S> out = x.value().middleRows(start, count);
  return x.tape->record("slice_rows", std::move(out), {x}, [x, start, count](Tape<S>& t, const Matrix<S>& g) {
    if (t.needs_grad(x.id)) t.grad(x.id).middleRows(start, count) += g;
  });
}

// Multi-head scaled dot-product self-attention over packed [Q | K | V]
// columns (n x 3d). With `causal`, position i attends to positions <= i.
template <typename S>
Var<S> self_attention(Var<S> qkv, int heads, bool causal) {
  const auto& in = qkv.value();
  const Index n = in.rows();
  if (in.cols() % (3 * heads) != 0) {
    fail(ErrorKind::shape, "self_attention: width " + std::to_string(in.cols()) + " not divisible into 3 x " +
                               std::to_string(heads) + " heads");
  }
  const Index d = in.cols() / 3, dh = d / heads;
  const S scale_factor = S(1) / std::sqrt(static_cast<S>(dh));

  Matrix<S> out(n, d);
  std::vector<Matrix<S>> probs(static_cast<std::size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    const auto q = in.middleCols(h * dh, dh);
    const auto k = in.middleCols(d + h * dh, dh);
    const auto v = in.middleCols(2 * d + h * dh, dh);
    Matrix<S> scores = (q * k.transpose()) * scale_factor;
    auto& p = probs[static_cast<std::size_t>(h)];
    p = Matrix<S>::Zero(n, n);
    for (Index i = 0; i < n; ++i) {
      const Index visible = causal ? i + 1 : n;
      auto row = scores.row(i).head(visible);
      const S mx = row.maxCoeff();
      auto e = (row.array() - mx).exp();
      p.row(i).head(visible) = e / e.sum();
    }
    out.middleCols(h * dh, dh).noalias() = p * v;
  }

  return qkv.tape->record(
      "self_attention", std::move(out), {qkv},
      [qkv, heads, d, dh, scale_factor, probs = std::move(probs)](Tape<S>& t, const Matrix<S>& g) {
        if (!t.needs_grad(qkv.id)) return;
        const auto& in = t.value(qkv.id);
        auto& gin = t.grad(qkv.id);
        for (int h = 0; h < heads; ++h) {
          const auto& p = probs[static_cast<std::size_t>(h)];
          const auto q = in.middleCols(h * dh, dh);
          const auto k = in.middleCols(d + h * dh, dh);
          const auto v = in.middleCols(2 * d + h * dh, dh);
          const auto go = g.middleCols(h * dh, dh);
          gin.middleCols(2 * d + h * dh, dh).noalias() += p.transpose() * go;
          const Matrix<S> dp = go * v.transpose();
          Matrix<S> ds = p.cwiseProduct(dp);
          const auto row_dot = ds.rowwise().sum().eval();
          ds -= (p.array().colwise() * row_dot.array()).matrix();
          ds *= scale_factor;
          gin.middleCols(h * dh, dh).noalias() += ds * k;
          gin.middleCols(d + h * dh, dh).noalias() += ds.transpose() * q;
        }
      });
}

}  // namespace dfc::num
