// Copyright 2026 The nocap Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================

#include "nocap/numerics/ops.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <string>

#include "nocap/error.hpp"

namespace nocap::num {
namespace {

void require_same_tape(Var a, Var b) {
  if (&a.tape() != &b.tape()) throw ContractError("operands recorded on different tapes");
}

void require_same_shape(Var a, Var b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  }
}

// Bias vectors may be stored as (n) or (1, n).
std::size_t vector_length(const Tensor& t, const char* op) {
  if (t.rank() == 1) return t.shape()[0];
  if (t.rank() == 2 && t.shape()[0] == 1) return t.shape()[1];
  throw DimensionError(std::string(op) + ": expected a vector, got " + shape_string(t.shape()));
}

Shape matrix_shape(std::size_t r, std::size_t c) { return Shape{r, c}; }

void accumulate(std::span<double> dst, std::span<const double> src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

}  // namespace

Var matmul(Var a, Var b) {
  require_same_tape(a, b);
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) {
    throw DimensionError("matmul: inner dimensions " + shape_string(a.shape()) + " x " + shape_string(b.shape()));
  }
  Tensor out(matrix_shape(m, n));
  kernels::matmul(a.value().data(), b.value().data(), out.data(), m, k, n);
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(std::move(out), [ia, ib, m, k, n](Tape& t, std::size_t self) {
    auto g = t.adjoint(self);
    const auto& av = t.value(ia).data();
    const auto& bv = t.value(ib).data();
    // dA = G * B^T
    auto da = t.adjoint_mut(ia);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t p = 0; p < k; ++p) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += g[i * n + j] * bv[p * n + j];
        da[i * k + p] += acc;
      }
    }
    // dB = A^T * G
    kernels::matmul_tn_acc(av, g, t.adjoint_mut(ib), m, k, n);
  });
}

Var matmul_nt(Var a, Var b) {
  require_same_tape(a, b);
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  if (b.cols() != k) {
    throw DimensionError("matmul_nt: inner dimensions " + shape_string(a.shape()) + " x " +
                         shape_string(b.shape()) + "^T");
  }
  Tensor out(matrix_shape(m, n));
  kernels::matmul_nt(a.value().data(), b.value().data(), out.data(), m, k, n);
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(std::move(out), [ia, ib, m, k, n](Tape& t, std::size_t self) {
    auto g = t.adjoint(self);
    const auto& av = t.value(ia).data();
    const auto& bv = t.value(ib).data();
    // dA = G * B, dB = G^T * A
    auto da = t.adjoint_mut(ia);
    auto db = t.adjoint_mut(ib);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double gij = g[i * n + j];
        if (gij == 0.0) continue;
        for (std::size_t p = 0; p < k; ++p) {
          da[i * k + p] += gij * bv[j * k + p];
          db[j * k + p] += gij * av[i * k + p];
        }
      }
    }
  });
}

Var add(Var a, Var b) {
  require_same_tape(a, b);
  require_same_shape(a, b, "add");
  Tensor out(a.shape());
  const auto av = a.value().data();
  const auto bv = b.value().data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(std::move(out), [ia, ib](Tape& t, std::size_t self) {
    accumulate(t.adjoint_mut(ia), t.adjoint(self));
    accumulate(t.adjoint_mut(ib), t.adjoint(self));
  });
}

Var mul(Var a, Var b) {
  require_same_tape(a, b);
  require_same_shape(a, b, "mul");
  Tensor out(a.shape());
  const auto av = a.value().data();
  const auto bv = b.value().data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(std::move(out), [ia, ib](Tape& t, std::size_t self) {
    auto g = t.adjoint(self);
    const auto av = t.value(ia).data();
    const auto bv = t.value(ib).data();
    auto da = t.adjoint_mut(ia);
    for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * bv[i];
    auto db = t.adjoint_mut(ib);
    for (std::size_t i = 0; i < g.size(); ++i) db[i] += g[i] * av[i];
  });
}

Var scale(Var a, double factor) {
  Tensor out(a.shape());
  const auto av = a.value().data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * factor;
  const std::size_t ia = a.id();
  return a.tape().record(std::move(out), [ia, factor](Tape& t, std::size_t self) {
    auto g = t.adjoint(self);
    auto da = t.adjoint_mut(ia);
    for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * factor;
  });
}

Var add_bias(Var x, Var bias) {
  require_same_tape(x, bias);
  const std::size_t m = x.rows(), n = x.cols();
  if (vector_length(bias.value(), "add_bias") != n) throw DimensionError("add_bias: bias length mismatch");
  Tensor out(x.shape());
  const auto xv = x.value().data();
  const auto bv = bias.value().data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = xv[i * n + j] + bv[j];
  }
  const std::size_t ix = x.id(), ib = bias.id();
  return x.tape().record(std::move(out), [ix, ib, m, n](Tape& t, std::size_t self) {
    auto g = t.adjoint(self);
    accumulate(t.adjoint_mut(ix), g);
    auto db = t.adjoint_mut(ib);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) db[j] += g[i * n + j];
    }
  });
}

Var linear(Var x, Var w, Var b) { return add_bias(matmul(x, w), b); }

Var relu(Var x) {
  Tensor out(x.shape());
  const auto xv = x.value().data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] > 0.0 ? xv[i] : 0.0;
  const std::size_t ix = x.id();
  return x.tape().record(std::move(out), [ix](Tape& t, std::size_t self) {
    auto g = t.adjoint(self);
    const auto xv = t.value(ix).data();
    auto dx = t.adjoint_mut(ix);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (xv[i] > 0.0) dx[i] += g[i];
    }
  });
}

Var sigmoid(Var x) {
  Tensor out(x.shape());
  const auto xv = x.value().data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-xv[i]));
  const std::size_t ix = x.id();
  return x.tape().record(std::move(out), [ix](Tape& t, std::size_t self) {
    auto g = t.adjoint(self);
    const auto y = t.value(self).data();
    auto dx = t.adjoint_mut(ix);
    for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] * y[i] * (1.0 - y[i]);
  });
}

Var log(Var x) {
  Tensor out(x.shape());
  const auto xv = x.value().data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::log(xv[i]);
  const std::size_t ix = x.id();
  return x.tape().record(std::move(out), [ix](Tape& t, std::size_t self) {
    auto g = t.adjoint(self);
    const auto xv = t.value(ix).data();
    auto dx = t.adjoint_mut(ix);
    for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] / xv[i];
  });
}

Var layer_norm(Var x, Var gain, Var bias) {
  require_same_tape(x, gain);
  require_same_tape(x, bias);
  const std::size_t m = x.rows(), n = x.cols();
  if (vector_length(gain.value(), "layer_norm") != n || vector_length(bias.value(), "layer_norm") != n) {
    throw DimensionError("layer_norm: gain/bias length mismatch");
  }
  Tensor out(x.shape());
  std::vector<double> mean(m), rstd(m);
  kernels::layer_norm(x.value().data(), gain.value().data(), bias.value().data(), out.data(), mean, rstd, m, n);
  const std::size_t ix = x.id(), ig = gain.id(), ib = bias.id();
  return x.tape().record(std::move(out), [ix, ig, ib, m, n, mean = std::move(mean), rstd = std::move(rstd)](
                                             Tape& t, std::size_t self) {
    auto g = t.adjoint(self);
    const auto xv = t.value(ix).data();
    const auto gv = t.value(ig).data();
    auto dx = t.adjoint_mut(ix);
    auto dg = t.adjoint_mut(ig);
    auto db = t.adjoint_mut(ib);
    std::vector<double> xhat(n), dxhat(n);
    for (std::size_t i = 0; i < m; ++i) {
      double sum_d = 0.0, sum_dx = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        xhat[j] = (xv[i * n + j] - mean[i]) * rstd[i];
        const double gij = g[i * n + j];
        dg[j] += gij * xhat[j];
        db[j] += gij;
        dxhat[j] = gij * gv[j];
        sum_d += dxhat[j];
        sum_dx += dxhat[j] * xhat[j];
      }
      const double inv_n = 1.0 / static_cast<double>(n);
      for (std::size_t j = 0; j < n; ++j) {
        dx[i * n + j] += rstd[i] * (dxhat[j] - inv_n * sum_d - xhat[j] * inv_n * sum_dx);
      }
    }
  });
}

Var softmax(Var x, int axis) {
  if (axis != 0 && axis != 1) throw ContractError("softmax axis must be 0 or 1");
  const std::size_t m = x.rows(), n = x.cols();
  Tensor out(x.shape());
  const auto xv = x.value().data();
  // Work on lines: rows for axis 1, columns for axis 0.
  const std::size_t lines = axis == 1 ? m : n;
  const std::size_t len = axis == 1 ? n : m;
  auto index = [axis, n](std::size_t line, std::size_t e) { return axis == 1 ? line * n + e : e * n + line; };
  std::vector<double> buf(len);
  for (std::size_t l = 0; l < lines; ++l) {
    for (std::size_t e = 0; e < len; ++e) buf[e] = xv[index(l, e)];
    kernels::softmax_inplace(buf);
    for (std::size_t e = 0; e < len; ++e) out[index(l, e)] = buf[e];
  }
  const std::size_t ix = x.id();
  return x.tape().record(std::move(out), [ix, lines, len, index](Tape& t, std::size_t self) {
    auto g = t.adjoint(self);
    const auto y = t.value(self).data();
    auto dx = t.adjoint_mut(ix);
    for (std::size_t l = 0; l < lines; ++l) {
      double dot = 0.0;
      for (std::size_t e = 0; e < len; ++e) dot += g[index(l, e)] * y[index(l, e)];
      for (std::size_t e = 0; e < len; ++e) dx[index(l, e)] += y[index(l, e)] * (g[index(l, e)] - dot);
    }
  });
}

Var log_softmax(Var x) {
  const std::size_t m = x.rows(), n = x.cols();
  Tensor out(x.shape());
  const auto xv = x.value().data();
  std::copy(xv.begin(), xv.end(), out.data().begin());
  for (std::size_t i = 0; i < m; ++i) kernels::log_softmax_inplace(out.data().subspan(i * n, n));
  const std::size_t ix = x.id();
  return x.tape().record(std::move(out), [ix, m, n](Tape& t, std::size_t self) {
    auto g = t.adjoint(self);
    const auto y = t.value(self).data();
    auto dx = t.adjoint_mut(ix);
    for (std::size_t i = 0; i < m; ++i) {
      double gs = 0.0;
      for (std::size_t j = 0; j < n; ++j) gs += g[i * n + j];
      for (std::size_t j = 0; j < n; ++j) dx[i * n + j] += g[i * n + j] - std::exp(y[i * n + j]) * gs;
    }
  });
}

Var attention(Var q, Var k, Var v, std::size_t heads, const AttentionMask* mask) {
  require_same_tape(q, k);
  require_same_tape(q, v);
  const std::size_t m = q.rows(), d = q.cols(), s = k.rows();
  if (k.cols() != d) throw DimensionError("attention: query/key width mismatch");
  if (v.rows() != s) throw DimensionError("attention: key/value length mismatch");
  if (v.cols() != d) throw DimensionError("attention: value width must equal query width");
  Tensor out(matrix_shape(m, d));
  std::vector<double> probs(heads * m * s);
  kernels::attention(q.value().data(), k.value().data(), v.value().data(), m, s, d, heads, mask, out.data(), probs);
  const std::size_t iq = q.id(), ik = k.id(), iv = v.id();
  return q.tape().record(std::move(out), [iq, ik, iv, m, s, d, heads, probs = std::move(probs)](Tape& t,
                                                                                                 std::size_t self) {
    auto g = t.adjoint(self);
    const auto qv = t.value(iq).data();
    const auto kv = t.value(ik).data();
    const auto vv = t.value(iv).data();
    auto dq = t.adjoint_mut(iq);
    auto dk = t.adjoint_mut(ik);
    auto dv = t.adjoint_mut(iv);
    const std::size_t dh = d / heads;
    const double sc = 1.0 / std::sqrt(static_cast<double>(dh));
    std::vector<double> dp(s);
    for (std::size_t h = 0; h < heads; ++h) {
      const std::size_t off = h * dh;
      for (std::size_t i = 0; i < m; ++i) {
        const double* p = probs.data() + (h * m + i) * s;
        const double* gi = g.data() + i * d + off;
        double dot = 0.0;
        for (std::size_t j = 0; j < s; ++j) {
          if (p[j] == 0.0) {
            dp[j] = 0.0;
            continue;
          }
          const double* vj = vv.data() + j * d + off;
          double acc = 0.0;
          for (std::size_t c = 0; c < dh; ++c) {
            acc += gi[c] * vj[c];
            dv[j * d + off + c] += p[j] * gi[c];
          }
          dp[j] = acc;
          dot += p[j] * acc;
        }
        for (std::size_t j = 0; j < s; ++j) {
          if (p[j] == 0.0) continue;
          const double ds = p[j] * (dp[j] - dot) * sc;
          for (std::size_t c = 0; c < dh; ++c) {
            dq[i * d + off + c] += ds * kv[j * d + off + c];
            dk[j * d + off + c] += ds * qv[i * d + off + c];
          }
        }
      }
    }
  });
}

Var scaled_dot_attention(Var q, Var k, Var v, const AttentionMask* mask) {
  require_same_tape(q, k);
  require_same_tape(q, v);
  if (q.cols() != k.cols()) throw DimensionError("attention: query/key width mismatch");
  if (v.rows() != k.rows()) throw DimensionError("attention: key/value length mismatch");
  // Value width may differ from key width: run per value column block.
  if (v.cols() == q.cols()) return attention(q, k, v, 1, mask);
  const std::size_t m = q.rows(), s = k.rows(), dk = q.cols(), dv = v.cols();
  Tensor out(matrix_shape(m, dv));
  std::vector<double> probs(m * s);
  std::vector<double> dummy_out(m * dk);
  std::vector<double> zeros(s * dk, 0.0);
  kernels::attention(q.value().data(), k.value().data(), zeros, m, s, dk, 1, mask, dummy_out, probs);
  kernels::matmul(probs, v.value().data(), out.data(), m, s, dv);
  const std::size_t iq = q.id(), ik = k.id(), iv = v.id();
  return q.tape().record(std::move(out), [iq, ik, iv, m, s, dk, dv, probs = std::move(probs)](Tape& t,
                                                                                             std::size_t self) {
    auto g = t.adjoint(self);
    const auto qv = t.value(iq).data();
    const auto kv = t.value(ik).data();
    const auto vv = t.value(iv).data();
    auto dq = t.adjoint_mut(iq);
    auto dkk = t.adjoint_mut(ik);
    kernels::matmul_tn_acc(probs, g, t.adjoint_mut(iv), m, s, dv);
    const double sc = 1.0 / std::sqrt(static_cast<double>(dk));
    std::vector<double> dp(s);
    for (std::size_t i = 0; i < m; ++i) {
      const double* p = probs.data() + i * s;
      double dot = 0.0;
      for (std::size_t j = 0; j < s; ++j) {
        double acc = 0.0;
        for (std::size_t c = 0; c < dv; ++c) acc += g[i * dv + c] * vv[j * dv + c];
        dp[j] = acc;
        dot += p[j] * acc;
      }
      for (std::size_t j = 0; j < s; ++j) {
        if (p[j] == 0.0) continue;
        const double ds = p[j] * (dp[j] - dot) * sc;
        for (std::size_t c = 0; c < dk; ++c) {
          dq[i * dk + c] += ds * kv[j * dk + c];
          dkk[j * dk + c] += ds * qv[i * dk + c];
        }
      }
    }
  });
}

Var concat_rows(Var a, Var b) {
  require_same_tape(a, b);
  const std::size_t n = a.cols();
  if (b.cols() != n) throw DimensionError("concat_rows: column mismatch");
  const std::size_t ra = a.rows(), rb = b.rows();
  Tensor out(matrix_shape(ra + rb, n));
  std::copy(a.value().data().begin(), a.value().data().end(), out.data().begin());
  std::copy(b.value().data().begin(), b.value().data().end(),
            out.data().begin() + static_cast<std::ptrdiff_t>(ra * n));
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(std::move(out), [ia, ib, ra, n](Tape& t, std::size_t self) {
    auto g = t.adjoint(self);
    accumulate(t.adjoint_mut(ia), g.subspan(0, ra * n));
    accumulate(t.adjoint_mut(ib), g.subspan(ra * n));
  });
}

Var gather_rows(Var table, std::span<const std::size_t> ids) {
  const std::size_t vocab = table.rows(), n = table.cols();
  if (ids.empty()) throw DimensionError("gather_rows: no ids");
  Tensor out(matrix_shape(ids.size(), n));
  const auto tv = table.value().data();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= vocab) throw ContractError("gather_rows: id " + std::to_string(ids[i]) + " out of range");
    std::copy_n(tv.begin() + static_cast<std::ptrdiff_t>(ids[i] * n), n,
                out.data().begin() + static_cast<std::ptrdiff_t>(i * n));
  }
  const std::size_t it = table.id();
  std::vector<std::size_t> idv(ids.begin(), ids.end());
  return table.tape().record(std::move(out), [it, n, idv = std::move(idv)](Tape& t, std::size_t self) {
    auto g = t.adjoint(self);
    auto dt = t.adjoint_mut(it);
    for (std::size_t i = 0; i < idv.size(); ++i) {
      for (std::size_t j = 0; j < n; ++j) dt[idv[i] * n + j] += g[i * n + j];
    }
  });
}

Var row(Var x, std::size_t r) {
  const std::size_t n = x.cols();
  if (r >= x.rows()) throw DimensionError("row: index out of range");
  Tensor out(matrix_shape(1, n));
  std::copy_n(x.value().data().begin() + static_cast<std::ptrdiff_t>(r * n), n, out.data().begin());
  const std::size_t ix = x.id();
  return x.tape().record(std::move(out), [ix, r, n](Tape& t, std::size_t self) {
    auto g = t.adjoint(self);
    auto dx = t.adjoint_mut(ix);
    for (std::size_t j = 0; j < n; ++j) dx[r * n + j] += g[j];
  });
}

Var gather_elements(Var x, std::span<const std::pair<std::size_t, std::size_t>> positions) {
  const std::size_t m = x.rows(), n = x.cols();
  if (positions.empty()) throw DimensionError("gather_elements: no positions");
  Tensor out(Shape{positions.size()});
  std::vector<std::size_t> flat(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const auto [r, c] = positions[i];
    if (r >= m || c >= n) throw DimensionError("gather_elements: position out of range");
    flat[i] = r * n + c;
    out[i] = x.value()[flat[i]];
  }
  const std::size_t ix = x.id();
  return x.tape().record(std::move(out), [ix, flat = std::move(flat)](Tape& t, std::size_t self) {
    auto g = t.adjoint(self);
    auto dx = t.adjoint_mut(ix);
    for (std::size_t i = 0; i < flat.size(); ++i) dx[flat[i]] += g[i];
  });
}

Var sum(Var x) {
  double acc = 0.0;
  for (double v : x.value().data()) acc += v;
  const std::size_t ix = x.id();
  return x.tape().record(Tensor::scalar(acc), [ix](Tape& t, std::size_t self) {
    const double g = t.adjoint(self)[0];
    for (double& d : t.adjoint_mut(ix)) d += g;
  });
}

Var mean(Var x) { return scale(sum(x), 1.0 / static_cast<double>(x.size())); }

Var weighted_sum(Var x, std::span<const double> weights) {
  if (weights.size() != x.size()) throw DimensionError("weighted_sum: weight count mismatch");
  double acc = 0.0;
  const auto xv = x.value().data();
  for (std::size_t i = 0; i < weights.size(); ++i) acc += weights[i] * xv[i];
  const std::size_t ix = x.id();
  std::vector<double> w(weights.begin(), weights.end());
  return x.tape().record(Tensor::scalar(acc), [ix, w = std::move(w)](Tape& t, std::size_t self) {
    const double g = t.adjoint(self)[0];
    auto dx = t.adjoint_mut(ix);
    for (std::size_t i = 0; i < w.size(); ++i) dx[i] += g * w[i];
  });
}

Var add_n(std::span<const Var> terms) {
  if (terms.empty()) throw ContractError("add_n: no terms");
  Var acc = terms[0];
  for (std::size_t i = 1; i < terms.size(); ++i) acc = add(acc, terms[i]);
  return acc;
}

Var weighted_bce(Var scores, std::span<const double> targets, double lambda0, double lambda1) {
  const std::size_t n = scores.size();
  if (targets.size() != n) throw DimensionError("weighted_bce: target count mismatch");
  if (n == 0) throw DimensionError("weighted_bce: empty input");
  const auto y = scores.value().data();
  double acc = 0.0;
  std::vector<unsigned char> clamped(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (targets[i] != 0.0 && targets[i] != 1.0) throw ContractError("weighted_bce: targets must be 0 or 1");
    double yi = y[i];
    if (yi < kBceClamp || yi > 1.0 - kBceClamp) {
      yi = std::clamp(yi, kBceClamp, 1.0 - kBceClamp);
      clamped[i] = 1;
      std::clog << "weighted_bce: score " << y[i] << " clamped to " << yi << '\n';
    }
    acc -= lambda1 * targets[i] * std::log(yi) + lambda0 * (1.0 - targets[i]) * std::log(1.0 - yi);
  }
  acc /= static_cast<double>(n);
  const std::size_t is = scores.id();
  std::vector<double> tv(targets.begin(), targets.end());
  return scores.tape().record(
      Tensor::scalar(acc), [is, n, lambda0, lambda1, tv = std::move(tv), clamped = std::move(clamped)](
                               Tape& t, std::size_t self) {
        const double g = t.adjoint(self)[0] / static_cast<double>(n);
        const auto y = t.value(is).data();
        auto dy = t.adjoint_mut(is);
        for (std::size_t i = 0; i < n; ++i) {
          if (clamped[i]) continue;
          dy[i] += g * (-lambda1 * tv[i] / y[i] + lambda0 * (1.0 - tv[i]) / (1.0 - y[i]));
        }
      });
}

}  // namespace nocap::num
