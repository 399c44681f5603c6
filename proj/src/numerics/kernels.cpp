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

#include "nocap/numerics/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nocap/error.hpp"

namespace nocap::num {

AttentionMask AttentionMask::full(std::size_t rows, std::size_t cols) {
  AttentionMask m;
  m.rows = rows;
  m.cols = cols;
  m.allowed.assign(rows * cols, 1);
  return m;
}

AttentionMask AttentionMask::causal(std::size_t n) {
  AttentionMask m;
  m.rows = n;
  m.cols = n;
  m.allowed.assign(n * n, 0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c <= r; ++c) m.allowed[r * n + c] = 1;
  }
  return m;
}

namespace kernels {

void matmul(std::span<const double> a, std::span<const double> b, std::span<double> out, std::size_t m,
            std::size_t k, std::size_t n) {
  std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(m * n), 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double* orow = out.data() + i * n;
    const double* arow = a.data() + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      const double* brow = b.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
}

void matmul_nt(std::span<const double> a, std::span<const double> b, std::span<double> out, std::size_t m,
               std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a.data() + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = b.data() + j * k;
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
      out[i * n + j] = acc;
    }
  }
}

void matmul_tn_acc(std::span<const double> a, std::span<const double> g, std::span<double> out, std::size_t m,
                   std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a.data() + i * k;
    const double* grow = g.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      double* orow = out.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * grow[j];
    }
  }
}

void layer_norm(std::span<const double> x, std::span<const double> gain, std::span<const double> bias,
                std::span<double> out, std::span<double> mean, std::span<double> rstd, std::size_t m, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = x.data() + i * n;
    double mu = 0.0;
    for (std::size_t j = 0; j < n; ++j) mu += row[j];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<double>(n);
    const double rs = 1.0 / std::sqrt(var + kLayerNormEps);
    mean[i] = mu;
    rstd[i] = rs;
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = (row[j] - mu) * rs * gain[j] + bias[j];
  }
}

void softmax_inplace(std::span<double> row) {
  const double mx = *std::max_element(row.begin(), row.end());
  double sum = 0.0;
  for (double& v : row) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : row) v /= sum;
}

void log_softmax_inplace(std::span<double> row) {
  const double mx = *std::max_element(row.begin(), row.end());
  double sum = 0.0;
  for (double v : row) sum += std::exp(v - mx);
  const double lse = mx + std::log(sum);
  for (double& v : row) v -= lse;
}

void attention(std::span<const double> q, std::span<const double> k, std::span<const double> v, std::size_t m,
               std::size_t s, std::size_t d, std::size_t heads, const AttentionMask* mask, std::span<double> out,
               std::span<double> probs) {
  if (heads == 0 || d % heads != 0) throw ContractError("model width must be divisible by the head count");
  if (mask && (mask->rows != m || mask->cols != s)) throw DimensionError("attention mask shape mismatch");
  const std::size_t dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(m * d), 0.0);
  for (std::size_t h = 0; h < heads; ++h) {
    const std::size_t off = h * dh;
    for (std::size_t i = 0; i < m; ++i) {
      double* p = probs.data() + (h * m + i) * s;
      const double* qi = q.data() + i * d + off;
      double mx = -std::numeric_limits<double>::infinity();
      bool any = false;
      for (std::size_t j = 0; j < s; ++j) {
        if (mask && !(*mask)(i, j)) {
          p[j] = 0.0;
          continue;
        }
        const double* kj = k.data() + j * d + off;
        double acc = 0.0;
        for (std::size_t c = 0; c < dh; ++c) acc += qi[c] * kj[c];
        p[j] = acc * scale;
        mx = any ? std::max(mx, p[j]) : p[j];
        any = true;
      }
      if (!any) throw ContractError("degenerate attention mask: query row " + std::to_string(i) + " has no key");
      double sum = 0.0;
      for (std::size_t j = 0; j < s; ++j) {
        if (mask && !(*mask)(i, j)) continue;
        p[j] = std::exp(p[j] - mx);
        sum += p[j];
      }
      double* oi = out.data() + i * d + off;
      for (std::size_t j = 0; j < s; ++j) {
        if (mask && !(*mask)(i, j)) continue;
        p[j] /= sum;
        const double* vj = v.data() + j * d + off;
        for (std::size_t c = 0; c < dh; ++c) oi[c] += p[j] * vj[c];
      }
    }
  }
}

}  // namespace kernels
}  // namespace nocap::num
