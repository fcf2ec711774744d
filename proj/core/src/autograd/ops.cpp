#include "nli/autograd/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "kernels.hpp"
#include "nli/errors.hpp"

namespace nli {
namespace {

template <typename Real>
using Storage = std::shared_ptr<detail::TensorStorage<Real>>;

// Returns the active tape when at least one input participates in
// differentiation, nullptr otherwise.
template <typename Real, typename... Ts>
GradTape<Real>* tape_for(const Ts&... inputs) {
  GradTape<Real>* tape = active_tape<Real>();
  if (tape == nullptr) return nullptr;
  return (inputs.requires_grad() || ...) ? tape : nullptr;
}

void require_rank(const char* op, const Shape& shape, std::size_t rank) {
  if (shape.size() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                         shape_string(shape));
  }
}

void require_same_shape(const char* op, const Shape& a, const Shape& b) {
  if (a != b) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a) + " vs " + shape_string(b));
  }
}

}  // namespace

template <typename Real>
Tensor<Real> matmul(const Tensor<Real>& a, const Tensor<Real>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw DimensionError("matmul: cannot multiply " + shape_string(a.shape()) + " by " +
                         shape_string(b.shape()));
  }
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor<Real> out({m, n});
  kernels::gemm_nn(a.data().data(), b.data().data(), out.mutable_data().data(), m, k, n);

  if (GradTape<Real>* tape = tape_for<Real>(a, b)) {
    out.set_requires_grad(true);
    tape->record([A = a.storage(), B = b.storage(), C = out.storage(), m, k, n] {
      if (C->grad.empty()) return;
      if (A->requires_grad) kernels::gemm_nt(C->grad.data(), B->data.data(), A->ensure_grad().data(), m, n, k);
      if (B->requires_grad) kernels::gemm_tn(A->data.data(), C->grad.data(), B->ensure_grad().data(), k, m, n);
    });
  }
  return out;
}

template <typename Real>
Tensor<Real> batched_matmul(const Tensor<Real>& a, const Tensor<Real>& b, bool transpose_b) {
  auto as3 = [](const Shape& s) { return s.size() == 2 ? Shape{1, s[0], s[1]} : s; };
  const Shape sa = as3(a.shape()), sb = as3(b.shape());
  const bool ranks_ok = (a.rank() == 2 || a.rank() == 3) && a.rank() == b.rank();
  const std::size_t inner_b = transpose_b ? sb[2] : sb[1];
  if (!ranks_ok || sa[0] != sb[0] || sa[2] != inner_b) {
    throw DimensionError("batched_matmul: cannot multiply " + shape_string(a.shape()) + " by " +
                         shape_string(b.shape()) + (transpose_b ? " (transposed)" : ""));
  }
  const std::size_t batch = sa[0], m = sa[1], k = sa[2];
  const std::size_t n = transpose_b ? sb[1] : sb[2];
  Tensor<Real> out(a.rank() == 2 ? Shape{m, n} : Shape{batch, m, n});
  const Real* pa = a.data().data();
  const Real* pb = b.data().data();
  Real* pc = out.mutable_data().data();
  for (std::size_t s = 0; s < batch; ++s) {
    if (transpose_b) {
      kernels::gemm_nt(pa + s * m * k, pb + s * n * k, pc + s * m * n, m, k, n);
    } else {
      kernels::gemm_nn(pa + s * m * k, pb + s * k * n, pc + s * m * n, m, k, n);
    }
  }

  if (GradTape<Real>* tape = tape_for<Real>(a, b)) {
    out.set_requires_grad(true);
    tape->record([A = a.storage(), B = b.storage(), C = out.storage(), batch, m, k, n, transpose_b] {
      if (C->grad.empty()) return;
      const Real* dc = C->grad.data();
      for (std::size_t s = 0; s < batch; ++s) {
        const Real* dcs = dc + s * m * n;
        const Real* as = A->data.data() + s * m * k;
        const Real* bs = B->data.data() + s * k * n;
        if (A->requires_grad) {
          Real* da = A->ensure_grad().data() + s * m * k;
          if (transpose_b) {
            kernels::gemm_nn(dcs, bs, da, m, n, k);
          } else {
            kernels::gemm_nt(dcs, bs, da, m, n, k);
          }
        }
        if (B->requires_grad) {
          Real* db = B->ensure_grad().data() + s * k * n;
          if (transpose_b) {
            kernels::gemm_tn(dcs, as, db, n, m, k);
          } else {
            kernels::gemm_tn(as, dcs, db, k, m, n);
          }
        }
      }
    });
  }
  return out;
}

template <typename Real>
Tensor<Real> add(const Tensor<Real>& a, const Tensor<Real>& b) {
  require_same_shape("add", a.shape(), b.shape());
  Tensor<Real> out(a.shape());
  auto pa = a.data();
  auto pb = b.data();
  auto po = out.mutable_data();
  for (std::size_t i = 0; i < po.size(); ++i) po[i] = pa[i] + pb[i];

  if (GradTape<Real>* tape = tape_for<Real>(a, b)) {
    out.set_requires_grad(true);
    tape->record([A = a.storage(), B = b.storage(), C = out.storage()] {
      if (C->grad.empty()) return;
      for (const auto& in : {A, B}) {
        if (!in->requires_grad) continue;
        auto& g = in->ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += C->grad[i];
      }
    });
  }
  return out;
}

template <typename Real>
Tensor<Real> mul(const Tensor<Real>& a, const Tensor<Real>& b) {
  require_same_shape("mul", a.shape(), b.shape());
  Tensor<Real> out(a.shape());
  auto pa = a.data();
  auto pb = b.data();
  auto po = out.mutable_data();
  for (std::size_t i = 0; i < po.size(); ++i) po[i] = pa[i] * pb[i];

  if (GradTape<Real>* tape = tape_for<Real>(a, b)) {
    out.set_requires_grad(true);
    tape->record([A = a.storage(), B = b.storage(), C = out.storage()] {
      if (C->grad.empty()) return;
      if (A->requires_grad) {
        auto& g = A->ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += C->grad[i] * B->data[i];
      }
      if (B->requires_grad) {
        auto& g = B->ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += C->grad[i] * A->data[i];
      }
    });
  }
  return out;
}

template <typename Real>
Tensor<Real> add_bias(const Tensor<Real>& x, const Tensor<Real>& bias) {
  if (x.rank() == 0 || bias.rank() != 1 || bias.dim(0) != x.shape().back()) {
    throw DimensionError("add_bias: bias " + shape_string(bias.shape()) + " does not match last dimension of " +
                         shape_string(x.shape()));
  }
  const std::size_t width = bias.dim(0);
  Tensor<Real> out(x.shape());
  auto px = x.data();
  auto pb = bias.data();
  auto po = out.mutable_data();
  for (std::size_t i = 0; i < po.size(); ++i) po[i] = px[i] + pb[i % width];

  if (GradTape<Real>* tape = tape_for<Real>(x, bias)) {
    out.set_requires_grad(true);
    tape->record([X = x.storage(), Bs = bias.storage(), C = out.storage(), width] {
      if (C->grad.empty()) return;
      if (X->requires_grad) {
        auto& g = X->ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += C->grad[i];
      }
      if (Bs->requires_grad) {
        auto& g = Bs->ensure_grad();
        for (std::size_t i = 0; i < C->grad.size(); ++i) g[i % width] += C->grad[i];
      }
    });
  }
  return out;
}

template <typename Real>
Tensor<Real> scale(const Tensor<Real>& x, Real factor) {
  Tensor<Real> out(x.shape());
  auto px = x.data();
  auto po = out.mutable_data();
  for (std::size_t i = 0; i < po.size(); ++i) po[i] = px[i] * factor;

  if (GradTape<Real>* tape = tape_for<Real>(x)) {
    out.set_requires_grad(true);
    tape->record([X = x.storage(), C = out.storage(), factor] {
      if (C->grad.empty()) return;
      auto& g = X->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += C->grad[i] * factor;
    });
  }
  return out;
}

template <typename Real>
Tensor<Real> sum(const Tensor<Real>& x) {
  Real total = 0;
  for (Real v : x.data()) total += v;
  Tensor<Real> out = Tensor<Real>::scalar(total);

  if (GradTape<Real>* tape = tape_for<Real>(x)) {
    out.set_requires_grad(true);
    tape->record([X = x.storage(), C = out.storage()] {
      if (C->grad.empty()) return;
      auto& g = X->ensure_grad();
      for (auto& v : g) v += C->grad[0];
    });
  }
  return out;
}

template <typename Real>
Tensor<Real> softmax(const Tensor<Real>& x, std::size_t axis) {
  if (axis >= x.rank()) {
    throw DimensionError("softmax: axis " + std::to_string(axis) + " out of range for " + shape_string(x.shape()));
  }
  const Shape& shape = x.shape();
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= shape[d];
  for (std::size_t d = axis + 1; d < shape.size(); ++d) inner *= shape[d];
  const std::size_t len = shape[axis];

  Tensor<Real> out(shape);
  auto px = x.data();
  auto py = out.mutable_data();
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < inner; ++i) {
      const std::size_t base = o * len * inner + i;
      Real peak = px[base];
      for (std::size_t a = 1; a < len; ++a) peak = std::max(peak, px[base + a * inner]);
      Real total = 0;
      for (std::size_t a = 0; a < len; ++a) {
        const Real e = std::exp(px[base + a * inner] - peak);
        py[base + a * inner] = e;
        total += e;
      }
      for (std::size_t a = 0; a < len; ++a) py[base + a * inner] /= total;
    }
  }

  if (GradTape<Real>* tape = tape_for<Real>(x)) {
    out.set_requires_grad(true);
    tape->record([X = x.storage(), Y = out.storage(), outer, inner, len] {
      if (Y->grad.empty()) return;
      auto& gx = X->ensure_grad();
      const auto& gy = Y->grad;
      const auto& y = Y->data;
      for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t i = 0; i < inner; ++i) {
          const std::size_t base = o * len * inner + i;
          Real dot = 0;
          for (std::size_t a = 0; a < len; ++a) dot += gy[base + a * inner] * y[base + a * inner];
          for (std::size_t a = 0; a < len; ++a) {
            const std::size_t idx = base + a * inner;
            gx[idx] += y[idx] * (gy[idx] - dot);
          }
        }
      }
    });
  }
  return out;
}

template <typename Real>
Tensor<Real> gelu(const Tensor<Real>& x) {
  constexpr Real kAlpha = Real(0.044715);
  const Real c = std::sqrt(Real(2) / std::numbers::pi_v<Real>);
  Tensor<Real> out(x.shape());
  auto px = x.data();
  auto py = out.mutable_data();
  for (std::size_t i = 0; i < py.size(); ++i) {
    const Real v = px[i];
    py[i] = Real(0.5) * v * (Real(1) + std::tanh(c * (v + kAlpha * v * v * v)));
  }

  if (GradTape<Real>* tape = tape_for<Real>(x)) {
    out.set_requires_grad(true);
    tape->record([X = x.storage(), Y = out.storage(), c] {
      if (Y->grad.empty()) return;
      auto& g = X->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) {
        const Real v = X->data[i];
        const Real t = std::tanh(c * (v + kAlpha * v * v * v));
        const Real dt = (Real(1) - t * t) * c * (Real(1) + Real(3) * kAlpha * v * v);
        g[i] += Y->grad[i] * (Real(0.5) * (Real(1) + t) + Real(0.5) * v * dt);
      }
    });
  }
  return out;
}

template <typename Real>
Tensor<Real> layer_norm(const Tensor<Real>& x, const Tensor<Real>& gain, const Tensor<Real>& bias, Real eps) {
  if (x.rank() == 0) throw DimensionError("layer_norm: scalar input");
  const std::size_t width = x.shape().back();
  if (gain.rank() != 1 || gain.dim(0) != width || bias.rank() != 1 || bias.dim(0) != width) {
    throw DimensionError("layer_norm: gain " + shape_string(gain.shape()) + " / bias " +
                         shape_string(bias.shape()) + " do not match last dimension of " +
                         shape_string(x.shape()));
  }
  const std::size_t rows = x.size() / width;
  Tensor<Real> out(x.shape());
  std::vector<Real> normalized(x.size());
  std::vector<Real> inv_std(rows);
  auto px = x.data();
  auto pg = gain.data();
  auto pb = bias.data();
  auto py = out.mutable_data();
  for (std::size_t r = 0; r < rows; ++r) {
    const Real* row = px.data() + r * width;
    Real mean = 0;
    for (std::size_t j = 0; j < width; ++j) mean += row[j];
    mean /= Real(width);
    Real var = 0;
    for (std::size_t j = 0; j < width; ++j) var += (row[j] - mean) * (row[j] - mean);
    var /= Real(width);
    const Real rstd = Real(1) / std::sqrt(var + eps);
    inv_std[r] = rstd;
    for (std::size_t j = 0; j < width; ++j) {
      const Real n = (row[j] - mean) * rstd;
      normalized[r * width + j] = n;
      py[r * width + j] = n * pg[j] + pb[j];
    }
  }

  if (GradTape<Real>* tape = tape_for<Real>(x, gain, bias)) {
    out.set_requires_grad(true);
    tape->record([X = x.storage(), G = gain.storage(), Bs = bias.storage(), Y = out.storage(),
                  normalized = std::move(normalized), inv_std = std::move(inv_std), rows, width] {
      if (Y->grad.empty()) return;
      const auto& gy = Y->grad;
      if (G->requires_grad) {
        auto& gg = G->ensure_grad();
        for (std::size_t i = 0; i < gy.size(); ++i) gg[i % width] += gy[i] * normalized[i];
      }
      if (Bs->requires_grad) {
        auto& gb = Bs->ensure_grad();
        for (std::size_t i = 0; i < gy.size(); ++i) gb[i % width] += gy[i];
      }
      if (!X->requires_grad) return;
      auto& gx = X->ensure_grad();
      for (std::size_t r = 0; r < rows; ++r) {
        Real mean_d = 0, mean_dn = 0;
        for (std::size_t j = 0; j < width; ++j) {
          const Real d = gy[r * width + j] * G->data[j];
          mean_d += d;
          mean_dn += d * normalized[r * width + j];
        }
        mean_d /= Real(width);
        mean_dn /= Real(width);
        for (std::size_t j = 0; j < width; ++j) {
          const Real d = gy[r * width + j] * G->data[j];
          gx[r * width + j] += inv_std[r] * (d - mean_d - normalized[r * width + j] * mean_dn);
        }
      }
    });
  }
  return out;
}

template <typename Real>
Tensor<Real> masked_fill(const Tensor<Real>& scores, CausalMask) {
  const Shape& s = scores.shape();
  if ((s.size() != 2 && s.size() != 3) || s[s.size() - 1] != s[s.size() - 2]) {
    throw DimensionError("masked_fill: scores must be square over the sequence, got " + shape_string(s));
  }
  const std::size_t seq = s.back();
  const std::size_t batch = scores.size() / (seq * seq);
  Tensor<Real> out = scores.clone();
  out.set_requires_grad(false);
  out.zero_grad();
  auto po = out.mutable_data();
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t i = 0; i < seq; ++i) {
      for (std::size_t j = i + 1; j < seq; ++j) po[(b * seq + i) * seq + j] = masked_score<Real>();
    }
  }

  if (GradTape<Real>* tape = tape_for<Real>(scores)) {
    out.set_requires_grad(true);
    tape->record([X = scores.storage(), Y = out.storage(), batch, seq] {
      if (Y->grad.empty()) return;
      auto& g = X->ensure_grad();
      for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t i = 0; i < seq; ++i) {
          for (std::size_t j = 0; j <= i; ++j) {
            const std::size_t idx = (b * seq + i) * seq + j;
            g[idx] += Y->grad[idx];
          }
        }
      }
    });
  }
  return out;
}

template <typename Real>
Tensor<Real> gather_rows(const Tensor<Real>& table, std::span<const std::int64_t> indices) {
  require_rank("gather_rows", table.shape(), 2);
  if (indices.empty()) throw ContractViolation("gather_rows: empty index list");
  const std::size_t rows = table.dim(0), cols = table.dim(1);
  for (std::int64_t idx : indices) {
    if (idx < 0 || static_cast<std::size_t>(idx) >= rows) {
      throw ContractViolation("gather_rows: index " + std::to_string(idx) + " outside table of " +
                              std::to_string(rows) + " rows");
    }
  }
  Tensor<Real> out({indices.size(), cols});
  auto pt = table.data();
  auto po = out.mutable_data();
  for (std::size_t i = 0; i < indices.size(); ++i) {
    std::copy_n(pt.data() + indices[i] * cols, cols, po.data() + i * cols);
  }

  if (GradTape<Real>* tape = tape_for<Real>(table)) {
    out.set_requires_grad(true);
    tape->record([T = table.storage(), Y = out.storage(), idx = std::vector<std::int64_t>(indices.begin(), indices.end()),
                  cols] {
      if (Y->grad.empty()) return;
      auto& g = T->ensure_grad();
      for (std::size_t i = 0; i < idx.size(); ++i) {
        Real* dst = g.data() + idx[i] * cols;
        const Real* src = Y->grad.data() + i * cols;
        for (std::size_t j = 0; j < cols; ++j) dst[j] += src[j];
      }
    });
  }
  return out;
}

template <typename Real>
Tensor<Real> split_heads(const Tensor<Real>& x, std::size_t batch, std::size_t seq_len, std::size_t heads,
                         std::size_t offset, std::size_t width) {
  require_rank("split_heads", x.shape(), 2);
  const std::size_t cols = x.dim(1);
  if (x.dim(0) != batch * seq_len || offset + heads * width > cols) {
    throw DimensionError("split_heads: cannot take " + std::to_string(heads) + " heads of width " +
                         std::to_string(width) + " at column " + std::to_string(offset) + " from " +
                         shape_string(x.shape()));
  }
  Tensor<Real> out({batch * heads, seq_len, width});
  auto px = x.data();
  auto po = out.mutable_data();
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t h = 0; h < heads; ++h) {
      for (std::size_t t = 0; t < seq_len; ++t) {
        const Real* src = px.data() + (b * seq_len + t) * cols + offset + h * width;
        std::copy_n(src, width, po.data() + ((b * heads + h) * seq_len + t) * width);
      }
    }
  }

  if (GradTape<Real>* tape = tape_for<Real>(x)) {
    out.set_requires_grad(true);
    tape->record([X = x.storage(), Y = out.storage(), batch, seq_len, heads, offset, width, cols] {
      if (Y->grad.empty()) return;
      auto& g = X->ensure_grad();
      for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t h = 0; h < heads; ++h) {
          for (std::size_t t = 0; t < seq_len; ++t) {
            Real* dst = g.data() + (b * seq_len + t) * cols + offset + h * width;
            const Real* src = Y->grad.data() + ((b * heads + h) * seq_len + t) * width;
            for (std::size_t w = 0; w < width; ++w) dst[w] += src[w];
          }
        }
      }
    });
  }
  return out;
}

template <typename Real>
Tensor<Real> merge_heads(const Tensor<Real>& x, std::size_t batch, std::size_t heads) {
  require_rank("merge_heads", x.shape(), 3);
  if (x.dim(0) != batch * heads) {
    throw DimensionError("merge_heads: leading dimension of " + shape_string(x.shape()) + " is not " +
                         std::to_string(batch) + " x " + std::to_string(heads));
  }
  const std::size_t seq_len = x.dim(1), width = x.dim(2), cols = heads * width;
  Tensor<Real> out({batch * seq_len, cols});
  auto px = x.data();
  auto po = out.mutable_data();
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t h = 0; h < heads; ++h) {
      for (std::size_t t = 0; t < seq_len; ++t) {
        std::copy_n(px.data() + ((b * heads + h) * seq_len + t) * width, width,
                    po.data() + (b * seq_len + t) * cols + h * width);
      }
    }
  }

  if (GradTape<Real>* tape = tape_for<Real>(x)) {
    out.set_requires_grad(true);
    tape->record([X = x.storage(), Y = out.storage(), batch, heads, seq_len, width, cols] {
      if (Y->grad.empty()) return;
      auto& g = X->ensure_grad();
      for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t h = 0; h < heads; ++h) {
          for (std::size_t t = 0; t < seq_len; ++t) {
            Real* dst = g.data() + ((b * heads + h) * seq_len + t) * width;
            const Real* src = Y->grad.data() + (b * seq_len + t) * cols + h * width;
            for (std::size_t w = 0; w < width; ++w) dst[w] += src[w];
          }
        }
      }
    });
  }
  return out;
}

template <typename Real>
Tensor<Real> dropout(const Tensor<Real>& x, Real rate, std::mt19937_64& rng) {
  if (!(rate >= 0 && rate < 1)) throw ContractViolation("dropout: rate must lie in [0, 1)");
  if (rate == 0) return x;
  std::bernoulli_distribution keep(1.0 - static_cast<double>(rate));
  const Real inv_keep = Real(1) / (Real(1) - rate);
  std::vector<Real> factors(x.size());
  for (auto& f : factors) f = keep(rng) ? inv_keep : Real(0);
  Tensor<Real> out(x.shape());
  auto px = x.data();
  auto po = out.mutable_data();
  for (std::size_t i = 0; i < po.size(); ++i) po[i] = px[i] * factors[i];

  if (GradTape<Real>* tape = tape_for<Real>(x)) {
    out.set_requires_grad(true);
    tape->record([X = x.storage(), Y = out.storage(), factors = std::move(factors)] {
      if (Y->grad.empty()) return;
      auto& g = X->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += Y->grad[i] * factors[i];
    });
  }
  return out;
}

#define NLI_INSTANTIATE_OPS(Real)                                                                              \
  template Tensor<Real> matmul(const Tensor<Real>&, const Tensor<Real>&);                                      \
  template Tensor<Real> batched_matmul(const Tensor<Real>&, const Tensor<Real>&, bool);                        \
  template Tensor<Real> add(const Tensor<Real>&, const Tensor<Real>&);                                         \
  template Tensor<Real> mul(const Tensor<Real>&, const Tensor<Real>&);                                         \
  template Tensor<Real> add_bias(const Tensor<Real>&, const Tensor<Real>&);                                    \
  template Tensor<Real> scale(const Tensor<Real>&, Real);                                                      \
  template Tensor<Real> sum(const Tensor<Real>&);                                                              \
  template Tensor<Real> softmax(const Tensor<Real>&, std::size_t);                                             \
  template Tensor<Real> gelu(const Tensor<Real>&);                                                             \
  template Tensor<Real> layer_norm(const Tensor<Real>&, const Tensor<Real>&, const Tensor<Real>&, Real);       \
  template Tensor<Real> masked_fill(const Tensor<Real>&, CausalMask);                                          \
  template Tensor<Real> gather_rows(const Tensor<Real>&, std::span<const std::int64_t>);                       \
  template Tensor<Real> split_heads(const Tensor<Real>&, std::size_t, std::size_t, std::size_t, std::size_t,   \
                                    std::size_t);                                                              \
  template Tensor<Real> merge_heads(const Tensor<Real>&, std::size_t, std::size_t);                          \
  template Tensor<Real> dropout(const Tensor<Real>&, Real, std::mt19937_64&);

NLI_INSTANTIATE_OPS(float)
NLI_INSTANTIATE_OPS(double)

#undef NLI_INSTANTIATE_OPS

}  // namespace nli
