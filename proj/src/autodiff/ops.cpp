#include "tempo/autodiff/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <utility>

#include "tempo/errors.hpp"

namespace tempo::ad::inline TEMPO_PRECISION_NS {

namespace {

using MatR = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Map = Eigen::Map<MatR>;
using CMap = Eigen::Map<const MatR>;

CMap as_matrix(const Tensor& t) {
  return CMap(t.data(), static_cast<Eigen::Index>(t.rows()),
              static_cast<Eigen::Index>(t.cols()));
}
Map as_matrix(Tensor& t) {
  return Map(t.data(), static_cast<Eigen::Index>(t.rows()),
             static_cast<Eigen::Index>(t.cols()));
}

Tape& same_tape(Var a, Var b) {
  if (a.tape() == nullptr || a.tape() != b.tape()) {
    throw std::logic_error("operands recorded on different computation records");
  }
  return *a.tape();
}

void require_same_shape(const char* op, Var a, Var b) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " +
                         shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
}

void require_matrix(const char* op, const Tensor& t) {
  if (t.rank() != 2) {
    throw DimensionError(std::string(op) + ": expected a matrix, got shape " +
                         shape_string(t.shape()));
  }
}

// Elementwise unary op with derivative expressed through input and output.
template <class F, class D>
Var unary(Var x, F f, D dfdx) {
  Tape& tape = *x.tape();
  const Tensor& in = x.value();
  Tensor out(in.shape());
  for (std::size_t i = 0; i < in.numel(); ++i) out[i] = f(in[i]);
  const std::size_t xi = x.id();
  return tape.record(std::move(out), [xi, dfdx](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& in = t.value(xi);
    const Tensor& out = t.value(self);
    Tensor& gx = t.grad(xi);
    for (std::size_t i = 0; i < g.numel(); ++i) gx[i] += g[i] * dfdx(in[i], out[i]);
  });
}

Scalar stable_sigmoid(Scalar v) {
  if (v >= 0) {
    const Scalar e = std::exp(-v);
    return Scalar{1} / (Scalar{1} + e);
  }
  const Scalar e = std::exp(v);
  return e / (Scalar{1} + e);
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  require_matrix("matmul", a.value());
  require_matrix("matmul", b.value());
  const std::size_t m = a.value().dim(0), k = a.value().dim(1);
  const std::size_t k2 = b.value().dim(0), n = b.value().dim(1);
  if (k != k2) {
    throw DimensionError("matmul: inner dimensions disagree " +
                         shape_string(a.shape()) + " x " + shape_string(b.shape()));
  }
  Tensor out({m, n});
  as_matrix(out).noalias() = as_matrix(a.value()) * as_matrix(b.value());
  const std::size_t ai = a.id(), bi = b.id();
  return tape.record(std::move(out), [ai, bi](Tape& t, std::size_t self) {
    const auto g = as_matrix(std::as_const(t.grad(self)));
    as_matrix(t.grad(ai)).noalias() += g * as_matrix(t.value(bi)).transpose();
    as_matrix(t.grad(bi)).noalias() += as_matrix(t.value(ai)).transpose() * g;
  });
}

Var transpose(Var x) {
  require_matrix("transpose", x.value());
  const std::size_t r = x.value().dim(0), c = x.value().dim(1);
  Tensor out({c, r});
  as_matrix(out) = as_matrix(x.value()).transpose();
  const std::size_t xi = x.id();
  return x.tape()->record(std::move(out), [xi](Tape& t, std::size_t self) {
    as_matrix(t.grad(xi)) += as_matrix(std::as_const(t.grad(self))).transpose();
  });
}

Var add(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  require_same_shape("add", a, b);
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] += bv[i];
  const std::size_t ai = a.id(), bi = b.id();
  return tape.record(std::move(out), [ai, bi](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& ga = t.grad(ai);
    for (std::size_t i = 0; i < g.numel(); ++i) ga[i] += g[i];
    Tensor& gb = t.grad(bi);
    for (std::size_t i = 0; i < g.numel(); ++i) gb[i] += g[i];
  });
}

Var sub(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  require_same_shape("sub", a, b);
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] -= bv[i];
  const std::size_t ai = a.id(), bi = b.id();
  return tape.record(std::move(out), [ai, bi](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& ga = t.grad(ai);
    for (std::size_t i = 0; i < g.numel(); ++i) ga[i] += g[i];
    Tensor& gb = t.grad(bi);
    for (std::size_t i = 0; i < g.numel(); ++i) gb[i] -= g[i];
  });
}

Var mul(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  require_same_shape("mul", a, b);
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= bv[i];
  const std::size_t ai = a.id(), bi = b.id();
  return tape.record(std::move(out), [ai, bi](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& av = t.value(ai);
    const Tensor& bv = t.value(bi);
    Tensor& ga = t.grad(ai);
    for (std::size_t i = 0; i < g.numel(); ++i) ga[i] += g[i] * bv[i];
    Tensor& gb = t.grad(bi);
    for (std::size_t i = 0; i < g.numel(); ++i) gb[i] += g[i] * av[i];
  });
}

Var add_bias(Var x, Var bias) {
  Tape& tape = same_tape(x, bias);
  const std::size_t c = x.value().cols();
  if (bias.value().numel() != c) {
    throw DimensionError("add_bias: bias " + shape_string(bias.shape()) +
                         " does not match columns of " + shape_string(x.shape()));
  }
  Tensor out = x.value();
  const Tensor& bv = bias.value();
  const std::size_t r = out.rows();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] += bv[j];
  const std::size_t xi = x.id(), bi = bias.id();
  return tape.record(std::move(out), [xi, bi, r, c](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& gx = t.grad(xi);
    for (std::size_t i = 0; i < g.numel(); ++i) gx[i] += g[i];
    Tensor& gb = t.grad(bi);
    for (std::size_t j = 0; j < c; ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < r; ++i) acc += g[i * c + j];
      gb[j] += static_cast<Scalar>(acc);
    }
  });
}

Var scale(Var x, Scalar factor) {
  return unary(
      x, [factor](Scalar v) { return v * factor; },
      [factor](Scalar, Scalar) { return factor; });
}

Var add_scalar(Var x, Scalar value) {
  return unary(
      x, [value](Scalar v) { return v + value; },
      [](Scalar, Scalar) { return Scalar{1}; });
}

namespace {
thread_local std::vector<bool>* relu_probe = nullptr;
}  // namespace

void set_relu_probe(std::vector<bool>* pattern) { relu_probe = pattern; }

Var relu(Var x) {
  if (relu_probe) {
    for (Scalar v : x.value().values()) relu_probe->push_back(v > 0);
  }
  return unary(
      x, [](Scalar v) { return v < 0 ? Scalar{0} : v; },
      [](Scalar in, Scalar) { return in > 0 ? Scalar{1} : Scalar{0}; });
}

Var sigmoid(Var x) {
  return unary(x, stable_sigmoid,
               [](Scalar, Scalar y) { return y * (Scalar{1} - y); });
}

Var softplus(Var x) {
  return unary(
      x,
      [](Scalar v) {
        return std::max(v, Scalar{0}) + std::log1p(std::exp(-std::abs(v)));
      },
      [](Scalar in, Scalar) { return stable_sigmoid(in); });
}

Var square(Var x) {
  return unary(
      x, [](Scalar v) { return v * v; },
      [](Scalar in, Scalar) { return Scalar{2} * in; });
}

Var layer_norm(Var x, Var gain, Var bias, double eps) {
  Tape& tape = same_tape(x, gain);
  same_tape(x, bias);
  if (eps < 0) throw DimensionError("layer_norm: eps must be nonnegative");
  const std::size_t c = x.value().cols();
  if (gain.value().numel() != c || bias.value().numel() != c) {
    throw DimensionError("layer_norm: gain/bias length does not match last dimension of " +
                         shape_string(x.shape()));
  }
  const std::size_t r = x.value().rows();
  const Tensor& in = x.value();
  const Tensor& gv = gain.value();
  const Tensor& bv = bias.value();

  auto xhat = std::make_shared<std::vector<double>>(r * c);
  auto inv_std = std::make_shared<std::vector<double>>(r);
  Tensor out(in.shape());
  for (std::size_t i = 0; i < r; ++i) {
    const Scalar* row = in.data() + i * c;
    double m = 0.0;
    for (std::size_t j = 0; j < c; ++j) m += row[j];
    m /= static_cast<double>(c);
    double v = 0.0;
    for (std::size_t j = 0; j < c; ++j) v += (row[j] - m) * (row[j] - m);
    v /= static_cast<double>(c);
    const double denom = std::sqrt(v + eps);
    // Constant rows with eps == 0 normalize to zero rather than NaN.
    const double inv = denom > 0 ? 1.0 / denom : 0.0;
    (*inv_std)[i] = inv;
    for (std::size_t j = 0; j < c; ++j) {
      const double h = (row[j] - m) * inv;
      (*xhat)[i * c + j] = h;
      out[i * c + j] = static_cast<Scalar>(h * gv[j] + bv[j]);
    }
  }

  const std::size_t xi = x.id(), gi = gain.id(), bi = bias.id();
  return tape.record(std::move(out), [=](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& gv = t.value(gi);
    Tensor& gx = t.grad(xi);
    Tensor& gg = t.grad(gi);
    Tensor& gb = t.grad(bi);
    std::vector<double> dg(c, 0.0), db(c, 0.0), dxhat(c);
    for (std::size_t i = 0; i < r; ++i) {
      double mean_d = 0.0, mean_dx = 0.0;
      for (std::size_t j = 0; j < c; ++j) {
        const double gij = g[i * c + j];
        const double h = (*xhat)[i * c + j];
        dg[j] += gij * h;
        db[j] += gij;
        dxhat[j] = gij * gv[j];
        mean_d += dxhat[j];
        mean_dx += dxhat[j] * h;
      }
      mean_d /= static_cast<double>(c);
      mean_dx /= static_cast<double>(c);
      const double inv = (*inv_std)[i];
      for (std::size_t j = 0; j < c; ++j) {
        const double h = (*xhat)[i * c + j];
        gx[i * c + j] += static_cast<Scalar>(inv * (dxhat[j] - mean_d - h * mean_dx));
      }
    }
    for (std::size_t j = 0; j < c; ++j) {
      gg[j] += static_cast<Scalar>(dg[j]);
      gb[j] += static_cast<Scalar>(db[j]);
    }
  });
}

Var softmax_rows(Var x) {
  const Tensor& in = x.value();
  const std::size_t c = in.cols(), r = in.rows();
  Tensor out(in.shape());
  for (std::size_t i = 0; i < r; ++i) {
    const Scalar* row = in.data() + i * c;
    Scalar mx = row[0];
    for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, row[j]);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      const Scalar e = std::exp(row[j] - mx);
      out[i * c + j] = e;
      z += e;
    }
    for (std::size_t j = 0; j < c; ++j)
      out[i * c + j] = static_cast<Scalar>(out[i * c + j] / z);
  }
  const std::size_t xi = x.id();
  return x.tape()->record(std::move(out), [xi, r, c](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& y = t.value(self);
    Tensor& gx = t.grad(xi);
    for (std::size_t i = 0; i < r; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < c; ++j) dot += g[i * c + j] * y[i * c + j];
      for (std::size_t j = 0; j < c; ++j) {
        gx[i * c + j] += static_cast<Scalar>(y[i * c + j] * (g[i * c + j] - dot));
      }
    }
  });
}

Var reshape(Var x, Shape shape) {
  Tensor out = x.value().reshaped(std::move(shape));
  const std::size_t xi = x.id();
  return x.tape()->record(std::move(out), [xi](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& gx = t.grad(xi);
    for (std::size_t i = 0; i < g.numel(); ++i) gx[i] += g[i];
  });
}

Var slice_cols(Var x, std::size_t start, std::size_t count) {
  const Tensor& in = x.value();
  const std::size_t c = in.cols(), r = in.rows();
  if (start + count > c) {
    throw DimensionError("slice_cols: range [" + std::to_string(start) + ", " +
                         std::to_string(start + count) + ") exceeds " +
                         std::to_string(c) + " columns");
  }
  Tensor out({r, count});
  for (std::size_t i = 0; i < r; ++i)
    std::copy_n(in.data() + i * c + start, count, out.data() + i * count);
  const std::size_t xi = x.id();
  return x.tape()->record(std::move(out), [=](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& gx = t.grad(xi);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < count; ++j) gx[i * c + start + j] += g[i * count + j];
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no operands");
  Tape& tape = *parts.front().tape();
  const std::size_t r = parts.front().value().rows();
  std::size_t total = 0;
  std::vector<std::size_t> ids, widths;
  for (const Var& p : parts) {
    same_tape(parts.front(), p);
    if (p.value().rows() != r) {
      throw DimensionError("concat_cols: row count mismatch " +
                           shape_string(parts.front().shape()) + " vs " +
                           shape_string(p.shape()));
    }
    ids.push_back(p.id());
    widths.push_back(p.value().cols());
    total += p.value().cols();
  }
  Tensor out({r, total});
  std::size_t off = 0;
  for (const Var& p : parts) {
    const Tensor& v = p.value();
    const std::size_t w = v.cols();
    for (std::size_t i = 0; i < r; ++i)
      std::copy_n(v.data() + i * w, w, out.data() + i * total + off);
    off += w;
  }
  return tape.record(std::move(out), [=](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    std::size_t off = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      Tensor& gp = t.grad(ids[k]);
      const std::size_t w = widths[k];
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < w; ++j) gp[i * w + j] += g[i * total + off + j];
      off += w;
    }
  });
}

Var segment_mean(Var x, std::size_t groups) {
  const Tensor& in = x.value();
  const std::size_t c = in.cols(), r = in.rows();
  if (groups == 0 || r == 0 || r % groups != 0) {
    throw DimensionError("segment_mean: " + std::to_string(r) +
                         " rows cannot be split into " + std::to_string(groups) +
                         " nonempty groups");
  }
  const std::size_t n = r / groups;
  Tensor out({groups, c});
  std::vector<double> acc(c);
  for (std::size_t gidx = 0; gidx < groups; ++gidx) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const Scalar* row = in.data() + (gidx * n + i) * c;
      for (std::size_t j = 0; j < c; ++j) acc[j] += row[j];
    }
    for (std::size_t j = 0; j < c; ++j)
      out[gidx * c + j] = static_cast<Scalar>(acc[j] / static_cast<double>(n));
  }
  const std::size_t xi = x.id();
  return x.tape()->record(std::move(out), [=](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& gx = t.grad(xi);
    const Scalar inv = Scalar{1} / static_cast<Scalar>(n);
    for (std::size_t gidx = 0; gidx < groups; ++gidx)
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < c; ++j)
          gx[(gidx * n + i) * c + j] += g[gidx * c + j] * inv;
  });
}

Var tile_rows(Var x, std::size_t times) {
  const Tensor& in = x.value();
  const std::size_t c = in.cols(), r = in.rows();
  Tensor out({times * r, c});
  for (std::size_t k = 0; k < times; ++k)
    std::copy_n(in.data(), r * c, out.data() + k * r * c);
  const std::size_t xi = x.id();
  return x.tape()->record(std::move(out), [=](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& gx = t.grad(xi);
    for (std::size_t k = 0; k < times; ++k)
      for (std::size_t i = 0; i < r * c; ++i) gx[i] += g[k * r * c + i];
  });
}

Var gather(Var x, std::span<const std::size_t> indices) {
  const Tensor& in = x.value();
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  Tensor out({idx.size()});
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (idx[k] >= in.numel()) {
      throw DimensionError("gather: index " + std::to_string(idx[k]) +
                           " out of range for " + shape_string(in.shape()));
    }
    out[k] = in[idx[k]];
  }
  const std::size_t xi = x.id();
  return x.tape()->record(std::move(out), [xi, idx](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& gx = t.grad(xi);
    for (std::size_t k = 0; k < idx.size(); ++k) gx[idx[k]] += g[k];
  });
}

Var sum(Var x) {
  const Tensor& in = x.value();
  double acc = 0.0;
  for (std::size_t i = 0; i < in.numel(); ++i) acc += in[i];
  Tensor out({}, std::vector<Scalar>{static_cast<Scalar>(acc)});
  const std::size_t xi = x.id();
  return x.tape()->record(std::move(out), [xi](Tape& t, std::size_t self) {
    const Scalar g = t.grad(self)[0];
    Tensor& gx = t.grad(xi);
    for (std::size_t i = 0; i < gx.numel(); ++i) gx[i] += g;
  });
}

Var mean(Var x) {
  const std::size_t n = x.value().numel();
  if (n == 0) throw DimensionError("mean: empty tensor");
  const Tensor& in = x.value();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += in[i];
  Tensor out({}, std::vector<Scalar>{static_cast<Scalar>(acc / static_cast<double>(n))});
  const std::size_t xi = x.id();
  return x.tape()->record(std::move(out), [xi, n](Tape& t, std::size_t self) {
    const Scalar g = t.grad(self)[0] / static_cast<Scalar>(n);
    Tensor& gx = t.grad(xi);
    for (std::size_t i = 0; i < n; ++i) gx[i] += g;
  });
}

Var linear(Var x, Var weight, Var bias) {
  return add_bias(matmul(x, weight), bias);
}

Var multi_head_self_attention(Var x, const AttentionParams& p,
                              std::size_t n_heads, std::vector<Tensor>* probs) {
  require_matrix("multi_head_self_attention", x.value());
  const std::size_t d_model = x.value().dim(1);
  if (n_heads == 0 || d_model % n_heads != 0) {
    throw ConfigError("multi_head_self_attention: d_model " +
                      std::to_string(d_model) + " is not divisible by " +
                      std::to_string(n_heads) + " heads");
  }
  const std::size_t head_dim = d_model / n_heads;
  const Scalar inv_sqrt = Scalar{1} / std::sqrt(static_cast<Scalar>(head_dim));

  const Var q = linear(x, p.wq, p.bq);
  const Var k = linear(x, p.wk, p.bk);
  const Var v = linear(x, p.wv, p.bv);

  std::vector<Var> heads;
  heads.reserve(n_heads);
  if (probs) probs->clear();
  for (std::size_t h = 0; h < n_heads; ++h) {
    const std::size_t off = h * head_dim;
    const Var qh = slice_cols(q, off, head_dim);
    const Var kh = slice_cols(k, off, head_dim);
    const Var vh = slice_cols(v, off, head_dim);
    const Var scores = scale(matmul(qh, transpose(kh)), inv_sqrt);
    const Var attn = softmax_rows(scores);
    if (probs) probs->push_back(attn.value());
    heads.push_back(matmul(attn, vh));
  }
  const Var merged = n_heads == 1 ? heads.front() : concat_cols(heads);
  return linear(merged, p.wo, p.bo);
}

}  // namespace tempo::ad
