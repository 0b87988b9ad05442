#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tempo/autodiff/tape.hpp"

// Differentiable primitives. Every op records one node on the tape of its
// first operand; all operands must live on the same tape.
namespace tempo::ad::inline TEMPO_PRECISION_NS {

// [m x k] * [k x n] -> [m x n]
Var matmul(Var a, Var b);
Var transpose(Var x);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
// Adds a length-cols bias to every row.
Var add_bias(Var x, Var bias);
Var scale(Var x, Scalar factor);
Var add_scalar(Var x, Scalar value);

Var relu(Var x);
// While set, every relu call on this thread appends its activation pattern
// (input > 0) to `pattern`. Used to locate kinks in finite-difference checks.
void set_relu_probe(std::vector<bool>* pattern);
Var sigmoid(Var x);
// log(1 + exp(x)), computed without overflow.
Var softplus(Var x);
Var square(Var x);

// Row-wise normalization over the last dimension followed by gain/bias.
// Mean and variance are accumulated in double.
Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);
Var softmax_rows(Var x);

Var reshape(Var x, Shape shape);
Var slice_cols(Var x, std::size_t start, std::size_t count);
Var concat_cols(std::span<const Var> parts);
// Mean over consecutive blocks of rows: [(groups*n) x c] -> [groups x c].
Var segment_mean(Var x, std::size_t groups);
// Stacks `times` copies of x vertically.
Var tile_rows(Var x, std::size_t times);
// Flat element gather; output shape [indices.size()].
Var gather(Var x, std::span<const std::size_t> indices);

Var sum(Var x);
Var mean(Var x);

// x * w + b with w: [in x out], b: [out].
Var linear(Var x, Var weight, Var bias);

struct AttentionParams {
  Var wq, bq, wk, bk, wv, bv, wo, bo;
};

// Unmasked multi-head scaled dot-product self-attention over the rows of
// x [T x d_model]. If `probs` is non-null it receives one [T x T] attention
// matrix per head.
Var multi_head_self_attention(Var x, const AttentionParams& p,
                              std::size_t n_heads,
                              std::vector<Tensor>* probs = nullptr);

}  // namespace tempo::ad
