#pragma once

// Differentiable tensor ops recorded on a Tape. Only the operations the
// model actually uses; everything maps finite inputs to finite outputs.
//
// Layout conventions:
//   images  H x W x C, row-major
//   kernels kh x kw x C x K
//   matrices rows x cols, row-major
//   scalars shape [1]

#include <span>

#include "voe/tape.hpp"

namespace voe::num {

enum class Act { none, relu, tanh, sigmoid };

// --- image ops ---

// "Same" zero padding; output spatial extent = ceil(in / stride) per axis.
// The optional bias (length K) is added per output channel.
Var conv2d(Tape& t, Var input, Var kernels, int stride_y, int stride_x);
Var conv2d(Tape& t, Var input, Var kernels, Var bias, int stride_y, int stride_x);

// Nearest-neighbour 2x upsampling of an H x W x C tensor.
Var upsample2x(Tape& t, Var input);

// --- dense / matrix ops ---

// act(W x + b). W is rows x cols with cols == len(x); b is rows.
Var dense(Tape& t, Var x, Var w, Var b, Act act);

// m (R x C) * v (C) -> R
Var matvec(Tape& t, Var m, Var v);

// m^T (R x C becomes C) * v (R) -> C; used for similarity-weighted reads.
Var matvec_t(Tape& t, Var m, Var v);

// Row-wise cosine similarity between each row of m and a key vector.
// Denominator uses (|row|+eps)(|key|+eps) so all-zero rows are safe.
Var cosine_similarity_rows(Tape& t, Var m, Var key, double eps = 1e-8);

// Copy of m with one row replaced by v. Gradient flows to v and to the
// untouched rows of m; the overwritten row's gradient is dropped.
Var slot_write(Tape& t, Var m, int row, Var v);

// --- elementwise ---

Var add(Tape& t, Var a, Var b);
Var sub(Tape& t, Var a, Var b);
Var mul(Tape& t, Var a, Var b);
Var scale(Tape& t, Var a, double k);
Var affine(Tape& t, Var a, double k, double c);  // k*a + c
Var relu(Tape& t, Var a);
Var tanh_op(Tape& t, Var a);
Var sigmoid(Tape& t, Var a);
Var softplus(Tape& t, Var a);
// Clamp to [lo, hi]; subgradient 0 outside and at the boundary.
Var clip(Tape& t, Var a, double lo, double hi);

// --- shape plumbing ---

// Tiles a length-C vector over an H x W grid into an H x W x C tensor;
// used to add per-channel conv biases.
Var tile_channels(Tape& t, Var channels, int h, int w);

Var concat(Tape& t, std::span<const Var> parts);
Var concat(Tape& t, Var a, Var b);
Var concat(Tape& t, Var a, Var b, Var c);
Var slice(Tape& t, Var a, int offset, int len);
Var reshape(Tape& t, Var a, Shape s);

// --- reductions / distributions ---

Var sum(Tape& t, Var a);                // -> scalar
Var softmax(Tape& t, Var a);            // vector -> vector
Var dot(Tape& t, Var a, Var b);         // -> scalar

// KL(p || q) for diagonal Gaussians given as (mean, std) vectors:
//   sum_i ln(sq/sp) + (sp^2 + (mp-mq)^2) / (2 sq^2) - 1/2
Var gaussian_kl_op(Tape& t, Var mean_p, Var std_p, Var mean_q, Var std_q);

// Bernoulli log likelihood, stable in logit space:
//   sum_i x*l - softplus(l).  Target is a constant (not differentiated)
// and must lie in [0,1].
Var bernoulli_ll_op(Tape& t, const Tensor& target, Var logits);

}  // namespace voe::num
