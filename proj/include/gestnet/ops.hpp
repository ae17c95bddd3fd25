#ifndef GESTNET_OPS_HPP
#define GESTNET_OPS_HPP

#include <cstdint>

#include "gestnet/tensor.hpp"

namespace gestnet {

enum class Mode { train, infer };

// --- dense kernels -----------------------------------------------------------

// C(MxN) = op(A)*op(B) + beta*C, row-major buffers. The one routine all
// matrix products funnel through.
void gemm(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
          std::size_t n, bool trans_a = false, bool trans_b = false, double beta = 0.0);

// --- elementwise and linear --------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b);
// sum of same-shaped terms accumulated in argument order, as one graph node
Tensor add_n(const std::vector<Tensor>& terms);
Tensor scale(const Tensor& a, double c);
Tensor relu(const Tensor& x);

// weighted sum with fixed coefficients; handy scalar reducer for gradient checks
Tensor weighted_sum(const Tensor& x, const std::vector<double>& coeffs);
Tensor sum_all(const Tensor& x);

// same data, new extents (sizes must agree)
Tensor reshape(const Tensor& x, Shape shape);

// rank-2 product [M,K]x[K,N]
Tensor matmul(const Tensor& a, const Tensor& b);

// y = x.W + b over the last axis; x [..., D_in], W [D_in, D_out], b [D_out]
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);

// softmax over the last axis (any rank >= 1); rows shifted by their max
Tensor softmax_last(const Tensor& x);
// spec surface: rank-2 row softmax
Tensor softmax_rows(const Tensor& x);

// mean cross-entropy of logits [B,K] against integer labels; scalar output
Tensor cross_entropy(const Tensor& logits, const std::vector<std::size_t>& labels);

// --- graph-feature ops (layout [B, C, T, J]) ----------------------------------

// 1x1 channel map: W [C_out, C_in] applied position-wise
Tensor channel_map(const Tensor& x, const Tensor& w);

// joint mixing: y[b,c,t,i] = sum_j M[i,j] x[b,c,t,j]; M is [J,J] shared or
// [B,J,J] per sample. Gradient flows into M only when it requires grad.
Tensor joint_mix(const Tensor& x, const Tensor& m);

// pairwise joint inner products over channels and time:
// S[b,i,j] = sum_{c,t} x[b,c,t,i] x[b,c,t,j]
Tensor gram_joints(const Tensor& x);

// convolution along the time axis only, zero padding floor(kt/2);
// x [B,C_in,T,J], kernel [C_out,C_in,kt]; output time ceil(T/stride)
Tensor temporal_conv(const Tensor& x, const Tensor& kernel, std::size_t stride_t);

// global average over time and joints: [B,C,T,J] -> [B,C]
Tensor mean_pool_tj(const Tensor& x);

// --- sequence ops (layout [B, T, F]) ------------------------------------------

Tensor reverse_time(const Tensor& x);
Tensor concat_last(const Tensor& a, const Tensor& b);
Tensor select_last_time(const Tensor& x); // [B,T,F] -> [B,F]

// IndRNN scan: h_t = relu(z_t + u (.) h_{t-1}), h_0 broadcast from [N]
Tensor indrnn_scan(const Tensor& z, const Tensor& u, const Tensor& h0);

// --- batch normalization -------------------------------------------------------

struct BatchNormState {
    Tensor scale;        // per-channel, learned
    Tensor shift;        // per-channel, learned
    std::vector<double> running_mean;
    std::vector<double> running_var;
    double momentum = 0.9;
    double epsilon = 1e-5;

    explicit BatchNormState(std::size_t channels = 0);
    std::size_t channels() const { return running_mean.size(); }
};

// channel_axis: 1 for [B,C,T,J], 2 for [B,T,F]. Train mode normalizes by batch
// statistics and updates running stats; infer mode reads running stats only.
Tensor batch_norm(const Tensor& x, BatchNormState& state, std::size_t channel_axis, Mode mode);

// --- dropout -------------------------------------------------------------------

// Train mode zeroes elements with probability `rate` and rescales survivors by
// 1/(1-rate); infer mode is the identity. The mask is a pure function of seed.
Tensor dropout(const Tensor& x, double rate, Mode mode, std::uint64_t seed);

} // namespace gestnet

#endif
