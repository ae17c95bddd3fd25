#ifndef GESTNET_INDRNN_HPP
#define GESTNET_INDRNN_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gestnet/ops.hpp"
#include "gestnet/rng.hpp"
#include "gestnet/tensor.hpp"

namespace gestnet {

// h_t = ReLU(W x_t + u (.) h_{t-1} + b), hidden units recurring independently
struct IndRnnLayerParams {
    Tensor w; // [D_in, N]
    Tensor u; // [N]
    Tensor b; // [N]
};

struct RbiBlockParams {
    BatchNormState bn;   // over the feature axis
    IndRnnLayerParams fwd;
    IndRnnLayerParams bwd;
    Tensor map_w; // [2N, 2N] post-concat weight map
    Tensor map_b; // [2N]
};

struct RbiConfig {
    std::size_t neurons = 512; // per direction
    std::size_t blocks = 6;
    double dropout = 0.2;
    std::size_t clamp_t = 20; // horizon for the recurrent-weight bound
};

struct RbiNetwork {
    RbiConfig config;
    std::size_t joints = 0;
    std::size_t num_classes = 0;
    Tensor proj_w; // [6J, 2N] width-matching input projection
    Tensor proj_b;
    std::vector<RbiBlockParams> blocks;
    Tensor fc_w; // [2N, num_classes]
    Tensor fc_b;

    std::vector<std::pair<std::string, Tensor>> named_parameters();
};

RbiNetwork make_rbi(std::size_t joints, std::size_t num_classes, const RbiConfig& config,
                    Rng& rng);

// x is [B,T,D] or [T,D]; h0 (length N) defaults to zeros
Tensor indrnn_forward(const Tensor& x, const IndRnnLayerParams& layer,
                      const Tensor* h0 = nullptr);

// forward direction, plus the time-reversed pass re-reversed, concatenated
// per timestep: [.., T, 2N]
Tensor bi_indrnn_forward(const Tensor& x, const IndRnnLayerParams& fwd,
                         const IndRnnLayerParams& bwd);

// y = x + dropout(Weight(BiIndRNN(BN(x))))
Tensor rbi_block_forward(const Tensor& x, RbiBlockParams& block, Mode mode, double dropout_rate,
                         std::uint64_t dropout_seed);

// the residual stack alone, on already-projected [B,T,2N] features
Tensor rbi_blocks_forward(const Tensor& x, RbiNetwork& net, Mode mode, std::uint64_t seed);

// project, run the stack, read the last timestep, fully connected: [B,K]
Tensor rbi_logits(const Tensor& feats, RbiNetwork& net, Mode mode, std::uint64_t seed);
Tensor rbi_forward(const Tensor& feats, RbiNetwork& net, Mode mode, std::uint64_t seed);

double recurrent_weight_bound(std::size_t t); // 2^(1/t)

// clips every recurrent weight into [-bound, bound]; call after optimizer steps
void clamp_recurrent_weights(RbiNetwork& net, std::size_t t);

} // namespace gestnet

#endif
