#ifndef GESTNET_SAGCN_HPP
#define GESTNET_SAGCN_HPP

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gestnet/ops.hpp"
#include "gestnet/rng.hpp"
#include "gestnet/tensor.hpp"

namespace gestnet {

// The three partition matrices plus room for per-sample variants: a0 is the
// shared [J,J] identity (already normalized), a1/a2 are [J,J] or [B,J,J].
struct AdjacencyTensors {
    Tensor a0;
    Tensor a1;
    Tensor a2;
};

struct SagcnUnitParams {
    Tensor w_attention;           // [C_out, C_in], the attention embedding
    std::array<Tensor, 3> w_part; // graph-conv channel maps, one per partition
    Tensor w_global;              // channel map feeding the attention branch
    Tensor tcn_kernel;            // [C_out, C_out, kt]
    Tensor shortcut_kernel;       // [C_out, C_in, 1]; undefined => identity shortcut
    BatchNormState bn_spatial;    // after the spatial convolution
    BatchNormState bn_temporal;   // after the temporal convolution
    std::size_t stride_t = 1;
};

struct SagcnConfig {
    std::vector<std::size_t> channels = {64, 64, 128, 128, 256, 256};
    std::size_t stride2_unit = 3; // 0-based index of the time-halving unit
    std::size_t kt = 9;
    bool unit_shortcut = true;
    double dropout = 0.5;
};

struct SagcnNetwork {
    SagcnConfig config;
    std::size_t joints = 0;
    std::size_t num_classes = 0;
    std::vector<SagcnUnitParams> units;
    Tensor fc_w; // [C_last, num_classes]
    Tensor fc_b;

    std::vector<std::pair<std::string, Tensor>> named_parameters();
};

SagcnNetwork make_sagcn(std::size_t joints, std::size_t num_classes, const SagcnConfig& config,
                        Rng& rng);

// A_g: embed channels with w_attention, correlate joints over channels and
// time, row-softmax. x is [B,C,T,J] (or [C,T,J], collapsing the result).
Tensor attention_map(const Tensor& x, const Tensor& w_attention);

// throws when any row of [.., J, J] deviates from sum 1 by more than tol
void require_row_stochastic(const Tensor& a, double tol = 1e-6);

// f_out = ReLU( sum_k W_k f A_k + W_g f A_g )
Tensor sagcn_spatial(const Tensor& x, const AdjacencyTensors& adj, const Tensor& a_g,
                     const SagcnUnitParams& unit);

// full unit: spatial conv, BN, temporal conv, BN, shortcut add, ReLU, dropout.
// unit_shortcut=false drops the shortcut term entirely.
Tensor sagcn_unit_forward(const Tensor& x, SagcnUnitParams& unit, const AdjacencyTensors& adj,
                          Mode mode, double dropout_rate, std::uint64_t dropout_seed,
                          bool unit_shortcut = true);

// six units, global average pool, fully connected — pre-softmax scores [B,K]
Tensor sagcn_logits(const Tensor& coords, SagcnNetwork& net, const AdjacencyTensors& adj,
                    Mode mode, std::uint64_t seed);
// class probabilities [B,K]
Tensor sagcn_forward(const Tensor& coords, SagcnNetwork& net, const AdjacencyTensors& adj,
                     Mode mode, std::uint64_t seed);

// the per-unit attention maps of one forward pass (infer mode), for export
std::vector<Tensor> sagcn_attention_maps(const Tensor& coords, SagcnNetwork& net,
                                         const AdjacencyTensors& adj);

double glorot_limit(std::size_t fan_in, std::size_t fan_out);
Tensor glorot_tensor(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng);

} // namespace gestnet

#endif
