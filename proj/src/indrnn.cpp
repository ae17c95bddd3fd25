#include "gestnet/indrnn.hpp"

#include <cmath>
#include <stdexcept>

#include "gestnet/sagcn.hpp" // glorot_tensor

namespace gestnet {

namespace {

Tensor uniform01_tensor(Shape shape, Rng& rng) {
    std::vector<double> v(numel(shape));
    for (double& x : v) x = rng.uniform();
    return Tensor(std::move(shape), std::move(v), true);
}

Tensor zeros_tensor(Shape shape) { return Tensor(std::move(shape), 0.0, true); }

IndRnnLayerParams make_indrnn_layer(std::size_t d_in, std::size_t n, Rng& rng) {
    IndRnnLayerParams layer;
    layer.w = glorot_tensor({d_in, n}, d_in, n, rng);
    layer.u = uniform01_tensor({n}, rng);
    layer.b = zeros_tensor({n});
    return layer;
}

} // namespace

RbiNetwork make_rbi(std::size_t joints, std::size_t num_classes, const RbiConfig& config,
                    Rng& rng) {
    if (joints == 0) throw std::invalid_argument("rbi: joint count must be positive");
    if (num_classes == 0) throw std::invalid_argument("rbi: class count must be positive");
    if (config.neurons == 0 || config.blocks == 0)
        throw std::invalid_argument("rbi: neurons and blocks must be positive");

    RbiNetwork net;
    net.config = config;
    net.joints = joints;
    net.num_classes = num_classes;

    const std::size_t d_in = 6 * joints;
    const std::size_t width = 2 * config.neurons;

    net.proj_w = glorot_tensor({d_in, width}, d_in, width, rng);
    net.proj_b = zeros_tensor({width});

    net.blocks.resize(config.blocks);
    for (RbiBlockParams& block : net.blocks) {
        block.bn = BatchNormState(width);
        block.fwd = make_indrnn_layer(width, config.neurons, rng);
        block.bwd = make_indrnn_layer(width, config.neurons, rng);
        block.map_w = glorot_tensor({width, width}, width, width, rng);
        block.map_b = zeros_tensor({width});
    }

    net.fc_w = glorot_tensor({width, num_classes}, width, num_classes, rng);
    net.fc_b = zeros_tensor({num_classes});
    return net;
}

std::vector<std::pair<std::string, Tensor>> RbiNetwork::named_parameters() {
    std::vector<std::pair<std::string, Tensor>> out;
    out.emplace_back("proj.w", proj_w);
    out.emplace_back("proj.b", proj_b);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        const std::string p = "block" + std::to_string(i) + ".";
        RbiBlockParams& blk = blocks[i];
        out.emplace_back(p + "bn.scale", blk.bn.scale);
        out.emplace_back(p + "bn.shift", blk.bn.shift);
        out.emplace_back(p + "fwd.w", blk.fwd.w);
        out.emplace_back(p + "fwd.u", blk.fwd.u);
        out.emplace_back(p + "fwd.b", blk.fwd.b);
        out.emplace_back(p + "bwd.w", blk.bwd.w);
        out.emplace_back(p + "bwd.u", blk.bwd.u);
        out.emplace_back(p + "bwd.b", blk.bwd.b);
        out.emplace_back(p + "map.w", blk.map_w);
        out.emplace_back(p + "map.b", blk.map_b);
    }
    out.emplace_back("fc.w", fc_w);
    out.emplace_back("fc.b", fc_b);
    return out;
}

Tensor indrnn_forward(const Tensor& x, const IndRnnLayerParams& layer, const Tensor* h0) {
    const Shape& xs = x.shape();
    if (xs.size() != 2 && xs.size() != 3)
        throw std::invalid_argument("indrnn: input must be [T,D] or [B,T,D]");

    Tensor input = x;
    bool squeeze = false;
    if (xs.size() == 2) {
        input = reshape(x, {1, xs[0], xs[1]});
        squeeze = true;
    }

    Tensor z = linear(input, layer.w, layer.b); // [B,T,N]
    Tensor h;
    if (h0 != nullptr) {
        if (h0->shape() != Shape{layer.u.shape()[0]})
            throw std::invalid_argument("indrnn: h0 length must match the unit count");
        h = indrnn_scan(z, layer.u, *h0);
    } else {
        Tensor zero_h0(Shape{layer.u.shape()[0]});
        h = indrnn_scan(z, layer.u, zero_h0);
    }

    if (squeeze) {
        const Shape& hs = h.shape();
        h = reshape(h, {hs[1], hs[2]});
    }
    return h;
}

Tensor bi_indrnn_forward(const Tensor& x, const IndRnnLayerParams& fwd,
                         const IndRnnLayerParams& bwd) {
    Tensor forward = indrnn_forward(x, fwd);
    Tensor backward = reverse_time(indrnn_forward(reverse_time(x), bwd));
    return concat_last(forward, backward);
}

Tensor rbi_block_forward(const Tensor& x, RbiBlockParams& block, Mode mode, double dropout_rate,
                         std::uint64_t dropout_seed) {
    Tensor normed = batch_norm(x, block.bn, /*channel_axis=*/x.shape().size() - 1, mode);
    Tensor recur = bi_indrnn_forward(normed, block.fwd, block.bwd);
    Tensor mapped = linear(recur, block.map_w, block.map_b);
    Tensor dropped = dropout(mapped, dropout_rate, mode, dropout_seed);
    return add(x, dropped);
}

Tensor rbi_blocks_forward(const Tensor& x, RbiNetwork& net, Mode mode, std::uint64_t seed) {
    Tensor h = x;
    for (std::size_t i = 0; i < net.blocks.size(); ++i) {
        const std::uint64_t block_seed = mix_seed(seed, 0x72626921ULL, i);
        h = rbi_block_forward(h, net.blocks[i], mode, net.config.dropout, block_seed);
    }
    return h;
}

Tensor rbi_logits(const Tensor& feats, RbiNetwork& net, Mode mode, std::uint64_t seed) {
    const Shape& fs = feats.shape();
    if (fs.size() != 3)
        throw std::invalid_argument("rbi: features must be [B,T,6J]");
    if (fs[2] != 6 * net.joints)
        throw std::invalid_argument("rbi: feature width does not match 6x joint count");

    Tensor h = linear(feats, net.proj_w, net.proj_b);
    h = rbi_blocks_forward(h, net, mode, seed);
    Tensor last = select_last_time(h); // [B,2N]
    return linear(last, net.fc_w, net.fc_b);
}

Tensor rbi_forward(const Tensor& feats, RbiNetwork& net, Mode mode, std::uint64_t seed) {
    return softmax_last(rbi_logits(feats, net, mode, seed));
}

double recurrent_weight_bound(std::size_t t) {
    if (t == 0) throw std::invalid_argument("recurrent weight bound: horizon must be positive");
    return std::exp2(1.0 / static_cast<double>(t));
}

void clamp_recurrent_weights(RbiNetwork& net, std::size_t t) {
    const double bound = recurrent_weight_bound(t);
    for (RbiBlockParams& block : net.blocks) {
        for (Tensor* u : {&block.fwd.u, &block.bwd.u}) {
            for (double& v : u->values()) {
                if (v > bound) v = bound;
                if (v < -bound) v = -bound;
            }
        }
    }
}

} // namespace gestnet
