#include "gestnet/sagcn.hpp"

#include <cmath>
#include <stdexcept>

namespace gestnet {

double glorot_limit(std::size_t fan_in, std::size_t fan_out) {
    return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

Tensor glorot_tensor(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    double limit = glorot_limit(fan_in, fan_out);
    std::vector<double> v(numel(shape));
    for (auto& x : v) x = rng.uniform(-limit, limit);
    return Tensor(std::move(shape), std::move(v), true);
}

SagcnNetwork make_sagcn(std::size_t joints, std::size_t num_classes, const SagcnConfig& config,
                        Rng& rng) {
    if (config.channels.empty()) throw std::invalid_argument("make_sagcn: empty channel plan");
    if (config.kt % 2 == 0) throw std::invalid_argument("make_sagcn: kt must be odd");
    SagcnNetwork net;
    net.config = config;
    net.joints = joints;
    net.num_classes = num_classes;

    std::size_t c_in = 3;
    for (std::size_t i = 0; i < config.channels.size(); ++i) {
        std::size_t c_out = config.channels[i];
        SagcnUnitParams unit;
        unit.stride_t = i == config.stride2_unit ? 2 : 1;
        unit.w_attention = glorot_tensor({c_out, c_in}, c_in, c_out, rng);
        for (auto& w : unit.w_part) w = glorot_tensor({c_out, c_in}, c_in, c_out, rng);
        unit.w_global = glorot_tensor({c_out, c_in}, c_in, c_out, rng);
        unit.tcn_kernel = glorot_tensor({c_out, c_out, config.kt}, c_out * config.kt,
                                        c_out * config.kt, rng);
        if (config.unit_shortcut && (c_in != c_out || unit.stride_t != 1))
            unit.shortcut_kernel = glorot_tensor({c_out, c_in, 1}, c_in, c_out, rng);
        unit.bn_spatial = BatchNormState(c_out);
        unit.bn_temporal = BatchNormState(c_out);
        net.units.push_back(std::move(unit));
        c_in = c_out;
    }
    net.fc_w = glorot_tensor({c_in, num_classes}, c_in, num_classes, rng);
    net.fc_b = Tensor(Shape{num_classes}, 0.0, true);
    return net;
}

std::vector<std::pair<std::string, Tensor>> SagcnNetwork::named_parameters() {
    std::vector<std::pair<std::string, Tensor>> out;
    for (std::size_t i = 0; i < units.size(); ++i) {
        auto& u = units[i];
        std::string p = "unit" + std::to_string(i) + ".";
        out.emplace_back(p + "w_attention", u.w_attention);
        for (std::size_t k = 0; k < 3; ++k)
            out.emplace_back(p + "w_part" + std::to_string(k), u.w_part[k]);
        out.emplace_back(p + "w_global", u.w_global);
        out.emplace_back(p + "tcn_kernel", u.tcn_kernel);
        if (u.shortcut_kernel.defined()) out.emplace_back(p + "shortcut_kernel", u.shortcut_kernel);
        out.emplace_back(p + "bn_spatial.scale", u.bn_spatial.scale);
        out.emplace_back(p + "bn_spatial.shift", u.bn_spatial.shift);
        out.emplace_back(p + "bn_temporal.scale", u.bn_temporal.scale);
        out.emplace_back(p + "bn_temporal.shift", u.bn_temporal.shift);
    }
    out.emplace_back("fc.w", fc_w);
    out.emplace_back("fc.b", fc_b);
    return out;
}

Tensor attention_map(const Tensor& x, const Tensor& w_attention) {
    bool single = x.rank() == 3;
    Tensor in = single ? reshape(x, {1, x.shape()[0], x.shape()[1], x.shape()[2]}) : x;
    if (in.rank() != 4) throw std::invalid_argument("attention_map: [B,C,T,J] input required");
    Tensor embedded = channel_map(in, w_attention);
    Tensor scores = gram_joints(embedded);
    Tensor a_g = softmax_last(scores);
    if (single) {
        std::size_t j = a_g.shape()[2];
        return reshape(a_g, {j, j});
    }
    return a_g;
}

void require_row_stochastic(const Tensor& a, double tol) {
    std::size_t width = a.shape().back();
    std::size_t rows = a.size() / width;
    const double* p = a.data();
    for (std::size_t r = 0; r < rows; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < width; ++c) s += p[r * width + c];
        if (!(std::fabs(s - 1.0) <= tol))
            throw std::runtime_error("attention map row " + std::to_string(r) +
                                     " sums to " + std::to_string(s) + ", expected 1");
    }
}

Tensor sagcn_spatial(const Tensor& x, const AdjacencyTensors& adj, const Tensor& a_g,
                     const SagcnUnitParams& unit) {
    std::vector<Tensor> terms;
    terms.push_back(joint_mix(channel_map(x, unit.w_part[0]), adj.a0));
    terms.push_back(joint_mix(channel_map(x, unit.w_part[1]), adj.a1));
    terms.push_back(joint_mix(channel_map(x, unit.w_part[2]), adj.a2));
    terms.push_back(joint_mix(channel_map(x, unit.w_global), a_g));
    return relu(add_n(terms));
}

Tensor sagcn_unit_forward(const Tensor& x, SagcnUnitParams& unit, const AdjacencyTensors& adj,
                          Mode mode, double dropout_rate, std::uint64_t dropout_seed,
                          bool unit_shortcut) {
    Tensor a_g = attention_map(x, unit.w_attention);
    require_row_stochastic(a_g);

    Tensor s = sagcn_spatial(x, adj, a_g, unit);
    Tensor b1 = batch_norm(s, unit.bn_spatial, 1, mode);
    Tensor c = temporal_conv(b1, unit.tcn_kernel, unit.stride_t);
    Tensor b2 = batch_norm(c, unit.bn_temporal, 1, mode);

    Tensor pre;
    if (!unit_shortcut) {
        pre = b2;
    } else if (unit.shortcut_kernel.defined()) {
        pre = add(b2, temporal_conv(x, unit.shortcut_kernel, unit.stride_t));
    } else {
        if (x.shape()[1] != b2.shape()[1] || unit.stride_t != 1)
            throw std::logic_error("sagcn unit: identity shortcut with mismatched extents");
        pre = add(b2, x);
    }
    Tensor y = relu(pre);
    return dropout(y, dropout_rate, mode, dropout_seed);
}

Tensor sagcn_logits(const Tensor& coords, SagcnNetwork& net, const AdjacencyTensors& adj,
                    Mode mode, std::uint64_t seed) {
    if (coords.rank() != 4 || coords.shape()[1] != 3)
        throw std::invalid_argument("sagcn: input must be [B,3,T,J] coordinates");
    if (coords.shape()[3] != net.joints)
        throw std::invalid_argument("sagcn: joint count mismatch");
    Tensor h = coords;
    for (std::size_t i = 0; i < net.units.size(); ++i)
        h = sagcn_unit_forward(h, net.units[i], adj, mode, net.config.dropout,
                               mix_seed(seed, 0x5361676376ULL, i), net.config.unit_shortcut);
    Tensor pooled = mean_pool_tj(h);
    return linear(pooled, net.fc_w, net.fc_b);
}

Tensor sagcn_forward(const Tensor& coords, SagcnNetwork& net, const AdjacencyTensors& adj,
                     Mode mode, std::uint64_t seed) {
    return softmax_last(sagcn_logits(coords, net, adj, mode, seed));
}

std::vector<Tensor> sagcn_attention_maps(const Tensor& coords, SagcnNetwork& net,
                                         const AdjacencyTensors& adj) {
    NoGradGuard guard;
    std::vector<Tensor> maps;
    Tensor h = coords;
    for (std::size_t i = 0; i < net.units.size(); ++i) {
        maps.push_back(attention_map(h, net.units[i].w_attention));
        h = sagcn_unit_forward(h, net.units[i], adj, Mode::infer, net.config.dropout, 0,
                               net.config.unit_shortcut);
    }
    return maps;
}

} // namespace gestnet
