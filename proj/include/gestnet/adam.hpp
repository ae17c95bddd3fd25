#ifndef GESTNET_ADAM_HPP
#define GESTNET_ADAM_HPP

#include <string>
#include <utility>
#include <vector>

#include "gestnet/tensor.hpp"

namespace gestnet {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// Adam with bias correction. Parameters are named so a non-finite gradient can
// be pinpointed in the abort message.
class Adam {
public:
    Adam(std::vector<std::pair<std::string, Tensor>> params, AdamConfig cfg = {});

    // applies one update from the currently accumulated grads; parameters with
    // no grad buffer are left untouched. Throws on non-finite gradients.
    void step();

    void zero_grad();

    double lr() const { return cfg_.lr; }
    void set_lr(double lr) { cfg_.lr = lr; }
    std::size_t steps() const { return t_; }

    const std::vector<std::pair<std::string, Tensor>>& params() const { return params_; }

private:
    std::vector<std::pair<std::string, Tensor>> params_;
    AdamConfig cfg_;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
    std::size_t t_ = 0;
};

} // namespace gestnet

#endif
