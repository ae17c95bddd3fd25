#include "gestnet/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace gestnet {

Adam::Adam(std::vector<std::pair<std::string, Tensor>> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const auto& [name, p] : params_) {
        (void)name;
        m_.emplace_back(p.size(), 0.0);
        v_.emplace_back(p.size(), 0.0);
    }
}

void Adam::step() {
    ++t_;
    double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        auto& [name, p] = params_[i];
        const auto* g = p.grad_if_any();
        if (!g) continue;
        if (!all_finite(*g))
            throw std::runtime_error("adam: non-finite gradient in parameter '" + name + "'");
        double* x = p.data();
        auto& m = m_[i];
        auto& v = v_[i];
        for (std::size_t q = 0; q < m.size(); ++q) {
            double gq = (*g)[q];
            m[q] = cfg_.beta1 * m[q] + (1.0 - cfg_.beta1) * gq;
            v[q] = cfg_.beta2 * v[q] + (1.0 - cfg_.beta2) * gq * gq;
            double mhat = m[q] / bc1;
            double vhat = v[q] / bc2;
            x[q] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.epsilon);
        }
    }
}

void Adam::zero_grad() {
    for (auto& [name, p] : params_) {
        (void)name;
        p.zero_grad();
    }
}

} // namespace gestnet
