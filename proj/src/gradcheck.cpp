#include "gestnet/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gestnet/rng.hpp"

namespace gestnet {

namespace {

double eval_scalar(const std::function<Tensor()>& forward) {
    NoGradGuard guard;
    Tensor out = forward();
    if (out.size() != 1)
        throw std::invalid_argument("finite_diff_check: forward must produce a scalar");
    return out.item();
}

} // namespace

GradCheckReport finite_diff_check(const std::function<Tensor()>& forward,
                                  const std::vector<std::pair<std::string, Tensor>>& params,
                                  double h, std::size_t max_elements_per_param) {
    double f1 = eval_scalar(forward);
    double f2 = eval_scalar(forward);
    if (!(f1 == f2))
        throw std::runtime_error(
            "finite_diff_check: forward is not deterministic (got " + std::to_string(f1) +
            " then " + std::to_string(f2) + "); gradients cannot be checked this way");

    for (const auto& [name, p] : params) {
        (void)name;
        Tensor handle = p; // handles share the node
        handle.zero_grad();
    }
    Tensor loss = forward();
    if (loss.size() != 1)
        throw std::invalid_argument("finite_diff_check: forward must produce a scalar");
    backward(loss);

    std::vector<std::vector<double>> analytic;
    analytic.reserve(params.size());
    for (const auto& [name, p] : params) {
        (void)name;
        const auto* g = p.grad_if_any();
        analytic.push_back(g ? *g : std::vector<double>(p.size(), 0.0));
    }

    GradCheckReport report;
    Rng pick(0x67e5504410b1426fULL);
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor p = params[i].second;
        std::vector<std::size_t> idx;
        if (max_elements_per_param == 0 || p.size() <= max_elements_per_param) {
            idx.resize(p.size());
            for (std::size_t q = 0; q < p.size(); ++q) idx[q] = q;
        } else {
            for (std::size_t q = 0; q < max_elements_per_param; ++q)
                idx.push_back(pick.uniform_index(p.size()));
            std::sort(idx.begin(), idx.end());
            idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
        }
        for (std::size_t q : idx) {
            double saved = p.data()[q];
            p.data()[q] = saved + h;
            double fplus = eval_scalar(forward);
            p.data()[q] = saved - h;
            double fminus = eval_scalar(forward);
            p.data()[q] = saved;
            double numeric = (fplus - fminus) / (2.0 * h);
            double ana = analytic[i][q];
            double abs_err = std::fabs(numeric - ana);
            double denom = std::max({std::fabs(numeric), std::fabs(ana), 1e-8});
            double rel_err = abs_err / denom;
            report.max_abs_err = std::max(report.max_abs_err, abs_err);
            if (rel_err > report.max_rel_err) {
                report.max_rel_err = rel_err;
                report.worst = params[i].first + "[" + std::to_string(q) + "]";
            }
            ++report.checked;
        }
    }
    return report;
}

} // namespace gestnet
