#ifndef GESTNET_GRADCHECK_HPP
#define GESTNET_GRADCHECK_HPP

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "gestnet/tensor.hpp"

namespace gestnet {

struct GradCheckReport {
    double max_rel_err = 0.0;
    double max_abs_err = 0.0;
    std::size_t checked = 0;
    std::string worst; // "param[flat_index]" of the largest relative error
};

// Central-difference check of the recorded gradients of `forward` (a scalar
// function of the given parameters). The forward is evaluated twice up front;
// if the two values differ the forward is not a deterministic function of the
// parameters (an unseeded dropout, say) and the check throws instead of
// reporting meaningless mismatches. With max_elements_per_param > 0 only a
// pinned pseudo-random subset of each parameter is probed.
GradCheckReport finite_diff_check(const std::function<Tensor()>& forward,
                                  const std::vector<std::pair<std::string, Tensor>>& params,
                                  double h = 1e-5, std::size_t max_elements_per_param = 0);

} // namespace gestnet

#endif
