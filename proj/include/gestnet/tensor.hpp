#ifndef GESTNET_TENSOR_HPP
#define GESTNET_TENSOR_HPP

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <string>
#include <vector>

namespace gestnet {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);
bool same_shape(const Shape& a, const Shape& b);

// One node of a recorded computation graph. A fresh graph is recorded per
// forward pass; parameters are long-lived leaf nodes shared across graphs.
struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad; // sized lazily during backward
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward_fn; // accumulates into parents' grads

    std::vector<double>& ensure_grad();
};

// Value-semantics handle to a graph node. Copies share the node.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0, bool requires_grad = false);
    Tensor(Shape shape, std::vector<double> values, bool requires_grad = false);
    static Tensor scalar(double v);

    bool defined() const { return static_cast<bool>(n_); }
    const Shape& shape() const { return n_->shape; }
    std::size_t rank() const { return n_->shape.size(); }
    std::size_t size() const { return n_->value.size(); }

    double* data() { return n_->value.data(); }
    const double* data() const { return n_->value.data(); }
    std::vector<double>& values() { return n_->value; }
    const std::vector<double>& values() const { return n_->value; }

    // scalar (or single-element) extraction
    double item() const;

    double at(std::initializer_list<std::size_t> idx) const;

    bool requires_grad() const { return n_->requires_grad; }

    std::vector<double>& grad() { return n_->ensure_grad(); }
    const std::vector<double>* grad_if_any() const {
        return n_->grad.empty() ? nullptr : &n_->grad;
    }
    void zero_grad();

    std::shared_ptr<Node> node() const { return n_; }
    explicit Tensor(std::shared_ptr<Node> n) : n_(std::move(n)) {}

private:
    std::shared_ptr<Node> n_;
};

// --- autograd ---------------------------------------------------------------

bool grad_enabled();

// RAII guard that disables graph recording in scope (inference, finite
// differences). Nestable.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool prev_;
};

// Runs reverse-mode accumulation from a scalar loss. Grads of all reachable
// requires_grad nodes are accumulated (not cleared first). With release_graph,
// interior value/grad buffers are freed as soon as they have been consumed —
// read any activations you still need before calling.
void backward(const Tensor& loss, bool release_graph = false);

// Helper for implementing ops: wires value, parents and the backward closure,
// honoring grad mode. The closure is dropped if no parent needs gradients.
Tensor make_op(Shape shape, std::vector<double> value, std::vector<Tensor> parents,
               std::function<void(Node&)> backward_fn);

bool all_finite(const std::vector<double>& v);
void check_finite(const std::vector<double>& v, const char* what);

} // namespace gestnet

#endif
