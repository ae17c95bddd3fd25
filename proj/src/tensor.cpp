#include "gestnet/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace gestnet {

std::size_t numel(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << "x";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

bool same_shape(const Shape& a, const Shape& b) { return a == b; }

std::vector<double>& Node::ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    return grad;
}

Tensor::Tensor(Shape shape, double fill, bool requires_grad) {
    n_ = std::make_shared<Node>();
    n_->shape = std::move(shape);
    n_->value.assign(numel(n_->shape), fill);
    n_->requires_grad = requires_grad;
}

Tensor::Tensor(Shape shape, std::vector<double> values, bool requires_grad) {
    if (numel(shape) != values.size())
        throw std::invalid_argument("tensor: " + std::to_string(values.size()) +
                                    " values for shape " + shape_str(shape));
    n_ = std::make_shared<Node>();
    n_->shape = std::move(shape);
    n_->value = std::move(values);
    n_->requires_grad = requires_grad;
}

Tensor Tensor::scalar(double v) { return Tensor(Shape{}, std::vector<double>{v}); }

double Tensor::item() const {
    if (n_->value.size() != 1)
        throw std::logic_error("item() on tensor of size " + std::to_string(n_->value.size()));
    return n_->value[0];
}

double Tensor::at(std::initializer_list<std::size_t> idx) const {
    if (idx.size() != n_->shape.size())
        throw std::invalid_argument("at(): rank mismatch");
    std::size_t flat = 0;
    std::size_t i = 0;
    for (std::size_t v : idx) {
        if (v >= n_->shape[i]) throw std::out_of_range("at(): index out of range");
        flat = flat * n_->shape[i] + v;
        ++i;
    }
    return n_->value[flat];
}

void Tensor::zero_grad() { n_->grad.assign(n_->value.size(), 0.0); }

namespace {
thread_local bool g_grad_enabled = true;
} // namespace

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

void backward(const Tensor& loss, bool release_graph) {
    if (!loss.defined()) throw std::invalid_argument("backward: undefined tensor");
    if (loss.size() != 1) throw std::invalid_argument("backward: loss must be scalar");

    // post-order DFS over the recorded graph
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, std::size_t>> stack;
    stack.emplace_back(loss.node().get(), 0);
    seen.insert(loss.node().get());
    while (!stack.empty()) {
        Node* node = stack.back().first;
        std::size_t next = stack.back().second;
        if (next < node->parents.size()) {
            stack.back().second = next + 1;
            Node* p = node->parents[next].get();
            if (p->requires_grad && !seen.count(p)) {
                seen.insert(p);
                stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    loss.node()->ensure_grad();
    loss.node()->grad[0] += 1.0;
    Node* root = loss.node().get();
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backward_fn && !n->grad.empty()) n->backward_fn(*n);
        // interior buffers have served every consumer by now (reverse
        // topological order); leaves keep their grads for the optimizer
        if (release_graph && n->backward_fn && n != root) {
            std::vector<double>().swap(n->value);
            std::vector<double>().swap(n->grad);
        }
    }
}

Tensor make_op(Shape shape, std::vector<double> value, std::vector<Tensor> parents,
               std::function<void(Node&)> backward_fn) {
    if (numel(shape) != value.size())
        throw std::logic_error("make_op: value size does not match shape");
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->value = std::move(value);
    if (grad_enabled()) {
        bool needs = false;
        for (const auto& p : parents)
            if (p.defined() && p.requires_grad()) needs = true;
        if (needs) {
            n->requires_grad = true;
            n->parents.reserve(parents.size());
            for (auto& p : parents)
                if (p.defined()) n->parents.push_back(p.node());
            n->backward_fn = std::move(backward_fn);
        }
    }
    return Tensor(std::move(n));
}

bool all_finite(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

void check_finite(const std::vector<double>& v, const char* what) {
    if (!all_finite(v))
        throw std::runtime_error(std::string(what) + ": non-finite values");
}

} // namespace gestnet
