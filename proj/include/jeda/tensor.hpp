#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "jeda/common.hpp"

// Dense tensors with reverse-mode automatic differentiation.
//
// Graphs are define-by-run: every op allocates a fresh node that keeps
// shared ownership of its inputs, so a forward pass builds the graph and
// releasing the loss tensor releases the intermediate nodes. Parameter
// leaves persist across passes and their gradients accumulate across
// backward() calls until reset_grad().

namespace jeda::ad {

using Shape = std::vector<int>;

int64_t shape_size(const Shape& s);

struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;  // sized lazily; empty means "all zero, not yet touched"
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward_fn;  // scatter self.grad into parents' grads
    int64_t id = 0;
    bool requires_grad = false;

    bool is_leaf() const { return parents.empty(); }
    void ensure_grad() {
        if (grad.empty()) grad.assign(value.size(), 0.0);
    }
};

class Tensor {
  public:
    Tensor() = default;

    // Leaf that participates in gradients (network weights etc).
    static Tensor parameter(Shape shape, std::vector<double> values);
    // Leaf excluded from differentiation (inputs, masks, labels).
    static Tensor constant(Shape shape, std::vector<double> values);
    static Tensor scalar(double v) { return constant({1}, {v}); }
    static Tensor zeros(Shape shape);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    int64_t size() const { return static_cast<int64_t>(node_->value.size()); }
    int64_t node_id() const { return node_->id; }
    bool requires_grad() const { return node_->requires_grad; }

    std::span<const double> values() const { return node_->value; }
    // Direct mutation is only meaningful for leaves (init, optimizer updates).
    std::span<double> values_mut() { return node_->value; }

    bool has_grad() const { return !node_->grad.empty(); }
    std::span<const double> grad() const;
    void reset_grad() {
        if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
    }

    double item() const;  // value of a 1-element tensor

    std::shared_ptr<Node> node() const { return node_; }
    explicit Tensor(std::shared_ptr<Node> n) : node_(std::move(n)) {}

  private:
    std::shared_ptr<Node> node_;
};

// --- ops ---

Tensor matmul(const Tensor& a, const Tensor& b);

// Elementwise with right-aligned numpy-style broadcasting.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
// Gradient goes to the selected input; ties select the first argument.
Tensor max_pair(const Tensor& a, const Tensor& b);
Tensor min_pair(const Tensor& a, const Tensor& b);

Tensor neg(const Tensor& x);
Tensor relu(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);  // throws ContractError on non-positive input
Tensor abs(const Tensor& x);
Tensor sqrt(const Tensor& x);
Tensor clamp(const Tensor& x, double lo, double hi);  // pass-through gradient inside [lo, hi]

Tensor scale(const Tensor& x, double c);
Tensor add_scalar(const Tensor& x, double c);

// Row-wise log-softmax over a [batch x classes] tensor, max-subtracted.
Tensor log_softmax(const Tensor& scores);

Tensor sum(const Tensor& x);   // -> [1]
Tensor mean(const Tensor& x);  // -> [1]
// Column means of a [rows x cols] tensor -> [cols]; used by batch norm.
Tensor mean_rows(const Tensor& x);
// out[i] = x[i, idx[i]] for a [batch x classes] tensor -> [batch].
Tensor gather_cols(const Tensor& x, const std::vector<int>& idx);

// Populate gradients of everything reachable from a scalar loss.
// Parameter leaves accumulate across calls; interior nodes are zeroed
// per call.
void backward(const Tensor& loss);

}  // namespace jeda::ad
