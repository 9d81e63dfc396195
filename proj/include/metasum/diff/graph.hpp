#pragma once

#include "metasum/diff/tensor.hpp"

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace metasum::diff {

struct Node {
    Tensor value;
    Tensor grad;  // allocated on first use, same shape as value
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward;
    const char* op = "leaf";
};

/// Handle to a graph node. Copies share the node.
class Var {
public:
    Var() = default;
    explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

    const Tensor& value() const { return node_->value; }
    Tensor& value() { return node_->value; }
    const Shape& shape() const { return node_->value.shape(); }
    std::size_t size() const { return node_->value.size(); }
    bool requires_grad() const { return node_->requires_grad; }

    /// Gradient; zeros if nothing has been accumulated yet.
    const Tensor& grad() const;
    void zero_grad();

    double item() const { return node_->value.item(); }

    const std::shared_ptr<Node>& node() const { return node_; }
    explicit operator bool() const { return static_cast<bool>(node_); }

private:
    std::shared_ptr<Node> node_;
};

Var parameter(Tensor value);
Var constant(Tensor value);

/// Ops built while a guard is alive record no backward rules and keep no parents.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

bool grad_enabled();

/// Reverse-mode sweep from a single-element loss. Intermediate gradients are reset
/// on every call; leaf gradients accumulate across calls until zero_grad.
void backward(const Var& loss);

// ---- primitives ------------------------------------------------------------

/// a[..., k] x b[k, n] -> [..., n]
Var matmul(const Var& a, const Var& b);
/// a[B, m, k] x b[B, k, n] -> [B, m, n]; with transpose_b, b is [B, n, k].
Var batched_matmul(const Var& a, const Var& b, bool transpose_b = false);

/// Same shape, or b's shape is a trailing suffix of a's (broadcast over leading axes).
Var add(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double factor);

/// Concatenation along the last axis; leading shapes must agree.
Var concat(std::span<const Var> parts);
Var slice_last(const Var& a, std::size_t start, std::size_t length);
/// a[B, T, H] -> [B, H] at time t.
Var time_step(const Var& a, std::size_t t);
/// T tensors of [B, H] -> [B, T, H].
Var stack_steps(std::span<const Var> steps);
Var reshape(const Var& a, Shape shape);

Var sigmoid(const Var& a);
Var tanh(const Var& a);
Var relu(const Var& a);

/// Softmax over the last axis restricted to mask == 1. The mask has a's shape, or
/// is [B, T] for a of shape [B, M, T] (a key mask shared by every row). Fully
/// masked rows produce zeros.
Var masked_softmax(const Var& a, const Tensor& mask);

/// Rows of table[V, d] picked by indices; the result has shape leading ++ [d].
Var embedding_lookup(const Var& table, std::span<const std::size_t> indices, Shape leading);

/// Mean over time of a[B, T, H] where mask[B, T] == 1; all-masked rows pool to zero.
Var masked_mean_pool(const Var& a, const Tensor& mask);

Var layer_norm(const Var& a, const Var& gamma, const Var& beta, double eps = 1e-5);

Var sum(const Var& a);
Var mean(const Var& a);

inline constexpr double bce_clamp = 1e-7;

/// -mean(t ln p + (1 - t) ln(1 - p)) with p clamped to [1e-7, 1 - 1e-7].
Var bce_loss(const Var& probabilities, const Tensor& targets);

} // namespace metasum::diff
