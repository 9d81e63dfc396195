#include "metasum/diff/graph.hpp"

#include "metasum/diff/kernels.hpp"
#include "metasum/error.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace metasum::diff {

namespace {

thread_local bool g_grad_enabled = true;

Tensor& grad_of(Node& n)
{
    if (n.grad.size() != n.value.size() || n.grad.shape() != n.value.shape())
        n.grad = Tensor(n.value.shape());
    return n.grad;
}

[[noreturn]] void shape_error(const char* op, const std::string& detail)
{
    fail(ErrorKind::shape, std::string(op) + ": " + detail);
}

/// Creates an op node; parents and the backward rule are dropped when no input needs a gradient.
Var make_result(Tensor value, const char* op, std::vector<std::shared_ptr<Node>> parents,
                std::function<void(Node&)> rule)
{
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->op = op;
    const bool needs = g_grad_enabled
                       && std::any_of(parents.begin(), parents.end(), [](const auto& p) { return p->requires_grad; });
    if (needs) {
        n->requires_grad = true;
        n->parents = std::move(parents);
        n->backward = std::move(rule);
    }
    return Var(std::move(n));
}

bool wants(const Node& self, std::size_t i) { return self.parents[i]->requires_grad; }

} // namespace

const Tensor& Var::grad() const { return grad_of(*node_); }

void Var::zero_grad()
{
    if (!node_->grad.empty())
        node_->grad.fill(0.0);
}

Var parameter(Tensor value)
{
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->requires_grad = true;
    return Var(std::move(n));
}

Var constant(Tensor value)
{
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    return Var(std::move(n));
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_enabled() { return g_grad_enabled; }

void backward(const Var& loss)
{
    require(static_cast<bool>(loss), ErrorKind::contract, "backward: null loss");
    require(loss.size() == 1, ErrorKind::contract,
            "backward: loss must be a single element, got shape " + to_string(loss.shape()));
    Node* root = loss.node().get();
    if (!root->requires_grad)
        return;

    // Iterative post-order DFS; `order` ends up parents-before-children.
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, std::size_t>> stack{{root, 0}};
    visited.insert(root);
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Node* p = node->parents[next++].get();
            if (p->requires_grad && visited.insert(p).second)
                stack.emplace_back(p, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    for (Node* n : order)
        if (n->backward)
            grad_of(*n).fill(0.0);
    grad_of(*root)[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it)
        if ((*it)->backward)
            (*it)->backward(**it);
}

// ---- primitives ------------------------------------------------------------

Var matmul(const Var& a, const Var& b)
{
    const auto& as = a.shape();
    const auto& bs = b.shape();
    if (as.empty() || bs.size() != 2 || as.back() != bs[0])
        shape_error("matmul", to_string(as) + " x " + to_string(bs));
    const std::size_t k = bs[0], n = bs[1], m = a.size() / k;
    Shape out_shape = as;
    out_shape.back() = n;
    Tensor out(out_shape);
    kernels::gemm(a.value().data(), b.value().data(), out.data(), m, k, n, false);
    return make_result(std::move(out), "matmul", {a.node(), b.node()}, [m, k, n](Node& self) {
        const Node& pa = *self.parents[0];
        const Node& pb = *self.parents[1];
        if (wants(self, 0))
            kernels::gemm_nt(self.grad.data(), pb.value.data(), grad_of(*self.parents[0]).data(), m, n, k, true);
        if (wants(self, 1))
            kernels::gemm_tn(pa.value.data(), self.grad.data(), grad_of(*self.parents[1]).data(), k, m, n, true);
    });
}

Var batched_matmul(const Var& a, const Var& b, bool transpose_b)
{
    const auto& as = a.shape();
    const auto& bs = b.shape();
    if (as.size() != 3 || bs.size() != 3 || as[0] != bs[0] || as[2] != (transpose_b ? bs[2] : bs[1]))
        shape_error("batched_matmul", to_string(as) + " x " + to_string(bs) + (transpose_b ? "^T" : ""));
    const std::size_t batch = as[0], m = as[1], k = as[2], n = transpose_b ? bs[1] : bs[2];
    Tensor out({batch, m, n});
    for (std::size_t i = 0; i < batch; ++i) {
        const double* ai = a.value().data() + i * m * k;
        const double* bi = b.value().data() + i * k * n;
        double* ci = out.data() + i * m * n;
        if (transpose_b)
            kernels::gemm_nt(ai, bi, ci, m, k, n, false);
        else
            kernels::gemm(ai, bi, ci, m, k, n, false);
    }
    return make_result(std::move(out), "batched_matmul", {a.node(), b.node()},
                       [batch, m, k, n, transpose_b](Node& self) {
                           const Node& pa = *self.parents[0];
                           const Node& pb = *self.parents[1];
                           double* ga = wants(self, 0) ? grad_of(*self.parents[0]).data() : nullptr;
                           double* gb = wants(self, 1) ? grad_of(*self.parents[1]).data() : nullptr;
                           for (std::size_t i = 0; i < batch; ++i) {
                               const double* gc = self.grad.data() + i * m * n;
                               const double* ai = pa.value.data() + i * m * k;
                               const double* bi = pb.value.data() + i * k * n;
                               if (transpose_b) {
                                   // C = A B^T: dA = dC B, dB = dC^T A
                                   if (ga)
                                       kernels::gemm(gc, bi, ga + i * m * k, m, n, k, true);
                                   if (gb)
                                       kernels::gemm_tn(gc, ai, gb + i * k * n, n, m, k, true);
                               } else {
                                   if (ga)
                                       kernels::gemm_nt(gc, bi, ga + i * m * k, m, n, k, true);
                                   if (gb)
                                       kernels::gemm_tn(ai, gc, gb + i * k * n, k, m, n, true);
                               }
                           }
                       });
}

Var add(const Var& a, const Var& b)
{
    const auto& as = a.shape();
    const auto& bs = b.shape();
    const bool suffix = bs.size() <= as.size() && std::equal(bs.rbegin(), bs.rend(), as.rbegin());
    if (!suffix)
        shape_error("add", to_string(as) + " + " + to_string(bs));
    const std::size_t inner = b.size();
    const std::size_t outer = a.size() / std::max<std::size_t>(inner, 1);
    Tensor out = a.value();
    for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t j = 0; j < inner; ++j)
            out[o * inner + j] += b.value()[j];
    return make_result(std::move(out), "add", {a.node(), b.node()}, [outer, inner](Node& self) {
        if (wants(self, 0)) {
            auto& g = grad_of(*self.parents[0]);
            for (std::size_t i = 0; i < g.size(); ++i)
                g[i] += self.grad[i];
        }
        if (wants(self, 1)) {
            auto& g = grad_of(*self.parents[1]);
            for (std::size_t o = 0; o < outer; ++o)
                for (std::size_t j = 0; j < inner; ++j)
                    g[j] += self.grad[o * inner + j];
        }
    });
}

Var mul(const Var& a, const Var& b)
{
    if (a.shape() != b.shape())
        shape_error("mul", to_string(a.shape()) + " * " + to_string(b.shape()));
    Tensor out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] *= b.value()[i];
    return make_result(std::move(out), "mul", {a.node(), b.node()}, [](Node& self) {
        const Node& pa = *self.parents[0];
        const Node& pb = *self.parents[1];
        if (wants(self, 0)) {
            auto& g = grad_of(*self.parents[0]);
            for (std::size_t i = 0; i < g.size(); ++i)
                g[i] += self.grad[i] * pb.value[i];
        }
        if (wants(self, 1)) {
            auto& g = grad_of(*self.parents[1]);
            for (std::size_t i = 0; i < g.size(); ++i)
                g[i] += self.grad[i] * pa.value[i];
        }
    });
}

Var scale(const Var& a, double factor)
{
    Tensor out = a.value();
    for (auto& v : out.values())
        v *= factor;
    return make_result(std::move(out), "scale", {a.node()}, [factor](Node& self) {
        auto& g = grad_of(*self.parents[0]);
        for (std::size_t i = 0; i < g.size(); ++i)
            g[i] += self.grad[i] * factor;
    });
}

Var concat(std::span<const Var> parts)
{
    if (parts.empty())
        shape_error("concat", "no inputs");
    Shape lead = parts[0].shape();
    if (lead.empty())
        shape_error("concat", "rank-0 input");
    lead.pop_back();
    std::vector<std::size_t> widths;
    std::size_t total = 0;
    for (const auto& p : parts) {
        Shape l = p.shape();
        if (l.empty())
            shape_error("concat", "rank-0 input");
        const std::size_t w = l.back();
        l.pop_back();
        if (l != lead)
            shape_error("concat", to_string(parts[0].shape()) + " vs " + to_string(p.shape()));
        widths.push_back(w);
        total += w;
    }
    const std::size_t rows = numel(lead);
    Shape out_shape = lead;
    out_shape.push_back(total);
    Tensor out(out_shape);
    std::size_t off = 0;
    for (std::size_t q = 0; q < parts.size(); ++q) {
        const double* src = parts[q].value().data();
        for (std::size_t r = 0; r < rows; ++r)
            std::copy(src + r * widths[q], src + (r + 1) * widths[q], out.data() + r * total + off);
        off += widths[q];
    }
    std::vector<std::shared_ptr<Node>> parents;
    for (const auto& p : parts)
        parents.push_back(p.node());
    return make_result(std::move(out), "concat", std::move(parents), [rows, total, widths](Node& self) {
        std::size_t off = 0;
        for (std::size_t q = 0; q < widths.size(); ++q) {
            if (wants(self, q)) {
                auto& g = grad_of(*self.parents[q]);
                for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t j = 0; j < widths[q]; ++j)
                        g[r * widths[q] + j] += self.grad[r * total + off + j];
            }
            off += widths[q];
        }
    });
}

Var slice_last(const Var& a, std::size_t start, std::size_t length)
{
    const auto& as = a.shape();
    if (as.empty() || start + length > as.back())
        shape_error("slice_last", to_string(as) + " [" + std::to_string(start) + ", +" + std::to_string(length) + ")");
    const std::size_t width = as.back();
    const std::size_t rows = a.size() / width;
    Shape out_shape = as;
    out_shape.back() = length;
    Tensor out(out_shape);
    for (std::size_t r = 0; r < rows; ++r)
        std::copy_n(a.value().data() + r * width + start, length, out.data() + r * length);
    return make_result(std::move(out), "slice_last", {a.node()}, [rows, width, start, length](Node& self) {
        auto& g = grad_of(*self.parents[0]);
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < length; ++j)
                g[r * width + start + j] += self.grad[r * length + j];
    });
}

Var time_step(const Var& a, std::size_t t)
{
    const auto& as = a.shape();
    if (as.size() != 3 || t >= as[1])
        shape_error("time_step", to_string(as) + " at t=" + std::to_string(t));
    const std::size_t batch = as[0], steps = as[1], width = as[2];
    Tensor out({batch, width});
    for (std::size_t b = 0; b < batch; ++b)
        std::copy_n(a.value().data() + (b * steps + t) * width, width, out.data() + b * width);
    return make_result(std::move(out), "time_step", {a.node()}, [batch, steps, width, t](Node& self) {
        auto& g = grad_of(*self.parents[0]);
        for (std::size_t b = 0; b < batch; ++b)
            for (std::size_t j = 0; j < width; ++j)
                g[(b * steps + t) * width + j] += self.grad[b * width + j];
    });
}

Var stack_steps(std::span<const Var> steps)
{
    if (steps.empty())
        shape_error("stack_steps", "no inputs");
    const Shape s0 = steps[0].shape();
    if (s0.size() != 2)
        shape_error("stack_steps", "expected [B, H], got " + to_string(s0));
    for (const auto& s : steps)
        if (s.shape() != s0)
            shape_error("stack_steps", to_string(s0) + " vs " + to_string(s.shape()));
    const std::size_t batch = s0[0], width = s0[1], len = steps.size();
    Tensor out({batch, len, width});
    for (std::size_t t = 0; t < len; ++t)
        for (std::size_t b = 0; b < batch; ++b)
            std::copy_n(steps[t].value().data() + b * width, width, out.data() + (b * len + t) * width);
    std::vector<std::shared_ptr<Node>> parents;
    for (const auto& s : steps)
        parents.push_back(s.node());
    return make_result(std::move(out), "stack_steps", std::move(parents), [batch, width, len](Node& self) {
        for (std::size_t t = 0; t < len; ++t) {
            if (!wants(self, t))
                continue;
            auto& g = grad_of(*self.parents[t]);
            for (std::size_t b = 0; b < batch; ++b)
                for (std::size_t j = 0; j < width; ++j)
                    g[b * width + j] += self.grad[(b * len + t) * width + j];
        }
    });
}

Var reshape(const Var& a, Shape shape)
{
    if (numel(shape) != a.size())
        shape_error("reshape", to_string(a.shape()) + " -> " + to_string(shape));
    Tensor out = a.value().reshaped(std::move(shape));
    return make_result(std::move(out), "reshape", {a.node()}, [](Node& self) {
        auto& g = grad_of(*self.parents[0]);
        for (std::size_t i = 0; i < g.size(); ++i)
            g[i] += self.grad[i];
    });
}

namespace {

double stable_sigmoid(double z)
{
    if (z >= 0)
        return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

} // namespace

Var sigmoid(const Var& a)
{
    Tensor out = a.value();
    for (auto& v : out.values())
        v = stable_sigmoid(v);
    return make_result(std::move(out), "sigmoid", {a.node()}, [](Node& self) {
        auto& g = grad_of(*self.parents[0]);
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double y = self.value[i];
            g[i] += self.grad[i] * y * (1.0 - y);
        }
    });
}

Var tanh(const Var& a)
{
    Tensor out = a.value();
    for (auto& v : out.values())
        v = std::tanh(v);
    return make_result(std::move(out), "tanh", {a.node()}, [](Node& self) {
        auto& g = grad_of(*self.parents[0]);
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double y = self.value[i];
            g[i] += self.grad[i] * (1.0 - y * y);
        }
    });
}

Var relu(const Var& a)
{
    Tensor out = a.value();
    for (auto& v : out.values())
        v = v > 0.0 ? v : 0.0;
    return make_result(std::move(out), "relu", {a.node()}, [](Node& self) {
        const Node& pa = *self.parents[0];
        auto& g = grad_of(*self.parents[0]);
        for (std::size_t i = 0; i < g.size(); ++i)
            if (pa.value[i] > 0.0)
                g[i] += self.grad[i];
    });
}

Var masked_softmax(const Var& a, const Tensor& mask)
{
    const auto& as = a.shape();
    if (as.empty())
        shape_error("masked_softmax", "rank-0 input");
    const std::size_t width = as.back();
    const std::size_t rows = a.size() / width;
    // rows_per_mask_row > 1 when a [B, M, T] shares a key mask [B, T] across its M rows.
    std::size_t rows_per_mask_row = 1;
    if (mask.shape() != as) {
        const bool key_mask = as.size() == 3 && mask.rank() == 2 && mask.dim(0) == as[0] && mask.dim(1) == as[2];
        if (!key_mask)
            shape_error("masked_softmax", "mask " + to_string(mask.shape()) + " for input " + to_string(as));
        rows_per_mask_row = as[1];
    }
    Tensor out(as);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* x = a.value().data() + r * width;
        const double* m = mask.data() + (r / rows_per_mask_row) * width;
        double* y = out.data() + r * width;
        double hi = -INFINITY;
        for (std::size_t j = 0; j < width; ++j)
            if (m[j] != 0.0)
                hi = std::max(hi, x[j]);
        if (hi == -INFINITY)
            continue;
        double z = 0.0;
        for (std::size_t j = 0; j < width; ++j) {
            y[j] = m[j] != 0.0 ? std::exp(x[j] - hi) : 0.0;
            z += y[j];
        }
        for (std::size_t j = 0; j < width; ++j)
            y[j] /= z;
    }
    return make_result(std::move(out), "masked_softmax", {a.node()}, [rows, width](Node& self) {
        auto& g = grad_of(*self.parents[0]);
        for (std::size_t r = 0; r < rows; ++r) {
            const double* y = self.value.data() + r * width;
            const double* dy = self.grad.data() + r * width;
            double dot = 0.0;
            for (std::size_t j = 0; j < width; ++j)
                dot += y[j] * dy[j];
            // masked entries have y == 0 and therefore receive no gradient
            for (std::size_t j = 0; j < width; ++j)
                g[r * width + j] += y[j] * (dy[j] - dot);
        }
    });
}

Var embedding_lookup(const Var& table, std::span<const std::size_t> indices, Shape leading)
{
    const auto& ts = table.shape();
    if (ts.size() != 2)
        shape_error("embedding_lookup", "table must be [V, d], got " + to_string(ts));
    if (numel(leading) != indices.size())
        shape_error("embedding_lookup", std::to_string(indices.size()) + " indices for leading shape " +
                                            to_string(leading));
    const std::size_t rows = ts[0], width = ts[1];
    for (auto i : indices)
        if (i >= rows)
            shape_error("embedding_lookup", "index " + std::to_string(i) + " out of " + std::to_string(rows));
    Shape out_shape = leading;
    out_shape.push_back(width);
    Tensor out(out_shape);
    for (std::size_t q = 0; q < indices.size(); ++q)
        std::copy_n(table.value().data() + indices[q] * width, width, out.data() + q * width);
    std::vector<std::size_t> idx(indices.begin(), indices.end());
    return make_result(std::move(out), "embedding_lookup", {table.node()}, [idx = std::move(idx), width](Node& self) {
        auto& g = grad_of(*self.parents[0]);
        for (std::size_t q = 0; q < idx.size(); ++q)
            for (std::size_t j = 0; j < width; ++j)
                g[idx[q] * width + j] += self.grad[q * width + j];
    });
}

Var masked_mean_pool(const Var& a, const Tensor& mask)
{
    const auto& as = a.shape();
    if (as.size() != 3 || mask.rank() != 2 || mask.dim(0) != as[0] || mask.dim(1) != as[1])
        shape_error("masked_mean_pool", "input " + to_string(as) + ", mask " + to_string(mask.shape()));
    const std::size_t batch = as[0], steps = as[1], width = as[2];
    std::vector<double> weight(batch * steps, 0.0);
    for (std::size_t b = 0; b < batch; ++b) {
        double count = 0.0;
        for (std::size_t t = 0; t < steps; ++t)
            count += mask[b * steps + t] != 0.0 ? 1.0 : 0.0;
        if (count > 0)
            for (std::size_t t = 0; t < steps; ++t)
                weight[b * steps + t] = mask[b * steps + t] != 0.0 ? 1.0 / count : 0.0;
    }
    Tensor out({batch, width});
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t t = 0; t < steps; ++t) {
            const double w = weight[b * steps + t];
            if (w == 0.0)
                continue;
            const double* x = a.value().data() + (b * steps + t) * width;
            for (std::size_t j = 0; j < width; ++j)
                out[b * width + j] += w * x[j];
        }
    return make_result(std::move(out), "masked_mean_pool", {a.node()},
                       [weight = std::move(weight), batch, steps, width](Node& self) {
                           auto& g = grad_of(*self.parents[0]);
                           for (std::size_t b = 0; b < batch; ++b)
                               for (std::size_t t = 0; t < steps; ++t) {
                                   const double w = weight[b * steps + t];
                                   if (w == 0.0)
                                       continue;
                                   for (std::size_t j = 0; j < width; ++j)
                                       g[(b * steps + t) * width + j] += w * self.grad[b * width + j];
                               }
                       });
}

Var layer_norm(const Var& a, const Var& gamma, const Var& beta, double eps)
{
    const auto& as = a.shape();
    if (as.empty() || gamma.shape() != Shape{as.back()} || beta.shape() != Shape{as.back()})
        shape_error("layer_norm", "input " + to_string(as) + ", gamma " + to_string(gamma.shape()) + ", beta " +
                                      to_string(beta.shape()));
    const std::size_t width = as.back();
    const std::size_t rows = a.size() / width;
    Tensor out(as);
    std::vector<double> xhat(a.size());
    std::vector<double> inv_std(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* x = a.value().data() + r * width;
        double mu = 0.0;
        for (std::size_t j = 0; j < width; ++j)
            mu += x[j];
        mu /= static_cast<double>(width);
        double var = 0.0;
        for (std::size_t j = 0; j < width; ++j)
            var += (x[j] - mu) * (x[j] - mu);
        var /= static_cast<double>(width);
        inv_std[r] = 1.0 / std::sqrt(var + eps);
        for (std::size_t j = 0; j < width; ++j) {
            const double h = (x[j] - mu) * inv_std[r];
            xhat[r * width + j] = h;
            out[r * width + j] = gamma.value()[j] * h + beta.value()[j];
        }
    }
    return make_result(std::move(out), "layer_norm", {a.node(), gamma.node(), beta.node()},
                       [xhat = std::move(xhat), inv_std = std::move(inv_std), rows, width](Node& self) {
                           const Node& pg = *self.parents[1];
                           const double n = static_cast<double>(width);
                           for (std::size_t r = 0; r < rows; ++r) {
                               const double* dy = self.grad.data() + r * width;
                               const double* h = xhat.data() + r * width;
                               if (wants(self, 0)) {
                                   double mean_d = 0.0, mean_dh = 0.0;
                                   for (std::size_t j = 0; j < width; ++j) {
                                       const double d = dy[j] * pg.value[j];
                                       mean_d += d;
                                       mean_dh += d * h[j];
                                   }
                                   mean_d /= n;
                                   mean_dh /= n;
                                   auto& g = grad_of(*self.parents[0]);
                                   for (std::size_t j = 0; j < width; ++j) {
                                       const double d = dy[j] * pg.value[j];
                                       g[r * width + j] += inv_std[r] * (d - mean_d - h[j] * mean_dh);
                                   }
                               }
                               if (wants(self, 1)) {
                                   auto& g = grad_of(*self.parents[1]);
                                   for (std::size_t j = 0; j < width; ++j)
                                       g[j] += dy[j] * h[j];
                               }
                               if (wants(self, 2)) {
                                   auto& g = grad_of(*self.parents[2]);
                                   for (std::size_t j = 0; j < width; ++j)
                                       g[j] += dy[j];
                               }
                           }
                       });
}

Var sum(const Var& a)
{
    double s = 0.0;
    for (double v : a.value().values())
        s += v;
    return make_result(Tensor::scalar(s), "sum", {a.node()}, [](Node& self) {
        auto& g = grad_of(*self.parents[0]);
        const double d = self.grad[0];
        for (std::size_t i = 0; i < g.size(); ++i)
            g[i] += d;
    });
}

Var mean(const Var& a)
{
    if (a.size() == 0)
        shape_error("mean", "empty input");
    return scale(sum(a), 1.0 / static_cast<double>(a.size()));
}

Var bce_loss(const Var& probabilities, const Tensor& targets)
{
    if (probabilities.shape() != targets.shape())
        shape_error("bce_loss", to_string(probabilities.shape()) + " vs targets " + to_string(targets.shape()));
    const std::size_t n = targets.size();
    if (n == 0)
        shape_error("bce_loss", "empty input");
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double p = std::clamp(probabilities.value()[i], bce_clamp, 1.0 - bce_clamp);
        const double t = targets[i];
        total -= t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
    }
    return make_result(Tensor::scalar(total / static_cast<double>(n)), "bce_loss", {probabilities.node()},
                       [targets, n](Node& self) {
                           const Node& pp = *self.parents[0];
                           auto& g = grad_of(*self.parents[0]);
                           const double d = self.grad[0] / static_cast<double>(n);
                           for (std::size_t i = 0; i < n; ++i) {
                               const double p = std::clamp(pp.value[i], bce_clamp, 1.0 - bce_clamp);
                               const double t = targets[i];
                               g[i] += d * (-t / p + (1.0 - t) / (1.0 - p));
                           }
                       });
}

} // namespace metasum::diff
