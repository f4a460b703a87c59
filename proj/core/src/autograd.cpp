#include "hrcloud/autograd.hpp"

#include <unordered_set>

namespace hrcloud {

namespace {
bool g_grad_enabled = true;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

void Node::accumulate(const Tensor& g) {
    ensure_grad();
    check_shape(grad.same_shape(g), "gradient shape mismatch: " + grad.shape_str() + " vs " + g.shape_str());
    double* dst = grad.data();
    const double* src = g.data();
    int64_t n = grad.numel();
    for (int64_t i = 0; i < n; ++i) dst[i] += src[i];
}

Var make_leaf(Tensor value, bool requires_grad) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->requires_grad = requires_grad;
    return n;
}

Var make_constant(Tensor value) { return make_leaf(std::move(value), false); }

Var make_op(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backprop) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    if (g_grad_enabled) {
        bool needs = false;
        for (const auto& p : parents)
            if (p && p->requires_grad) needs = true;
        if (needs) {
            n->requires_grad = true;
            n->parents = std::move(parents);
            n->backprop = std::move(backprop);
        }
    }
    return n;
}

void backward(const Var& root) {
    check_shape(root && root->value.numel() == 1, "backward root must be a scalar");
    if (!root->requires_grad) return;

    // Iterative post-order DFS -> topological order.
    std::vector<Node*> topo;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, size_t>> stack;
    stack.emplace_back(root.get(), 0);
    seen.insert(root.get());
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->parents.size()) {
            Node* p = node->parents[idx++].get();
            if (p && p->requires_grad && !seen.count(p)) {
                seen.insert(p);
                stack.emplace_back(p, 0);
            }
        } else {
            topo.push_back(node);
            stack.pop_back();
        }
    }

    root->ensure_grad();
    root->grad.fill(1.0);
    for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
        Node* n = *it;
        if (n->backprop && !n->grad.empty()) n->backprop(*n);
    }
}

}  // namespace hrcloud
