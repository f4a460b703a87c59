#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "hrcloud/tensor.hpp"

namespace hrcloud {

// Reverse-mode autodiff over a per-forward tape of shared nodes. Parameters
// are long-lived leaf nodes owned by a ParameterStore; every forward pass
// builds a fresh graph referencing them.
struct Node;
using Var = std::shared_ptr<Node>;

struct Node {
    Tensor value;
    Tensor grad;  // allocated on first accumulation
    bool requires_grad = false;
    std::vector<Var> parents;
    // Reads this->grad, accumulates into parents' grads.
    std::function<void(Node&)> backprop;

    void ensure_grad() {
        if (grad.empty()) grad = Tensor(value.shape());
    }
    void accumulate(const Tensor& g);
};

Var make_leaf(Tensor value, bool requires_grad);
Var make_constant(Tensor value);

// Wires a result node into the graph. If gradient recording is disabled or
// no parent requires grad, the node is detached.
Var make_op(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backprop);

// Runs backprop from a scalar root (numel == 1), seeding d root / d root = 1.
void backward(const Var& root);

// Scoped switch that disables graph recording (inference / finite
// differences). Not thread-safe by design: the engine is single-threaded.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool prev_;
};

bool grad_enabled();

}  // namespace hrcloud
