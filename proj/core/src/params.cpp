#include "hrcloud/params.hpp"

#include <cmath>

#include "hrcloud/error.hpp"

namespace hrcloud {

Var ParameterStore::create(const std::string& name, std::vector<int> shape, bool trainable) {
    if (index_.count(name)) throw Error("duplicate parameter name: " + name);
    Var node = make_leaf(Tensor(std::move(shape)), trainable);
    index_[name] = entries_.size();
    entries_.push_back({name, node, trainable});
    return node;
}

Var ParameterStore::get(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw Error("unknown parameter name: " + name);
    return entries_[it->second].node;
}

std::vector<ParameterStore::Entry*> ParameterStore::trainable_entries() {
    std::vector<Entry*> out;
    for (auto& e : entries_)
        if (e.trainable) out.push_back(&e);
    return out;
}

int64_t ParameterStore::trainable_parameter_count() const {
    int64_t n = 0;
    for (const auto& e : entries_)
        if (e.trainable) n += e.node->value.numel();
    return n;
}

void ParameterStore::zero_grad() {
    for (auto& e : entries_)
        if (e.trainable && !e.node->grad.empty()) e.node->grad.zero();
}

void ParameterStore::init_he_normal(Tensor& t, int fan_in, RngStream& rng) {
    const double std = std::sqrt(2.0 / double(fan_in));
    for (int64_t i = 0; i < t.numel(); ++i) t[i] = std * rng.normal();
}

}  // namespace hrcloud
