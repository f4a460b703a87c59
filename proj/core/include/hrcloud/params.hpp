#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "hrcloud/autograd.hpp"
#include "hrcloud/rng.hpp"

namespace hrcloud {

// Owns every named tensor of a model: trainable weights plus non-trainable
// state (batch-norm running statistics). Registration order is the canonical
// order for initialization draws, optimizer state and checkpoints.
class ParameterStore {
public:
    struct Entry {
        std::string name;
        Var node;
        bool trainable = false;
    };

    Var create(const std::string& name, std::vector<int> shape, bool trainable);
    Var get(const std::string& name) const;
    bool contains(const std::string& name) const { return index_.count(name) != 0; }

    const std::vector<Entry>& entries() const { return entries_; }
    std::vector<Entry*> trainable_entries();

    int64_t trainable_parameter_count() const;
    void zero_grad();

    // He-scaled normal fill (std = sqrt(2 / fan_in)); draw order is the
    // tensor's flat order.
    static void init_he_normal(Tensor& t, int fan_in, RngStream& rng);

private:
    std::vector<Entry> entries_;
    std::unordered_map<std::string, size_t> index_;
};

}  // namespace hrcloud
