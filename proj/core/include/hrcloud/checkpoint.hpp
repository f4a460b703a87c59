#pragma once

#include <map>
#include <string>

#include "hrcloud/optimizer.hpp"
#include "hrcloud/params.hpp"

namespace hrcloud {

// One archive holding the model parameters and buffers by canonical name,
// the optimizer moments, counters and rng states, plus a JSON header that
// embeds the resolved run configuration so loading validates structure.
struct Checkpoint {
    std::string config_json;  // resolved run configuration document
    int epoch = 0;
    int64_t global_step = 0;
    int64_t adam_step = 0;
    std::map<std::string, std::string> rng_states;
    std::map<std::string, Tensor> tensors;        // parameters and buffers
    std::map<std::string, Tensor> adam_m, adam_v;  // keyed by parameter name

    static Checkpoint capture(const ParameterStore& store, AdamOptimizer* opt,
                              const std::string& config_json);
    // Writes parameters/buffers back into an already-built store; shapes and
    // the name set must match exactly (error names the divergent entry).
    void restore(ParameterStore& store, AdamOptimizer* opt) const;
};

void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace hrcloud
