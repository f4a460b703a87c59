#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace hrcloud {

// Mixes a seed with a stream tag so independent consumers (init, shuffle,
// augmentation) never share a sequence.
uint64_t derive_seed(uint64_t seed, uint64_t tag);

// Deterministic random stream. Distributions are implemented here rather
// than with std:: distribution objects so a stream's state is exactly the
// engine state: serialization round-trips bit-exactly and every sample
// consumes a fixed number of engine draws.
class RngStream {
public:
    RngStream() : engine_(0) {}
    explicit RngStream(uint64_t seed) : engine_(seed) {}

    // Uniform in [0, 1).
    double uniform();
    // Uniform in [lo, hi).
    double uniform(double lo, double hi);
    // Standard normal via Box-Muller; consumes exactly two engine draws.
    double normal();
    // Uniform integer in [0, n).
    uint64_t next_index(uint64_t n);

    // Fisher-Yates shuffle of indices [0, n).
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(next_index(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    std::string serialize() const;
    static RngStream deserialize(const std::string& state);

    bool operator==(const RngStream& o) const { return engine_ == o.engine_; }

private:
    std::mt19937_64 engine_;
};

}  // namespace hrcloud
