#include "hrcloud/rng.hpp"

#include <cmath>
#include <sstream>

#include "hrcloud/error.hpp"

namespace hrcloud {

uint64_t derive_seed(uint64_t seed, uint64_t tag) {
    // splitmix64 finalizer over seed ^ golden-ratio-scaled tag
    uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (tag + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double RngStream::uniform() {
    // 53 high bits -> double in [0,1)
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double RngStream::normal() {
    double u1 = 1.0 - uniform();  // (0,1], keeps log finite
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

uint64_t RngStream::next_index(uint64_t n) {
    if (n == 0) throw Error("next_index: empty range");
    // rejection sampling for an unbiased draw
    uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t r;
    do {
        r = engine_();
    } while (r >= limit);
    return r % n;
}

std::string RngStream::serialize() const {
    std::ostringstream os;
    os << engine_;
    return os.str();
}

RngStream RngStream::deserialize(const std::string& state) {
    RngStream s;
    std::istringstream is(state);
    is >> s.engine_;
    if (is.fail()) throw Error("RngStream::deserialize: malformed state string");
    return s;
}

}  // namespace hrcloud
