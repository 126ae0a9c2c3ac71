#include "cropforge/rng.hpp"

#include <cmath>
#include <limits>

namespace cropforge {

std::uint64_t Stream::below(std::uint64_t n) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    for (;;) {
        const std::uint64_t x = next_u64();
        if (x < limit) return x % n;
    }
}

std::uint64_t Stream::poisson(double mean) {
    if (!(mean > 0.0)) return 0;
    constexpr double kChunk = 30.0;
    std::uint64_t total = 0;
    double remaining = mean;
    while (remaining > 0.0) {
        const double m = remaining > kChunk ? kChunk : remaining;
        remaining -= m;
        const double limit = std::exp(-m);
        double prod = uniform();
        while (prod > limit) {
            ++total;
            prod *= uniform();
        }
    }
    return total;
}

}  // namespace cropforge
