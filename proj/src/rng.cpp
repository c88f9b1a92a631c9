#include "metazsl/rng.hpp"

#include <cmath>

#include "metazsl/errors.hpp"

namespace metazsl {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t Rng::next_below(std::uint64_t n) {
    if (n == 0) throw ConfigError("next_below: n must be positive");
    const std::uint64_t bound = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
        x = next_u64();
    } while (x >= bound);
    return x % n;
}

Rng Rng::derive(std::uint64_t tag) const {
    return Rng(splitmix64(seed_ ^ ((tag + 1) * 0x9E3779B97F4A7C15ULL)));
}

Matrix gaussian_sample(Rng& rng, int rows, int cols) {
    Matrix m(rows, cols);
    for (double& v : m.data) v = rng.normal();
    return m;
}

Matrix dropout_mask(Rng& rng, int rows, int cols, double rate) {
    if (rate < 0.0 || rate >= 1.0) throw ConfigError("dropout rate must be in [0, 1)");
    Matrix m(rows, cols);
    const double keep = 1.0 / (1.0 - rate);
    for (double& v : m.data) v = rng.uniform01() < rate ? 0.0 : keep;
    return m;
}

}  // namespace metazsl
