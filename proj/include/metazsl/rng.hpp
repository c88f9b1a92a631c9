#pragma once

#include <cstdint>
#include <random>

#include "metazsl/matrix.hpp"

namespace metazsl {

// Seeded random stream. The generator is std::mt19937_64 (bit-reproducible
// across standard library implementations), and every derived draw is
// produced by a fixed transform of its raw 64-bit output:
//
//   uniform01():   (x >> 11) * 2^-53                  in [0, 1)
//   normal():      Box-Muller, cosine branch only; consumes exactly two
//                  raw draws per value, u1 = ((x >> 11) + 1) * 2^-53 in
//                  (0, 1], z = sqrt(-2 ln u1) * cos(2 pi u2)
//   next_below(n): rejection sampling on the raw output, then modulo
//
// Identical seeds therefore give bit-identical streams everywhere.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t next_u64() { return engine_(); }

    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double normal() {
        const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
        const double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
        const double r = std::sqrt(-2.0 * std::log(u1));
        return r * std::cos(2.0 * 3.141592653589793238462643383279502884 * u2);
    }

    // Uniform integer in [0, n). Rejection keeps the draw unbiased.
    std::uint64_t next_below(std::uint64_t n);

    // Independent child stream. child_seed = splitmix64(seed ^ (tag+1)*phi),
    // so distinct tags give unrelated streams and the derivation is stable.
    Rng derive(std::uint64_t tag) const;

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

// Standard SplitMix64 finalizer; used for sub-seed derivation.
std::uint64_t splitmix64(std::uint64_t x);

// rows x cols of i.i.d. N(0,1) entries from the stream.
Matrix gaussian_sample(Rng& rng, int rows, int cols);

// Inverted dropout mask: entries are 0 with probability rate, else
// 1/(1-rate), so the mask has unit expectation and evaluation needs no
// rescaling. rate must lie in [0, 1).
Matrix dropout_mask(Rng& rng, int rows, int cols, double rate);

}  // namespace metazsl
