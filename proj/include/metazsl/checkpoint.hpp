#pragma once

#include <cstdint>
#include <string>

#include "metazsl/genmodel.hpp"
#include "metazsl/optim.hpp"

namespace metazsl {

// Trained-model container: config, the three flat parameter blocks, outer
// optimizer states, the training seed and step counter. The on-disk format
// is little-endian binary opening with the magic "MZSLCKPT" and a format
// version integer.
struct Checkpoint {
    ModelConfig config;
    ModelParams params;
    OptimizerState opt_eg;
    OptimizerState opt_d;
    std::uint64_t seed = 0;
    std::uint64_t step = 0;
};

inline constexpr char kCheckpointMagic[8] = {'M', 'Z', 'S', 'L', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace metazsl
