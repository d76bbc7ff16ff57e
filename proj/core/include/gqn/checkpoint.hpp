#pragma once

#include <filesystem>
#include <string>

#include "gqn/autodiff.hpp"

namespace gqn::nn {

// Binary container: magic, format version, a JSON descriptor (architecture and
// trainer state) and (name, shape, raw float64) records in parameter order.
// Doubles are written little-endian bit-for-bit, so load(save(x)) == x exactly.
struct Checkpoint {
    std::string descriptor; // JSON text
    ParameterSet params;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const std::string& descriptor, const ParameterSet& params);
Checkpoint load_checkpoint(const std::filesystem::path& path);

} // namespace gqn::nn
