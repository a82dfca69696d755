#pragma once

#include <string>
#include <utility>

#include "adlight/net.hpp"

namespace adlight {

// Binary checkpoint: magic "ADL1", one version byte, the network tensors
// (u32 name length, name, u32 ndim, u32 dims, float32 little-endian data),
// then an "OPT1" block with the optimizer hyperparameters, step count and
// moment tensors in the same layout.
void save_checkpoint(const NetworkParams& params, const OptimizerState& opt,
                     const std::string& path);

std::pair<NetworkParams, OptimizerState> load_checkpoint(const std::string& path);

}  // namespace adlight
