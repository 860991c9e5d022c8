#pragma once

#include <cstdint>
#include <filesystem>

#include "mrnav/neural/model.hpp"

namespace mrnav::neural {

/// Versioned binary weight file: magic, format version, provenance hash,
/// layer-size table, then one shape-checked record per parameter tensor
/// (row-major 64-bit floats). Round trips are bit-exact.
void save_weights(const ModelWeights& weights, const std::filesystem::path& path,
                  std::uint64_t provenance_hash = 0);

/// Throws WeightsFormatError on bad magic/version, truncation, or any tensor
/// whose shape disagrees with the declared layer sizes (the error names the
/// offending layer).
ModelWeights load_weights(const std::filesystem::path& path,
                          std::uint64_t* provenance_hash = nullptr);

}  // namespace mrnav::neural
