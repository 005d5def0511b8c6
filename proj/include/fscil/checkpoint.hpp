#pragma once

#include <cstdint>
#include <string>

#include "fscil/model.hpp"

namespace fscil {

// Binary model checkpoint. Layout:
//   8-byte magic "FSCILCK1"
//   u64 little-endian header length
//   header: UTF-8 JSON with arch, embed dim, input shape, metric, classifier
//           registry, config fingerprint and an ordered tensor directory
//   payload: raw little-endian doubles, column-major, in directory order
// The header JSON is emitted with sorted keys and no whitespace, so saving
// the same state twice yields byte-identical files.
struct CheckpointMeta {
    std::string fingerprint;  // config fingerprint, empty if untracked
};

void save_model(const std::string& path, const ModelState& model,
                const CheckpointMeta& meta);

struct LoadedModel {
    ModelState model;
    CheckpointMeta meta;
};

LoadedModel load_model(const std::string& path);

// Writes to `path + ".tmp"` then renames, so a killed process never leaves a
// truncated checkpoint under the final name.
void save_model_atomic(const std::string& path, const ModelState& model,
                       const CheckpointMeta& meta);

}  // namespace fscil
