#pragma once

#include <string>

#include "discnn/model.hpp"

namespace discnn::models {

// Self-describing binary container: magic, format version, architecture
// fingerprint, the canonical architecture string, a metadata blob (JSON by
// convention), then one record per parameter vector keyed by layer index and
// role. All integers and the 64-bit floats are little-endian. The exact byte
// layout is documented in docs/formats.md.
//
// Saving is deterministic: identical parameters and metadata give identical
// bytes.
void save_checkpoint(Model& model, const std::string& path, const std::string& metadata = "");

struct LoadedCheckpoint {
    Model model;
    std::string metadata;
};

// Rebuilds the model from the embedded architecture string. Throws DataError
// on fingerprint mismatch, version mismatch, or truncation.
LoadedCheckpoint load_checkpoint(const std::string& path);

// Same, but additionally rejects checkpoints whose architecture differs from
// `expected`.
LoadedCheckpoint load_checkpoint(const std::string& path, const ArchitectureSpec& expected);

}  // namespace discnn::models
