#pragma once

#include <cstdint>
#include <string>

#include "trc/model.hpp"

namespace trc {

// Checkpoint file layout, little-endian throughout:
//
//   "TRCK" | u32 manifest_len | manifest (JSON, UTF-8)
//   | f64 payload, one run per parameter in manifest order
//   | u32 crc32 over manifest + payload
//
// The manifest records the format tag, the model config, the training step,
// and every parameter's name and shape, so a reader can validate the payload
// before touching a single float.

void save_checkpoint(const QueryModel& model, std::int64_t step, const std::string& path);

struct LoadedCheckpoint {
    QueryModel model;
    std::int64_t step = 0;
};

/// Rebuilds the model from the stored config and fills in the weights.
/// Throws FormatError on any structural mismatch or checksum failure.
LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace trc
