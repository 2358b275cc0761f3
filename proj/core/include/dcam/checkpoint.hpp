#pragma once

#include <filesystem>

#include "dcam/model.hpp"

namespace dcam {

// Checkpoint file layout (all integers little-endian):
//   magic "DCAM", format version byte 0x01
//   config block: u32 byte length, then UTF-8 "key=value\n" lines
//   entry count: u32
//   per entry: name (u32 length + UTF-8 bytes), rank (u8),
//              dims (u32 each), values (IEEE-754 f64, row-major)
// Learnable parameters come first in declaration order; running statistics
// follow as entries whose names carry the reserved prefix "stats.".
// Serialization is canonical: saving a just-loaded model reproduces the
// file byte for byte.

void save_checkpoint(const DenseModel& model, const std::filesystem::path& path);
DenseModel load_checkpoint(const std::filesystem::path& path);

/// In-memory forms used by the file functions and by tests.
std::vector<std::uint8_t> serialize_checkpoint(const DenseModel& model);
DenseModel deserialize_checkpoint(std::span<const std::uint8_t> bytes,
                                  const std::string& source_name);

}  // namespace dcam
