#pragma once

#include <cstdint>
#include <string>

#include "htlab/nncore/model.hpp"

namespace htlab::harness {

// FNV-1a over a byte buffer; the checksum stored in HMLK-1 manifests.
std::uint64_t fnv1a64(const unsigned char* bytes, std::size_t count);

// Writes the model as an HMLK-1 directory: manifest.json (format version,
// input shape, per-layer kinds/hyperparameters/tensor shapes with byte
// offsets, and the weights checksum) plus weights.bin, every tensor
// concatenated as little-endian FP32 in manifest order. Creates the
// directory; overwrites existing files. Throws IoError on write failure.
void save_model(const nncore::Model& model, const std::string& dir);

// Inverse of save_model; load(save(m)) is bit-identical. Throws IoError on
// a missing or malformed manifest, an unknown format version, offsets that
// disagree with weights.bin, or a checksum mismatch.
nncore::Model load_model(const std::string& dir);

}  // namespace htlab::harness
