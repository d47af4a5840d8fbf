#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "htlab/nncore/tensor.hpp"

namespace htlab::harness {

struct Dataset {
  std::vector<nncore::Tensor> images;  // each [c, h, w], values in [0, 1]
  std::vector<int> labels;
  std::vector<std::size_t> input_shape;
  int num_classes = 0;

  std::size_t size() const { return images.size(); }
};

// Parses the classic IDX pair: big-endian magic 0x00000803 with dimensions
// [n, rows, cols] for images, 0x00000801 with [n] for labels. Pixel bytes
// are scaled to [0, 1] by dividing by 255. Images come back as [1, rows,
// cols]. Throws IoError on missing files, bad magic, truncation, or an
// image/label count mismatch.
Dataset load_idx(const std::string& images_path,
                 const std::string& labels_path);

// Inverse of load_idx (pixels quantized back to bytes via round(v * 255)).
// Exists so tests can round-trip fixtures; not part of the attack flow.
void save_idx(const Dataset& data, const std::string& images_path,
              const std::string& labels_path);

// Class-conditional Gaussian blobs on a size x size single-channel canvas:
// class k gets a bright bump at a fixed location on a ring around the image
// center, plus per-pixel noise, clamped to [0, 1]. Corners stay near the
// dark background so a corner patch is far outside every class
// distribution. Classes are interleaved (sample i has label i % classes)
// and the whole dataset is a pure function of the arguments.
Dataset gen_synthetic(std::size_t n, int classes, float noise,
                      std::uint64_t seed, std::size_t size = 16);

// First n samples as a shallow slice (used for calibration sets).
Dataset head(const Dataset& data, std::size_t n);

}  // namespace htlab::harness
