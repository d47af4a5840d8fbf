#include "htlab/harness/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "htlab/error.hpp"
#include "htlab/nncore/rng.hpp"

namespace htlab::harness {

namespace {

std::uint32_t read_be32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw IoError("truncated IDX header in " + path);
  }
  return (static_cast<std::uint32_t>(b[0]) << 24) |
         (static_cast<std::uint32_t>(b[1]) << 16) |
         (static_cast<std::uint32_t>(b[2]) << 8) |
         static_cast<std::uint32_t>(b[3]);
}

void write_be32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace

Dataset load_idx(const std::string& images_path,
                 const std::string& labels_path) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw IoError("cannot open " + images_path);
  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw IoError("cannot open " + labels_path);

  const std::uint32_t img_magic = read_be32(img, images_path);
  if (img_magic != 0x00000803u) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "bad image magic 0x%08x in ", img_magic);
    throw IoError(buf + images_path);
  }
  const std::uint32_t n = read_be32(img, images_path);
  const std::uint32_t rows = read_be32(img, images_path);
  const std::uint32_t cols = read_be32(img, images_path);

  const std::uint32_t lab_magic = read_be32(lab, labels_path);
  if (lab_magic != 0x00000801u) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "bad label magic 0x%08x in ", lab_magic);
    throw IoError(buf + labels_path);
  }
  const std::uint32_t n_labels = read_be32(lab, labels_path);
  if (n != n_labels) {
    throw IoError("image/label count mismatch: " + std::to_string(n) +
                  " images vs " + std::to_string(n_labels) + " labels");
  }

  Dataset data;
  data.input_shape = {1, rows, cols};
  data.images.reserve(n);
  data.labels.reserve(n);
  std::vector<unsigned char> pixels(static_cast<std::size_t>(rows) * cols);
  int max_label = 0;
  for (std::uint32_t i = 0; i < n; ++i) {
    if (!img.read(reinterpret_cast<char*>(pixels.data()),
                  static_cast<std::streamsize>(pixels.size()))) {
      throw IoError("truncated image data in " + images_path);
    }
    nncore::Tensor t = nncore::Tensor::zeros({1, rows, cols});
    for (std::size_t p = 0; p < pixels.size(); ++p) {
      t.data[p] = static_cast<float>(pixels[p]) / 255.0f;
    }
    data.images.push_back(std::move(t));
    unsigned char y;
    if (!lab.read(reinterpret_cast<char*>(&y), 1)) {
      throw IoError("truncated label data in " + labels_path);
    }
    data.labels.push_back(static_cast<int>(y));
    if (y > max_label) max_label = y;
  }
  data.num_classes = max_label + 1;
  return data;
}

void save_idx(const Dataset& data, const std::string& images_path,
              const std::string& labels_path) {
  if (data.input_shape.size() != 3 || data.input_shape[0] != 1) {
    throw IoError("save_idx: only [1, rows, cols] datasets are supported");
  }
  std::ofstream img(images_path, std::ios::binary);
  if (!img) throw IoError("cannot write " + images_path);
  std::ofstream lab(labels_path, std::ios::binary);
  if (!lab) throw IoError("cannot write " + labels_path);

  write_be32(img, 0x00000803u);
  write_be32(img, static_cast<std::uint32_t>(data.size()));
  write_be32(img, static_cast<std::uint32_t>(data.input_shape[1]));
  write_be32(img, static_cast<std::uint32_t>(data.input_shape[2]));
  for (const nncore::Tensor& t : data.images) {
    for (float v : t.data) {
      const float scaled = v * 255.0f + 0.5f;
      const unsigned char b = static_cast<unsigned char>(
          scaled < 0.0f ? 0.0f : (scaled > 255.0f ? 255.0f : scaled));
      img.write(reinterpret_cast<const char*>(&b), 1);
    }
  }
  write_be32(lab, 0x00000801u);
  write_be32(lab, static_cast<std::uint32_t>(data.size()));
  for (int y : data.labels) {
    const unsigned char b = static_cast<unsigned char>(y);
    lab.write(reinterpret_cast<const char*>(&b), 1);
  }
}

Dataset gen_synthetic(std::size_t n, int classes, float noise,
                      std::uint64_t seed, std::size_t size) {
  if (classes < 2 || n == 0 || size < 8) {
    throw ConfigError("gen_synthetic: need >= 2 classes, n > 0, size >= 8");
  }
  nncore::Rng rng(seed);
  Dataset data;
  data.input_shape = {1, size, size};
  data.num_classes = classes;
  data.images.reserve(n);
  data.labels.reserve(n);

  const float center = static_cast<float>(size - 1) / 2.0f;
  // Ring radius keeps every bump at least ~3 pixels away from the borders,
  // leaving the corners at background level for trigger patches.
  const float ring = center - 3.0f;
  const float two_pi = 6.2831853071795864769f;

  for (std::size_t i = 0; i < n; ++i) {
    const int cls = static_cast<int>(i % static_cast<std::size_t>(classes));
    const float angle =
        two_pi * static_cast<float>(cls) / static_cast<float>(classes);
    const float cy = center + ring * std::sin(angle);
    const float cx = center + ring * std::cos(angle);
    nncore::Tensor img = nncore::Tensor::zeros({1, size, size});
    for (std::size_t y = 0; y < size; ++y) {
      for (std::size_t x = 0; x < size; ++x) {
        const float dy = static_cast<float>(y) - cy;
        const float dx = static_cast<float>(x) - cx;
        const float bump = 0.85f * std::exp(-(dy * dy + dx * dx) / 4.5f);
        float v = 0.08f + bump + rng.normal(0.0f, noise);
        img.at3(0, y, x) = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
      }
    }
    data.images.push_back(std::move(img));
    data.labels.push_back(cls);
  }
  return data;
}

Dataset head(const Dataset& data, std::size_t n) {
  if (n > data.size()) {
    throw ConfigError("head: requested more samples than available");
  }
  Dataset out;
  out.images.assign(data.images.begin(),
                    data.images.begin() + static_cast<long>(n));
  out.labels.assign(data.labels.begin(),
                    data.labels.begin() + static_cast<long>(n));
  out.input_shape = data.input_shape;
  out.num_classes = data.num_classes;
  return out;
}

}  // namespace htlab::harness
