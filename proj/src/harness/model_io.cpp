#include "htlab/harness/model_io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "htlab/error.hpp"
#include "htlab/nncore/fp32.hpp"

namespace htlab::harness {

namespace {

constexpr const char* format_version = "HMLK-1";

void append_le_fp32(std::vector<unsigned char>* bytes, float value) {
  const std::uint32_t word = nncore::fp32_to_bits(value);
  bytes->push_back(static_cast<unsigned char>(word & 0xff));
  bytes->push_back(static_cast<unsigned char>((word >> 8) & 0xff));
  bytes->push_back(static_cast<unsigned char>((word >> 16) & 0xff));
  bytes->push_back(static_cast<unsigned char>((word >> 24) & 0xff));
}

float read_le_fp32(const std::vector<unsigned char>& bytes,
                   std::size_t offset) {
  const std::uint32_t word =
      static_cast<std::uint32_t>(bytes[offset]) |
      static_cast<std::uint32_t>(bytes[offset + 1]) << 8 |
      static_cast<std::uint32_t>(bytes[offset + 2]) << 16 |
      static_cast<std::uint32_t>(bytes[offset + 3]) << 24;
  return nncore::fp32_from_bits(word);
}

std::string hex16(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(value));
  return buf;
}

nlohmann::json tensor_entry(const nncore::Tensor& tensor,
                            std::size_t offset) {
  return nlohmann::json{{"shape", tensor.shape}, {"offset", offset}};
}

}  // namespace

std::uint64_t fnv1a64(const unsigned char* bytes, std::size_t count) {
  std::uint64_t hash = 0xcbf29ce484222325ull;
  for (std::size_t i = 0; i < count; ++i) {
    hash ^= bytes[i];
    hash *= 0x100000001b3ull;
  }
  return hash;
}

void save_model(const nncore::Model& model, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create model directory " + dir);

  std::vector<unsigned char> blob;
  nlohmann::json layers = nlohmann::json::array();
  for (const nncore::LayerSpec& layer : model.layers) {
    nlohmann::json entry{{"kind", nncore::layer_kind_name(layer.kind)}};
    switch (layer.kind) {
      case nncore::LayerKind::conv2d:
        entry["stride"] = layer.stride;
        entry["padding"] = layer.padding;
        break;
      case nncore::LayerKind::maxpool:
        entry["pool"] = layer.pool;
        entry["pool_stride"] = layer.pool_stride;
        break;
      default:
        break;
    }
    if (nncore::is_weighted(layer.kind)) {
      entry["weight"] = tensor_entry(layer.weight, blob.size());
      for (float v : layer.weight.data) append_le_fp32(&blob, v);
      entry["bias"] = tensor_entry(layer.bias, blob.size());
      for (float v : layer.bias.data) append_le_fp32(&blob, v);
    }
    layers.push_back(std::move(entry));
  }

  const nlohmann::json manifest{
      {"format", format_version},
      {"input_shape", model.input_shape},
      {"layers", layers},
      {"weights_fnv1a64", hex16(fnv1a64(blob.data(), blob.size()))},
  };

  {
    std::ofstream out(dir + "/manifest.json", std::ios::binary);
    out << manifest.dump(2) << "\n";
    if (!out) throw IoError("cannot write " + dir + "/manifest.json");
  }
  {
    std::ofstream out(dir + "/weights.bin", std::ios::binary);
    out.write(reinterpret_cast<const char*>(blob.data()),
              static_cast<std::streamsize>(blob.size()));
    if (!out) throw IoError("cannot write " + dir + "/weights.bin");
  }
}

nncore::Model load_model(const std::string& dir) {
  std::ifstream manifest_in(dir + "/manifest.json", std::ios::binary);
  if (!manifest_in) throw IoError("cannot open " + dir + "/manifest.json");
  nlohmann::json manifest;
  try {
    manifest_in >> manifest;
  } catch (const nlohmann::json::exception& err) {
    throw IoError(std::string("malformed manifest: ") + err.what());
  }

  std::ifstream weights_in(dir + "/weights.bin", std::ios::binary);
  if (!weights_in) throw IoError("cannot open " + dir + "/weights.bin");
  std::ostringstream buf;
  buf << weights_in.rdbuf();
  const std::string raw = buf.str();
  const std::vector<unsigned char> blob(raw.begin(), raw.end());

  try {
    if (manifest.at("format").get<std::string>() != format_version) {
      throw IoError("unknown model format version " +
                    manifest.at("format").get<std::string>());
    }
    if (manifest.at("weights_fnv1a64").get<std::string>() !=
        hex16(fnv1a64(blob.data(), blob.size()))) {
      throw IoError("weights.bin checksum mismatch in " + dir);
    }

    nncore::Model model;
    model.input_shape =
        manifest.at("input_shape").get<std::vector<std::size_t>>();
    for (const nlohmann::json& entry : manifest.at("layers")) {
      nncore::LayerSpec layer;
      layer.kind =
          nncore::layer_kind_from_name(entry.at("kind").get<std::string>());
      layer.stride = entry.value("stride", 1);
      layer.padding = entry.value("padding", 0);
      layer.pool = entry.value("pool", 2);
      layer.pool_stride = entry.value("pool_stride", 2);
      if (nncore::is_weighted(layer.kind)) {
        for (const char* name : {"weight", "bias"}) {
          const nlohmann::json& t = entry.at(name);
          nncore::Tensor tensor;
          tensor.shape = t.at("shape").get<std::vector<std::size_t>>();
          const std::size_t offset = t.at("offset").get<std::size_t>();
          std::size_t numel = 1;
          for (std::size_t d : tensor.shape) numel *= d;
          if (offset + 4 * numel > blob.size()) {
            throw IoError("weights.bin truncated for tensor " +
                          std::string(name));
          }
          tensor.data.resize(numel);
          for (std::size_t i = 0; i < numel; ++i) {
            tensor.data[i] = read_le_fp32(blob, offset + 4 * i);
          }
          (name[0] == 'w' ? layer.weight : layer.bias) = std::move(tensor);
        }
      }
      model.layers.push_back(std::move(layer));
    }
    nncore::validate_model(model);
    return model;
  } catch (const nlohmann::json::exception& err) {
    throw IoError(std::string("malformed manifest: ") + err.what());
  }
}

}  // namespace htlab::harness
