/*
 * Copyright (c) 2026, The sfsr Authors.  All rights reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "sfsr/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace sfsr {

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes a little-endian host");
static_assert(sizeof(float) == 4);

namespace {

constexpr char kMagic[4] = {'S', 'F', 'S', 'R'};

template <typename T>
void put(std::vector<std::uint8_t>& out, T v) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
  out.insert(out.end(), p, p + sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  bool at_end() const { return pos_ == bytes_.size(); }

  template <typename T>
  T get(const std::string& what) {
    T v;
    take(&v, sizeof(T), what);
    return v;
  }

  void take(void* dst, std::size_t n, const std::string& what) {
    if (bytes_.size() - pos_ < n) throw CheckpointError("checkpoint truncated while reading " + what);
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

const Tensor<float>* Checkpoint::find(const std::string& name) const {
  for (const auto& [n, t] : records)
    if (n == name) return &t;
  return nullptr;
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  const std::string blob = ckpt.meta.dump();
  put<std::uint64_t>(out, blob.size());
  out.insert(out.end(), blob.begin(), blob.end());
  for (const auto& [name, t] : ckpt.records) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (Index e : t.shape()) put<std::uint64_t>(out, static_cast<std::uint64_t>(e));
    const auto* p = reinterpret_cast<const std::uint8_t*>(t.data());
    out.insert(out.end(), p, p + t.size() * sizeof(float));
  }
  return out;
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  Reader in(bytes);
  char magic[4];
  in.take(magic, 4, "magic");
  if (std::memcmp(magic, kMagic, 4) != 0) throw CheckpointError("not a checkpoint: bad magic bytes");
  const auto version = in.get<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version) + " (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  }
  const auto blob_size = in.get<std::uint64_t>("metadata length");
  if (blob_size > bytes.size()) throw CheckpointError("checkpoint truncated while reading metadata");
  std::string blob(blob_size, '\0');
  in.take(blob.data(), blob_size, "metadata");
  Checkpoint ckpt;
  try {
    ckpt.meta = nlohmann::json::parse(blob);
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("checkpoint metadata is not valid JSON: ") + e.what());
  }
  for (std::size_t r = 0; !in.at_end(); ++r) {
    const std::string label = "record " + std::to_string(r);
    const auto name_len = in.get<std::uint32_t>(label + " name length");
    if (name_len > bytes.size()) throw CheckpointError(label + ": implausible name length");
    std::string name(name_len, '\0');
    in.take(name.data(), name_len, label + " name");
    const std::string where = label + " ('" + name + "')";
    const auto rank = in.get<std::uint32_t>(where + " rank");
    if (rank < 1 || rank > 4) throw CheckpointError(where + ": invalid rank " + std::to_string(rank));
    Shape shape;
    std::uint64_t count = 1;
    for (std::uint32_t a = 0; a < rank; ++a) {
      const auto e = in.get<std::uint64_t>(where + " extents");
      if (e == 0 || e > bytes.size()) throw CheckpointError(where + ": invalid extent");
      count *= e;
      if (count > bytes.size()) throw CheckpointError(where + ": truncated values");
      shape.push_back(static_cast<Index>(e));
    }
    Tensor<float> t(shape);
    in.take(t.data(), t.size() * sizeof(float), where + " values");
    ckpt.records.emplace_back(std::move(name), std::move(t));
  }
  return ckpt;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const auto bytes = encode_checkpoint(ckpt);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("failed writing " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

nlohmann::json model_config_to_json(const ModelConfig& cfg) {
  return {{"scale", cfg.scale},
          {"embed_channels", cfg.embed_channels},
          {"window", cfg.window},
          {"heads", cfg.heads},
          {"n_irstb", cfg.counts.irstb},
          {"n_dca", cfg.counts.dca},
          {"n_sca", cfg.counts.sca},
          {"n_stlc", cfg.counts.stlc_per_irstb},
          {"mlp_expansion", cfg.mlp_expansion},
          {"image_channels", cfg.image_channels}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig cfg;
  try {
    cfg.scale = j.at("scale").get<Index>();
    cfg.embed_channels = j.at("embed_channels").get<Index>();
    cfg.window = j.at("window").get<Index>();
    cfg.heads = j.at("heads").get<Index>();
    cfg.counts.irstb = j.at("n_irstb").get<Index>();
    cfg.counts.dca = j.at("n_dca").get<Index>();
    cfg.counts.sca = j.at("n_sca").get<Index>();
    cfg.counts.stlc_per_irstb = j.at("n_stlc").get<Index>();
    cfg.mlp_expansion = j.at("mlp_expansion").get<Index>();
    cfg.image_channels = j.at("image_channels").get<Index>();
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("checkpoint model config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

Checkpoint checkpoint_from_model(const Model<float>& model) {
  Checkpoint ckpt;
  ckpt.meta["model"] = model_config_to_json(model.config);
  for (const auto& [name, t] : named_parameters(model.params)) ckpt.records.emplace_back(name, *t);
  return ckpt;
}

Model<float> model_from_checkpoint(const Checkpoint& ckpt) {
  if (!ckpt.meta.contains("model")) throw CheckpointError("checkpoint metadata has no model config");
  Model<float> model{model_config_from_json(ckpt.meta["model"]), {}};
  model.params = zero_parameters<float>(model.config);
  for (auto& [name, t] : named_parameters(model.params)) {
    const Tensor<float>* src = ckpt.find(name);
    if (!src) throw CheckpointError("checkpoint is missing record '" + name + "'");
    if (src->shape() != t->shape()) {
      throw CheckpointError("record '" + name + "' has shape " + shape_string(src->shape()) + ", expected " +
                            shape_string(t->shape()));
    }
    *t = *src;
  }
  return model;
}

}  // namespace sfsr
