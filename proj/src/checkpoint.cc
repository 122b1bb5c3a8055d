// Copyright (c) 2026 The vtrig Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "vtrig/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace vtrig {

namespace {

constexpr char kMagic[4] = {'V', 'T', 'C', 'K'};
constexpr uint32_t kVersion = 1;

}  // namespace

const Mat& Checkpoint::Find(const std::string& name) const {
  for (const auto& [n, m] : tensors) {
    if (n == name) return m;
  }
  throw DataError("checkpoint: missing tensor " + name);
}

bool Checkpoint::Has(const std::string& name) const {
  for (const auto& [n, m] : tensors) {
    if (n == name) return true;
  }
  return false;
}

void Checkpoint::Save(const std::string& path) const {
  nlohmann::json header = meta;
  header["format_version"] = kVersion;
  nlohmann::json table = nlohmann::json::array();
  for (const auto& [name, m] : tensors) {
    table.push_back({{"name", name},
                     {"rows", m.rows()},
                     {"cols", m.cols()}});
  }
  header["tensors"] = table;
  std::string header_str = header.dump();

  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError(path + ": cannot open for writing");
  os.write(kMagic, 4);
  uint32_t version = kVersion;
  os.write(reinterpret_cast<const char*>(&version), sizeof(version));
  uint64_t hlen = header_str.size();
  os.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  os.write(header_str.data(), static_cast<std::streamsize>(hlen));
  std::vector<double> row;
  for (const auto& [name, m] : tensors) {
    row.resize(m.cols());
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) row[c] = m(r, c);
      os.write(reinterpret_cast<const char*>(row.data()),
               static_cast<std::streamsize>(row.size() * sizeof(double)));
    }
  }
  if (!os) throw DataError(path + ": write failed");
}

Checkpoint Checkpoint::Load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError(path + ": cannot open");
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) {
    throw DataError(path + ": not a checkpoint file");
  }
  uint32_t version = 0;
  is.read(reinterpret_cast<char*>(&version), sizeof(version));
  if (!is || version != kVersion) {
    throw DataError(path + ": unsupported checkpoint version");
  }
  uint64_t hlen = 0;
  is.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  if (!is || hlen == 0 || hlen > (1ull << 30)) {
    throw DataError(path + ": implausible header length");
  }
  std::string header_str(hlen, '\0');
  is.read(header_str.data(), static_cast<std::streamsize>(hlen));
  if (!is) throw DataError(path + ": truncated header");

  Checkpoint ckpt;
  try {
    ckpt.meta = nlohmann::json::parse(header_str);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": bad header: " + e.what());
  }
  if (!ckpt.meta.contains("tensors") || !ckpt.meta["tensors"].is_array()) {
    throw DataError(path + ": header lacks tensor table");
  }
  for (const auto& entry : ckpt.meta["tensors"]) {
    std::string name = entry.at("name").get<std::string>();
    auto rows = entry.at("rows").get<Eigen::Index>();
    auto cols = entry.at("cols").get<Eigen::Index>();
    if (rows < 0 || cols < 0 || rows * cols > (1ll << 32)) {
      throw DataError(path + ": implausible tensor shape for " + name);
    }
    Mat m(rows, cols);
    std::vector<double> row(cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      is.read(reinterpret_cast<char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(double)));
      if (!is) throw DataError(path + ": truncated payload at " + name);
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[c];
    }
    ckpt.tensors.emplace_back(std::move(name), std::move(m));
  }
  ckpt.meta.erase("tensors");
  return ckpt;
}

nlohmann::json ModelConfigToJson(const ModelConfig& cfg) {
  return {{"input_dim", cfg.input_dim},
          {"d_model", cfg.d_model},
          {"num_heads", cfg.num_heads},
          {"ffn_dim", cfg.ffn_dim},
          {"encoder_blocks", cfg.encoder_blocks},
          {"decoder_blocks", cfg.decoder_blocks},
          {"num_queries", cfg.num_queries},
          {"phoneme_classes", cfg.phoneme_classes},
          {"speaker_classes", cfg.speaker_classes},
          {"tap_layer", cfg.tap_layer},
          {"speaker_dropout", cfg.speaker_dropout},
          {"ln_eps", cfg.ln_eps}};
}

ModelConfig ModelConfigFromJson(const nlohmann::json& j) {
  ModelConfig cfg;
  try {
    cfg.input_dim = j.at("input_dim").get<int>();
    cfg.d_model = j.at("d_model").get<int>();
    cfg.num_heads = j.at("num_heads").get<int>();
    cfg.ffn_dim = j.at("ffn_dim").get<int>();
    cfg.encoder_blocks = j.at("encoder_blocks").get<int>();
    cfg.decoder_blocks = j.at("decoder_blocks").get<int>();
    cfg.num_queries = j.at("num_queries").get<int>();
    cfg.phoneme_classes = j.at("phoneme_classes").get<int>();
    cfg.speaker_classes = j.at("speaker_classes").get<int>();
    cfg.tap_layer = j.at("tap_layer").get<int>();
    cfg.speaker_dropout = j.at("speaker_dropout").get<double>();
    cfg.ln_eps = j.at("ln_eps").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model config: ") + e.what());
  }
  cfg.Validate();
  return cfg;
}

Checkpoint MakeCheckpoint(const ModelParams& params,
                          const FeaturePipeline& pipeline,
                          nlohmann::json extra) {
  Checkpoint ckpt;
  ckpt.meta["model"] = ModelConfigToJson(params.cfg);
  ckpt.meta["pipeline"] = {{"left_context", pipeline.left_context},
                           {"right_context", pipeline.right_context},
                           {"subsample_factor", pipeline.subsample_factor}};
  ckpt.meta["extra"] = std::move(extra);
  for (const auto& [name, var] : params.NamedTensors()) {
    ckpt.tensors.emplace_back(name, var->value);
  }
  ckpt.tensors.emplace_back("normalizer.mean", Mat(pipeline.stats.mean.transpose()));
  ckpt.tensors.emplace_back("normalizer.std", Mat(pipeline.stats.stddev.transpose()));
  return ckpt;
}

ModelParams ModelFromCheckpoint(const Checkpoint& ckpt) {
  if (!ckpt.meta.contains("model")) {
    throw DataError("checkpoint: no model config");
  }
  ModelConfig cfg = ModelConfigFromJson(ckpt.meta["model"]);
  Rng rng(0);
  ModelParams params = ModelParams::Init(cfg, &rng);
  for (const auto& [name, var] : params.NamedTensors()) {
    const Mat& stored = ckpt.Find(name);
    if (stored.rows() != var->value.rows() || stored.cols() != var->value.cols()) {
      throw DataError("checkpoint: shape mismatch for " + name);
    }
    var->value = stored;
  }
  return params;
}

FeaturePipeline PipelineFromCheckpoint(const Checkpoint& ckpt) {
  if (!ckpt.meta.contains("pipeline")) {
    throw DataError("checkpoint: no pipeline config");
  }
  const nlohmann::json& p = ckpt.meta["pipeline"];
  FeaturePipeline pipe;
  try {
    pipe.left_context = p.at("left_context").get<int>();
    pipe.right_context = p.at("right_context").get<int>();
    pipe.subsample_factor = p.at("subsample_factor").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint pipeline: ") + e.what());
  }
  pipe.stats.mean = ckpt.Find("normalizer.mean").row(0).transpose();
  pipe.stats.stddev = ckpt.Find("normalizer.std").row(0).transpose();
  return pipe;
}

}  // namespace vtrig
