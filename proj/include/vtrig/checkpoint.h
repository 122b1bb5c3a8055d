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

// Checkpoint container: magic "VTCK", u32 version, u64 header length, JSON
// header (model config, pipeline, tensor table, extras), then all tensor
// payloads as row-major little-endian f64.  Doubles round-trip bit-exactly.

#ifndef VTRIG_CHECKPOINT_H_
#define VTRIG_CHECKPOINT_H_

#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "vtrig/features.h"
#include "vtrig/model.h"

namespace vtrig {

struct Checkpoint {
  nlohmann::json meta;  // includes "model", "pipeline", free-form "extra"
  std::vector<std::pair<std::string, Mat>> tensors;

  const Mat& Find(const std::string& name) const;
  bool Has(const std::string& name) const;

  void Save(const std::string& path) const;
  static Checkpoint Load(const std::string& path);
};

nlohmann::json ModelConfigToJson(const ModelConfig& cfg);
ModelConfig ModelConfigFromJson(const nlohmann::json& j);

// Packs model parameters plus the feature pipeline (normalizer stats ride
// along as tensors).
Checkpoint MakeCheckpoint(const ModelParams& params,
                          const FeaturePipeline& pipeline,
                          nlohmann::json extra = nlohmann::json::object());

// Rebuilds the model; every named tensor must be present with matching
// shape, otherwise the checkpoint is rejected.
ModelParams ModelFromCheckpoint(const Checkpoint& ckpt);
FeaturePipeline PipelineFromCheckpoint(const Checkpoint& ckpt);

}  // namespace vtrig

#endif  // VTRIG_CHECKPOINT_H_
