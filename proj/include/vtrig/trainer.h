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

#ifndef VTRIG_TRAINER_H_
#define VTRIG_TRAINER_H_

#include <optional>
#include <ostream>
#include <vector>

#include "vtrig/features.h"
#include "vtrig/losses.h"
#include "vtrig/model.h"
#include "vtrig/sampler.h"

namespace vtrig {

// Piecewise learning rate: linear warmup to `peak` at warmup_end_epoch,
// linear decay to linear_end_value at linear_end_epoch, then per-epoch
// exponential decay, floored at min_lr throughout.
struct LrSchedule {
  double peak = 1e-3;
  double warmup_end_epoch = 2.0;
  double linear_end_epoch = 27.0;
  double linear_end_value = 7e-4;
  double exp_factor = 0.7;
  double min_lr = 1e-7;
  double last_epoch = 40.0;

  void Validate() const;
  double At(double epoch) const;
  // Rescales the time axis onto [0, total_epochs], keeping the lr values at
  // corresponding relative positions (the exponential rate compounds so the
  // final lr matches the uncompressed schedule's).
  LrSchedule Compressed(double total_epochs) const;
};

// Adam with bias correction.  Moments are lazily shaped on first use and
// keyed by position in the parameter list, which must stay stable across
// steps.  Parameters without an accumulated gradient count as zero-gradient.
class AdamState {
 public:
  AdamState(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void Step(const std::vector<ad::Var>& params, double lr);
  long step_count() const { return t_; }

 private:
  double beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<Mat> m_, v_;
};

struct TrainRegime {
  enum class Stage { kBaseline, kFinetune, kCustom };
  Stage stage = Stage::kCustom;
  bool freeze_encoder = false;
  int tap_layer = 1;
  bool use_phone = false;
  bool use_phrase = false;
  bool use_spkr = false;
  bool use_metric = false;

  // Speaker-independent stage: phone + phrase losses, decoder fed from the
  // top encoder layer.
  static TrainRegime Baseline(const ModelConfig& cfg);
  // Adaptation stage: encoder frozen, decoder fed from the penultimate
  // layer, phrase + speaker + metric losses.
  static TrainRegime Finetune(const ModelConfig& cfg);
  void Validate(const ModelConfig& cfg) const;
};

// One utterance after feature preprocessing, ready for the model.
struct PreparedUtterance {
  Mat feats;  // T' x input_dim
  std::optional<std::vector<int>> phonemes;
  int phrase_label = 0;
  std::optional<int> speaker;
};

struct BatchComputeOptions {
  TrainRegime regime;
  LossWeights weights;
  bool strict_pairs = false;
  // Both rngs are consumed by forking only, so repeated calls with copies of
  // the same options reproduce masks and pair subsets exactly.
  Rng dropout_rng{0};
  Rng pair_rng{0};
};

// Loss of one batch under the regime's masks, values only (no graph).
LossBreakdown ComputeBatchLoss(const ModelParams& params,
                               const std::vector<PreparedUtterance>& batch,
                               const BatchComputeOptions& opt);

// Same loss; additionally accumulates gradients into the parameters' grad
// buffers (frozen groups receive none).
LossBreakdown ComputeBatchGradients(const ModelParams& params,
                                    const std::vector<PreparedUtterance>& batch,
                                    const BatchComputeOptions& opt);

struct TrainerOptions {
  LrSchedule schedule;
  int epochs = 5;
  uint64_t seed = 0;
  LossWeights weights;
  BatchSpec batch_spec;          // fine-tuning batches
  int baseline_batch_size = 16;  // baseline stage batches
  bool strict_pairs = false;
  double grad_clip_norm = 0.0;  // 0 disables clipping
  std::ostream* metrics_out = nullptr;
};

struct TrainStats {
  std::vector<double> epoch_mean_total;
  int steps = 0;
};

// Stage one on the voice-trigger store.  Sets the model's tap layer to the
// top encoder block.
TrainStats TrainBaseline(ModelParams* params, const UtteranceStore& trigger,
                         const FeaturePipeline& pipe,
                         const TrainerOptions& opt);

// Stage two on both stores using composed batches.  The regime controls
// freezing, tap and active losses; defaults to TrainRegime::Finetune.
TrainStats FinetuneModel(ModelParams* params, const UtteranceStore& spkr,
                         const UtteranceStore& trigger,
                         const FeaturePipeline& pipe, const TrainerOptions& opt,
                         const TrainRegime& regime);

// Trainable tensors under a regime (insertion order of NamedTensors).
std::vector<std::pair<std::string, ad::Var>> TrainableTensors(
    const ModelParams& params, const TrainRegime& regime);

PreparedUtterance PrepareUtterance(const Utterance& u,
                                   const FeaturePipeline& pipe);

}  // namespace vtrig

#endif  // VTRIG_TRAINER_H_
