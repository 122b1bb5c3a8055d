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

// Experiment drivers gluing the corpus, the trainer, and the evaluation
// protocol together under one config file.  Every run is a pure function of
// (config, seeds); outputs land in the configured out_dir and carry the
// config hash for provenance.

#ifndef VTRIG_EXPERIMENT_H_
#define VTRIG_EXPERIMENT_H_

#include <string>
#include <vector>

#include "vtrig/config.h"
#include "vtrig/eval.h"
#include "vtrig/model.h"
#include "vtrig/synthdata.h"
#include "vtrig/trainer.h"

namespace vtrig {

SynthSpec SynthSpecFromConfig(const Config& cfg);
LrSchedule ScheduleFromConfig(const Config& cfg);
LossWeights WeightsFromConfig(const Config& cfg);
BatchSpec BatchSpecFromConfig(const Config& cfg);
ProtocolConfig ProtocolConfigFromConfig(const Config& cfg);

// Generates the synthetic corpus and writes the four manifests
// (voice_trigger, speaker_id, eval, negatives) plus feature files under the
// data directory.  Returns that directory.
std::string RunSynth(const Config& cfg);

struct TrainArtifacts {
  std::string checkpoint_path;
  TrainStats stats;
};

// Stage one: speaker-independent training on the voice-trigger manifest.
// Fits the feature normalizer, initializes the model, trains, and writes the
// baseline checkpoint and metrics log.
TrainArtifacts RunTrainBaseline(const Config& cfg);

// Stage two: loads the baseline checkpoint, dimensions the speaker head,
// fine-tunes the decoder branch on composed batches, and writes the adapted
// checkpoint and metrics log.
TrainArtifacts RunFinetune(const Config& cfg);

// Runs the repeated-enrollment protocol on a checkpoint: DET file per
// scoring variant, FRR summary table, protocol report, score dump.
ProtocolReport RunEval(const Config& cfg);

struct AblationRow {
  std::string name;
  uint64_t seed = 0;
  std::string config_hash;
  // Mean protocol FRRs per reported branch; negative when not reported.
  double frr_ctc = -1.0;
  double frr_metric = -1.0;
};

// Trains and evaluates the fine-tuning variant grid (init source, active
// losses, tap layer, encoder freezing) and writes one table row per variant.
std::vector<AblationRow> RunAblate(const Config& cfg);

}  // namespace vtrig

#endif  // VTRIG_EXPERIMENT_H_
