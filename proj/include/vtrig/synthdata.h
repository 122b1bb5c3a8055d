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

// Synthetic corpus generator.  Phonemes are smooth random trajectories in
// feature space; speakers add a persistent offset and spectral tilt; noise is
// white.  Everything derives from one seed through forked streams, so
// generation is deterministic and order-independent.

#ifndef VTRIG_SYNTHDATA_H_
#define VTRIG_SYNTHDATA_H_

#include <vector>

#include "vtrig/common.h"
#include "vtrig/sampler.h"

namespace vtrig {

struct SynthSpec {
  int phoneme_count = 12;
  std::vector<int> keyword = {2, 7, 4, 9};

  int train_speakers = 30;
  int train_utts_per_speaker = 40;
  int eval_speakers = 8;
  int eval_utts_per_speaker = 40;
  // Calibration speakers land in the eval manifest under the "cal" name
  // prefix; they are disjoint from both training and test speakers.
  int calib_speakers = 4;
  int calib_utts_per_speaker = 15;

  int asr_utterances = 120;      // phoneme-labeled, keyword-free
  int keyword_utterances = 120;  // phrase-labeled, half keyword-positive

  int negative_trials = 200;
  double negative_seconds = 10.0;
  int background_speakers = 20;
  // Fraction of negative streams containing a near-keyword decoy (keyword
  // with one phoneme substituted).
  double decoy_fraction = 0.3;

  int feature_dim = 40;
  int min_frames_per_phoneme = 6;
  int max_frames_per_phoneme = 10;
  double speaker_offset_scale = 1.0;
  // When positive, speaker offsets live in a random subspace of this
  // dimension instead of being full-rank, with total offset energy kept
  // independent of the dimension.  Channel offsets stay isotropic either way.
  int speaker_subspace_dim = 0;
  // Log-std of the multiplicative tilt, relative to speaker_offset_scale, so
  // a zero offset scale silences the whole speaker factor.
  double speaker_tilt = 0.25;
  // Per-utterance offset modeling session and channel effects.  Unlike frame
  // noise it survives temporal pooling, so it is what keeps embeddings of the
  // same speaker from collapsing to a point.
  double channel_scale = 1.25;
  double noise_scale = 0.35;
  double frame_rate = 100.0;
  uint64_t seed = 1;

  void Validate() const;
};

struct GeneratedCorpus {
  std::vector<Utterance> voice_trigger;  // phoneme and/or phrase labels
  std::vector<Utterance> speaker_id;     // speaker + segment, no phonemes
  std::vector<Utterance> eval;           // test + calibration speakers
  std::vector<Utterance> negatives;      // long streams with durations
};

// The per-phoneme trajectory parameters, exposed so sanity checks can build
// an independent nearest-prototype classifier.
struct SynthPrototypes {
  std::vector<Vec> base;
  std::vector<Vec> wander;
};

SynthPrototypes GenPrototypes(const SynthSpec& spec);

GeneratedCorpus GenCorpus(const SynthSpec& spec);

}  // namespace vtrig

#endif  // VTRIG_SYNTHDATA_H_
