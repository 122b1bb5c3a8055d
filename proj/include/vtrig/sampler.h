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

#ifndef VTRIG_SAMPLER_H_
#define VTRIG_SAMPLER_H_

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vtrig/common.h"

namespace vtrig {

enum class DataSource { kVoiceTrigger, kSpeakerId };

struct Utterance {
  std::string id;
  Mat features;  // raw frames x feature dim
  double frame_rate = 100.0;
  std::optional<std::vector<int>> phoneme_labels;
  int phrase_label = 0;
  std::optional<int> speaker_id;          // index within the owning store
  std::optional<std::string> speaker_name;
  std::optional<std::pair<int, int>> keyword_segment;  // [start, end) frames
  double duration_hours = 0.0;
  DataSource source = DataSource::kVoiceTrigger;

  int NumFrames() const { return static_cast<int>(features.rows()); }
  void Validate() const;
};

// Utterances plus a by-speaker index.  Speakers are indexed by sorted name so
// label assignment is independent of manifest order.
class UtteranceStore {
 public:
  UtteranceStore() = default;
  static UtteranceStore Build(std::vector<Utterance> utts);

  int Size() const { return static_cast<int>(utts_.size()); }
  const Utterance& Get(int i) const { return utts_.at(i); }
  const std::vector<Utterance>& All() const { return utts_; }

  int NumSpeakers() const { return static_cast<int>(speaker_names_.size()); }
  const std::string& SpeakerName(int s) const { return speaker_names_.at(s); }
  const std::vector<int>& SpeakerUtterances(int s) const {
    return by_speaker_.at(s);
  }

 private:
  std::vector<Utterance> utts_;
  std::vector<std::string> speaker_names_;
  std::vector<std::vector<int>> by_speaker_;
};

struct BatchSpec {
  int batch_size = 128;
  int spkr_utts = 112;
  int speakers_per_batch = 28;
  int utts_per_speaker = 4;
  double drop_prob = 0.5;

  void Validate() const;
};

struct Batch {
  std::vector<Utterance> utterances;  // speaker-ID part first, then trigger
};

// Exact-count batch: spkr_utts utterances drawn as utts_per_speaker from
// speakers_per_batch distinct speakers, then batch_size - spkr_utts from the
// voice-trigger store, all without replacement within the batch.
Batch ComposeBatch(const UtteranceStore& spkr_store,
                   const UtteranceStore& trigger_store, const BatchSpec& spec,
                   Rng* rng);

// Removes the keyword segment frames (splicing the remainder together) and
// clears the phrase label.  With drop = false the utterance passes through.
Utterance DropKeywordSegment(const Utterance& u, bool drop);

// Batch stream for one training run.  An epoch is one shuffled pass over the
// voice-trigger store; the speaker-ID part is redrawn per batch.  Keyword
// segment dropping is applied to the speaker-ID part here.
class BatchSampler {
 public:
  BatchSampler(const UtteranceStore* spkr_store,
               const UtteranceStore* trigger_store, const BatchSpec& spec,
               uint64_t seed);

  int StepsPerEpoch() const { return steps_per_epoch_; }
  Batch Next();

 private:
  const UtteranceStore* spkr_;
  const UtteranceStore* trigger_;
  BatchSpec spec_;
  Rng rng_;
  std::vector<int> trigger_order_;
  int cursor_ = 0;
  int trigger_per_batch_ = 0;
  int steps_per_epoch_ = 0;
};

}  // namespace vtrig

#endif  // VTRIG_SAMPLER_H_
