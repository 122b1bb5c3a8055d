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

#include "vtrig/sampler.h"

#include <algorithm>
#include <map>

namespace vtrig {

void Utterance::Validate() const {
  if (features.rows() == 0 || features.cols() == 0) {
    throw DataError("utterance " + id + ": empty features");
  }
  if (keyword_segment) {
    auto [s, e] = *keyword_segment;
    if (s < 0 || e <= s || e > NumFrames()) {
      throw DataError("utterance " + id + ": segment out of range");
    }
  }
  if (phrase_label != 0 && phrase_label != 1) {
    throw DataError("utterance " + id + ": phrase label must be 0 or 1");
  }
  if (source == DataSource::kSpeakerId) {
    if (!speaker_name && !speaker_id) {
      throw DataError("utterance " + id + ": speaker-ID source needs a speaker");
    }
    if (!keyword_segment && phrase_label == 1) {
      throw DataError("utterance " + id + ": speaker-ID source needs segment bounds");
    }
  } else {
    if (!phoneme_labels && phrase_label != 0 && phrase_label != 1) {
      throw DataError("utterance " + id + ": voice-trigger source needs labels");
    }
  }
}

UtteranceStore UtteranceStore::Build(std::vector<Utterance> utts) {
  UtteranceStore store;
  store.utts_ = std::move(utts);
  std::map<std::string, std::vector<int>> groups;
  for (size_t i = 0; i < store.utts_.size(); ++i) {
    store.utts_[i].Validate();
    if (store.utts_[i].speaker_name) {
      groups[*store.utts_[i].speaker_name].push_back(static_cast<int>(i));
    }
  }
  for (auto& [name, idxs] : groups) {
    int sid = static_cast<int>(store.speaker_names_.size());
    store.speaker_names_.push_back(name);
    store.by_speaker_.push_back(std::move(idxs));
    for (int i : store.by_speaker_.back()) store.utts_[i].speaker_id = sid;
  }
  return store;
}

void BatchSpec::Validate() const {
  if (batch_size <= 0) throw std::invalid_argument("batch spec: empty batch");
  if (spkr_utts != speakers_per_batch * utts_per_speaker) {
    throw std::invalid_argument(
        "batch spec: spkr_utts must equal speakers_per_batch * utts_per_speaker");
  }
  if (spkr_utts > batch_size) {
    throw std::invalid_argument("batch spec: spkr_utts exceeds batch_size");
  }
  if (drop_prob < 0.0 || drop_prob > 1.0) {
    throw std::invalid_argument("batch spec: drop_prob must be a probability");
  }
}

namespace {

// Picks utts_per_speaker utterances from each of speakers_per_batch distinct
// speakers.  No silent fallback: shortage is an error.
std::vector<int> SampleSpeakerPart(const UtteranceStore& store,
                                   const BatchSpec& spec, Rng* rng) {
  if (store.NumSpeakers() < spec.speakers_per_batch) {
    throw DataError("compose_batch: not enough speakers (" +
                    std::to_string(store.NumSpeakers()) + " < " +
                    std::to_string(spec.speakers_per_batch) + ")");
  }
  std::vector<int> speakers = rng->SampleWithoutReplacement(
      store.NumSpeakers(), spec.speakers_per_batch);
  std::vector<int> out;
  out.reserve(spec.spkr_utts);
  for (int s : speakers) {
    const auto& pool = store.SpeakerUtterances(s);
    if (static_cast<int>(pool.size()) < spec.utts_per_speaker) {
      throw DataError("compose_batch: speaker " + store.SpeakerName(s) +
                      " has fewer than " +
                      std::to_string(spec.utts_per_speaker) + " utterances");
    }
    std::vector<int> pick = rng->SampleWithoutReplacement(
        static_cast<int>(pool.size()), spec.utts_per_speaker);
    for (int k : pick) out.push_back(pool[k]);
  }
  return out;
}

}  // namespace

Batch ComposeBatch(const UtteranceStore& spkr_store,
                   const UtteranceStore& trigger_store, const BatchSpec& spec,
                   Rng* rng) {
  spec.Validate();
  Batch batch;
  batch.utterances.reserve(spec.batch_size);
  for (int idx : SampleSpeakerPart(spkr_store, spec, rng)) {
    Utterance u = spkr_store.Get(idx);
    u.source = DataSource::kSpeakerId;
    batch.utterances.push_back(std::move(u));
  }
  const int trig_count = spec.batch_size - spec.spkr_utts;
  if (trig_count > 0) {
    if (trigger_store.Size() < trig_count) {
      throw DataError("compose_batch: trigger store smaller than requested");
    }
    for (int k : rng->SampleWithoutReplacement(trigger_store.Size(), trig_count)) {
      Utterance u = trigger_store.Get(k);
      u.source = DataSource::kVoiceTrigger;
      batch.utterances.push_back(std::move(u));
    }
  }
  return batch;
}

Utterance DropKeywordSegment(const Utterance& u, bool drop) {
  if (!drop) return u;
  if (!u.keyword_segment) {
    throw std::invalid_argument("drop_keyword_segment: no segment bounds on " +
                                u.id);
  }
  auto [start, end] = *u.keyword_segment;
  const int T = u.NumFrames();
  const int remain = T - (end - start);
  if (remain <= 0) {
    throw DataError("drop_keyword_segment: segment covers whole utterance " +
                    u.id);
  }
  Utterance out = u;
  Mat kept(remain, u.features.cols());
  if (start > 0) kept.topRows(start) = u.features.topRows(start);
  if (end < T) kept.bottomRows(T - end) = u.features.bottomRows(T - end);
  out.features = std::move(kept);
  out.phrase_label = 0;
  out.keyword_segment.reset();
  out.phoneme_labels.reset();  // labels no longer describe the audio
  return out;
}

BatchSampler::BatchSampler(const UtteranceStore* spkr_store,
                           const UtteranceStore* trigger_store,
                           const BatchSpec& spec, uint64_t seed)
    : spkr_(spkr_store), trigger_(trigger_store), spec_(spec), rng_(seed) {
  spec_.Validate();
  trigger_per_batch_ = spec_.batch_size - spec_.spkr_utts;
  if (trigger_per_batch_ <= 0) {
    throw std::invalid_argument("batch sampler: needs a voice-trigger share");
  }
  if (trigger_->Size() < trigger_per_batch_) {
    throw DataError("batch sampler: trigger store smaller than batch share");
  }
  steps_per_epoch_ = trigger_->Size() / trigger_per_batch_;
  trigger_order_ = rng_.Permutation(trigger_->Size());
}

Batch BatchSampler::Next() {
  if (cursor_ + trigger_per_batch_ > static_cast<int>(trigger_order_.size())) {
    trigger_order_ = rng_.Permutation(trigger_->Size());
    cursor_ = 0;
  }
  Batch batch;
  batch.utterances.reserve(spec_.batch_size);
  for (int idx : SampleSpeakerPart(*spkr_, spec_, &rng_)) {
    Utterance u = spkr_->Get(idx);
    u.source = DataSource::kSpeakerId;
    bool drop = rng_.Uniform() < spec_.drop_prob;
    batch.utterances.push_back(DropKeywordSegment(u, drop));
  }
  for (int i = 0; i < trigger_per_batch_; ++i) {
    Utterance u = trigger_->Get(trigger_order_[cursor_ + i]);
    u.source = DataSource::kVoiceTrigger;
    batch.utterances.push_back(std::move(u));
  }
  cursor_ += trigger_per_batch_;
  return batch;
}

}  // namespace vtrig
