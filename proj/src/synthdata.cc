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

#include "vtrig/synthdata.h"

#include <algorithm>
#include <cstdio>

namespace vtrig {

namespace {

// Stream id layout for forked rngs: category in the high word, index below.
enum StreamCategory : uint64_t {
  kProtoStream = 1,
  kTrainSpeaker = 2,
  kEvalSpeaker = 3,
  kCalibSpeaker = 4,
  kBackgroundSpeaker = 5,
  kAsrUtt = 6,
  kKeywordUtt = 7,
  kTrainUtt = 8,
  kEvalUtt = 9,
  kCalibUtt = 10,
  kNegativeUtt = 11,
  kSpeakerBasis = 12,
};

uint64_t StreamId(StreamCategory cat, uint64_t a, uint64_t b = 0) {
  return (static_cast<uint64_t>(cat) << 48) | (a << 20) | b;
}

struct SpeakerFactor {
  Vec offset;
  Vec tilt;  // multiplicative, exp of a gaussian log-gain
};

// Orthonormal columns spanning the speaker subspace; empty when full-rank.
Mat GenSpeakerBasis(const SynthSpec& spec, Rng rng) {
  const int k = spec.speaker_subspace_dim;
  if (k <= 0 || k >= spec.feature_dim) return Mat();
  Mat a(spec.feature_dim, k);
  for (int i = 0; i < spec.feature_dim; ++i) {
    for (int j = 0; j < k; ++j) a(i, j) = rng.Gaussian();
  }
  Eigen::HouseholderQR<Mat> qr(a);
  return qr.householderQ() * Mat::Identity(spec.feature_dim, k);
}

SpeakerFactor GenSpeaker(const SynthSpec& spec, const Mat& basis, Rng rng) {
  SpeakerFactor f;
  f.tilt = Vec(spec.feature_dim);
  if (basis.size() == 0) {
    f.offset = Vec(spec.feature_dim);
    for (int i = 0; i < spec.feature_dim; ++i) {
      f.offset(i) = spec.speaker_offset_scale * rng.Gaussian();
    }
  } else {
    // Offset energy matches the full-rank draw regardless of the subspace
    // dimension.
    Vec z(basis.cols());
    for (int i = 0; i < basis.cols(); ++i) z(i) = rng.Gaussian();
    const double gain = spec.speaker_offset_scale *
                        std::sqrt(double(spec.feature_dim) / basis.cols());
    f.offset = gain * (basis * z);
  }
  double tilt_std = spec.speaker_tilt * spec.speaker_offset_scale;
  for (int i = 0; i < spec.feature_dim; ++i) {
    f.tilt(i) = std::exp(tilt_std * rng.Gaussian());
  }
  return f;
}

std::string Num(int v, int width) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%0*d", width, v);
  return buf;
}

bool ContainsSubsequenceAt(const std::vector<int>& hay, size_t at,
                           const std::vector<int>& needle) {
  if (at + needle.size() > hay.size()) return false;
  for (size_t i = 0; i < needle.size(); ++i) {
    if (hay[at + i] != needle[i]) return false;
  }
  return true;
}

bool ContainsKeyword(const std::vector<int>& phones,
                     const std::vector<int>& keyword) {
  for (size_t at = 0; at + keyword.size() <= phones.size(); ++at) {
    if (ContainsSubsequenceAt(phones, at, keyword)) return true;
  }
  return false;
}

class Generator {
 public:
  explicit Generator(const SynthSpec& spec)
      : spec_(spec), master_(spec.seed), protos_(GenPrototypes(spec)) {}

  GeneratedCorpus Run() {
    GeneratedCorpus c;
    const Mat basis =
        GenSpeakerBasis(spec_, master_.Fork(StreamId(kSpeakerBasis, 0)));
    std::vector<SpeakerFactor> train, evals, calib, background;
    for (int s = 0; s < spec_.train_speakers; ++s) {
      train.push_back(
          GenSpeaker(spec_, basis, master_.Fork(StreamId(kTrainSpeaker, s))));
    }
    for (int s = 0; s < spec_.eval_speakers; ++s) {
      evals.push_back(
          GenSpeaker(spec_, basis, master_.Fork(StreamId(kEvalSpeaker, s))));
    }
    for (int s = 0; s < spec_.calib_speakers; ++s) {
      calib.push_back(
          GenSpeaker(spec_, basis, master_.Fork(StreamId(kCalibSpeaker, s))));
    }
    for (int s = 0; s < spec_.background_speakers; ++s) {
      background.push_back(GenSpeaker(
          spec_, basis, master_.Fork(StreamId(kBackgroundSpeaker, s))));
    }

    // Voice-trigger store: phoneme-labeled keyword-free utterances plus
    // phrase-labeled ones (half keyword).  A neutral speaker (no offset) is
    // used: this source stands in for pooled anonymous training data.
    SpeakerFactor neutral;
    neutral.offset = Vec::Zero(spec_.feature_dim);
    neutral.tilt = Vec::Ones(spec_.feature_dim);
    for (int i = 0; i < spec_.asr_utterances; ++i) {
      Rng rng = master_.Fork(StreamId(kAsrUtt, i));
      std::vector<int> phones = RandomPhrase(&rng, 6, 12);
      Utterance u = Render("asr_" + Num(i, 4), phones, neutral, &rng);
      u.phoneme_labels = phones;
      u.phrase_label = 0;
      u.source = DataSource::kVoiceTrigger;
      c.voice_trigger.push_back(std::move(u));
    }
    for (int i = 0; i < spec_.keyword_utterances; ++i) {
      Rng rng = master_.Fork(StreamId(kKeywordUtt, i));
      bool positive = i % 2 == 0;
      Utterance u;
      if (positive) {
        std::vector<int> tail = RandomPhrase(&rng, 0, 3);
        u = RenderKeyworded("kw_" + Num(i, 4), tail, neutral, &rng);
      } else {
        std::vector<int> phones = RandomPhrase(&rng, 3, 7);
        u = Render("kw_" + Num(i, 4), phones, neutral, &rng);
        u.phrase_label = 0;
      }
      u.source = DataSource::kVoiceTrigger;
      c.voice_trigger.push_back(std::move(u));
    }

    for (int s = 0; s < spec_.train_speakers; ++s) {
      std::string name = "trn" + Num(s, 3);
      for (int j = 0; j < spec_.train_utts_per_speaker; ++j) {
        Rng rng = master_.Fork(StreamId(kTrainUtt, s, j));
        std::vector<int> tail = RandomPhrase(&rng, 4, 8);
        Utterance u = RenderKeyworded("spk_" + name + "_" + Num(j, 3), tail,
                                      train[s], &rng);
        u.speaker_name = name;
        u.source = DataSource::kSpeakerId;
        c.speaker_id.push_back(std::move(u));
      }
    }

    auto emit_eval = [&](const std::string& name, StreamCategory cat,
                         const SpeakerFactor& f, int s, int count) {
      for (int j = 0; j < count; ++j) {
        Rng rng = master_.Fork(StreamId(cat, s, j));
        std::vector<int> tail = RandomPhrase(&rng, 4, 8);
        Utterance u =
            RenderKeyworded("spk_" + name + "_" + Num(j, 3), tail, f, &rng);
        u.speaker_name = name;
        u.source = DataSource::kSpeakerId;
        c.eval.push_back(std::move(u));
      }
    };
    for (int s = 0; s < spec_.eval_speakers; ++s) {
      emit_eval("evl" + Num(s, 3), kEvalUtt, evals[s], s,
                spec_.eval_utts_per_speaker);
    }
    for (int s = 0; s < spec_.calib_speakers; ++s) {
      emit_eval("cal" + Num(s, 3), kCalibUtt, calib[s], s,
                spec_.calib_utts_per_speaker);
    }

    for (int i = 0; i < spec_.negative_trials; ++i) {
      Rng rng = master_.Fork(StreamId(kNegativeUtt, i));
      const SpeakerFactor& f = background[rng.UniformInt(spec_.background_speakers)];
      bool decoy = rng.Uniform() < spec_.decoy_fraction;
      std::vector<int> phones = NegativeStream(&rng, decoy);
      Utterance u = Render("neg_" + Num(i, 4), phones, f, &rng);
      u.phrase_label = 0;
      u.source = DataSource::kVoiceTrigger;
      c.negatives.push_back(std::move(u));
    }
    return c;
  }

 private:
  // Uniform keyword-free phoneme string with length in [lo, hi].
  std::vector<int> RandomPhrase(Rng* rng, int lo, int hi) {
    for (int attempt = 0; attempt < 1000; ++attempt) {
      int len = lo + rng->UniformInt(hi - lo + 1);
      std::vector<int> phones(len);
      for (int i = 0; i < len; ++i) phones[i] = rng->UniformInt(spec_.phoneme_count);
      if (!ContainsKeyword(phones, spec_.keyword)) return phones;
    }
    throw NumericalError("synth: could not draw a keyword-free phrase");
  }

  // Keyword with one position substituted; still keyword-free as a string.
  std::vector<int> Decoy(Rng* rng) {
    for (int attempt = 0; attempt < 1000; ++attempt) {
      std::vector<int> d = spec_.keyword;
      int pos = rng->UniformInt(static_cast<int>(d.size()));
      d[pos] = rng->UniformInt(spec_.phoneme_count);
      if (!ContainsKeyword(d, spec_.keyword)) return d;
    }
    throw NumericalError("synth: could not draw a decoy");
  }

  // Keyword-free stream long enough to cover negative_seconds.
  std::vector<int> NegativeStream(Rng* rng, bool with_decoy) {
    const int target_frames =
        static_cast<int>(spec_.negative_seconds * spec_.frame_rate);
    // Phoneme lengths are drawn at render time; use the mean to size the
    // string, then let Render emit the exact per-phoneme draws.
    double mean_len =
        0.5 * (spec_.min_frames_per_phoneme + spec_.max_frames_per_phoneme);
    int count = std::max(1, static_cast<int>(target_frames / mean_len));
    std::vector<int> phones;
    for (int attempt = 0; attempt < 1000; ++attempt) {
      phones.clear();
      for (int i = 0; i < count; ++i) {
        phones.push_back(rng->UniformInt(spec_.phoneme_count));
      }
      if (with_decoy) {
        std::vector<int> d = Decoy(rng);
        int at = rng->UniformInt(
            std::max(1, static_cast<int>(phones.size() - d.size())));
        std::copy(d.begin(), d.end(), phones.begin() + at);
      }
      if (!ContainsKeyword(phones, spec_.keyword)) return phones;
    }
    throw NumericalError("synth: could not draw a negative stream");
  }

  int PhonemeFrames(Rng* rng) {
    return spec_.min_frames_per_phoneme +
           rng->UniformInt(spec_.max_frames_per_phoneme -
                           spec_.min_frames_per_phoneme + 1);
  }

  // Renders a phoneme string for one speaker.  If segment_end_out is given it
  // receives the frame count of the first `segment_phonemes` phonemes.
  Utterance Render(const std::string& id, const std::vector<int>& phones,
                   const SpeakerFactor& f, Rng* rng, int segment_phonemes = 0,
                   int* segment_end_out = nullptr) {
    Vec channel(spec_.feature_dim);
    for (int d = 0; d < spec_.feature_dim; ++d) {
      channel(d) = spec_.channel_scale * rng->Gaussian();
    }
    std::vector<int> lens(phones.size());
    int total = 0;
    for (size_t i = 0; i < phones.size(); ++i) {
      lens[i] = PhonemeFrames(rng);
      total += lens[i];
    }
    Mat frames(total, spec_.feature_dim);
    int at = 0;
    int seg_end = 0;
    for (size_t i = 0; i < phones.size(); ++i) {
      const Vec& base = protos_.base[phones[i]];
      const Vec& wander = protos_.wander[phones[i]];
      for (int t = 0; t < lens[i]; ++t) {
        double s = std::sin(M_PI * (t + 0.5) / lens[i]);
        Vec proto = base + s * wander;
        for (int d = 0; d < spec_.feature_dim; ++d) {
          frames(at, d) = f.tilt(d) * proto(d) + f.offset(d) + channel(d) +
                          spec_.noise_scale * rng->Gaussian();
        }
        ++at;
      }
      if (static_cast<int>(i) < segment_phonemes) seg_end = at;
    }
    if (segment_end_out != nullptr) *segment_end_out = seg_end;
    Utterance u;
    u.id = id;
    u.features = std::move(frames);
    u.frame_rate = spec_.frame_rate;
    u.duration_hours = total / spec_.frame_rate / 3600.0;
    return u;
  }

  // Keyword followed by a non-keyword tail, with exact segment bounds.
  Utterance RenderKeyworded(const std::string& id, const std::vector<int>& tail,
                            const SpeakerFactor& f, Rng* rng) {
    std::vector<int> phones = spec_.keyword;
    phones.insert(phones.end(), tail.begin(), tail.end());
    int seg_end = 0;
    Utterance u = Render(id, phones, f, rng,
                         static_cast<int>(spec_.keyword.size()), &seg_end);
    u.phrase_label = 1;
    u.keyword_segment = std::make_pair(0, seg_end);
    return u;
  }

  SynthSpec spec_;
  Rng master_;
  SynthPrototypes protos_;
};

}  // namespace

void SynthSpec::Validate() const {
  if (phoneme_count < 2) throw std::invalid_argument("synth: need >= 2 phonemes");
  if (keyword.empty()) throw std::invalid_argument("synth: empty keyword");
  for (int p : keyword) {
    if (p < 0 || p >= phoneme_count) {
      throw std::invalid_argument("synth: keyword phoneme out of range");
    }
  }
  if (feature_dim <= 0) throw std::invalid_argument("synth: bad feature_dim");
  if (min_frames_per_phoneme < 1 ||
      max_frames_per_phoneme < min_frames_per_phoneme) {
    throw std::invalid_argument("synth: bad frames_per_phoneme range");
  }
  if (train_speakers < 0 || eval_speakers < 0 || calib_speakers < 0 ||
      background_speakers < 1) {
    throw std::invalid_argument("synth: bad speaker counts");
  }
  if (decoy_fraction < 0.0 || decoy_fraction > 1.0) {
    throw std::invalid_argument("synth: decoy_fraction must be a probability");
  }
  if (noise_scale < 0.0 || speaker_offset_scale < 0.0 || speaker_tilt < 0.0 ||
      channel_scale < 0.0) {
    throw std::invalid_argument("synth: scales must be non-negative");
  }
  if (speaker_subspace_dim < 0 || speaker_subspace_dim > feature_dim) {
    throw std::invalid_argument("synth: bad speaker_subspace_dim");
  }
  if (frame_rate <= 0.0 || negative_seconds <= 0.0) {
    throw std::invalid_argument("synth: bad rate/duration");
  }
}

SynthPrototypes GenPrototypes(const SynthSpec& spec) {
  spec.Validate();
  Rng master(spec.seed);
  Rng rng = master.Fork(StreamId(kProtoStream, 0));
  SynthPrototypes p;
  p.base.resize(spec.phoneme_count);
  p.wander.resize(spec.phoneme_count);
  for (int i = 0; i < spec.phoneme_count; ++i) {
    p.base[i] = Vec(spec.feature_dim);
    p.wander[i] = Vec(spec.feature_dim);
    for (int d = 0; d < spec.feature_dim; ++d) p.base[i](d) = rng.Gaussian();
    for (int d = 0; d < spec.feature_dim; ++d) {
      p.wander[i](d) = 0.3 * rng.Gaussian();
    }
  }
  return p;
}

GeneratedCorpus GenCorpus(const SynthSpec& spec) {
  spec.Validate();
  return Generator(spec).Run();
}

}  // namespace vtrig
