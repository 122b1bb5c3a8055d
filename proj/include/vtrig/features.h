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

#ifndef VTRIG_FEATURES_H_
#define VTRIG_FEATURES_H_

#include <vector>

#include "vtrig/common.h"

namespace vtrig {

struct AudioClip {
  std::vector<double> samples;
  double sample_rate = 16000.0;
};

// Frames are rows; frame_rate is frames per second after whatever processing
// produced the matrix.
struct FeatureSequence {
  Mat frames;
  double frame_rate = 100.0;

  int NumFrames() const { return static_cast<int>(frames.rows()); }
  int Dim() const { return static_cast<int>(frames.cols()); }
};

struct MelConfig {
  double sample_rate = 16000.0;
  double window_ms = 25.0;
  double hop_ms = 10.0;
  int num_bins = 40;
  double fmin = 0.0;
  double fmax = 0.0;  // 0 means Nyquist
  double floor = 1e-10;

  int WindowSamples() const {
    return static_cast<int>(sample_rate * window_ms / 1000.0 + 0.5);
  }
  int HopSamples() const {
    return static_cast<int>(sample_rate * hop_ms / 1000.0 + 0.5);
  }
};

// Log mel filterbank energies.  Frame count is
// 1 + floor((num_samples - window) / hop); a clip shorter than one window is
// an error.  Energies are floored before the log.
FeatureSequence LogMelSpectrogram(const AudioClip& clip, const MelConfig& cfg);

// Splices each frame with `left` frames of left context and `right` frames of
// right context (edge frames replicate).  Output dim is (left+1+right) * dim.
FeatureSequence StackContext(const FeatureSequence& in, int left = 3,
                             int right = 3);

// Keeps every `factor`-th frame starting at index 0 and divides the frame
// rate accordingly.
FeatureSequence Subsample(const FeatureSequence& in, int factor = 3);

struct NormalizerStats {
  Vec mean;
  Vec stddev;  // population std, floored at 1e-8

  int Dim() const { return static_cast<int>(mean.size()); }
};

// Global per-dimension statistics over all frames of all sequences.
NormalizerStats FitNormalizer(const std::vector<const Mat*>& sequences);

FeatureSequence Normalize(const FeatureSequence& in, const NormalizerStats& s);
FeatureSequence Denormalize(const FeatureSequence& in, const NormalizerStats& s);

// Normalization, context stacking, and subsampling applied in that order.
// Normalization runs on the raw feature dimension, before stacking.
struct FeaturePipeline {
  NormalizerStats stats;
  int left_context = 3;
  int right_context = 3;
  int subsample_factor = 3;

  FeatureSequence Apply(const FeatureSequence& raw) const;
  Mat Apply(const Mat& raw_frames) const;
  int OutputDim(int raw_dim) const {
    return (left_context + 1 + right_context) * raw_dim;
  }
};

}  // namespace vtrig

#endif  // VTRIG_FEATURES_H_
