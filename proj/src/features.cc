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

#include "vtrig/features.h"

#include <algorithm>
#include <complex>

namespace vtrig {

namespace {

// In-place radix-2 Cooley-Tukey.  n must be a power of two.
void Fft(std::vector<std::complex<double>>* a) {
  const size_t n = a->size();
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap((*a)[i], (*a)[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    double ang = -2.0 * M_PI / static_cast<double>(len);
    std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (size_t k = 0; k < len / 2; ++k) {
        std::complex<double> u = (*a)[i + k];
        std::complex<double> v = (*a)[i + k + len / 2] * w;
        (*a)[i + k] = u + v;
        (*a)[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

size_t NextPowerOfTwo(size_t n) {
  size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

double HzToMel(double hz) { return 1127.0 * std::log(1.0 + hz / 700.0); }
double MelToHz(double mel) { return 700.0 * (std::exp(mel / 1127.0) - 1.0); }

// Triangular filters on the power spectrum, HTK-style center spacing.
Mat MelFilterbank(const MelConfig& cfg, int num_fft_bins, double bin_width_hz) {
  double fmax = cfg.fmax > 0.0 ? cfg.fmax : cfg.sample_rate / 2.0;
  if (fmax <= cfg.fmin) throw std::invalid_argument("mel: fmax <= fmin");
  double mel_lo = HzToMel(cfg.fmin);
  double mel_hi = HzToMel(fmax);
  std::vector<double> centers(cfg.num_bins + 2);
  for (int i = 0; i < cfg.num_bins + 2; ++i) {
    centers[i] =
        MelToHz(mel_lo + (mel_hi - mel_lo) * i / (cfg.num_bins + 1.0));
  }
  Mat fb = Mat::Zero(cfg.num_bins, num_fft_bins);
  for (int b = 0; b < cfg.num_bins; ++b) {
    double lo = centers[b], c = centers[b + 1], hi = centers[b + 2];
    for (int k = 0; k < num_fft_bins; ++k) {
      double f = k * bin_width_hz;
      if (f > lo && f < c) {
        fb(b, k) = (f - lo) / (c - lo);
      } else if (f >= c && f < hi) {
        fb(b, k) = (hi - f) / (hi - c);
      }
    }
  }
  return fb;
}

}  // namespace

FeatureSequence LogMelSpectrogram(const AudioClip& clip, const MelConfig& cfg) {
  const int win = cfg.WindowSamples();
  const int hop = cfg.HopSamples();
  if (win <= 0 || hop <= 0) throw std::invalid_argument("mel: bad window/hop");
  const int n = static_cast<int>(clip.samples.size());
  if (n < win) throw DataError("mel: clip shorter than one analysis window");

  const int num_frames = 1 + (n - win) / hop;
  const size_t fft_size = NextPowerOfTwo(static_cast<size_t>(win));
  const int num_fft_bins = static_cast<int>(fft_size / 2 + 1);
  const double bin_width = cfg.sample_rate / static_cast<double>(fft_size);

  std::vector<double> window(win);
  for (int i = 0; i < win; ++i) {
    window[i] = 0.54 - 0.46 * std::cos(2.0 * M_PI * i / (win - 1));
  }
  Mat fb = MelFilterbank(cfg, num_fft_bins, bin_width);

  Mat out(num_frames, cfg.num_bins);
  std::vector<std::complex<double>> buf(fft_size);
  Vec power(num_fft_bins);
  for (int t = 0; t < num_frames; ++t) {
    const double* frame = clip.samples.data() + static_cast<size_t>(t) * hop;
    for (size_t i = 0; i < fft_size; ++i) {
      double s = i < static_cast<size_t>(win) ? frame[i] * window[i] : 0.0;
      buf[i] = {s, 0.0};
    }
    Fft(&buf);
    for (int k = 0; k < num_fft_bins; ++k) power(k) = std::norm(buf[k]);
    Vec mel = fb * power;
    for (int b = 0; b < cfg.num_bins; ++b) {
      out(t, b) = std::log(std::max(mel(b), cfg.floor));
    }
  }
  return {out, cfg.sample_rate / hop};
}

FeatureSequence StackContext(const FeatureSequence& in, int left, int right) {
  if (left < 0 || right < 0) throw std::invalid_argument("stack: bad context");
  const int T = in.NumFrames();
  const int F = in.Dim();
  if (T == 0) throw std::invalid_argument("stack: empty sequence");
  const int span = left + 1 + right;
  Mat out(T, span * F);
  for (int t = 0; t < T; ++t) {
    for (int k = -left; k <= right; ++k) {
      int src = std::clamp(t + k, 0, T - 1);
      out.block(t, (k + left) * F, 1, F) = in.frames.row(src);
    }
  }
  return {out, in.frame_rate};
}

FeatureSequence Subsample(const FeatureSequence& in, int factor) {
  if (factor <= 0) throw std::invalid_argument("subsample: factor must be > 0");
  const int T = in.NumFrames();
  const int kept = (T + factor - 1) / factor;
  Mat out(kept, in.Dim());
  for (int i = 0; i < kept; ++i) out.row(i) = in.frames.row(i * factor);
  return {out, in.frame_rate / factor};
}

NormalizerStats FitNormalizer(const std::vector<const Mat*>& sequences) {
  if (sequences.empty()) throw std::invalid_argument("normalizer: no data");
  const Eigen::Index dim = sequences[0]->cols();
  long total = 0;
  Vec sum = Vec::Zero(dim);
  Vec sumsq = Vec::Zero(dim);
  for (const Mat* m : sequences) {
    if (m->cols() != dim) throw std::invalid_argument("normalizer: dim mismatch");
    total += m->rows();
    sum += m->colwise().sum().transpose();
    sumsq += m->array().square().matrix().colwise().sum().transpose();
  }
  if (total == 0) throw std::invalid_argument("normalizer: zero frames");
  NormalizerStats s;
  s.mean = sum / static_cast<double>(total);
  Vec var = sumsq / static_cast<double>(total) - s.mean.array().square().matrix();
  s.stddev = var.cwiseMax(0.0).cwiseSqrt().cwiseMax(1e-8);
  return s;
}

FeatureSequence Normalize(const FeatureSequence& in, const NormalizerStats& s) {
  if (in.Dim() != s.Dim()) throw std::invalid_argument("normalize: dim mismatch");
  Mat out = (in.frames.rowwise() - s.mean.transpose()).array().rowwise() /
            s.stddev.transpose().array();
  return {out, in.frame_rate};
}

FeatureSequence Denormalize(const FeatureSequence& in, const NormalizerStats& s) {
  if (in.Dim() != s.Dim()) throw std::invalid_argument("denormalize: dim mismatch");
  Mat out = (in.frames.array().rowwise() * s.stddev.transpose().array())
                .rowwise() +
            s.mean.transpose().array();
  return {out, in.frame_rate};
}

FeatureSequence FeaturePipeline::Apply(const FeatureSequence& raw) const {
  return Subsample(StackContext(Normalize(raw, stats), left_context, right_context),
                   subsample_factor);
}

Mat FeaturePipeline::Apply(const Mat& raw_frames) const {
  FeatureSequence seq{raw_frames, 100.0};
  return Apply(seq).frames;
}

}  // namespace vtrig
