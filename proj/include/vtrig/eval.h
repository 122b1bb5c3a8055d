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

// Detection metrics and the repeated-enrollment evaluation protocol: per
// speaker, a few utterances enroll an anchor, the rest are scored together
// with shared keyword-free negatives, and the false-reject rate is read off
// the DET curve at a false-alarms-per-hour operating point.

#ifndef VTRIG_EVAL_H_
#define VTRIG_EVAL_H_

#include <ostream>
#include <string>
#include <vector>

#include "vtrig/inference.h"
#include "vtrig/sampler.h"

namespace vtrig {

struct DetPoint {
  double threshold = 0.0;
  double frr = 0.0;        // fraction of positives rejected
  double fa_per_hr = 0.0;  // accepted negatives per hour
};

// Thresholds strictly increasing; FRR non-decreasing and FA/hr
// non-increasing along the curve.  The last point sits above every score and
// rejects everything.
struct DetCurve {
  std::vector<DetPoint> points;
};

// Sweeps a threshold over all distinct scores (accept iff score >= t).
// Scores of -inf are legal and are rejected at every threshold; NaN and +inf
// are data errors.
DetCurve ComputeDetCurve(const std::vector<double>& positives,
                         const std::vector<double>& negatives,
                         double negative_hours);

struct OperatingPoint {
  double threshold = 0.0;
  double frr = 0.0;
  double fa_per_hr = 0.0;
  bool met_target = false;
};

// FRR at the smallest threshold whose FA/hr is at or below the target.  No
// interpolation: the step function is read conservatively.
OperatingPoint FrrAtFa(const DetCurve& curve, double target_fa_per_hr);

void WriteDetCurve(std::ostream& out, const DetCurve& curve);

struct ProtocolConfig {
  int enroll_per_speaker = 5;
  int runs = 5;
  double operating_fa_per_hr = 0.01;
  uint64_t seed = 0;
  // Standardizes the phonetic score with its own validation statistics
  // before fusion (off by default: only the similarity score is calibrated).
  bool standardize_ctc = false;
};

// One fusion setting evaluated by the protocol.
struct VariantSpec {
  std::string name;
  double mu = 0.95;
};

struct VariantResult {
  VariantSpec spec;
  std::vector<double> run_frrs;
  double mean_frr = 0.0;
  bool met_target_all_runs = false;
  DetCurve pooled_curve;  // scores pooled over all runs
};

struct ProtocolReport {
  ProtocolConfig cfg;
  Calibration calibration;
  double negative_hours = 0.0;  // per run, after per-anchor accounting
  int num_speakers = 0;
  std::vector<VariantResult> variants;
};

// Runs the repeated-enrollment protocol.  Enrollment draws depend only on
// (seed, run, speaker), so every variant sees identical anchors, and
// negatives are shared across runs.  Calibration statistics come from the
// calibration store: per speaker, an anchor from the first draw and raw
// similarities of the held-out utterances plus all negatives.
ProtocolReport RunProtocol(const Scorer& scorer, const UtteranceStore& eval,
                           const UtteranceStore& calib,
                           const std::vector<Utterance>& negatives,
                           const ProtocolConfig& cfg,
                           const std::vector<VariantSpec>& variants);

void WriteProtocolReport(std::ostream& out, const ProtocolReport& report);

}  // namespace vtrig

#endif  // VTRIG_EVAL_H_
