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

#include "vtrig/eval.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace vtrig {

namespace {

void ValidateScores(const std::vector<double>& scores, const char* what) {
  for (double s : scores) {
    if (std::isnan(s) || s == std::numeric_limits<double>::infinity()) {
      throw DataError(std::string("det curve: bad ") + what + " score");
    }
  }
}

}  // namespace

DetCurve ComputeDetCurve(const std::vector<double>& positives,
                         const std::vector<double>& negatives,
                         double negative_hours) {
  if (positives.empty() || negatives.empty()) {
    throw std::invalid_argument("det curve: empty trial set");
  }
  if (!(negative_hours > 0.0)) {
    throw std::invalid_argument("det curve: nonpositive negative hours");
  }
  ValidateScores(positives, "positive");
  ValidateScores(negatives, "negative");

  std::vector<double> pos = positives;
  std::vector<double> neg = negatives;
  std::sort(pos.begin(), pos.end());
  std::sort(neg.begin(), neg.end());

  std::vector<double> taus;
  taus.reserve(pos.size() + neg.size() + 1);
  for (double s : pos) {
    if (std::isfinite(s)) taus.push_back(s);
  }
  for (double s : neg) {
    if (std::isfinite(s)) taus.push_back(s);
  }
  if (taus.empty()) throw DataError("det curve: no finite scores");
  std::sort(taus.begin(), taus.end());
  taus.erase(std::unique(taus.begin(), taus.end()), taus.end());
  taus.push_back(taus.back() + 1.0);  // reject-everything endpoint

  const double num_pos = static_cast<double>(pos.size());
  DetCurve curve;
  curve.points.reserve(taus.size());
  for (double tau : taus) {
    const auto below_pos = std::lower_bound(pos.begin(), pos.end(), tau);
    const auto below_neg = std::lower_bound(neg.begin(), neg.end(), tau);
    DetPoint p;
    p.threshold = tau;
    p.frr = static_cast<double>(below_pos - pos.begin()) / num_pos;
    p.fa_per_hr =
        static_cast<double>(neg.end() - below_neg) / negative_hours;
    curve.points.push_back(p);
  }
  return curve;
}

OperatingPoint FrrAtFa(const DetCurve& curve, double target_fa_per_hr) {
  if (curve.points.empty()) {
    throw std::invalid_argument("operating point: empty curve");
  }
  if (target_fa_per_hr < 0.0) {
    throw std::invalid_argument("operating point: negative target");
  }
  for (const DetPoint& p : curve.points) {
    if (p.fa_per_hr <= target_fa_per_hr) {
      return {p.threshold, p.frr, p.fa_per_hr, true};
    }
  }
  const DetPoint& last = curve.points.back();
  return {last.threshold, last.frr, last.fa_per_hr, false};
}

void WriteDetCurve(std::ostream& out, const DetCurve& curve) {
  out << "threshold\tfrr\tfa_per_hr\n";
  char line[128];
  for (const DetPoint& p : curve.points) {
    std::snprintf(line, sizeof(line), "%.10g\t%.10g\t%.10g", p.threshold,
                  p.frr, p.fa_per_hr);
    out << line << '\n';
  }
}

namespace {

constexpr uint64_t kCalibStream = 1ULL << 40;
constexpr uint64_t kRunStream = 2ULL << 40;

std::vector<ScoredUtterance> ScoreAll(const Scorer& scorer,
                                      const std::vector<Utterance>& utts) {
  std::vector<ScoredUtterance> out;
  out.reserve(utts.size());
  for (const Utterance& u : utts) out.push_back(scorer.Score(u));
  return out;
}

// Keyword-positive utterance indices per speaker.
std::vector<std::vector<int>> PositivesBySpeaker(const UtteranceStore& store) {
  std::vector<std::vector<int>> out(store.NumSpeakers());
  for (int s = 0; s < store.NumSpeakers(); ++s) {
    for (int i : store.SpeakerUtterances(s)) {
      if (store.Get(i).phrase_label == 1) out[s].push_back(i);
    }
  }
  return out;
}

void RequireEnrollable(const std::vector<std::vector<int>>& by_speaker,
                       const UtteranceStore& store, int enroll,
                       const char* what) {
  for (size_t s = 0; s < by_speaker.size(); ++s) {
    if (static_cast<int>(by_speaker[s].size()) <= enroll) {
      throw DataError(std::string("protocol: ") + what + " speaker " +
                      store.SpeakerName(static_cast<int>(s)) +
                      " lacks keyword utterances beyond enrollment");
    }
  }
}

// Splits a speaker's positives into enrollment picks and held-out indices.
void SplitEnrollment(const std::vector<int>& pos, Rng* rng, int enroll,
                     std::vector<int>* picked, std::vector<int>* held_out) {
  std::vector<int> pick =
      rng->SampleWithoutReplacement(static_cast<int>(pos.size()), enroll);
  std::vector<char> is_picked(pos.size(), 0);
  picked->clear();
  for (int k : pick) {
    is_picked[k] = 1;
    picked->push_back(pos[k]);
  }
  held_out->clear();
  for (size_t k = 0; k < pos.size(); ++k) {
    if (!is_picked[k]) held_out->push_back(pos[k]);
  }
}

}  // namespace

ProtocolReport RunProtocol(const Scorer& scorer, const UtteranceStore& eval,
                           const UtteranceStore& calib,
                           const std::vector<Utterance>& negatives,
                           const ProtocolConfig& cfg,
                           const std::vector<VariantSpec>& variants) {
  if (cfg.enroll_per_speaker < 1 || cfg.runs < 1) {
    throw std::invalid_argument("protocol: bad enrollment or run count");
  }
  if (variants.empty()) {
    throw std::invalid_argument("protocol: no scoring variants");
  }
  if (eval.NumSpeakers() == 0) throw DataError("protocol: no eval speakers");
  if (calib.NumSpeakers() == 0) {
    throw DataError("protocol: no calibration speakers");
  }
  if (negatives.empty()) throw DataError("protocol: no negative trials");
  double base_hours = 0.0;
  for (const Utterance& u : negatives) base_hours += u.duration_hours;
  if (!(base_hours > 0.0)) {
    throw DataError("protocol: negatives carry no duration");
  }

  const auto eval_pos = PositivesBySpeaker(eval);
  const auto calib_pos = PositivesBySpeaker(calib);
  RequireEnrollable(eval_pos, eval, cfg.enroll_per_speaker, "eval");
  RequireEnrollable(calib_pos, calib, cfg.enroll_per_speaker, "calibration");

  const auto eval_scored = ScoreAll(scorer, eval.All());
  const auto calib_scored = ScoreAll(scorer, calib.All());
  const auto neg_scored = ScoreAll(scorer, negatives);
  const ModelParams& params = scorer.params();
  const Rng proto(cfg.seed);

  // Calibration statistics from held-out similarities on the calibration
  // speakers, pooled with every negative against each calibration anchor.
  std::vector<double> pool;
  std::vector<int> picked, held_out;
  for (int s = 0; s < calib.NumSpeakers(); ++s) {
    Rng r = proto.Fork(kCalibStream + static_cast<uint64_t>(s));
    SplitEnrollment(calib_pos[s], &r, cfg.enroll_per_speaker, &picked,
                    &held_out);
    std::vector<Vec> embs;
    for (int i : picked) embs.push_back(calib_scored[i].embedding);
    const AnchorEmbedding anchor = EnrollEmbeddings(std::move(embs));
    for (int i : held_out) {
      pool.push_back(MetricScoreRaw(params, anchor, calib_scored[i].embedding));
    }
    for (const auto& n : neg_scored) {
      pool.push_back(MetricScoreRaw(params, anchor, n.embedding));
    }
  }
  const Calibration cal = FitCalibration(pool);

  Calibration ctc_cal;
  if (cfg.standardize_ctc) {
    std::vector<double> ctc_pool;
    for (const auto& u : calib_scored) {
      if (std::isfinite(u.s_ctc)) ctc_pool.push_back(u.s_ctc);
    }
    for (const auto& n : neg_scored) {
      if (std::isfinite(n.s_ctc)) ctc_pool.push_back(n.s_ctc);
    }
    ctc_cal = FitCalibration(ctc_pool);
  }
  auto phonetic = [&](double s_ctc) {
    return cfg.standardize_ctc && std::isfinite(s_ctc)
               ? Calibrate(s_ctc, ctc_cal)
               : s_ctc;
  };

  const double run_hours = base_hours * eval.NumSpeakers();
  const size_t nv = variants.size();
  std::vector<VariantResult> results(nv);
  for (size_t v = 0; v < nv; ++v) {
    results[v].spec = variants[v];
    results[v].met_target_all_runs = true;
  }
  std::vector<std::vector<double>> pooled_pos(nv), pooled_neg(nv);

  for (int run = 0; run < cfg.runs; ++run) {
    std::vector<std::vector<double>> pos_scores(nv), neg_scores(nv);
    for (int s = 0; s < eval.NumSpeakers(); ++s) {
      Rng r = proto.Fork(kRunStream + (static_cast<uint64_t>(run) << 20) +
                         static_cast<uint64_t>(s));
      SplitEnrollment(eval_pos[s], &r, cfg.enroll_per_speaker, &picked,
                      &held_out);
      std::vector<Vec> embs;
      for (int i : picked) embs.push_back(eval_scored[i].embedding);
      const AnchorEmbedding anchor = EnrollEmbeddings(std::move(embs));
      for (int i : held_out) {
        const double raw =
            MetricScoreRaw(params, anchor, eval_scored[i].embedding);
        const double sm = Calibrate(raw, cal);
        const double sc = phonetic(eval_scored[i].s_ctc);
        for (size_t v = 0; v < nv; ++v) {
          pos_scores[v].push_back(Fuse(sc, sm, variants[v].mu));
        }
      }
      for (const auto& n : neg_scored) {
        const double raw = MetricScoreRaw(params, anchor, n.embedding);
        const double sm = Calibrate(raw, cal);
        const double sc = phonetic(n.s_ctc);
        for (size_t v = 0; v < nv; ++v) {
          neg_scores[v].push_back(Fuse(sc, sm, variants[v].mu));
        }
      }
    }
    for (size_t v = 0; v < nv; ++v) {
      const DetCurve curve =
          ComputeDetCurve(pos_scores[v], neg_scores[v], run_hours);
      const OperatingPoint op = FrrAtFa(curve, cfg.operating_fa_per_hr);
      results[v].run_frrs.push_back(op.frr);
      results[v].met_target_all_runs &= op.met_target;
      pooled_pos[v].insert(pooled_pos[v].end(), pos_scores[v].begin(),
                           pos_scores[v].end());
      pooled_neg[v].insert(pooled_neg[v].end(), neg_scores[v].begin(),
                           neg_scores[v].end());
    }
  }

  ProtocolReport report;
  report.cfg = cfg;
  report.calibration = cal;
  report.negative_hours = run_hours;
  report.num_speakers = eval.NumSpeakers();
  for (size_t v = 0; v < nv; ++v) {
    double sum = 0.0;
    for (double f : results[v].run_frrs) sum += f;
    results[v].mean_frr = sum / results[v].run_frrs.size();
    results[v].pooled_curve =
        ComputeDetCurve(pooled_pos[v], pooled_neg[v], run_hours * cfg.runs);
  }
  report.variants = std::move(results);
  return report;
}

void WriteProtocolReport(std::ostream& out, const ProtocolReport& report) {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "protocol enroll_per_speaker=%d runs=%d "
                "operating_fa_per_hr=%g seed=%llu standardize_ctc=%d",
                report.cfg.enroll_per_speaker, report.cfg.runs,
                report.cfg.operating_fa_per_hr,
                static_cast<unsigned long long>(report.cfg.seed),
                report.cfg.standardize_ctc ? 1 : 0);
  out << buf << '\n';
  std::snprintf(buf, sizeof(buf),
                "speakers=%d negative_hours_per_run=%.10g calibration_c=%.10g "
                "calibration_d=%.10g",
                report.num_speakers, report.negative_hours,
                report.calibration.c, report.calibration.d);
  out << buf << '\n';
  for (const VariantResult& v : report.variants) {
    out << "variant " << v.spec.name << " mu=" << v.spec.mu << " run_frrs=";
    for (size_t i = 0; i < v.run_frrs.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%s%.10g", i ? "," : "", v.run_frrs[i]);
      out << buf;
    }
    std::snprintf(buf, sizeof(buf), " mean_frr=%.10g met_target=%s",
                  v.mean_frr, v.met_target_all_runs ? "yes" : "no");
    out << buf << '\n';
  }
}

}  // namespace vtrig
