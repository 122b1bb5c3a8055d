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

#include "vtrig/trainer.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

#include "vtrig/ctc.h"

namespace vtrig {

void LrSchedule::Validate() const {
  if (peak <= 0.0 || min_lr <= 0.0 || linear_end_value <= 0.0) {
    throw std::invalid_argument("lr schedule: rates must be positive");
  }
  if (!(0.0 < warmup_end_epoch && warmup_end_epoch < linear_end_epoch &&
        linear_end_epoch <= last_epoch)) {
    throw std::invalid_argument("lr schedule: epochs must be ordered");
  }
  if (exp_factor <= 0.0 || exp_factor > 1.0) {
    throw std::invalid_argument("lr schedule: exp_factor must be in (0, 1]");
  }
  if (linear_end_value > peak) {
    throw std::invalid_argument("lr schedule: decay target above peak");
  }
}

double LrSchedule::At(double epoch) const {
  if (epoch < 0.0 || epoch > last_epoch) {
    throw std::invalid_argument("lr schedule: epoch out of range");
  }
  double lr;
  if (epoch <= warmup_end_epoch) {
    lr = peak * epoch / warmup_end_epoch;
  } else if (epoch <= linear_end_epoch) {
    double t = (epoch - warmup_end_epoch) / (linear_end_epoch - warmup_end_epoch);
    lr = peak + t * (linear_end_value - peak);
  } else {
    lr = linear_end_value * std::pow(exp_factor, epoch - linear_end_epoch);
  }
  return std::max(lr, min_lr);
}

LrSchedule LrSchedule::Compressed(double total_epochs) const {
  if (total_epochs <= 0.0) {
    throw std::invalid_argument("lr schedule: total_epochs must be positive");
  }
  const double s = total_epochs / last_epoch;
  LrSchedule out = *this;
  out.warmup_end_epoch = warmup_end_epoch * s;
  out.linear_end_epoch = linear_end_epoch * s;
  out.exp_factor = std::pow(exp_factor, 1.0 / s);
  out.last_epoch = total_epochs;
  out.Validate();
  return out;
}

void AdamState::Step(const std::vector<ad::Var>& params, double lr) {
  if (m_.empty()) {
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (const auto& p : params) {
      m_.push_back(Mat::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(Mat::Zero(p->value.rows(), p->value.cols()));
    }
  }
  if (m_.size() != params.size()) {
    throw std::invalid_argument("adam: parameter list changed size");
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (size_t i = 0; i < params.size(); ++i) {
    ad::Node* p = params[i].get();
    Mat g = p->has_grad() ? p->grad
                          : Mat::Zero(p->value.rows(), p->value.cols());
    if (!g.allFinite()) {
      throw NumericalError("adam: non-finite gradient at parameter " +
                           std::to_string(i));
    }
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g.cwiseProduct(g);
    Mat mhat = m_[i] / bc1;
    Mat vhat = v_[i] / bc2;
    p->value.array() -= lr * mhat.array() / (vhat.array().sqrt() + eps_);
  }
}

TrainRegime TrainRegime::Baseline(const ModelConfig& cfg) {
  TrainRegime r;
  r.stage = Stage::kBaseline;
  r.freeze_encoder = false;
  r.tap_layer = cfg.encoder_blocks;
  r.use_phone = true;
  r.use_phrase = true;
  return r;
}

TrainRegime TrainRegime::Finetune(const ModelConfig& cfg) {
  TrainRegime r;
  r.stage = Stage::kFinetune;
  r.freeze_encoder = true;
  r.tap_layer = cfg.encoder_blocks - 1;
  r.use_phrase = true;
  r.use_spkr = true;
  r.use_metric = true;
  return r;
}

void TrainRegime::Validate(const ModelConfig& cfg) const {
  if (tap_layer < 1 || tap_layer > cfg.encoder_blocks) {
    throw std::invalid_argument("regime: tap layer out of range");
  }
  if (!(use_phone || use_phrase || use_spkr || use_metric)) {
    throw std::invalid_argument("regime: no active loss");
  }
  if (use_spkr && cfg.speaker_classes <= 0) {
    throw std::invalid_argument("regime: speaker loss needs speaker classes");
  }
  if (stage == Stage::kBaseline) {
    if (freeze_encoder || tap_layer != cfg.encoder_blocks || !use_phone ||
        !use_phrase || use_spkr || use_metric) {
      throw std::invalid_argument("regime: inconsistent baseline stage");
    }
  }
  if (stage == Stage::kFinetune) {
    if (!freeze_encoder || tap_layer != cfg.encoder_blocks - 1 || use_phone ||
        !use_phrase || !use_spkr || !use_metric) {
      throw std::invalid_argument("regime: inconsistent fine-tune stage");
    }
  }
}

PreparedUtterance PrepareUtterance(const Utterance& u,
                                   const FeaturePipeline& pipe) {
  PreparedUtterance p;
  p.feats = pipe.Apply(u.features);
  p.phonemes = u.phoneme_labels;
  p.phrase_label = u.phrase_label;
  // Only speaker-ID utterances address the speaker head; voice-trigger data
  // is anonymous and enters pair construction as negatives only.
  if (u.source == DataSource::kSpeakerId) p.speaker = u.speaker_id;
  return p;
}

std::vector<std::pair<std::string, ad::Var>> TrainableTensors(
    const ModelParams& params, const TrainRegime& regime) {
  std::vector<std::pair<std::string, ad::Var>> out;
  for (const auto& [name, var] : params.NamedTensors()) {
    if (regime.freeze_encoder && InEncoderGroup(name)) continue;
    out.emplace_back(name, var);
  }
  return out;
}

namespace {

struct BatchMasks {
  int n = 0;
  int n_phone = 0;
  int n_spkr = 0;
};

BatchMasks CountMasks(const std::vector<PreparedUtterance>& batch,
                      const TrainRegime& r) {
  BatchMasks m;
  m.n = static_cast<int>(batch.size());
  for (const auto& u : batch) {
    if (r.use_phone && u.phonemes) ++m.n_phone;
    if (r.use_spkr && u.speaker) ++m.n_spkr;
  }
  return m;
}

PairSets BatchPairs(const std::vector<PreparedUtterance>& batch,
                    const BatchComputeOptions& opt) {
  std::vector<PairItem> items;
  items.reserve(batch.size());
  for (const auto& u : batch) items.push_back({u.speaker, u.phrase_label});
  PairSets pairs = BuildPairs(items, opt.strict_pairs);
  Rng pr = opt.pair_rng;  // local copy; the options stay reusable
  return SubsampleNegatives(pairs, &pr);
}

}  // namespace

LossBreakdown ComputeBatchLoss(const ModelParams& params,
                               const std::vector<PreparedUtterance>& batch,
                               const BatchComputeOptions& opt) {
  const TrainRegime& r = opt.regime;
  r.Validate(params.cfg);
  if (batch.empty()) {
    throw std::invalid_argument("compute_batch_loss: empty batch");
  }
  const BatchMasks m = CountMasks(batch, r);
  const int blank = params.cfg.BlankIndex();
  ad::NoGradScope ng;
  double phone_sum = 0.0, phrase_sum = 0.0, spkr_sum = 0.0;
  std::vector<Vec> embs;
  if (r.use_metric) embs.reserve(batch.size());
  for (size_t i = 0; i < batch.size(); ++i) {
    const auto& u = batch[i];
    Rng u_rng = opt.dropout_rng.Fork(static_cast<uint64_t>(i));
    auto enc = EncoderForward(ad::Constant(u.feats), params);
    if (r.use_phone && u.phonemes) {
      phone_sum += CtcLoss(enc.log_posteriors->value, *u.phonemes, blank);
    }
    auto emb = DecoderForward(enc.taps.at(r.tap_layer - 1), params);
    if (r.use_phrase) {
      phrase_sum += PhraseCe(PhraseLogit(emb, params)->value(0, 0),
                             u.phrase_label);
    }
    if (r.use_spkr && u.speaker) {
      auto logits = SpeakerLogits(emb, params, /*training=*/true, &u_rng);
      spkr_sum += SpeakerCe(logits->value.row(0).transpose(), *u.speaker);
    }
    if (r.use_metric) embs.push_back(emb->value.row(0).transpose());
  }
  double metric = 0.0;
  if (r.use_metric) {
    metric = MetricLoss(embs, BatchPairs(batch, opt), params.MetricA(),
                        params.MetricB());
  }
  return CombineLosses(m.n_phone > 0 ? phone_sum / m.n_phone : 0.0,
                       r.use_phrase ? phrase_sum / m.n : 0.0,
                       m.n_spkr > 0 ? spkr_sum / m.n_spkr : 0.0, metric,
                       opt.weights);
}

LossBreakdown ComputeBatchGradients(const ModelParams& params,
                                    const std::vector<PreparedUtterance>& batch,
                                    const BatchComputeOptions& opt) {
  const TrainRegime& r = opt.regime;
  r.Validate(params.cfg);
  if (batch.empty()) {
    throw std::invalid_argument("compute_batch_gradients: empty batch");
  }
  const BatchMasks m = CountMasks(batch, r);
  const int blank = params.cfg.BlankIndex();
  const int emb_dim = params.cfg.EmbeddingDim();

  // The pairwise term needs every embedding before any gradient can flow, so
  // it runs as a value-only pass first; its closed-form embedding gradients
  // are injected into the per-utterance graphs below.  With a frozen encoder
  // this pass also caches the tap (and the phone loss, which then has no
  // trainable inputs).
  std::vector<Mat> frozen_taps;
  std::vector<double> frozen_phone(batch.size(), 0.0);
  std::vector<char> have_frozen_phone(batch.size(), 0);
  bool taps_cached = false;
  MetricLossResult metric;
  if (r.use_metric) {
    ad::NoGradScope ng;
    std::vector<Vec> embs;
    embs.reserve(batch.size());
    if (r.freeze_encoder) frozen_taps.resize(batch.size());
    for (size_t i = 0; i < batch.size(); ++i) {
      const auto& u = batch[i];
      auto enc = EncoderForward(ad::Constant(u.feats), params);
      if (r.freeze_encoder) {
        frozen_taps[i] = enc.taps.at(r.tap_layer - 1)->value;
        if (r.use_phone && u.phonemes) {
          frozen_phone[i] = CtcLoss(enc.log_posteriors->value, *u.phonemes,
                                    blank);
          have_frozen_phone[i] = 1;
        }
      }
      auto emb = DecoderForward(enc.taps.at(r.tap_layer - 1), params);
      embs.push_back(emb->value.row(0).transpose());
    }
    taps_cached = r.freeze_encoder;
    metric = MetricLossWithGrad(embs, BatchPairs(batch, opt), params.MetricA(),
                                params.MetricB());
  }

  double phone_sum = 0.0, phrase_sum = 0.0, spkr_sum = 0.0;
  for (size_t i = 0; i < batch.size(); ++i) {
    const auto& u = batch[i];
    Rng u_rng = opt.dropout_rng.Fork(static_cast<uint64_t>(i));
    std::vector<ad::Var> terms;
    ad::Var tap;
    if (r.freeze_encoder) {
      Mat tap_val;
      if (taps_cached) {
        tap_val = frozen_taps[i];
        if (have_frozen_phone[i]) phone_sum += frozen_phone[i];
      } else {
        ad::NoGradScope ng;
        auto enc = EncoderForward(ad::Constant(u.feats), params);
        tap_val = enc.taps.at(r.tap_layer - 1)->value;
        if (r.use_phone && u.phonemes) {
          phone_sum += CtcLoss(enc.log_posteriors->value, *u.phonemes, blank);
        }
      }
      tap = ad::Constant(std::move(tap_val));
    } else {
      auto enc = EncoderForward(ad::Constant(u.feats), params);
      tap = enc.taps.at(r.tap_layer - 1);
      if (r.use_phone && u.phonemes) {
        auto ctc = CtcLossNode(enc.log_posteriors, *u.phonemes, blank);
        phone_sum += ctc->value(0, 0);
        terms.push_back(ad::Scale(ctc, 1.0 / m.n_phone));
      }
    }
    auto emb = DecoderForward(tap, params);
    if (r.use_phrase) {
      auto pl = ad::SigmoidCrossEntropy(PhraseLogit(emb, params),
                                        u.phrase_label);
      phrase_sum += pl->value(0, 0);
      terms.push_back(ad::Scale(pl, opt.weights.alpha / m.n));
    }
    if (r.use_spkr && u.speaker) {
      auto sl = ad::SoftmaxCrossEntropy(
          SpeakerLogits(emb, params, /*training=*/true, &u_rng), *u.speaker);
      spkr_sum += sl->value(0, 0);
      terms.push_back(ad::Scale(sl, opt.weights.beta / m.n_spkr));
    }
    if (r.use_metric) {
      Mat g(1, emb_dim);
      g.row(0) = metric.d_embeddings.at(i).transpose();
      terms.push_back(
          ad::Scale(ad::Dot(emb, ad::Constant(std::move(g))),
                    opt.weights.gamma));
    }
    if (!terms.empty()) {
      ad::Var root = terms[0];
      for (size_t k = 1; k < terms.size(); ++k) root = ad::Add(root, terms[k]);
      if (root->requires_grad) ad::Backward(root);
    }
  }
  if (r.use_metric) {
    params.metric_a->AccumGrad(Mat::Constant(1, 1, opt.weights.gamma * metric.da));
    params.metric_b->AccumGrad(Mat::Constant(1, 1, opt.weights.gamma * metric.db));
  }
  return CombineLosses(m.n_phone > 0 ? phone_sum / m.n_phone : 0.0,
                       r.use_phrase ? phrase_sum / m.n : 0.0,
                       m.n_spkr > 0 ? spkr_sum / m.n_spkr : 0.0, metric.loss,
                       opt.weights);
}

namespace {

std::vector<ad::Var> VarsOf(
    const std::vector<std::pair<std::string, ad::Var>>& named) {
  std::vector<ad::Var> vars;
  vars.reserve(named.size());
  for (const auto& [name, var] : named) vars.push_back(var);
  return vars;
}

void ZeroGrads(const std::vector<ad::Var>& vars) {
  for (const auto& v : vars) v->ZeroGrad();
}

void ClipGrads(const std::vector<ad::Var>& vars, double max_norm) {
  if (max_norm <= 0.0) return;
  double sq = 0.0;
  for (const auto& v : vars) {
    if (v->has_grad()) sq += v->grad.squaredNorm();
  }
  const double norm = std::sqrt(sq);
  if (norm <= max_norm) return;
  const double s = max_norm / norm;
  for (const auto& v : vars) {
    if (v->has_grad()) v->grad *= s;
  }
}

void LogStep(std::ostream* out, int epoch, int step, double lr,
             const LossBreakdown& lb) {
  if (out == nullptr) return;
  char line[256];
  std::snprintf(line, sizeof(line),
                "%d\t%d\t%.10g\t%.10g\t%.10g\t%.10g\t%.10g\t%.10g", epoch,
                step, lr, lb.phone, lb.phrase, lb.spkr, lb.metric, lb.total);
  (*out) << line << '\n';
}

void CheckLossFinite(const LossBreakdown& lb, int epoch, int step) {
  if (!std::isfinite(lb.total)) {
    throw NumericalError("training diverged: non-finite loss at epoch " +
                         std::to_string(epoch) + " step " +
                         std::to_string(step));
  }
}

// Streams for per-step rngs, kept clear of the sampler's seed space.
constexpr uint64_t kDropoutStream = 1ULL << 32;
constexpr uint64_t kPairStream = 2ULL << 32;
constexpr uint64_t kShuffleStream = 3ULL << 32;
constexpr uint64_t kSamplerStream = 4ULL << 32;

}  // namespace

TrainStats TrainBaseline(ModelParams* params, const UtteranceStore& trigger,
                         const FeaturePipeline& pipe,
                         const TrainerOptions& opt) {
  if (params == nullptr) throw std::invalid_argument("train: null params");
  opt.schedule.Validate();
  if (opt.epochs <= 0 || opt.epochs > opt.schedule.last_epoch) {
    throw std::invalid_argument("train: epochs outside the lr schedule");
  }
  if (trigger.Size() == 0) throw DataError("train: empty trigger store");
  if (opt.baseline_batch_size <= 0) {
    throw std::invalid_argument("train: bad batch size");
  }
  TrainRegime regime = TrainRegime::Baseline(params->cfg);
  regime.Validate(params->cfg);
  params->cfg.tap_layer = regime.tap_layer;

  std::vector<PreparedUtterance> prepared;
  prepared.reserve(trigger.Size());
  for (const auto& u : trigger.All()) prepared.push_back(PrepareUtterance(u, pipe));

  const auto named = TrainableTensors(*params, regime);
  const auto vars = VarsOf(named);
  AdamState adam;
  Rng root(opt.seed);
  Rng shuffle_rng = root.Fork(kShuffleStream);

  const int n = static_cast<int>(prepared.size());
  const int bs = std::min(opt.baseline_batch_size, n);
  const int steps_per_epoch = (n + bs - 1) / bs;

  TrainStats stats;
  int global_step = 0;
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    const std::vector<int> perm = shuffle_rng.Permutation(n);
    double total_sum = 0.0;
    int batches = 0;
    for (int start = 0, step = 0; start < n; start += bs, ++step) {
      std::vector<PreparedUtterance> batch;
      for (int i = start; i < std::min(start + bs, n); ++i) {
        batch.push_back(prepared[perm[i]]);
      }
      const double lr =
          opt.schedule.At(epoch + static_cast<double>(step) / steps_per_epoch);
      BatchComputeOptions bco;
      bco.regime = regime;
      bco.weights = opt.weights;
      bco.strict_pairs = opt.strict_pairs;
      bco.dropout_rng = root.Fork(kDropoutStream + global_step);
      bco.pair_rng = root.Fork(kPairStream + global_step);
      const LossBreakdown lb = ComputeBatchGradients(*params, batch, bco);
      CheckLossFinite(lb, epoch, step);
      ClipGrads(vars, opt.grad_clip_norm);
      adam.Step(vars, lr);
      ZeroGrads(vars);
      LogStep(opt.metrics_out, epoch, step, lr, lb);
      total_sum += lb.total;
      ++batches;
      ++global_step;
    }
    stats.epoch_mean_total.push_back(total_sum / batches);
  }
  stats.steps = global_step;
  return stats;
}

TrainStats FinetuneModel(ModelParams* params, const UtteranceStore& spkr,
                         const UtteranceStore& trigger,
                         const FeaturePipeline& pipe, const TrainerOptions& opt,
                         const TrainRegime& regime) {
  if (params == nullptr) throw std::invalid_argument("train: null params");
  opt.schedule.Validate();
  if (opt.epochs <= 0 || opt.epochs > opt.schedule.last_epoch) {
    throw std::invalid_argument("train: epochs outside the lr schedule");
  }
  regime.Validate(params->cfg);
  if (regime.use_spkr && spkr.NumSpeakers() > params->cfg.speaker_classes) {
    throw DataError("train: speaker head smaller than the speaker inventory");
  }
  params->cfg.tap_layer = regime.tap_layer;

  const auto named = TrainableTensors(*params, regime);
  const auto vars = VarsOf(named);
  AdamState adam;
  Rng root(opt.seed);
  BatchSampler sampler(&spkr, &trigger, opt.batch_spec,
                       root.Fork(kSamplerStream).base_seed());
  const int steps_per_epoch = sampler.StepsPerEpoch();
  if (steps_per_epoch <= 0) throw DataError("train: empty epoch");

  TrainStats stats;
  int global_step = 0;
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    double total_sum = 0.0;
    for (int step = 0; step < steps_per_epoch; ++step) {
      Batch raw = sampler.Next();
      std::vector<PreparedUtterance> batch;
      batch.reserve(raw.utterances.size());
      for (const auto& u : raw.utterances) {
        batch.push_back(PrepareUtterance(u, pipe));
      }
      const double lr =
          opt.schedule.At(epoch + static_cast<double>(step) / steps_per_epoch);
      BatchComputeOptions bco;
      bco.regime = regime;
      bco.weights = opt.weights;
      bco.strict_pairs = opt.strict_pairs;
      bco.dropout_rng = root.Fork(kDropoutStream + global_step);
      bco.pair_rng = root.Fork(kPairStream + global_step);
      const LossBreakdown lb = ComputeBatchGradients(*params, batch, bco);
      CheckLossFinite(lb, epoch, step);
      ClipGrads(vars, opt.grad_clip_norm);
      adam.Step(vars, lr);
      ZeroGrads(vars);
      LogStep(opt.metrics_out, epoch, step, lr, lb);
      total_sum += lb.total;
      ++global_step;
    }
    stats.epoch_mean_total.push_back(total_sum / steps_per_epoch);
  }
  stats.steps = global_step;
  return stats;
}

}  // namespace vtrig
