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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "vtrig/features.h"
#include "vtrig/gradcheck.h"
#include "vtrig/model.h"
#include "vtrig/synthdata.h"
#include "vtrig/trainer.h"

namespace vtrig {
namespace {

TEST_CASE("schedule hits its published knots and stays continuous") {
  LrSchedule s;
  CHECK(s.At(2.0) == doctest::Approx(1e-3).epsilon(1e-12));
  CHECK(s.At(27.0) == doctest::Approx(7e-4).epsilon(1e-12));
  CHECK(s.At(40.0) >= 1e-7);
  // Continuity at the warmup/linear and linear/exponential joints.
  const double h = 1e-9;
  CHECK(std::abs(s.At(2.0 - h) - s.At(2.0 + h)) < 1e-10);
  CHECK(std::abs(s.At(27.0 - h) - s.At(27.0 + h)) < 1e-10);
  // Warmup is linear from zero.
  CHECK(s.At(1.0) == doctest::Approx(0.5e-3).epsilon(1e-12));
  // Decay shrinks by the epoch factor.
  CHECK(s.At(29.0) / s.At(28.0) == doctest::Approx(0.7).epsilon(1e-12));
  CHECK_THROWS_AS(s.At(-0.1), std::invalid_argument);
  CHECK_THROWS_AS(s.At(40.5), std::invalid_argument);
}

TEST_CASE("compressed schedule is the full one with a rescaled clock") {
  LrSchedule full;
  LrSchedule five = full.Compressed(5.0);
  const double scale = 40.0 / 5.0;
  for (double e : {0.0, 0.1, 0.25, 1.0, 2.0, 3.0, 4.0, 4.9, 5.0}) {
    CHECK(five.At(e) == doctest::Approx(full.At(e * scale)).epsilon(1e-9));
  }
  CHECK(five.At(5.0 / scale * scale) >= full.min_lr);
}

TEST_CASE("adam ignores parameters whose gradient is zero") {
  ad::Var p = ad::Leaf(Mat::Constant(2, 2, 1.5), true);
  p->grad = Mat::Zero(2, 2);
  Mat before = p->value;
  AdamState adam;
  adam.Step({p}, 1e-2);
  adam.Step({p}, 1e-2);
  CHECK((p->value - before).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("adam first step moves by the learning rate against the sign") {
  ad::Var p = ad::Leaf(Mat::Constant(1, 2, 0.0), true);
  Mat g(1, 2);
  g << 3.0, -0.25;
  p->grad = g;
  AdamState adam;
  adam.Step({p}, 0.1);
  CHECK(p->value(0, 0) == doctest::Approx(-0.1).epsilon(1e-6));
  CHECK(p->value(0, 1) == doctest::Approx(0.1).epsilon(1e-6));
}

TEST_CASE("adam on a quadratic matches the scalar recursion") {
  // Reference recursion computed with plain doubles.
  double x = 1.0, m = 0.0, v = 0.0;
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8, lr = 0.1;
  ad::Var p = ad::Leaf(Mat::Constant(1, 1, 1.0), true);
  AdamState adam;
  for (int t = 1; t <= 200; ++t) {
    double g = 2.0 * x;
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g * g;
    double mhat = m / (1.0 - std::pow(b1, t));
    double vhat = v / (1.0 - std::pow(b2, t));
    x -= lr * mhat / (std::sqrt(vhat) + eps);

    p->grad = 2.0 * p->value;
    adam.Step({p}, lr);
    CHECK(p->value(0, 0) == doctest::Approx(x).epsilon(1e-12));
  }
  CHECK(std::abs(x) < 0.1);
  CHECK(adam.step_count() == 200);
}

TEST_CASE("adam rejects non-finite gradients") {
  ad::Var p = ad::Leaf(Mat::Constant(1, 1, 1.0), true);
  p->grad = Mat::Constant(1, 1, std::nan(""));
  AdamState adam;
  CHECK_THROWS_AS(adam.Step({p}, 0.1), NumericalError);
}

TEST_CASE("finite differences accept a correct gradient and flag a wrong one") {
  ad::Var x = ad::Leaf(Mat::Random(3, 2), true);
  auto loss = [&] { return x->value.squaredNorm(); };
  Rng rng(17);

  x->grad = 2.0 * x->value;
  GradCheckReport good = CheckGradients(loss, {{"x", x}}, {}, &rng);
  CHECK(good.max_rel_err < 1e-6);

  x->grad = 4.0 * x->value;  // doubled on purpose
  GradCheckReport bad = CheckGradients(loss, {{"x", x}}, {}, &rng);
  CHECK(bad.max_rel_err > 0.1);
}

ModelConfig TinyConfig() {
  ModelConfig mc;
  mc.input_dim = 10;
  mc.d_model = 8;
  mc.num_heads = 2;
  mc.ffn_dim = 16;
  mc.encoder_blocks = 2;
  mc.decoder_blocks = 1;
  mc.num_queries = 2;
  mc.phoneme_classes = 4;  // 3 phonemes + blank
  mc.speaker_classes = 3;
  mc.tap_layer = 1;
  mc.speaker_dropout = 0.25;
  return mc;
}

std::vector<PreparedUtterance> TinyBatch(const ModelConfig& mc, Rng* rng) {
  auto feats = [&](int t) {
    Mat f(t, mc.input_dim);
    for (int i = 0; i < t; ++i) {
      for (int j = 0; j < mc.input_dim; ++j) f(i, j) = rng->Gaussian();
    }
    return f;
  };
  std::vector<PreparedUtterance> batch(6);
  batch[0].feats = feats(4);
  batch[0].phonemes = std::vector<int>{0, 2};
  batch[0].phrase_label = 0;
  batch[1].feats = feats(5);
  batch[1].phonemes = std::vector<int>{1, 1};
  batch[1].phrase_label = 1;
  for (int i = 2; i < 6; ++i) {
    batch[i].feats = feats(4);
    batch[i].speaker = (i - 2) / 2;  // speakers 0, 0, 1, 1
    batch[i].phrase_label = 1;
  }
  batch[5].phrase_label = 0;  // same speaker, differing labels: negative pair
  return batch;
}

TEST_CASE("batch loss gradients agree with finite differences") {
  const ModelConfig mc = TinyConfig();
  Rng rng(5);
  ModelParams params = ModelParams::Init(mc, &rng);
  std::vector<PreparedUtterance> batch = TinyBatch(mc, &rng);

  BatchComputeOptions opt;
  opt.regime.stage = TrainRegime::Stage::kCustom;
  opt.regime.freeze_encoder = false;
  opt.regime.tap_layer = 1;
  opt.regime.use_phone = true;
  opt.regime.use_phrase = true;
  opt.regime.use_spkr = true;
  opt.regime.use_metric = true;
  opt.weights.alpha = 0.7;
  opt.weights.beta = 0.4;
  opt.weights.gamma = 0.3;
  opt.dropout_rng = Rng(99);
  opt.pair_rng = Rng(123);

  auto tensors = TrainableTensors(params, opt.regime);
  ComputeBatchGradients(params, batch, opt);
  auto loss_fn = [&] { return ComputeBatchLoss(params, batch, opt).total; };

  // The analytic value and the gradient pass must describe the same number.
  const double direct = loss_fn();
  const double from_grad_pass = ComputeBatchLoss(params, batch, opt).total;
  CHECK(direct == from_grad_pass);

  GradCheckOptions gopt;
  gopt.coords_per_tensor = 3;
  Rng pick(7);
  GradCheckReport report = CheckGradients(loss_fn, tensors, gopt, &pick);
  INFO("worst: ", report.worst.tensor, "(", report.worst.row, ",",
       report.worst.col, ") analytic=", report.worst.analytic,
       " numeric=", report.worst.numeric);
  CHECK(report.max_rel_err < 1e-4);
}

TEST_CASE("metric-only gradients reach the decoder and nothing upstream") {
  const ModelConfig mc = TinyConfig();
  Rng rng(6);
  ModelParams params = ModelParams::Init(mc, &rng);
  std::vector<PreparedUtterance> batch = TinyBatch(mc, &rng);

  BatchComputeOptions opt;
  opt.regime.stage = TrainRegime::Stage::kCustom;
  opt.regime.freeze_encoder = true;
  opt.regime.tap_layer = 1;
  opt.regime.use_metric = true;
  opt.regime.use_phrase = true;
  opt.weights.alpha = 0.0;  // phrase weight silenced: pure metric gradient
  opt.weights.gamma = 1.0;
  opt.dropout_rng = Rng(99);
  opt.pair_rng = Rng(123);

  ComputeBatchGradients(params, batch, opt);
  CHECK(params.queries->grad.size() > 0);
  CHECK(params.queries->grad.cwiseAbs().maxCoeff() > 0.0);
  CHECK(params.metric_a->grad.size() > 0);
  CHECK(params.metric_a->grad.cwiseAbs().maxCoeff() > 0.0);
  // Frozen side accumulated nothing.
  CHECK(params.input_w->grad.size() == 0);
  CHECK(params.encoder[0].att.wq->grad.size() == 0);

  auto tensors = TrainableTensors(params, opt.regime);
  auto loss_fn = [&] { return ComputeBatchLoss(params, batch, opt).total; };
  GradCheckOptions gopt;
  gopt.coords_per_tensor = 3;
  Rng pick(8);
  GradCheckReport report = CheckGradients(loss_fn, tensors, gopt, &pick);
  INFO("worst: ", report.worst.tensor, " analytic=", report.worst.analytic,
       " numeric=", report.worst.numeric);
  CHECK(report.max_rel_err < 1e-4);
}

SynthSpec TinyCorpusSpec() {
  SynthSpec spec;
  spec.train_speakers = 6;
  spec.train_utts_per_speaker = 6;
  spec.eval_speakers = 2;
  spec.eval_utts_per_speaker = 8;
  spec.calib_speakers = 2;
  spec.calib_utts_per_speaker = 8;
  spec.asr_utterances = 24;
  spec.keyword_utterances = 24;
  spec.negative_trials = 6;
  spec.negative_seconds = 3.0;
  spec.feature_dim = 12;
  spec.seed = 3;
  return spec;
}

struct TinyWorld {
  UtteranceStore trigger;
  UtteranceStore spkr;
  FeaturePipeline pipe;
  ModelParams params;
};

TinyWorld BuildTinyWorld() {
  const SynthSpec spec = TinyCorpusSpec();
  GeneratedCorpus corpus = GenCorpus(spec);
  UtteranceStore trigger = UtteranceStore::Build(std::move(corpus.voice_trigger));
  UtteranceStore spkr = UtteranceStore::Build(std::move(corpus.speaker_id));

  std::vector<const Mat*> frames;
  for (const auto& u : trigger.All()) frames.push_back(&u.features);
  for (const auto& u : spkr.All()) frames.push_back(&u.features);
  FeaturePipeline pipe;
  pipe.stats = FitNormalizer(frames);
  pipe.left_context = 1;
  pipe.right_context = 1;
  pipe.subsample_factor = 2;

  ModelConfig mc;
  mc.input_dim = pipe.OutputDim(spec.feature_dim);
  mc.d_model = 16;
  mc.num_heads = 2;
  mc.ffn_dim = 32;
  mc.encoder_blocks = 2;
  mc.num_queries = 2;
  mc.phoneme_classes = spec.phoneme_count + 1;
  mc.speaker_classes = 0;
  mc.tap_layer = 2;
  Rng rng(11);
  ModelParams params = ModelParams::Init(mc, &rng);
  return {std::move(trigger), std::move(spkr), std::move(pipe),
          std::move(params)};
}

TrainerOptions TinyTrainerOptions(int epochs) {
  TrainerOptions opt;
  opt.epochs = epochs;
  opt.seed = 21;
  opt.schedule = LrSchedule().Compressed(epochs);
  opt.baseline_batch_size = 8;
  opt.batch_spec.batch_size = 8;
  opt.batch_spec.speakers_per_batch = 2;
  opt.batch_spec.utts_per_speaker = 2;
  opt.batch_spec.spkr_utts = 4;
  opt.batch_spec.drop_prob = 0.5;
  return opt;
}

TEST_CASE("a short training run lowers the loss and spares unused heads") {
  TinyWorld w = BuildTinyWorld();
  const Mat spk_w_before = w.params.speaker_w->value;
  const Mat a_before = w.params.metric_a->value;
  const Mat b_before = w.params.metric_b->value;

  TrainStats stats = TrainBaseline(&w.params, w.trigger, w.pipe,
                                   TinyTrainerOptions(6));
  REQUIRE(stats.epoch_mean_total.size() == 6);
  CHECK(stats.epoch_mean_total.back() < 0.8 * stats.epoch_mean_total.front());

  // Baseline trains neither the speaker head nor the similarity scalars.
  CHECK((w.params.speaker_w->value - spk_w_before).cwiseAbs().maxCoeff() == 0.0);
  CHECK(w.params.metric_a->value == a_before);
  CHECK(w.params.metric_b->value == b_before);
  CHECK(w.params.cfg.tap_layer == w.params.cfg.encoder_blocks);
}

TEST_CASE("fine-tuning keeps every frozen tensor bitwise intact") {
  TinyWorld w = BuildTinyWorld();
  TrainBaseline(&w.params, w.trigger, w.pipe, TinyTrainerOptions(2));

  Rng head_rng(31);
  ResizeSpeakerHead(&w.params, w.spkr.NumSpeakers(), &head_rng);
  std::vector<std::pair<std::string, Mat>> frozen_before;
  for (const auto& [name, var] : w.params.NamedTensors()) {
    if (InEncoderGroup(name)) frozen_before.emplace_back(name, var->value);
  }
  REQUIRE(!frozen_before.empty());

  const TrainRegime regime = TrainRegime::Finetune(w.params.cfg);
  TrainStats stats = FinetuneModel(&w.params, w.spkr, w.trigger, w.pipe,
                                   TinyTrainerOptions(2), regime);
  CHECK(stats.steps > 0);
  for (const auto& [name, before] : frozen_before) {
    const Mat& after = w.params.Find(name)->value;
    INFO("tensor ", name);
    REQUIRE(after.rows() == before.rows());
    REQUIRE(after.cols() == before.cols());
    CHECK(std::memcmp(after.data(), before.data(),
                      sizeof(double) * after.size()) == 0);
  }
  CHECK(w.params.cfg.tap_layer == w.params.cfg.encoder_blocks - 1);
  // The similarity calibration scalars are trainable in this stage.
  CHECK((w.params.MetricA() != 1.0 || w.params.MetricB() != 0.0));
}

TEST_CASE("fine-tuning rejects a speaker inventory larger than the head") {
  TinyWorld w = BuildTinyWorld();
  Rng head_rng(31);
  ResizeSpeakerHead(&w.params, 2, &head_rng);  // fewer classes than speakers
  const TrainRegime regime = TrainRegime::Finetune(w.params.cfg);
  CHECK_THROWS_AS(FinetuneModel(&w.params, w.spkr, w.trigger, w.pipe,
                                TinyTrainerOptions(1), regime),
                  DataError);
}

TEST_CASE("identical seeds give identical training trajectories") {
  TinyWorld w1 = BuildTinyWorld();
  TinyWorld w2 = BuildTinyWorld();
  TrainStats s1 = TrainBaseline(&w1.params, w1.trigger, w1.pipe,
                                TinyTrainerOptions(2));
  TrainStats s2 = TrainBaseline(&w2.params, w2.trigger, w2.pipe,
                                TinyTrainerOptions(2));
  REQUIRE(s1.epoch_mean_total.size() == s2.epoch_mean_total.size());
  for (size_t i = 0; i < s1.epoch_mean_total.size(); ++i) {
    CHECK(s1.epoch_mean_total[i] == s2.epoch_mean_total[i]);
  }
  for (const auto& [name, var] : w1.params.NamedTensors()) {
    CHECK(var->value == w2.params.Find(name)->value);
  }
}

}  // namespace
}  // namespace vtrig
