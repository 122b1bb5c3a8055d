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

#include "vtrig/experiment.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "vtrig/checkpoint.h"
#include "vtrig/inference.h"
#include "vtrig/manifest.h"

namespace vtrig {

namespace fs = std::filesystem;

namespace {

constexpr uint64_t kModelInitStream = 11;
constexpr uint64_t kSpeakerHeadStream = 12;

std::string OutDir(const Config& cfg) {
  return cfg.GetRequired("paths", "out_dir");
}

std::string DataDir(const Config& cfg) {
  return cfg.Get("paths", "data_dir", OutDir(cfg) + "/corpus");
}

std::string BaselinePath(const Config& cfg) {
  return cfg.Get("paths", "baseline_checkpoint", OutDir(cfg) + "/baseline.ckpt");
}

std::string FinetunedPath(const Config& cfg) {
  return cfg.Get("paths", "finetuned_checkpoint",
                 OutDir(cfg) + "/finetuned.ckpt");
}

std::ofstream OpenOutput(const std::string& path) {
  fs::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  return out;
}

std::vector<int> KeywordFromConfig(const Config& cfg) {
  SynthSpec defaults;
  std::vector<int> kw = cfg.GetIntList("synth", "keyword", defaults.keyword);
  if (kw.empty()) throw DataError("config: empty keyword");
  return kw;
}

ModelConfig ModelConfigFromConfig(const Config& cfg, int input_dim,
                                  int phoneme_classes) {
  ModelConfig mc;
  mc.input_dim = input_dim;
  mc.d_model = cfg.GetInt("model", "d_model", mc.d_model);
  mc.num_heads = cfg.GetInt("model", "num_heads", mc.num_heads);
  mc.ffn_dim = cfg.GetInt("model", "ffn_dim", mc.ffn_dim);
  mc.encoder_blocks = cfg.GetInt("model", "encoder_blocks", mc.encoder_blocks);
  mc.decoder_blocks = cfg.GetInt("model", "decoder_blocks", mc.decoder_blocks);
  mc.num_queries = cfg.GetInt("model", "num_queries", mc.num_queries);
  mc.phoneme_classes = cfg.GetInt("model", "phoneme_classes", phoneme_classes);
  mc.speaker_classes = 0;
  mc.tap_layer = mc.encoder_blocks;
  mc.speaker_dropout =
      cfg.GetDouble("model", "speaker_dropout", mc.speaker_dropout);
  mc.ln_eps = cfg.GetDouble("model", "ln_eps", mc.ln_eps);
  mc.Validate();
  return mc;
}

FeaturePipeline PipelineFromConfig(const Config& cfg, NormalizerStats stats) {
  FeaturePipeline pipe;
  pipe.stats = std::move(stats);
  pipe.left_context = cfg.GetInt("features", "left_context", 3);
  pipe.right_context = cfg.GetInt("features", "right_context", 3);
  pipe.subsample_factor = cfg.GetInt("features", "subsample_factor", 3);
  return pipe;
}

TrainerOptions TrainerOptionsFromConfig(const Config& cfg, int epochs,
                                        uint64_t seed) {
  TrainerOptions opt;
  opt.schedule = ScheduleFromConfig(cfg).Compressed(epochs);
  opt.epochs = epochs;
  opt.seed = seed;
  opt.weights = WeightsFromConfig(cfg);
  opt.batch_spec = BatchSpecFromConfig(cfg);
  opt.baseline_batch_size = cfg.GetInt("train", "batch_size_baseline", 16);
  opt.strict_pairs = cfg.GetBool("train", "strict_pairs", false);
  opt.grad_clip_norm = cfg.GetDouble("train", "grad_clip_norm", 0.0);
  return opt;
}

void WriteMetricsHeader(std::ostream& out, const Config& cfg) {
  out << "# config_hash=" << cfg.HashHex() << '\n';
  out << "epoch\tstep\tlr\tphone\tphrase\tspkr\tmetric\ttotal\n";
}

// Splits one utterance list into (test, calibration) stores by speaker-name
// prefix.
std::pair<UtteranceStore, UtteranceStore> SplitEvalStores(
    std::vector<Utterance> utts, const std::string& calib_prefix) {
  std::vector<Utterance> test, calib;
  for (auto& u : utts) {
    const bool is_calib =
        u.speaker_name && u.speaker_name->rfind(calib_prefix, 0) == 0;
    (is_calib ? calib : test).push_back(std::move(u));
  }
  if (test.empty()) throw DataError("eval manifest has no test speakers");
  if (calib.empty()) {
    throw DataError("eval manifest has no calibration speakers (prefix '" +
                    calib_prefix + "')");
  }
  return {UtteranceStore::Build(std::move(test)),
          UtteranceStore::Build(std::move(calib))};
}

std::vector<VariantSpec> VariantsFromConfig(const Config& cfg) {
  std::vector<VariantSpec> variants;
  variants.push_back({"ctc", 0.0});
  variants.push_back({"metric", 1.0});
  const std::vector<double> mus =
      cfg.GetDoubleList("protocol", "mus", {0.4, 0.8, 0.95, 0.99});
  char name[32];
  for (double mu : mus) {
    std::snprintf(name, sizeof(name), "mu%g", mu);
    variants.push_back({name, mu});
  }
  return variants;
}

struct LoadedModel {
  ModelParams params;
  FeaturePipeline pipe;
};

LoadedModel LoadModel(const std::string& path) {
  const Checkpoint ckpt = Checkpoint::Load(path);
  return {ModelFromCheckpoint(ckpt), PipelineFromCheckpoint(ckpt)};
}

void SaveModel(const std::string& path, const ModelParams& params,
               const FeaturePipeline& pipe, const Config& cfg,
               const std::string& stage, uint64_t seed) {
  nlohmann::json extra;
  extra["stage"] = stage;
  extra["seed"] = seed;
  extra["config_hash"] = cfg.HashHex();
  extra["config"] = cfg.text();
  Checkpoint ckpt = MakeCheckpoint(params, pipe, extra);
  fs::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
  }
  ckpt.Save(path);
}

void WriteFrrTable(const std::string& path, const ProtocolReport& report,
                   const Config& cfg) {
  std::ofstream out = OpenOutput(path);
  out << "# config_hash=" << cfg.HashHex() << '\n';
  out << "variant\tmu\tmean_frr\trun_frrs\tmet_target\n";
  char buf[64];
  for (const VariantResult& v : report.variants) {
    out << v.spec.name << '\t' << v.spec.mu << '\t';
    std::snprintf(buf, sizeof(buf), "%.10g", v.mean_frr);
    out << buf << '\t';
    for (size_t i = 0; i < v.run_frrs.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%s%.10g", i ? "," : "", v.run_frrs[i]);
      out << buf;
    }
    out << '\t' << (v.met_target_all_runs ? "yes" : "no") << '\n';
  }
}

// Delimited per-utterance scores against a fixed per-speaker anchor (the
// first enrollment-size block of keyword utterances, independent of the
// protocol's random draws).
void WriteScoreDump(const std::string& path, const Scorer& scorer,
                    const UtteranceStore& eval,
                    const std::vector<Utterance>& negatives,
                    const Calibration& cal, int enroll, double mu,
                    const Config& cfg) {
  std::ofstream out = OpenOutput(path);
  out << "# config_hash=" << cfg.HashHex() << '\n';
  out << "speaker\tutterance\ts_ctc\traw_p\ts_metric\ts_final\n";
  char buf[192];
  std::vector<ScoredUtterance> negative_scores;
  negative_scores.reserve(negatives.size());
  for (const Utterance& n : negatives) negative_scores.push_back(scorer.Score(n));
  for (int s = 0; s < eval.NumSpeakers(); ++s) {
    std::vector<int> positives;
    for (int i : eval.SpeakerUtterances(s)) {
      if (eval.Get(i).phrase_label == 1) positives.push_back(i);
    }
    if (static_cast<int>(positives.size()) <= enroll) continue;
    std::vector<const Utterance*> enrollment;
    for (int k = 0; k < enroll; ++k) {
      enrollment.push_back(&eval.Get(positives[k]));
    }
    const AnchorEmbedding anchor = Enroll(scorer, enrollment);
    auto emit = [&](const Utterance& u, const ScoredUtterance& sc) {
      const double raw = MetricScoreRaw(scorer.params(), anchor, sc.embedding);
      const double sm = Calibrate(raw, cal);
      const double sf = Fuse(sc.s_ctc, sm, mu);
      std::snprintf(buf, sizeof(buf), "%s\t%s\t%.10g\t%.10g\t%.10g\t%.10g",
                    eval.SpeakerName(s).c_str(), u.id.c_str(), sc.s_ctc, raw,
                    sm, sf);
      out << buf << '\n';
    };
    for (size_t k = enroll; k < positives.size(); ++k) {
      const Utterance& u = eval.Get(positives[k]);
      emit(u, scorer.Score(u));
    }
    for (size_t k = 0; k < negatives.size(); ++k) {
      emit(negatives[k], negative_scores[k]);
    }
  }
}

}  // namespace

SynthSpec SynthSpecFromConfig(const Config& cfg) {
  SynthSpec s;
  s.phoneme_count = cfg.GetInt("synth", "phoneme_count", s.phoneme_count);
  s.keyword = KeywordFromConfig(cfg);
  s.train_speakers = cfg.GetInt("synth", "train_speakers", s.train_speakers);
  s.train_utts_per_speaker =
      cfg.GetInt("synth", "train_utts_per_speaker", s.train_utts_per_speaker);
  s.eval_speakers = cfg.GetInt("synth", "eval_speakers", s.eval_speakers);
  s.eval_utts_per_speaker =
      cfg.GetInt("synth", "eval_utts_per_speaker", s.eval_utts_per_speaker);
  s.calib_speakers = cfg.GetInt("synth", "calib_speakers", s.calib_speakers);
  s.calib_utts_per_speaker =
      cfg.GetInt("synth", "calib_utts_per_speaker", s.calib_utts_per_speaker);
  s.asr_utterances = cfg.GetInt("synth", "asr_utterances", s.asr_utterances);
  s.keyword_utterances =
      cfg.GetInt("synth", "keyword_utterances", s.keyword_utterances);
  s.negative_trials =
      cfg.GetInt("synth", "negative_trials", s.negative_trials);
  s.negative_seconds =
      cfg.GetDouble("synth", "negative_seconds", s.negative_seconds);
  s.background_speakers =
      cfg.GetInt("synth", "background_speakers", s.background_speakers);
  s.decoy_fraction =
      cfg.GetDouble("synth", "decoy_fraction", s.decoy_fraction);
  s.feature_dim = cfg.GetInt("synth", "feature_dim", s.feature_dim);
  s.min_frames_per_phoneme =
      cfg.GetInt("synth", "min_frames_per_phoneme", s.min_frames_per_phoneme);
  s.max_frames_per_phoneme =
      cfg.GetInt("synth", "max_frames_per_phoneme", s.max_frames_per_phoneme);
  s.speaker_offset_scale = cfg.GetDouble("synth", "speaker_offset_scale",
                                         s.speaker_offset_scale);
  s.speaker_subspace_dim =
      cfg.GetInt("synth", "speaker_subspace_dim", s.speaker_subspace_dim);
  s.speaker_tilt = cfg.GetDouble("synth", "speaker_tilt", s.speaker_tilt);
  s.channel_scale = cfg.GetDouble("synth", "channel_scale", s.channel_scale);
  s.noise_scale = cfg.GetDouble("synth", "noise_scale", s.noise_scale);
  s.frame_rate = cfg.GetDouble("synth", "frame_rate", s.frame_rate);
  s.seed = cfg.GetUint("synth", "seed", s.seed);
  s.Validate();
  return s;
}

LrSchedule ScheduleFromConfig(const Config& cfg) {
  LrSchedule s;
  s.peak = cfg.GetDouble("schedule", "peak", s.peak);
  s.warmup_end_epoch =
      cfg.GetDouble("schedule", "warmup_end", s.warmup_end_epoch);
  s.linear_end_epoch =
      cfg.GetDouble("schedule", "linear_end", s.linear_end_epoch);
  s.linear_end_value =
      cfg.GetDouble("schedule", "linear_end_value", s.linear_end_value);
  s.exp_factor = cfg.GetDouble("schedule", "exp_factor", s.exp_factor);
  s.min_lr = cfg.GetDouble("schedule", "min_lr", s.min_lr);
  s.last_epoch = cfg.GetDouble("schedule", "last_epoch", s.last_epoch);
  s.Validate();
  return s;
}

LossWeights WeightsFromConfig(const Config& cfg) {
  LossWeights w;
  w.alpha = cfg.GetDouble("train", "alpha", w.alpha);
  w.beta = cfg.GetDouble("train", "beta", w.beta);
  w.gamma = cfg.GetDouble("train", "gamma", w.gamma);
  return w;
}

BatchSpec BatchSpecFromConfig(const Config& cfg) {
  BatchSpec b;
  b.batch_size = cfg.GetInt("train", "batch_size", b.batch_size);
  b.speakers_per_batch =
      cfg.GetInt("train", "speakers_per_batch", b.speakers_per_batch);
  b.utts_per_speaker =
      cfg.GetInt("train", "utts_per_speaker", b.utts_per_speaker);
  b.spkr_utts = b.speakers_per_batch * b.utts_per_speaker;
  b.drop_prob = cfg.GetDouble("train", "drop_prob", b.drop_prob);
  b.Validate();
  return b;
}

ProtocolConfig ProtocolConfigFromConfig(const Config& cfg) {
  ProtocolConfig p;
  p.enroll_per_speaker =
      cfg.GetInt("protocol", "enroll_per_speaker", p.enroll_per_speaker);
  p.runs = cfg.GetInt("protocol", "runs", p.runs);
  p.operating_fa_per_hr =
      cfg.GetDouble("protocol", "operating_fa_per_hr", p.operating_fa_per_hr);
  p.seed = cfg.GetUint("protocol", "seed", p.seed);
  p.standardize_ctc =
      cfg.GetBool("protocol", "standardize_ctc", p.standardize_ctc);
  return p;
}

std::string RunSynth(const Config& cfg) {
  const SynthSpec spec = SynthSpecFromConfig(cfg);
  const std::string dir = DataDir(cfg);
  const GeneratedCorpus corpus = GenCorpus(spec);
  WriteManifest(dir + "/voice_trigger.tsv", "features", corpus.voice_trigger);
  WriteManifest(dir + "/speaker_id.tsv", "features", corpus.speaker_id);
  WriteManifest(dir + "/eval.tsv", "features", corpus.eval);
  WriteManifest(dir + "/negatives.tsv", "features", corpus.negatives);
  return dir;
}

TrainArtifacts RunTrainBaseline(const Config& cfg) {
  const std::string dir = DataDir(cfg);
  const UtteranceStore trigger =
      LoadStore(dir + "/voice_trigger.tsv", DataSource::kVoiceTrigger);
  const UtteranceStore spkr =
      LoadStore(dir + "/speaker_id.tsv", DataSource::kSpeakerId);
  if (trigger.Size() == 0) throw DataError("empty voice-trigger manifest");

  // Normalizer statistics come from all training audio, so the same pipeline
  // serves both stages and inference.
  std::vector<const Mat*> frames;
  frames.reserve(trigger.Size() + spkr.Size());
  for (const auto& u : trigger.All()) frames.push_back(&u.features);
  for (const auto& u : spkr.All()) frames.push_back(&u.features);
  FeaturePipeline pipe = PipelineFromConfig(cfg, FitNormalizer(frames));

  const int raw_dim = static_cast<int>(trigger.Get(0).features.cols());
  const int phoneme_classes =
      cfg.GetInt("synth", "phoneme_count", SynthSpec().phoneme_count) + 1;
  const ModelConfig mc =
      ModelConfigFromConfig(cfg, pipe.OutputDim(raw_dim), phoneme_classes);

  const uint64_t seed = cfg.GetUint("train", "seed", 1);
  Rng init_rng = Rng(seed).Fork(kModelInitStream);
  ModelParams params = ModelParams::Init(mc, &init_rng);

  const int epochs = cfg.GetInt("train", "epochs_baseline", 5);
  TrainerOptions opt = TrainerOptionsFromConfig(cfg, epochs, seed);
  std::ofstream metrics = OpenOutput(OutDir(cfg) + "/baseline_metrics.tsv");
  WriteMetricsHeader(metrics, cfg);
  opt.metrics_out = &metrics;

  TrainArtifacts art;
  art.stats = TrainBaseline(&params, trigger, pipe, opt);
  art.checkpoint_path = BaselinePath(cfg);
  SaveModel(art.checkpoint_path, params, pipe, cfg, "baseline", seed);
  return art;
}

TrainArtifacts RunFinetune(const Config& cfg) {
  const std::string dir = DataDir(cfg);
  LoadedModel loaded = LoadModel(BaselinePath(cfg));
  const UtteranceStore trigger =
      LoadStore(dir + "/voice_trigger.tsv", DataSource::kVoiceTrigger);
  const UtteranceStore spkr =
      LoadStore(dir + "/speaker_id.tsv", DataSource::kSpeakerId);
  if (spkr.NumSpeakers() == 0) throw DataError("no speakers to adapt to");

  const uint64_t seed = cfg.GetUint("train", "seed", 1);
  Rng head_rng = Rng(seed).Fork(kSpeakerHeadStream);
  ResizeSpeakerHead(&loaded.params, spkr.NumSpeakers(), &head_rng);

  const int epochs = cfg.GetInt("train", "epochs_finetune", 10);
  TrainerOptions opt = TrainerOptionsFromConfig(cfg, epochs, seed);
  std::ofstream metrics = OpenOutput(OutDir(cfg) + "/finetune_metrics.tsv");
  WriteMetricsHeader(metrics, cfg);
  opt.metrics_out = &metrics;

  const TrainRegime regime = TrainRegime::Finetune(loaded.params.cfg);
  TrainArtifacts art;
  art.stats = FinetuneModel(&loaded.params, spkr, trigger, loaded.pipe, opt,
                            regime);
  art.checkpoint_path = FinetunedPath(cfg);
  SaveModel(art.checkpoint_path, loaded.params, loaded.pipe, cfg, "finetune",
            seed);
  return art;
}

ProtocolReport RunEval(const Config& cfg) {
  const std::string dir = DataDir(cfg);
  const std::string ckpt_path =
      cfg.Get("paths", "checkpoint", FinetunedPath(cfg));
  LoadedModel loaded = LoadModel(ckpt_path);

  auto [eval_store, calib_store] =
      SplitEvalStores(ReadManifest(dir + "/eval.tsv", DataSource::kSpeakerId),
                      cfg.Get("eval", "calib_prefix", "cal"));
  const std::vector<Utterance> negatives =
      ReadManifest(dir + "/negatives.tsv", DataSource::kVoiceTrigger);

  const Scorer scorer(&loaded.params, &loaded.pipe, KeywordFromConfig(cfg));
  const ProtocolConfig pc = ProtocolConfigFromConfig(cfg);
  const std::vector<VariantSpec> variants = VariantsFromConfig(cfg);
  const ProtocolReport report =
      RunProtocol(scorer, eval_store, calib_store, negatives, pc, variants);

  const std::string out = OutDir(cfg);
  for (const VariantResult& v : report.variants) {
    std::ofstream det = OpenOutput(out + "/det_" + v.spec.name + ".tsv");
    det << "# config_hash=" << cfg.HashHex() << '\n';
    WriteDetCurve(det, v.pooled_curve);
  }
  WriteFrrTable(out + "/frr_table.tsv", report, cfg);
  {
    std::ofstream rep = OpenOutput(out + "/protocol.txt");
    WriteProtocolReport(rep, report);
    rep << "\n# config\n" << cfg.text() << '\n';
  }
  WriteScoreDump(out + "/scores.tsv", scorer, eval_store, negatives,
                 report.calibration, pc.enroll_per_speaker,
                 cfg.GetDouble("eval", "score_mu", 0.95), cfg);
  return report;
}

namespace {

struct AblationVariant {
  std::string name;
  bool pretrained = true;
  bool freeze_encoder = true;
  bool use_phone = false;
  bool use_spkr = true;
  bool use_metric = true;
  int tap = 5;
  bool report_ctc = false;
  bool report_metric = true;
};

// The fine-tuning variant grid: initialization source, active losses, tap
// layer, and encoder freezing.  The phrase loss stays on throughout.
std::vector<AblationVariant> VariantGrid(int top_tap) {
  const int penult = top_tap - 1;
  std::vector<AblationVariant> grid;
  grid.push_back({"scratch_all_losses_top_tap", false, false, true, true, true,
                  top_tap, true, true});
  grid.push_back({"scratch_no_phone_top_tap", false, false, false, true, true,
                  top_tap, false, true});
  grid.push_back({"frozen_encoder_top_tap", true, true, false, true, true,
                  top_tap, true, true});
  grid.push_back({"frozen_encoder_penult_tap", true, true, false, true, true,
                  penult, false, true});
  grid.push_back({"no_speaker_loss", true, true, false, false, true, penult,
                  false, true});
  grid.push_back({"no_metric_loss", true, true, false, true, false, penult,
                  false, true});
  grid.push_back({"phrase_loss_only", true, true, false, false, false, penult,
                  false, true});
  grid.push_back({"unfrozen_encoder_with_phone", true, false, true, true, true,
                  penult, true, true});
  return grid;
}

}  // namespace

std::vector<AblationRow> RunAblate(const Config& cfg) {
  const std::string dir = DataDir(cfg);
  const UtteranceStore trigger =
      LoadStore(dir + "/voice_trigger.tsv", DataSource::kVoiceTrigger);
  const UtteranceStore spkr =
      LoadStore(dir + "/speaker_id.tsv", DataSource::kSpeakerId);
  auto [eval_store, calib_store] =
      SplitEvalStores(ReadManifest(dir + "/eval.tsv", DataSource::kSpeakerId),
                      cfg.Get("eval", "calib_prefix", "cal"));
  const std::vector<Utterance> negatives =
      ReadManifest(dir + "/negatives.tsv", DataSource::kVoiceTrigger);
  const std::vector<int> keyword = KeywordFromConfig(cfg);

  const Checkpoint baseline_ckpt = Checkpoint::Load(BaselinePath(cfg));
  const FeaturePipeline pipe = PipelineFromCheckpoint(baseline_ckpt);
  const ModelConfig base_mc =
      ModelFromCheckpoint(baseline_ckpt).cfg;  // validated dims

  const uint64_t base_seed =
      cfg.GetUint("ablate", "seed", cfg.GetUint("train", "seed", 1));
  const int epochs =
      cfg.GetInt("ablate", "epochs", cfg.GetInt("train", "epochs_finetune", 10));
  const ProtocolConfig pc = ProtocolConfigFromConfig(cfg);

  std::vector<AblationRow> rows;
  std::ofstream table = OpenOutput(OutDir(cfg) + "/ablation.tsv");
  table << "variant\tseed\tconfig_hash\tfrr_ctc\tfrr_metric\n";

  const auto grid = VariantGrid(base_mc.encoder_blocks);
  for (size_t v = 0; v < grid.size(); ++v) {
    const AblationVariant& var = grid[v];
    const uint64_t seed = base_seed + v;

    ModelParams params = [&] {
      if (var.pretrained) return ModelFromCheckpoint(baseline_ckpt);
      Rng init_rng = Rng(seed).Fork(kModelInitStream);
      return ModelParams::Init(base_mc, &init_rng);
    }();
    if (var.use_spkr) {
      Rng head_rng = Rng(seed).Fork(kSpeakerHeadStream);
      ResizeSpeakerHead(&params, spkr.NumSpeakers(), &head_rng);
    }

    TrainRegime regime;
    regime.stage = TrainRegime::Stage::kCustom;
    regime.freeze_encoder = var.freeze_encoder;
    regime.tap_layer = var.tap;
    regime.use_phone = var.use_phone;
    regime.use_phrase = true;
    regime.use_spkr = var.use_spkr;
    regime.use_metric = var.use_metric;

    TrainerOptions opt = TrainerOptionsFromConfig(cfg, epochs, seed);
    FinetuneModel(&params, spkr, trigger, pipe, opt, regime);

    const Scorer scorer(&params, &pipe, keyword);
    std::vector<VariantSpec> branches;
    if (var.report_ctc) branches.push_back({"ctc", 0.0});
    if (var.report_metric) branches.push_back({"metric", 1.0});
    const ProtocolReport report =
        RunProtocol(scorer, eval_store, calib_store, negatives, pc, branches);

    AblationRow row;
    row.name = var.name;
    row.seed = seed;
    row.config_hash = cfg.HashHex();
    for (const VariantResult& b : report.variants) {
      if (b.spec.name == "ctc") row.frr_ctc = b.mean_frr;
      if (b.spec.name == "metric") row.frr_metric = b.mean_frr;
    }
    char buf[64];
    table << row.name << '\t' << row.seed << '\t' << row.config_hash << '\t';
    if (row.frr_ctc >= 0.0) {
      std::snprintf(buf, sizeof(buf), "%.10g", row.frr_ctc);
      table << buf;
    } else {
      table << '-';
    }
    table << '\t';
    if (row.frr_metric >= 0.0) {
      std::snprintf(buf, sizeof(buf), "%.10g", row.frr_metric);
      table << buf;
    } else {
      table << '-';
    }
    table << '\n';
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace vtrig
