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

// Command line driver.  Every subcommand reads one INI config file and writes
// its outputs under [paths] out_dir, so a full experiment is:
//
//   vtrig synth -c desk.cfg
//   vtrig train-baseline -c desk.cfg
//   vtrig finetune -c desk.cfg
//   vtrig eval -c desk.cfg

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vtrig/common.h"
#include "vtrig/config.h"
#include "vtrig/experiment.h"

namespace {

vtrig::Config LoadConfig(const std::string& path,
                         const std::vector<std::string>& overrides) {
  vtrig::Config cfg = vtrig::Config::Load(path);
  for (const std::string& ov : overrides) {
    const size_t dot = ov.find('.');
    const size_t eq = ov.find('=');
    if (dot == std::string::npos || eq == std::string::npos || dot > eq) {
      throw vtrig::DataError("bad override '" + ov +
                             "', expected section.key=value");
    }
    cfg.Set(ov.substr(0, dot), ov.substr(dot + 1, eq - dot - 1),
            ov.substr(eq + 1));
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"speaker-adapted voice trigger toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::vector<std::string> overrides;
  app.add_option("-c,--config", config_path, "INI config file")
      ->required()
      ->check(CLI::ExistingFile);
  app.add_option("-D,--define", overrides,
                 "override a config value, section.key=value");

  CLI::App* cmd_synth =
      app.add_subcommand("synth", "generate the synthetic corpus");
  CLI::App* cmd_baseline = app.add_subcommand(
      "train-baseline", "train the speaker-independent model");
  CLI::App* cmd_finetune = app.add_subcommand(
      "finetune", "adapt the decoder with the metric objective");
  CLI::App* cmd_eval =
      app.add_subcommand("eval", "run the enrollment protocol");
  CLI::App* cmd_ablate =
      app.add_subcommand("ablate", "train and score the variant grid");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const vtrig::Config cfg = LoadConfig(config_path, overrides);
    if (cmd_synth->parsed()) {
      const std::string dir = vtrig::RunSynth(cfg);
      std::cout << "corpus written to " << dir << '\n';
    } else if (cmd_baseline->parsed()) {
      const vtrig::TrainArtifacts art = vtrig::RunTrainBaseline(cfg);
      std::cout << "baseline checkpoint: " << art.checkpoint_path << '\n';
      if (!art.stats.epoch_mean_total.empty()) {
        std::printf("final epoch mean loss: %.6g\n",
                    art.stats.epoch_mean_total.back());
      }
    } else if (cmd_finetune->parsed()) {
      const vtrig::TrainArtifacts art = vtrig::RunFinetune(cfg);
      std::cout << "finetuned checkpoint: " << art.checkpoint_path << '\n';
      if (!art.stats.epoch_mean_total.empty()) {
        std::printf("final epoch mean loss: %.6g\n",
                    art.stats.epoch_mean_total.back());
      }
    } else if (cmd_eval->parsed()) {
      const vtrig::ProtocolReport report = vtrig::RunEval(cfg);
      vtrig::WriteProtocolReport(std::cout, report);
    } else if (cmd_ablate->parsed()) {
      const auto rows = vtrig::RunAblate(cfg);
      for (const vtrig::AblationRow& row : rows) {
        std::printf("%-32s frr_ctc=", row.name.c_str());
        if (row.frr_ctc >= 0.0) {
          std::printf("%.4f", row.frr_ctc);
        } else {
          std::printf("-");
        }
        std::printf(" frr_metric=");
        if (row.frr_metric >= 0.0) {
          std::printf("%.4f\n", row.frr_metric);
        } else {
          std::printf("-\n");
        }
      }
    }
  } catch (const vtrig::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const vtrig::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
