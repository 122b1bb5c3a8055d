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

// Dataset manifests and the flat feature file format.
//
// A manifest is a tab-separated text file, one utterance per line:
//   id  path  speaker  phrase  segment  phones  duration_hours
// Optional fields hold "-" when absent.  segment is "start:end" in raw
// frames, phones is a comma-separated phoneme id list.  Paths are resolved
// relative to the manifest's directory and may point at feature files
// (.vtf) or single-channel WAV audio, which is run through the log-mel
// frontend on load.
//
// Feature files (.vtf) are little-endian binary: magic "VTFB", u32 version,
// u32 rows, u32 cols, f64 frame rate, then rows*cols row-major f32 values.

#ifndef VTRIG_MANIFEST_H_
#define VTRIG_MANIFEST_H_

#include <string>
#include <vector>

#include "vtrig/features.h"
#include "vtrig/sampler.h"

namespace vtrig {

void WriteFeatureFile(const std::string& path, const Mat& frames,
                      double frame_rate);
Mat ReadFeatureFile(const std::string& path, double* frame_rate_out = nullptr);

// Mono WAV, PCM16 or IEEE float32.  Samples are scaled to [-1, 1] for PCM16.
AudioClip ReadWav(const std::string& path);
void WriteWav(const std::string& path, const AudioClip& clip);  // PCM16

// Writes one .vtf per utterance into dir(manifest_path)/feature_subdir and
// the manifest itself.  Utterance ids must be unique.
void WriteManifest(const std::string& manifest_path,
                   const std::string& feature_subdir,
                   const std::vector<Utterance>& utts);

// Loads a manifest eagerly.  Audio entries are converted with `mel`;
// feature-file entries load as-is.
std::vector<Utterance> ReadManifest(const std::string& manifest_path,
                                    DataSource source,
                                    const MelConfig& mel = MelConfig());

UtteranceStore LoadStore(const std::string& manifest_path, DataSource source,
                         const MelConfig& mel = MelConfig());

}  // namespace vtrig

#endif  // VTRIG_MANIFEST_H_
