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

#include "vtrig/manifest.h"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

static_assert(std::endian::native == std::endian::little,
              "file formats assume a little-endian host");

namespace vtrig {

namespace fs = std::filesystem;

namespace {

constexpr char kFeatureMagic[4] = {'V', 'T', 'F', 'B'};
constexpr uint32_t kFeatureVersion = 1;

template <typename T>
void WriteRaw(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T ReadRaw(std::istream& is, const std::string& path) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw DataError(path + ": truncated file");
  return v;
}

std::string FormatSegment(const Utterance& u) {
  if (!u.keyword_segment) return "-";
  return std::to_string(u.keyword_segment->first) + ":" +
         std::to_string(u.keyword_segment->second);
}

std::string FormatPhones(const Utterance& u) {
  if (!u.phoneme_labels) return "-";
  std::string out;
  for (size_t i = 0; i < u.phoneme_labels->size(); ++i) {
    if (i > 0) out += ",";
    out += std::to_string((*u.phoneme_labels)[i]);
  }
  return out.empty() ? "-" : out;
}

std::vector<std::string> SplitTabs(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == '\t') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

bool HasSuffix(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// Chunked RIFF scan; returns false when the chunk is absent.
struct WavFormat {
  uint16_t audio_format = 0;
  uint16_t channels = 0;
  uint32_t sample_rate = 0;
  uint16_t bits_per_sample = 0;
};

}  // namespace

void WriteFeatureFile(const std::string& path, const Mat& frames,
                      double frame_rate) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError(path + ": cannot open for writing");
  os.write(kFeatureMagic, 4);
  WriteRaw(os, kFeatureVersion);
  WriteRaw(os, static_cast<uint32_t>(frames.rows()));
  WriteRaw(os, static_cast<uint32_t>(frames.cols()));
  WriteRaw(os, frame_rate);
  std::vector<float> row(frames.cols());
  for (Eigen::Index r = 0; r < frames.rows(); ++r) {
    for (Eigen::Index c = 0; c < frames.cols(); ++c) {
      row[c] = static_cast<float>(frames(r, c));
    }
    os.write(reinterpret_cast<const char*>(row.data()),
             static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
  if (!os) throw DataError(path + ": write failed");
}

Mat ReadFeatureFile(const std::string& path, double* frame_rate_out) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError(path + ": cannot open");
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kFeatureMagic, 4) != 0) {
    throw DataError(path + ": not a feature file");
  }
  uint32_t version = ReadRaw<uint32_t>(is, path);
  if (version != kFeatureVersion) {
    throw DataError(path + ": unsupported feature file version");
  }
  uint32_t rows = ReadRaw<uint32_t>(is, path);
  uint32_t cols = ReadRaw<uint32_t>(is, path);
  double rate = ReadRaw<double>(is, path);
  if (rows == 0 || cols == 0 || cols > 1u << 20) {
    throw DataError(path + ": implausible dimensions");
  }
  Mat out(rows, cols);
  std::vector<float> row(cols);
  for (uint32_t r = 0; r < rows; ++r) {
    is.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(cols * sizeof(float)));
    if (!is) throw DataError(path + ": truncated payload");
    for (uint32_t c = 0; c < cols; ++c) out(r, c) = row[c];
  }
  if (frame_rate_out != nullptr) *frame_rate_out = rate;
  return out;
}

AudioClip ReadWav(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError(path + ": cannot open");
  char riff[4], wave[4];
  is.read(riff, 4);
  ReadRaw<uint32_t>(is, path);  // total size, unused
  is.read(wave, 4);
  if (!is || std::memcmp(riff, "RIFF", 4) != 0 ||
      std::memcmp(wave, "WAVE", 4) != 0) {
    throw DataError(path + ": not a WAV file");
  }
  WavFormat fmt;
  std::vector<char> data;
  bool have_fmt = false, have_data = false;
  while (is) {
    char cid[4];
    is.read(cid, 4);
    if (!is) break;
    uint32_t csize = ReadRaw<uint32_t>(is, path);
    if (std::memcmp(cid, "fmt ", 4) == 0) {
      fmt.audio_format = ReadRaw<uint16_t>(is, path);
      fmt.channels = ReadRaw<uint16_t>(is, path);
      fmt.sample_rate = ReadRaw<uint32_t>(is, path);
      ReadRaw<uint32_t>(is, path);  // byte rate
      ReadRaw<uint16_t>(is, path);  // block align
      fmt.bits_per_sample = ReadRaw<uint16_t>(is, path);
      if (csize > 16) is.ignore(csize - 16);
      have_fmt = true;
    } else if (std::memcmp(cid, "data", 4) == 0) {
      data.resize(csize);
      is.read(data.data(), csize);
      if (!is) throw DataError(path + ": truncated data chunk");
      have_data = true;
    } else {
      is.ignore(csize + (csize & 1));
    }
    if (have_fmt && have_data) break;
  }
  if (!have_fmt || !have_data) throw DataError(path + ": missing fmt/data chunk");
  if (fmt.channels != 1) throw DataError(path + ": only mono audio supported");

  AudioClip clip;
  clip.sample_rate = fmt.sample_rate;
  if (fmt.audio_format == 1 && fmt.bits_per_sample == 16) {
    size_t n = data.size() / 2;
    clip.samples.resize(n);
    for (size_t i = 0; i < n; ++i) {
      int16_t s;
      std::memcpy(&s, data.data() + 2 * i, 2);
      clip.samples[i] = s / 32768.0;
    }
  } else if (fmt.audio_format == 3 && fmt.bits_per_sample == 32) {
    size_t n = data.size() / 4;
    clip.samples.resize(n);
    for (size_t i = 0; i < n; ++i) {
      float s;
      std::memcpy(&s, data.data() + 4 * i, 4);
      clip.samples[i] = s;
    }
  } else {
    throw DataError(path + ": unsupported WAV encoding");
  }
  return clip;
}

void WriteWav(const std::string& path, const AudioClip& clip) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError(path + ": cannot open for writing");
  uint32_t n = static_cast<uint32_t>(clip.samples.size());
  uint32_t data_size = n * 2;
  os.write("RIFF", 4);
  WriteRaw(os, static_cast<uint32_t>(36 + data_size));
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  WriteRaw(os, static_cast<uint32_t>(16));
  WriteRaw(os, static_cast<uint16_t>(1));  // PCM
  WriteRaw(os, static_cast<uint16_t>(1));  // mono
  WriteRaw(os, static_cast<uint32_t>(clip.sample_rate));
  WriteRaw(os, static_cast<uint32_t>(clip.sample_rate * 2));
  WriteRaw(os, static_cast<uint16_t>(2));
  WriteRaw(os, static_cast<uint16_t>(16));
  os.write("data", 4);
  WriteRaw(os, data_size);
  for (double s : clip.samples) {
    double clipped = std::clamp(s, -1.0, 1.0);
    auto v = static_cast<int16_t>(std::lround(clipped * 32767.0));
    WriteRaw(os, v);
  }
  if (!os) throw DataError(path + ": write failed");
}

void WriteManifest(const std::string& manifest_path,
                   const std::string& feature_subdir,
                   const std::vector<Utterance>& utts) {
  fs::path mpath(manifest_path);
  fs::path dir = mpath.parent_path();
  fs::path feat_dir = dir / feature_subdir;
  std::error_code ec;
  fs::create_directories(feat_dir, ec);
  if (ec) throw DataError(feat_dir.string() + ": cannot create directory");

  std::set<std::string> seen;
  std::ostringstream body;
  for (const Utterance& u : utts) {
    if (!seen.insert(u.id).second) {
      throw DataError("manifest: duplicate utterance id " + u.id);
    }
    std::string rel = feature_subdir + "/" + u.id + ".vtf";
    WriteFeatureFile((dir / rel).string(), u.features, u.frame_rate);
    char dur[32];
    std::snprintf(dur, sizeof(dur), "%.9g", u.duration_hours);
    body << u.id << '\t' << rel << '\t'
         << (u.speaker_name ? *u.speaker_name : "-") << '\t' << u.phrase_label
         << '\t' << FormatSegment(u) << '\t' << FormatPhones(u) << '\t' << dur
         << '\n';
  }
  std::ofstream os(manifest_path, std::ios::binary);
  if (!os) throw DataError(manifest_path + ": cannot open for writing");
  os << body.str();
  if (!os) throw DataError(manifest_path + ": write failed");
}

std::vector<Utterance> ReadManifest(const std::string& manifest_path,
                                    DataSource source, const MelConfig& mel) {
  std::ifstream is(manifest_path);
  if (!is) throw DataError(manifest_path + ": cannot open");
  fs::path dir = fs::path(manifest_path).parent_path();

  std::vector<Utterance> out;
  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> f = SplitTabs(line);
    if (f.size() != 7) {
      throw DataError(manifest_path + ":" + std::to_string(lineno) +
                      ": expected 7 tab-separated fields");
    }
    Utterance u;
    u.id = f[0];
    if (!seen.insert(u.id).second) {
      throw DataError(manifest_path + ": duplicate utterance id " + u.id);
    }
    std::string path = (dir / f[1]).string();
    try {
      if (HasSuffix(f[1], ".wav")) {
        FeatureSequence seq = LogMelSpectrogram(ReadWav(path), mel);
        u.features = seq.frames;
        u.frame_rate = seq.frame_rate;
      } else {
        u.features = ReadFeatureFile(path, &u.frame_rate);
      }
    } catch (const std::exception& e) {
      throw DataError(manifest_path + ":" + std::to_string(lineno) + ": " +
                      e.what());
    }
    if (f[2] != "-") u.speaker_name = f[2];
    try {
      u.phrase_label = std::stoi(f[3]);
      if (f[4] != "-") {
        size_t colon = f[4].find(':');
        if (colon == std::string::npos) throw std::invalid_argument("segment");
        u.keyword_segment = std::make_pair(std::stoi(f[4].substr(0, colon)),
                                           std::stoi(f[4].substr(colon + 1)));
      }
      if (f[5] != "-") {
        std::vector<int> phones;
        std::stringstream ss(f[5]);
        std::string tok;
        while (std::getline(ss, tok, ',')) phones.push_back(std::stoi(tok));
        u.phoneme_labels = std::move(phones);
      }
      if (f[6] != "-") u.duration_hours = std::stod(f[6]);
    } catch (const DataError&) {
      throw;
    } catch (const std::exception&) {
      throw DataError(manifest_path + ":" + std::to_string(lineno) +
                      ": malformed field");
    }
    u.source = source;
    u.Validate();
    out.push_back(std::move(u));
  }
  return out;
}

UtteranceStore LoadStore(const std::string& manifest_path, DataSource source,
                         const MelConfig& mel) {
  return UtteranceStore::Build(ReadManifest(manifest_path, source, mel));
}

}  // namespace vtrig
