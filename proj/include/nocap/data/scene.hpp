// Copyright 2026 The nocap Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "nocap/text.hpp"

namespace nocap::data {

struct Box {
  double x_c = 0.0;
  double y_c = 0.0;
  double w = 0.0;
  double h = 0.0;
  bool operator==(const Box&) const = default;
};

struct Detection {
  int class_id = 0;
  std::string class_word;
  Box box;
  double score = 0.0;
  bool operator==(const Detection&) const = default;
};

enum class Split { kTrain, kVal, kTest };

std::string to_string(Split s);
Split split_from_string(const std::string& s);

struct SceneRecord {
  std::uint64_t scene_id = 0;
  int W = 0;
  int H = 0;
  std::vector<Detection> detections;
  std::vector<std::vector<double>> region_visual;  // one vector per detection
  std::vector<Tokens> references;
  Split split = Split::kTrain;
  bool operator==(const SceneRecord&) const = default;
};

inline constexpr std::size_t kMinDetections = 2;
inline constexpr std::size_t kMaxDetections = 10;
inline constexpr std::size_t kMinReferences = 2;

// Throws ValidationError when a detection leaves the image, a score is
// outside [0,1], a class word is not a single token, or the record breaks the
// detection/reference count limits.
void validate_detection(const Detection& d, int W, int H);
void validate(const SceneRecord& scene);

nlohmann::json to_json(const SceneRecord& scene);
SceneRecord scene_from_json(const nlohmann::json& j);

// One record per line, UTF-8.
void write_jsonl(const std::filesystem::path& path, const std::vector<SceneRecord>& scenes);
std::vector<SceneRecord> read_jsonl(const std::filesystem::path& path);
std::string to_jsonl(const std::vector<SceneRecord>& scenes);
std::vector<SceneRecord> parse_jsonl(const std::string& text);

}  // namespace nocap::data
