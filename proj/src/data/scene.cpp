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

#include "nocap/data/scene.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "nocap/error.hpp"

namespace nocap::data {

std::string to_string(Split s) {
  switch (s) {
    case Split::kTrain:
      return "train";
    case Split::kVal:
      return "val";
    case Split::kTest:
      return "test";
  }
  return "train";
}

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "val") return Split::kVal;
  if (s == "test") return Split::kTest;
  throw ValidationError("unknown split '" + s + "'");
}

void validate_detection(const Detection& d, int W, int H) {
  if (W <= 0 || H <= 0) throw ContractError("image dimensions must be positive");
  const Box& b = d.box;
  if (!(b.w > 0.0) || !(b.h > 0.0)) throw ValidationError("detection box must have positive size");
  if (b.x_c < 0.0 || b.x_c > W || b.y_c < 0.0 || b.y_c > H) {
    throw ValidationError("detection centre outside the image");
  }
  if (b.x_c - b.w / 2 < -1e-9 || b.x_c + b.w / 2 > W + 1e-9 || b.y_c - b.h / 2 < -1e-9 ||
      b.y_c + b.h / 2 > H + 1e-9) {
    throw ValidationError("detection box exceeds the image bounds");
  }
  if (!(d.score >= 0.0 && d.score <= 1.0)) throw ValidationError("detection score outside [0,1]");
  if (d.class_word.empty() || d.class_word.find_first_of(" \t\n") != std::string::npos) {
    throw ValidationError("class word '" + d.class_word + "' must be a single token");
  }
}

void validate(const SceneRecord& scene) {
  if (scene.detections.size() < kMinDetections || scene.detections.size() > kMaxDetections) {
    throw ValidationError("scene " + std::to_string(scene.scene_id) + " has " +
                          std::to_string(scene.detections.size()) + " detections");
  }
  for (const auto& d : scene.detections) validate_detection(d, scene.W, scene.H);
  if (scene.region_visual.size() != scene.detections.size()) {
    throw ValidationError("region_visual must have one vector per detection");
  }
  for (const auto& v : scene.region_visual) {
    if (v.size() != scene.region_visual.front().size()) throw ValidationError("ragged region_visual");
  }
  if (scene.references.size() < kMinReferences) {
    throw ValidationError("scene " + std::to_string(scene.scene_id) + " needs at least two references");
  }
  for (const auto& r : scene.references) {
    if (r.empty()) throw ValidationError("empty reference caption");
  }
}

nlohmann::json to_json(const SceneRecord& scene) {
  nlohmann::json dets = nlohmann::json::array();
  for (const auto& d : scene.detections) {
    dets.push_back({{"class_id", d.class_id},
                    {"class_word", d.class_word},
                    {"box", {d.box.x_c, d.box.y_c, d.box.w, d.box.h}},
                    {"score", d.score}});
  }
  nlohmann::json j;
  j["scene_id"] = scene.scene_id;
  j["W"] = scene.W;
  j["H"] = scene.H;
  j["detections"] = std::move(dets);
  j["region_visual"] = scene.region_visual;
  j["references"] = scene.references;
  j["split"] = to_string(scene.split);
  return j;
}

SceneRecord scene_from_json(const nlohmann::json& j) {
  try {
    SceneRecord s;
    s.scene_id = j.at("scene_id").get<std::uint64_t>();
    s.W = j.at("W").get<int>();
    s.H = j.at("H").get<int>();
    for (const auto& dj : j.at("detections")) {
      Detection d;
      d.class_id = dj.at("class_id").get<int>();
      d.class_word = dj.at("class_word").get<std::string>();
      const auto box = dj.at("box").get<std::vector<double>>();
      if (box.size() != 4) throw ValidationError("box must have four entries");
      d.box = {box[0], box[1], box[2], box[3]};
      d.score = dj.at("score").get<double>();
      s.detections.push_back(std::move(d));
    }
    s.region_visual = j.at("region_visual").get<std::vector<std::vector<double>>>();
    s.references = j.at("references").get<std::vector<Tokens>>();
    s.split = split_from_string(j.at("split").get<std::string>());
    validate(s);
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed scene record: ") + e.what());
  }
}

std::string to_jsonl(const std::vector<SceneRecord>& scenes) {
  std::string out;
  for (const auto& s : scenes) {
    out += to_json(s).dump();
    out += '\n';
  }
  return out;
}

std::vector<SceneRecord> parse_jsonl(const std::string& text) {
  std::vector<SceneRecord> out;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError(std::string("bad JSONL line: ") + e.what());
    }
    out.push_back(scene_from_json(j));
  }
  return out;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<SceneRecord>& scenes) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write " + path.string());
  os << to_jsonl(scenes);
}

std::vector<SceneRecord> read_jsonl(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot read " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_jsonl(ss.str());
}

}  // namespace nocap::data
