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

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "nocap/numerics/tensor.hpp"

namespace nocap::num {

// Ordered (name, parameter) view over a model's tensors.
using NamedParams = std::vector<std::pair<std::string, Tensor*>>;
using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

// Binary layout, all integers and reals little-endian:
//   "NOCAPCK1" | u64 count | count x { u32 name_len | name | u32 rank |
//   rank x u64 dim | size x f64 }
std::string serialize_checkpoint(const NamedParams& params);
NamedTensors deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const NamedParams& params);
NamedTensors load_checkpoint(const std::filesystem::path& path);
// Copies stored values into `params`, matching by name and shape.
void restore_checkpoint(const NamedTensors& stored, const NamedParams& params);

// Hex SHA-1 of "blob <len>\0" + bytes, as `git hash-object` computes it.
std::string content_hash(const std::string& bytes);

}  // namespace nocap::num
