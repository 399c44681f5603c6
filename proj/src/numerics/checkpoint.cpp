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

#include "nocap/numerics/checkpoint.hpp"

#include <openssl/sha.h>

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <unordered_map>

#include "nocap/error.hpp"

namespace nocap::num {
namespace {

constexpr char kMagic[8] = {'N', 'O', 'C', 'A', 'P', 'C', 'K', '1'};

template <typename T>
void put(std::string& out, T value) {
  static_assert(std::is_integral_v<T>);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xFF));
  }
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(T);
    return static_cast<T>(v);
  }

  std::string take(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw ValidationError("checkpoint truncated");
  }
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_checkpoint(const NamedParams& params) {
  std::string out(kMagic, sizeof(kMagic));
  put<std::uint64_t>(out, params.size());
  for (const auto& [name, tensor] : params) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put<std::uint32_t>(out, static_cast<std::uint32_t>(tensor->rank()));
    for (std::size_t d : tensor->shape()) put<std::uint64_t>(out, d);
    for (double x : tensor->data()) put<std::uint64_t>(out, std::bit_cast<std::uint64_t>(x));
  }
  return out;
}

NamedTensors deserialize_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  if (r.take(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) throw ValidationError("not a nocap checkpoint");
  const auto count = r.get<std::uint64_t>();
  NamedTensors out;
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string name = r.take(r.get<std::uint32_t>());
    const auto rank = r.get<std::uint32_t>();
    Shape shape(rank);
    for (auto& d : shape) d = r.get<std::uint64_t>();
    std::vector<double> data(shape_size(shape));
    for (double& x : data) x = std::bit_cast<double>(r.get<std::uint64_t>());
    out.emplace_back(std::move(name), Tensor(std::move(shape), std::move(data)));
  }
  if (!r.done()) throw ValidationError("trailing bytes after checkpoint");
  return out;
}

void save_checkpoint(const std::filesystem::path& path, const NamedParams& params) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write checkpoint " + path.string());
  const std::string bytes = serialize_checkpoint(params);
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

NamedTensors load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot read checkpoint " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return deserialize_checkpoint(ss.str());
}

void restore_checkpoint(const NamedTensors& stored, const NamedParams& params) {
  std::unordered_map<std::string, const Tensor*> by_name;
  for (const auto& [name, t] : stored) by_name.emplace(name, &t);
  for (const auto& [name, target] : params) {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw ValidationError("checkpoint lacks parameter " + name);
    if (it->second->shape() != target->shape()) {
      throw DimensionError("checkpoint shape mismatch for " + name + ": " + shape_string(it->second->shape()) +
                           " vs " + shape_string(target->shape()));
    }
    std::copy(it->second->data().begin(), it->second->data().end(), target->data().begin());
  }
}

std::string content_hash(const std::string& bytes) {
  const std::string blob = "blob " + std::to_string(bytes.size()) + '\0' + bytes;
  unsigned char digest[SHA_DIGEST_LENGTH];
  SHA1(reinterpret_cast<const unsigned char*>(blob.data()), blob.size(), digest);
  std::ostringstream os;
  for (unsigned char c : digest) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(c);
  return os.str();
}

}  // namespace nocap::num
