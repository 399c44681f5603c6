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

#include <map>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "nocap/text.hpp"

namespace nocap::testing {

inline std::vector<std::pair<std::string, std::vector<std::string>>> toy_corpus() {
  return {
      {"a dog runs on the grass", {"a dog runs on the grass", "a brown dog on grass"}},
      {"a cat sits on a couch", {"a cat on a sofa", "a small cat sits on the couch"}},
      {"two zebras stand near a bus", {"two zebras near a red bus", "zebras stand by a bus"}},
      {"a man holds a racket", {"a person holding a tennis racket", "a man with a racket"}},
      {"a pizza on a table", {"a pizza sits on a wooden table", "a table with a pizza"}},
  };
}

// pycocoevalcap CIDEr-D (sigma 6, clipped, IDF over the five reference sets)
// on toy_corpus().
inline const std::vector<double> kToyCiderD = {5.7946862422551524, 2.73343008730824, 2.8782663455834174,
                                               1.988247626829005, 3.2078896867007503};
inline constexpr double kToyCiderDMean = 3.320503997735313;

inline SynonymTable f1_synonyms() {
  return SynonymTable(std::map<std::string, std::vector<std::string>>{
      {"zebra", {"zebras"}}, {"couch", {"couches", "sofa"}}, {"bus", {"buses"}}});
}

// Hand-labelled records: generated caption and two references.
inline std::vector<std::tuple<std::string, std::string, std::string>> f1_rows() {
  return {
      {"a zebra on grass", "a zebra grazing", "grass field"},
      {"two zebras near a bus", "zebras and a bus", "a bus stop"},
      {"a dog on a sofa", "a dog on a couch", "a dog resting"},
      {"a cat", "a cat on a couch", "a cat sleeping"},
      {"a red bus", "a man walking", "a street"},
      {"a couch in a room", "a living room", "an empty room"},
      {"a zebra", "a horse", "a pony in a field"},
      {"buses on the street", "two buses parked", "a street with buses"},
      {"a bus", "a bus", "a bus"},
      {"a table", "a zebra statue", "a table"},
      {"a couches store", "couches for sale", "a shop"},
      {"a zebra and a couch", "a zebra beside a sofa", "a striped animal"},
      {"nothing here", "a bus and a zebra", "zebras crossing"},
      {"a sofa", "a sofa", "a couch"},
      {"a bus near zebras", "a bus", "a road"},
      {"a pizza", "a pizza on a couch", "food"},
      {"a tree", "a tree", "a tree"},
      {"a zebra", "a zebra", "zebras"},
      {"a bus", "a truck", "a lorry"},
      {"a couch", "a bed", "a bedroom"},
  };
}

// Counted by reading f1_rows():
//   zebra: tp = rows 0,1,11,17; fp = 6,14; fn = 9,12
//   bus:   tp = 1,7,8,14; fp = 4,18; fn = 12
//   couch: tp = 2,10,11,13; fp = 5,19; fn = 3,15
struct F1Want {
  std::string cls;
  std::size_t tp, fp, fn;
};
inline const std::vector<F1Want> kF1Want = {{"zebra", 4, 2, 2}, {"bus", 4, 2, 1}, {"couch", 4, 2, 2}};

}  // namespace nocap::testing
