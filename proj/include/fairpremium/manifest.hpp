//
// Copyright 2026 The Fairpremium Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#ifndef FAIRPREMIUM_MANIFEST_HPP_
#define FAIRPREMIUM_MANIFEST_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace fairpremium {

// FNV-1a 64-bit digest of a byte string / file, hex encoded.  Used to make
// run outputs comparable across reruns.
std::uint64_t fnv1a64(const std::string& bytes);
std::string file_digest(const std::string& path);

// Build-up of the per-run manifest: the exact command line, the resolved
// configuration, every seed consumed and every output file with its content
// digest.  Reruns with the same configuration must reproduce the digests.
class RunManifest {
 public:
  RunManifest(std::string command, std::vector<std::string> args);

  void set_config(const nlohmann::json& config);
  void add_seed(const std::string& name, std::uint64_t seed);
  void add_output(const std::string& path);

  nlohmann::json to_json() const;
  void write(const std::string& path) const;

 private:
  std::string command_;
  std::vector<std::string> args_;
  std::string config_;  // serialized json
  std::vector<std::pair<std::string, std::uint64_t>> seeds_;
  std::vector<std::string> outputs_;
};

}  // namespace fairpremium

#endif  // FAIRPREMIUM_MANIFEST_HPP_
