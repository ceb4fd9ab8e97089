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

#include "fairpremium/manifest.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <utility>

#include <nlohmann/json.hpp>

#include "fairpremium/errors.hpp"

namespace fairpremium {

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    hash ^= static_cast<std::uint64_t>(c);
    hash *= 0x100000001b3ull;
  }
  return hash;
}

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file for digest: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  char hex[32];
  std::snprintf(hex, sizeof(hex), "fnv1a64:%016llx",
                static_cast<unsigned long long>(fnv1a64(buffer.str())));
  return hex;
}

RunManifest::RunManifest(std::string command, std::vector<std::string> args)
    : command_(std::move(command)), args_(std::move(args)) {}

void RunManifest::set_config(const nlohmann::json& config) {
  config_ = config.dump();
}

void RunManifest::add_seed(const std::string& name, std::uint64_t seed) {
  seeds_.emplace_back(name, seed);
}

void RunManifest::add_output(const std::string& path) {
  outputs_.push_back(path);
}

nlohmann::json RunManifest::to_json() const {
  nlohmann::json manifest;
  manifest["command"] = command_;
  manifest["args"] = args_;
  manifest["config"] = config_.empty()
                           ? nlohmann::json::object()
                           : nlohmann::json::parse(config_);
  manifest["seeds"] = nlohmann::json::array();
  for (const auto& [name, seed] : seeds_) {
    manifest["seeds"].push_back({{"name", name}, {"value", seed}});
  }
  manifest["outputs"] = nlohmann::json::array();
  for (const std::string& path : outputs_) {
    manifest["outputs"].push_back({{"path", path},
                                   {"digest", file_digest(path)}});
  }
  return manifest;
}

void RunManifest::write(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write manifest: " + path);
  out << to_json().dump(2) << '\n';
  if (!out) throw ValidationError("failed writing manifest: " + path);
}

}  // namespace fairpremium
