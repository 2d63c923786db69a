/*
 * Copyright 2026 The specfuse Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef SPECFUSE_CONFIG_H_
#define SPECFUSE_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "specfuse/federation.h"

namespace specfuse::cli {

// Everything a command needs: the federation itself plus analysis knobs.
struct ExperimentConfig {
  federation::FederationConfig federation;
  std::vector<std::uint64_t> seeds;  // empty: {federation.seed}
  std::vector<double> sweep_q = {1e-6, 1e-4, 1e-2};
  std::vector<double> sweep_epsilon = {1e-4, 1e-3, 1e-2};
  double flag_threshold = 2.5;
  int detection_intervals = 4;

  std::vector<std::uint64_t> EffectiveSeeds() const;
  void Validate() const;

  friend bool operator==(const ExperimentConfig&,
                         const ExperimentConfig&) = default;
};

// Flat `key = value` text; '#' starts a comment; blank lines ignored.
// Lists are comma separated. Unknown or repeated keys are errors.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config(const std::filesystem::path& path);

// Every key, one per line, in a fixed order. Parsing the output yields an
// equal config.
std::string serialize_config(const ExperimentConfig& config);

// Shortest decimal text that parses back to the same double.
std::string FormatDouble(double v);

}  // namespace specfuse::cli

#endif  // SPECFUSE_CONFIG_H_
