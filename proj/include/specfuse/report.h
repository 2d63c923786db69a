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

#ifndef SPECFUSE_REPORT_H_
#define SPECFUSE_REPORT_H_

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "specfuse/analysis.h"
#include "specfuse/config.h"
#include "specfuse/federation.h"
#include "json.hpp"

namespace specfuse::cli {

inline constexpr const char* kToolVersion = "0.3.0";
// Overrides the default output directory when --out is not given.
inline constexpr const char* kOutDirEnv = "SPECFUSE_OUT_DIR";

nlohmann::json to_json(const federation::RoundRecord& record);
federation::RoundRecord round_record_from_json(const nlohmann::json& j);

// One JSON object per line.
void write_rounds_jsonl(const std::filesystem::path& path,
                        std::span<const federation::RoundRecord> log);
std::vector<federation::RoundRecord> read_rounds_jsonl(
    const std::filesystem::path& path);

// round, weight_0..weight_{n-1}, pearson, spearman, global_acc
void write_summary_csv(std::ostream& out,
                       std::span<const federation::RoundRecord> log);
void write_grid_csv(std::ostream& out, const analysis::SweepGrid& grid);
void write_layers_csv(std::ostream& out, const analysis::LayerStudy& study);

struct PhaseStats {
  double mean_ms = 0.0;
  double std_ms = 0.0;  // sample standard deviation
};

struct TimingReport {
  PhaseStats scoring;
  PhaseStats fusion;
  PhaseStats aggregation;
  PhaseStats total;
};

// Server-side phase timings over rounds; needs at least two rounds.
TimingReport timing_report(std::span<const federation::PhaseTiming> timings);
nlohmann::json to_json(const TimingReport& report);

// Executes run | sweep | freerider | layerwise and writes its outputs into
// `out_dir`. Returns the process exit status; errors are reported on `err`.
int run_command(const std::string& subcommand, const ExperimentConfig& config,
                const std::filesystem::path& out_dir, std::ostream& err);

// --out if given, else $SPECFUSE_OUT_DIR, else ./specfuse-out.
std::filesystem::path resolve_out_dir(const std::string& flag_value);

}  // namespace specfuse::cli

#endif  // SPECFUSE_REPORT_H_
