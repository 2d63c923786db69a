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

#include "specfuse/report.h"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

#include "specfuse/errors.h"

namespace specfuse::cli {

namespace fs = std::filesystem;
using federation::RoundRecord;
using nlohmann::json;

namespace {

std::ofstream OpenForWrite(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

void WriteText(const fs::path& path, const std::string& text) {
  auto out = OpenForWrite(path);
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

PhaseStats Stats(std::span<const double> v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

json ConfigEcho(const ExperimentConfig& config) {
  json echo = json::object();
  std::stringstream in(serialize_config(config));
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find(" = ");
    echo[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return echo;
}

struct Manifest {
  json doc;
  fs::path path;

  void Save() const { WriteText(path, doc.dump(2) + "\n"); }
};

Manifest StartManifest(const std::string& command,
                       const ExperimentConfig& config, const fs::path& out_dir,
                       const std::vector<std::string>& outputs) {
  Manifest m;
  m.path = out_dir / "manifest.json";
  m.doc["tool"] = "specfuse";
  m.doc["version"] = kToolVersion;
  m.doc["command"] = command;
  m.doc["config"] = ConfigEcho(config);
  m.doc["seeds"] = config.EffectiveSeeds();
  m.doc["outputs"] = outputs;
  m.doc["runs"] = json::array();
  m.Save();
  return m;
}

json RunTimings(std::uint64_t seed, const federation::RunResult& result) {
  json run;
  run["seed"] = seed;
  run["final_accuracy"] = result.final_accuracy;
  run["standalone_accuracy"] = result.standalone_accuracy;
  run["shard_sizes"] = result.shard_sizes;
  json rounds = json::array();
  for (const auto& t : result.timings) {
    rounds.push_back({{"scoring_ms", t.scoring_ms},
                      {"fusion_ms", t.fusion_ms},
                      {"aggregation_ms", t.aggregation_ms}});
  }
  run["round_timings_ms"] = rounds;
  if (result.timings.size() >= 2) {
    run["timing_report"] = to_json(timing_report(result.timings));
  }
  return run;
}

fs::path SeedDir(const fs::path& out_dir, std::uint64_t seed, bool multi) {
  return multi ? out_dir / ("seed-" + std::to_string(seed)) : out_dir;
}

int CommandRun(const ExperimentConfig& config, const fs::path& out_dir) {
  const auto seeds = config.EffectiveSeeds();
  const bool multi = seeds.size() > 1;
  std::vector<std::string> outputs;
  for (auto seed : seeds) {
    const fs::path dir = SeedDir(out_dir, seed, multi);
    outputs.push_back((dir / "rounds.jsonl").string());
    outputs.push_back((dir / "summary.csv").string());
  }
  Manifest manifest = StartManifest("run", config, out_dir, outputs);

  for (auto seed : seeds) {
    const fs::path dir = SeedDir(out_dir, seed, multi);
    fs::create_directories(dir);
    federation::FederationConfig cfg = config.federation;
    cfg.seed = seed;
    const auto result = federation::run_experiment(cfg);
    write_rounds_jsonl(dir / "rounds.jsonl", result.rounds);
    auto csv = OpenForWrite(dir / "summary.csv");
    write_summary_csv(csv, result.rounds);
    manifest.doc["runs"].push_back(RunTimings(seed, result));
  }
  manifest.Save();
  return 0;
}

int CommandSweep(const ExperimentConfig& config, const fs::path& out_dir) {
  Manifest manifest = StartManifest("sweep", config, out_dir,
                                    {(out_dir / "grid.csv").string()});
  const auto seeds = config.EffectiveSeeds();
  const auto grid = analysis::sweep(config.federation, config.sweep_q,
                                    config.sweep_epsilon, seeds);
  auto csv = OpenForWrite(out_dir / "grid.csv");
  write_grid_csv(csv, grid);
  manifest.doc["spread"] = grid.Spread();
  manifest.Save();
  return 0;
}

int CommandFreeRider(const ExperimentConfig& config, const fs::path& out_dir) {
  ExperimentConfig cfg = config;
  if (!cfg.federation.free_rider) {
    cfg.federation.free_rider =
        federation::FreeRiderSpec{cfg.federation.n_clients - 1, 0};
  }
  const auto free_rider = static_cast<std::size_t>(cfg.federation.free_rider->client);
  Manifest manifest = StartManifest("freerider", cfg, out_dir,
                                    {(out_dir / "detection.csv").string()});
  const auto intervals =
      analysis::equal_intervals(cfg.federation.rounds, cfg.detection_intervals);

  std::ostringstream csv;
  csv << "seed,interval_start,interval_end,client,free_rider,flag_rate\n";
  for (auto seed : cfg.EffectiveSeeds()) {
    federation::FederationConfig fed = cfg.federation;
    fed.seed = seed;
    const auto result = federation::run_experiment(fed);
    const auto rates = analysis::detection_rate(result.rounds, free_rider,
                                                intervals, cfg.flag_threshold);
    for (const auto& r : rates) {
      for (std::size_t i = 0; i < r.flag_rate.size(); ++i) {
        csv << seed << ',' << r.interval.start << ',' << r.interval.end << ','
            << i << ',' << (i == free_rider ? 1 : 0) << ','
            << FormatDouble(r.flag_rate[i]) << '\n';
      }
    }
    manifest.doc["runs"].push_back(RunTimings(seed, result));
  }
  WriteText(out_dir / "detection.csv", csv.str());
  manifest.Save();
  return 0;
}

int CommandLayerwise(const ExperimentConfig& config, const fs::path& out_dir) {
  Manifest manifest = StartManifest("layerwise", config, out_dir,
                                    {(out_dir / "layers.csv").string()});
  const auto seeds = config.EffectiveSeeds();
  const auto study = analysis::layerwise_entropy_study(config.federation, seeds);
  auto csv = OpenForWrite(out_dir / "layers.csv");
  write_layers_csv(csv, study);
  manifest.Save();
  return 0;
}

}  // namespace

json to_json(const RoundRecord& r) {
  return json{{"round", r.round},
              {"raw_entropy", r.raw_entropy},
              {"raw_cssv", r.raw_cssv},
              {"raw_cgsv", r.raw_cgsv},
              {"smoothed_entropy", r.smoothed_entropy},
              {"smoothed_cssv", r.smoothed_cssv},
              {"smoothed_cgsv", r.smoothed_cgsv},
              {"fused", r.fused},
              {"weights", r.weights},
              {"global_accuracy", r.global_accuracy},
              {"pearson", r.pearson},
              {"spearman", r.spearman}};
}

RoundRecord round_record_from_json(const json& j) {
  RoundRecord r;
  j.at("round").get_to(r.round);
  j.at("raw_entropy").get_to(r.raw_entropy);
  j.at("raw_cssv").get_to(r.raw_cssv);
  j.at("raw_cgsv").get_to(r.raw_cgsv);
  j.at("smoothed_entropy").get_to(r.smoothed_entropy);
  j.at("smoothed_cssv").get_to(r.smoothed_cssv);
  j.at("smoothed_cgsv").get_to(r.smoothed_cgsv);
  j.at("fused").get_to(r.fused);
  j.at("weights").get_to(r.weights);
  j.at("global_accuracy").get_to(r.global_accuracy);
  j.at("pearson").get_to(r.pearson);
  j.at("spearman").get_to(r.spearman);
  return r;
}

void write_rounds_jsonl(const fs::path& path, std::span<const RoundRecord> log) {
  auto out = OpenForWrite(path);
  for (const auto& r : log) out << to_json(r).dump() << '\n';
  if (!out) throw Error("failed writing " + path.string());
}

std::vector<RoundRecord> read_rounds_jsonl(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot read " + path.string());
  std::vector<RoundRecord> log;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    log.push_back(round_record_from_json(json::parse(line)));
  }
  return log;
}

void write_summary_csv(std::ostream& out, std::span<const RoundRecord> log) {
  const std::size_t n = log.empty() ? 0 : log.front().weights.size();
  out << "round";
  for (std::size_t i = 0; i < n; ++i) out << ",weight_" << i;
  out << ",pearson,spearman,global_acc\n";
  for (const auto& r : log) {
    out << r.round;
    for (double w : r.weights) out << ',' << FormatDouble(w);
    out << ',' << FormatDouble(r.pearson) << ',' << FormatDouble(r.spearman)
        << ',' << FormatDouble(r.global_accuracy) << '\n';
  }
}

void write_grid_csv(std::ostream& out, const analysis::SweepGrid& grid) {
  out << "split,q,epsilon,seeds,mean_pearson\n";
  for (std::size_t qi = 0; qi < grid.q_values.size(); ++qi) {
    for (std::size_t ei = 0; ei < grid.epsilon_values.size(); ++ei) {
      out << grid.split << ',' << FormatDouble(grid.q_values[qi]) << ','
          << FormatDouble(grid.epsilon_values[ei]) << ',' << grid.seeds.size()
          << ',' << FormatDouble(grid.cells[qi][ei]) << '\n';
    }
  }
}

void write_layers_csv(std::ostream& out, const analysis::LayerStudy& study) {
  out << "layer,rows,cols,mean_pearson,best_in_seeds\n";
  for (const auto& l : study.layers) {
    std::size_t wins = 0;
    for (std::size_t b : study.best_layer_per_seed) wins += b == l.layer;
    out << l.layer << ',' << l.rows << ',' << l.cols << ','
        << FormatDouble(l.mean_pearson) << ',' << wins << '\n';
  }
}

TimingReport timing_report(std::span<const federation::PhaseTiming> timings) {
  if (timings.size() < 2) {
    throw InsufficientDataError("timing_report: need at least 2 rounds");
  }
  std::vector<double> s, f, a, t;
  for (const auto& p : timings) {
    s.push_back(p.scoring_ms);
    f.push_back(p.fusion_ms);
    a.push_back(p.aggregation_ms);
    t.push_back(p.scoring_ms + p.fusion_ms + p.aggregation_ms);
  }
  return {Stats(s), Stats(f), Stats(a), Stats(t)};
}

json to_json(const TimingReport& report) {
  auto stats = [](const PhaseStats& p) {
    return json{{"mean_ms", p.mean_ms}, {"std_ms", p.std_ms}};
  };
  return json{{"scoring", stats(report.scoring)},
              {"fusion", stats(report.fusion)},
              {"aggregation", stats(report.aggregation)},
              {"total", stats(report.total)}};
}

fs::path resolve_out_dir(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
  return "specfuse-out";
}

int run_command(const std::string& subcommand, const ExperimentConfig& config,
                const fs::path& out_dir, std::ostream& err) {
  try {
    config.Validate();
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec || !fs::is_directory(out_dir)) {
      err << "error: cannot create output directory " << out_dir.string()
          << '\n';
      return 2;
    }
    if (subcommand == "run") return CommandRun(config, out_dir);
    if (subcommand == "sweep") return CommandSweep(config, out_dir);
    if (subcommand == "freerider") return CommandFreeRider(config, out_dir);
    if (subcommand == "layerwise") return CommandLayerwise(config, out_dir);
    err << "error: unknown subcommand '" << subcommand << "'\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace specfuse::cli
