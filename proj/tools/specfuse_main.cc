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

// Command-line driver: specfuse run|sweep|freerider|layerwise --config <path>
//   --out <dir> [--seeds a,b,c] [--workers k]

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "specfuse/config.h"
#include "specfuse/errors.h"
#include "specfuse/report.h"

int main(int argc, char** argv) {
  CLI::App app{"Data-free client contribution estimation for federated learning"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::vector<std::uint64_t> seeds;
  int workers = 0;

  for (const char* name : {"run", "sweep", "freerider", "layerwise"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "Configuration file")->required();
    sub->add_option("--out", out_dir,
                    "Output directory (default: $SPECFUSE_OUT_DIR or ./specfuse-out)");
    sub->add_option("--seeds", seeds, "Comma-separated seed list")->delimiter(',');
    sub->add_option("--workers", workers, "Concurrent client trainers");
  }

  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();

  specfuse::cli::ExperimentConfig config;
  try {
    config = specfuse::cli::parse_config(config_path);
  } catch (const specfuse::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  if (!seeds.empty()) config.seeds = seeds;
  if (workers > 0) config.federation.workers = workers;

  return specfuse::cli::run_command(command, config,
                                    specfuse::cli::resolve_out_dir(out_dir),
                                    std::cerr);
}
