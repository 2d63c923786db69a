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

#include "specfuse/config.h"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <system_error>

#include "specfuse/errors.h"

namespace specfuse::cli {

namespace {

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> SplitList(const std::string& s) {
  std::vector<std::string> out;
  if (Trim(s).empty()) return out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(Trim(item));
  return out;
}

template <typename T>
T ParseNumber(const std::string& key, const std::string& text) {
  T value{};
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw ConfigError(key, "invalid value '" + text + "'");
  }
  return value;
}

int ParseInt(const std::string& key, const std::string& v) {
  return ParseNumber<int>(key, v);
}
double ParseDouble(const std::string& key, const std::string& v) {
  return ParseNumber<double>(key, v);
}
std::uint64_t ParseU64(const std::string& key, const std::string& v) {
  return ParseNumber<std::uint64_t>(key, v);
}

template <typename T, typename F>
std::string JoinList(const std::vector<T>& values, F format) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ",";
    out += format(values[i]);
  }
  return out;
}

struct Field {
  std::string key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  // Optional fields are omitted from serialisation when unset.
  std::function<bool(const ExperimentConfig&)> present = nullptr;
};

std::string Str(int v) { return std::to_string(v); }
std::string Str(std::uint64_t v) { return std::to_string(v); }

const std::vector<Field>& Fields() {
  using federation::FederationConfig;
  static const std::vector<Field> fields = [] {
    std::vector<Field> f;
    auto fed = [](ExperimentConfig& c) -> FederationConfig& { return c.federation; };

    f.push_back({"clients",
                 [](const auto& c) { return Str(c.federation.n_clients); },
                 [=](auto& c, const auto& v) { fed(c).n_clients = ParseInt("clients", v); }});
    f.push_back({"rounds",
                 [](const auto& c) { return Str(c.federation.rounds); },
                 [=](auto& c, const auto& v) { fed(c).rounds = ParseInt("rounds", v); }});
    f.push_back({"seed",
                 [](const auto& c) { return Str(c.federation.seed); },
                 [=](auto& c, const auto& v) { fed(c).seed = ParseU64("seed", v); }});
    f.push_back({"seeds",
                 [](const auto& c) {
                   return JoinList(c.seeds, [](std::uint64_t s) { return Str(s); });
                 },
                 [](auto& c, const auto& v) {
                   c.seeds.clear();
                   for (const auto& s : SplitList(v)) c.seeds.push_back(ParseU64("seeds", s));
                 }});
    f.push_back({"workers",
                 [](const auto& c) { return Str(c.federation.workers); },
                 [=](auto& c, const auto& v) { fed(c).workers = ParseInt("workers", v); }});
    f.push_back({"strategy",
                 [](const auto& c) { return federation::StrategyName(c.federation.strategy); },
                 [=](auto& c, const auto& v) { fed(c).strategy = federation::ParseStrategy(v); }});
    f.push_back({"weight_floor",
                 [](const auto& c) { return FormatDouble(c.federation.weight_floor); },
                 [=](auto& c, const auto& v) { fed(c).weight_floor = ParseDouble("weight_floor", v); }});
    f.push_back({"train.epochs",
                 [](const auto& c) { return Str(c.federation.train.local_epochs); },
                 [=](auto& c, const auto& v) { fed(c).train.local_epochs = ParseInt("train.epochs", v); }});
    f.push_back({"train.batch_size",
                 [](const auto& c) { return Str(c.federation.train.batch_size); },
                 [=](auto& c, const auto& v) { fed(c).train.batch_size = ParseInt("train.batch_size", v); }});
    f.push_back({"train.lr_initial",
                 [](const auto& c) { return FormatDouble(c.federation.train.lr_initial); },
                 [=](auto& c, const auto& v) { fed(c).train.lr_initial = ParseDouble("train.lr_initial", v); }});
    f.push_back({"train.lr_final",
                 [](const auto& c) { return FormatDouble(c.federation.train.lr_final); },
                 [=](auto& c, const auto& v) { fed(c).train.lr_final = ParseDouble("train.lr_final", v); }});
    f.push_back({"model.hidden",
                 [](const auto& c) {
                   return JoinList(c.federation.hidden, [](int h) { return Str(h); });
                 },
                 [=](auto& c, const auto& v) {
                   fed(c).hidden.clear();
                   for (const auto& h : SplitList(v)) fed(c).hidden.push_back(ParseInt("model.hidden", h));
                 }});
    f.push_back({"partition.kind",
                 [](const auto& c) { return data::PartitionKindName(c.federation.partition); },
                 [=](auto& c, const auto& v) { fed(c).partition = data::ParsePartitionKind(v); }});
    f.push_back({"partition.alpha",
                 [](const auto& c) { return FormatDouble(c.federation.dirichlet_alpha); },
                 [=](auto& c, const auto& v) { fed(c).dirichlet_alpha = ParseDouble("partition.alpha", v); }});
    f.push_back({"data.classes",
                 [](const auto& c) { return Str(c.federation.data.classes); },
                 [=](auto& c, const auto& v) { fed(c).data.classes = ParseInt("data.classes", v); }});
    f.push_back({"data.features",
                 [](const auto& c) { return Str(c.federation.data.features); },
                 [=](auto& c, const auto& v) { fed(c).data.features = ParseInt("data.features", v); }});
    f.push_back({"data.per_class",
                 [](const auto& c) { return Str(c.federation.data.per_class); },
                 [=](auto& c, const auto& v) { fed(c).data.per_class = ParseInt("data.per_class", v); }});
    f.push_back({"data.separation",
                 [](const auto& c) { return FormatDouble(c.federation.data.separation); },
                 [=](auto& c, const auto& v) { fed(c).data.separation = ParseDouble("data.separation", v); }});
    f.push_back({"data.test_fraction",
                 [](const auto& c) { return FormatDouble(c.federation.data.test_fraction); },
                 [=](auto& c, const auto& v) { fed(c).data.test_fraction = ParseDouble("data.test_fraction", v); }});
    f.push_back({"data.idx_images",
                 [](const auto& c) { return c.federation.data.idx_images; },
                 [=](auto& c, const auto& v) { fed(c).data.idx_images = v; }});
    f.push_back({"data.idx_labels",
                 [](const auto& c) { return c.federation.data.idx_labels; },
                 [=](auto& c, const auto& v) { fed(c).data.idx_labels = v; }});
    f.push_back({"scoring.entropy_mode",
                 [](const auto& c) { return scoring::EntropyModeName(c.federation.entropy_mode); },
                 [=](auto& c, const auto& v) { fed(c).entropy_mode = scoring::ParseEntropyMode(v); }});
    f.push_back({"scoring.momentum",
                 [](const auto& c) { return FormatDouble(c.federation.momentum); },
                 [=](auto& c, const auto& v) { fed(c).momentum = ParseDouble("scoring.momentum", v); }});
    f.push_back({"fusion.q",
                 [](const auto& c) { return FormatDouble(c.federation.filter.process_noise); },
                 [=](auto& c, const auto& v) { fed(c).filter.process_noise = ParseDouble("fusion.q", v); }});
    f.push_back({"fusion.epsilon",
                 [](const auto& c) { return FormatDouble(c.federation.filter.noise_floor); },
                 [=](auto& c, const auto& v) { fed(c).filter.noise_floor = ParseDouble("fusion.epsilon", v); }});
    f.push_back({"fusion.p0",
                 [](const auto& c) { return FormatDouble(c.federation.filter.initial_variance); },
                 [=](auto& c, const auto& v) { fed(c).filter.initial_variance = ParseDouble("fusion.p0", v); }});
    f.push_back({"free_rider.client",
                 [](const auto& c) { return Str(c.federation.free_rider->client); },
                 [=](auto& c, const auto& v) {
                   if (!fed(c).free_rider) fed(c).free_rider.emplace();
                   fed(c).free_rider->client = ParseInt("free_rider.client", v);
                 },
                 [](const auto& c) { return c.federation.free_rider.has_value(); }});
    f.push_back({"free_rider.pool_size",
                 [](const auto& c) { return Str(static_cast<std::uint64_t>(c.federation.free_rider->pool_size)); },
                 [=](auto& c, const auto& v) {
                   if (!fed(c).free_rider) fed(c).free_rider.emplace();
                   fed(c).free_rider->pool_size = ParseU64("free_rider.pool_size", v);
                 },
                 [](const auto& c) { return c.federation.free_rider.has_value(); }});
    f.push_back({"sweep.q",
                 [](const auto& c) { return JoinList(c.sweep_q, FormatDouble); },
                 [](auto& c, const auto& v) {
                   c.sweep_q.clear();
                   for (const auto& s : SplitList(v)) c.sweep_q.push_back(ParseDouble("sweep.q", s));
                 }});
    f.push_back({"sweep.epsilon",
                 [](const auto& c) { return JoinList(c.sweep_epsilon, FormatDouble); },
                 [](auto& c, const auto& v) {
                   c.sweep_epsilon.clear();
                   for (const auto& s : SplitList(v)) c.sweep_epsilon.push_back(ParseDouble("sweep.epsilon", s));
                 }});
    f.push_back({"detection.threshold",
                 [](const auto& c) { return FormatDouble(c.flag_threshold); },
                 [](auto& c, const auto& v) { c.flag_threshold = ParseDouble("detection.threshold", v); }});
    f.push_back({"detection.intervals",
                 [](const auto& c) { return Str(c.detection_intervals); },
                 [](auto& c, const auto& v) { c.detection_intervals = ParseInt("detection.intervals", v); }});
    return f;
  }();
  return fields;
}

}  // namespace

std::string FormatDouble(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::vector<std::uint64_t> ExperimentConfig::EffectiveSeeds() const {
  if (seeds.empty()) return {federation.seed};
  return seeds;
}

void ExperimentConfig::Validate() const {
  federation.Validate();
  if (sweep_q.empty()) throw ConfigError("sweep.q", "must not be empty");
  if (sweep_epsilon.empty()) {
    throw ConfigError("sweep.epsilon", "must not be empty");
  }
  for (double q : sweep_q) {
    if (!(q > 0.0)) throw ConfigError("sweep.q", "values must be positive");
  }
  for (double e : sweep_epsilon) {
    if (!(e > 0.0)) throw ConfigError("sweep.epsilon", "values must be positive");
  }
  if (!(flag_threshold > 0.0)) {
    throw ConfigError("detection.threshold", "must be positive");
  }
  if (detection_intervals < 1 || detection_intervals > federation.rounds) {
    throw ConfigError("detection.intervals", "must lie in [1, rounds]");
  }
}

ExperimentConfig parse_config_text(const std::string& text) {
  std::map<std::string, const Field*> by_key;
  for (const Field& f : Fields()) by_key[f.key] = &f;

  ExperimentConfig config;
  std::set<std::string> seen;
  std::stringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("", "line " + std::to_string(line_no) +
                                ": expected 'key = value'");
    }
    const std::string key = Trim(line.substr(0, eq));
    const std::string value = Trim(line.substr(eq + 1));
    const auto it = by_key.find(key);
    if (it == by_key.end()) throw ConfigError(key, "unknown key");
    if (!seen.insert(key).second) throw ConfigError(key, "repeated key");
    it->second->set(config, value);
  }
  config.Validate();
  return config;
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::string serialize_config(const ExperimentConfig& config) {
  std::string out;
  for (const Field& f : Fields()) {
    if (f.present && !f.present(config)) continue;
    out += f.key + " = " + f.get(config) + "\n";
  }
  return out;
}

}  // namespace specfuse::cli
