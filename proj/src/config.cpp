/**
 * Copyright 2026 The HetFed Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "hetfed/config.hpp"

#include <yaml-cpp/yaml.h>

#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

#include "hetfed/errors.hpp"

namespace hetfed {
namespace {

template <typename E>
using NameTable = std::vector<std::pair<E, const char *>>;

const NameTable<PartitionScheme> kPartitionNames{{PartitionScheme::kIid, "iid"},
                                                 {PartitionScheme::kDirichlet, "dirichlet"}};
const NameTable<DistillMode> kDistillModeNames{{DistillMode::kAggregateWeights, "aggregate_weights"},
                                               {DistillMode::kSharedGradient, "gradient"}};
const NameTable<nn::OptimizerKind> kOptimizerNames{{nn::OptimizerKind::kSgdMomentum, "sgd"},
                                                   {nn::OptimizerKind::kAdam, "adam"}};
const NameTable<AggregationWeighting> kWeightingNames{
    {AggregationWeighting::kDataShare, "data_share"}, {AggregationWeighting::kUniform, "uniform"}};

template <typename E>
const char *name_of(const NameTable<E> &table, E value) {
  for (const auto &[v, name] : table) {
    if (v == value) return name;
  }
  throw ContractError("unnamed enum value");
}

std::size_t line_of(const YAML::Node &node) {
  const auto mark = node.Mark();
  return mark.is_null() ? 0 : static_cast<std::size_t>(mark.line) + 1;
}

std::string scalar_text(const YAML::Node &node) {
  if (!node.IsScalar()) return "<" + std::string(node.IsSequence() ? "list" : "map") + ">";
  return node.Scalar();
}

// A mapping node whose keys are checked off as they are read.
class Section {
 public:
  Section(YAML::Node node, std::string path, std::vector<std::string> *notices)
      : node_(std::move(node)), path_(std::move(path)), notices_(notices) {
    if (node_ && !node_.IsNull() && !node_.IsMap()) {
      throw ConfigError("'" + path_ + "' must be a mapping", line_of(node_));
    }
  }

  bool present() const { return node_ && node_.IsMap(); }
  bool has(const char *key) const { return present() && node_[key]; }

  template <typename T>
  void read(const char *key, T &out) {
    YAML::Node value = lookup(key);
    if (!value) {
      notice(key, describe(out));
      return;
    }
    out = convert<T>(value, key);
  }

  template <typename E>
  void read_enum(const char *key, E &out, const NameTable<E> &table) {
    YAML::Node value = lookup(key);
    if (!value) {
      notice(key, name_of(table, out));
      return;
    }
    const std::string text = convert<std::string>(value, key);
    for (const auto &[v, name] : table) {
      if (text == name) {
        out = v;
        return;
      }
    }
    throw ConfigError("unknown value '" + text + "' for '" + qualified(key) + "'", line_of(value));
  }

  Section child(const char *key) {
    YAML::Node value = lookup(key);
    if (!value) notice(key, "defaults");
    return Section(value, qualified(key), notices_);
  }

  YAML::Node raw(const char *key) { return lookup(key); }

  std::string qualified(const char *key) const {
    return path_.empty() ? std::string(key) : path_ + "." + key;
  }

  /// Rejects keys that were never read.
  void finish() const {
    if (!present()) return;
    for (const auto &kv : node_) {
      const std::string key = kv.first.as<std::string>();
      if (!seen_.count(key)) {
        throw ConfigError("unknown key '" + qualified(key.c_str()) + "'", line_of(kv.first));
      }
    }
  }

  template <typename T>
  T convert(const YAML::Node &value, const char *key) const {
    try {
      if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
        if (!value.IsScalar() || value.Scalar().starts_with('-')) throw YAML::BadConversion(value.Mark());
        return value.as<T>();
      } else if constexpr (std::is_same_v<T, std::vector<double>> ||
                           std::is_same_v<T, std::vector<std::size_t>> ||
                           std::is_same_v<T, std::vector<std::string>>) {
        if (!value.IsSequence()) throw YAML::BadConversion(value.Mark());
        T out;
        for (const auto &item : value) {
          out.push_back(convert<typename T::value_type>(item, key));
        }
        return out;
      } else {
        if (!value.IsScalar()) throw YAML::BadConversion(value.Mark());
        return value.as<T>();
      }
    } catch (const YAML::BadConversion &) {
      throw ConfigError("bad value '" + scalar_text(value) + "' for '" + qualified(key) + "'",
                        line_of(value));
    }
  }

 private:
  // Undefined node when absent (a default-constructed Node is a valid null).
  YAML::Node lookup(const char *key) {
    seen_.insert(key);
    YAML::Node value = present() ? node_[key] : YAML::Node(YAML::NodeType::Undefined);
    if (value && value.IsNull()) {
      throw ConfigError("'" + qualified(key) + "' has no value", line_of(value));
    }
    return value;
  }

  template <typename T>
  static std::string describe(const T &v) {
    std::ostringstream os;
    os.precision(17);
    if constexpr (std::is_same_v<T, bool>) {
      os << (v ? "true" : "false");
    } else if constexpr (std::is_same_v<T, std::vector<double>> ||
                         std::is_same_v<T, std::vector<std::size_t>>) {
      os << '[';
      for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
      os << ']';
    } else if constexpr (std::is_same_v<T, std::string>) {
      os << '"' << v << '"';
    } else {
      os << v;
    }
    return os.str();
  }

  void notice(const char *key, const std::string &value) const {
    if (notices_) notices_->push_back("'" + qualified(key) + "' not set, using " + value);
  }

  YAML::Node node_;
  std::string path_;
  std::vector<std::string> *notices_;
  std::set<std::string> seen_;
};

// yaml-cpp expands anchors and aliases silently; the format has none.
void reject_anchors(const std::string &text) {
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    bool quoted = false;
    char quote = 0;
    for (std::size_t i = 0; i < line.size(); ++i) {
      const char c = line[i];
      if (quoted) {
        if (c == quote) quoted = false;
        continue;
      }
      if (c == '"' || c == '\'') {
        quoted = true;
        quote = c;
        continue;
      }
      if (c == '#' && (i == 0 || line[i - 1] == ' ' || line[i - 1] == '\t')) break;
      if ((c == '&' || c == '*') &&
          (i == 0 || line[i - 1] == ' ' || line[i - 1] == '[' || line[i - 1] == ',')) {
        throw ConfigError("anchors and aliases are not supported", number);
      }
    }
  }
}

void read_limit(Section &limitation, const char *key, ResourceLimit &limit) {
  Section s = limitation.child(key);
  if (!s.present()) return;
  s.read("unit", limit.unit);
  if (s.has("log_path")) {
    for (const char *k : {"binary", "min", "max"}) {
      if (s.has(k)) {
        throw ConfigError("'" + s.qualified(k) + "' cannot be combined with log_path",
                          line_of(s.raw(k)));
      }
    }
    TraceLimit trace;
    YAML::Node paths = s.raw("log_path");
    if (paths.IsSequence()) {
      trace.log_paths = s.convert<std::vector<std::string>>(paths, "log_path");
    } else {
      trace.log_paths.push_back(s.convert<std::string>(paths, "log_path"));
    }
    if (s.has("phase_offset_s")) s.read("phase_offset_s", trace.phase_offset_s);
    limit.source = std::move(trace);
  } else {
    RangeLimit range = std::holds_alternative<RangeLimit>(limit.source)
                           ? std::get<RangeLimit>(limit.source)
                           : RangeLimit{};
    s.read("binary", range.binary);
    s.read("min", range.min);
    s.read("max", range.max);
    limit.source = range;
  }
  s.finish();
}

}  // namespace

LoadedConfig parse_config(const std::string &text, const std::filesystem::path &base_dir) {
  reject_anchors(text);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException &e) {
    throw ConfigError(e.msg, static_cast<std::size_t>(e.mark.line) + 1);
  }

  LoadedConfig out;
  ExperimentConfig &c = out.config;
  c.base_dir = base_dir;
  if (!root || root.IsNull()) {
    throw ConfigError("empty configuration", 0);
  }
  Section top(root, "", &out.notices);

  top.read("seed", c.seed);
  top.read("rounds", c.rounds);
  {
    YAML::Node node = top.raw("strategy");
    if (!node) {
      out.notices.push_back("'strategy' not set, using " + std::string(to_string(c.strategy)));
    } else {
      const auto name = top.convert<std::string>(node, "strategy");
      try {
        c.strategy = parse_strategy(name);
      } catch (const ContractError &) {
        throw ConfigError("unknown strategy '" + name + "'", line_of(node));
      }
    }
  }
  top.read("output_dir", c.output_dir);
  top.read_enum("aggregation", c.weighting, kWeightingNames);

  Section clients = top.child("clients");
  clients.read("total", c.clients);
  clients.read("per_round", c.clients_per_round);
  clients.read("local_epochs", c.local_epochs);
  clients.read("batch_size", c.batch_size);
  clients.finish();

  Section model = top.child("model");
  model.read("hidden_width", c.model.hidden_width);
  model.read("hidden_depth", c.model.hidden_depth);
  model.finish();

  Section search = top.child("search");
  search.read("epsilon", c.epsilon);
  search.read("t_max", c.t_max);
  search.read("ratios", c.model.ratios);
  search.finish();

  Section distill = top.child("distill");
  distill.read("enabled", c.distill.enabled);
  distill.read("uniform_prune", c.distill.for_uniform_prune);
  distill.read("n", c.distill.config.subnets);
  distill.read("t_skd", c.distill.config.iterations);
  distill.read("k", c.distill.config.batch);
  distill.read("lr", c.distill.config.learning_rate);
  distill.read_enum("mode", c.distill.config.mode, kDistillModeNames);
  distill.finish();

  Section limitation = top.child("limitation");
  read_limit(limitation, "memory", c.limits.memory);
  read_limit(limitation, "bandwidth", c.limits.bandwidth);
  limitation.finish();

  Section cost = top.child("cost");
  cost.read("bytes_per_param", c.cost.bytes_per_param);
  cost.read("train_overhead_factor", c.cost.train_overhead_factor);
  cost.read("bytes_per_activation", c.cost.bytes_per_activation);
  cost.read("comm_deadline_s", c.cost.comm_deadline_s);
  cost.read("protocol_overhead_factor", c.cost.protocol_overhead_factor);
  cost.read("train_kappa", c.train_kappa);
  cost.read("server_overhead_s", c.server_overhead_s);
  cost.finish();

  Section data = top.child("data");
  data.read("classes", c.data.classes);
  data.read("in_dim", c.data.in_dim);
  data.read("per_class", c.data.per_class);
  data.read_enum("partition", c.data.partition, kPartitionNames);
  data.read("alpha", c.data.alpha);
  data.read("test_fraction", c.data.test_fraction);
  if (data.has("csv_path")) data.read("csv_path", c.data.csv_path);  // optional, no notice
  data.finish();

  Section opt = top.child("optimizer");
  auto &o = c.train.optimizer;
  opt.read_enum("kind", o.kind, kOptimizerNames);
  opt.read("lr", o.learning_rate);
  opt.read("momentum", o.momentum);
  opt.read("weight_decay", o.weight_decay);
  opt.read("beta1", o.beta1);
  opt.read("beta2", o.beta2);
  opt.read("epsilon", o.epsilon);
  opt.read("milestones", c.train.milestones);
  opt.read("gamma", c.train.gamma);
  opt.finish();

  top.finish();

  try {
    c.validate();
  } catch (const ContractError &e) {
    throw ConfigError(e.what(), 0);
  }
  return out;
}

LoadedConfig load_config(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string(), 0);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.parent_path());
}

namespace {

void emit_limit(YAML::Emitter &e, const char *key, const ResourceLimit &limit) {
  e << YAML::Key << key << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "unit" << YAML::Value << YAML::DoubleQuoted << limit.unit;
  if (const auto *range = std::get_if<RangeLimit>(&limit.source)) {
    e << YAML::Key << "binary" << YAML::Value << range->binary;
    e << YAML::Key << "min" << YAML::Value << range->min;
    e << YAML::Key << "max" << YAML::Value << range->max;
  } else {
    const auto &trace = std::get<TraceLimit>(limit.source);
    e << YAML::Key << "log_path" << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (const auto &p : trace.log_paths) e << YAML::DoubleQuoted << p;
    e << YAML::EndSeq;
    e << YAML::Key << "phase_offset_s" << YAML::Value << trace.phase_offset_s;
  }
  e << YAML::EndMap;
}

}  // namespace

std::string serialize_config(const ExperimentConfig &c) {
  YAML::Emitter e;
  e.SetDoublePrecision(17);
  e << YAML::BeginMap;
  e << YAML::Key << "seed" << YAML::Value << c.seed;
  e << YAML::Key << "rounds" << YAML::Value << c.rounds;
  e << YAML::Key << "strategy" << YAML::Value << std::string(to_string(c.strategy));
  e << YAML::Key << "output_dir" << YAML::Value << YAML::DoubleQuoted << c.output_dir;
  e << YAML::Key << "aggregation" << YAML::Value << name_of(kWeightingNames, c.weighting);

  e << YAML::Key << "clients" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "total" << YAML::Value << c.clients;
  e << YAML::Key << "per_round" << YAML::Value << c.clients_per_round;
  e << YAML::Key << "local_epochs" << YAML::Value << c.local_epochs;
  e << YAML::Key << "batch_size" << YAML::Value << c.batch_size;
  e << YAML::EndMap;

  e << YAML::Key << "model" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "hidden_width" << YAML::Value << c.model.hidden_width;
  e << YAML::Key << "hidden_depth" << YAML::Value << c.model.hidden_depth;
  e << YAML::EndMap;

  e << YAML::Key << "search" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "epsilon" << YAML::Value << c.epsilon;
  e << YAML::Key << "t_max" << YAML::Value << c.t_max;
  e << YAML::Key << "ratios" << YAML::Value << YAML::Flow << c.model.ratios;
  e << YAML::EndMap;

  const auto &d = c.distill;
  e << YAML::Key << "distill" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "enabled" << YAML::Value << d.enabled;
  e << YAML::Key << "uniform_prune" << YAML::Value << d.for_uniform_prune;
  e << YAML::Key << "n" << YAML::Value << d.config.subnets;
  e << YAML::Key << "t_skd" << YAML::Value << d.config.iterations;
  e << YAML::Key << "k" << YAML::Value << d.config.batch;
  e << YAML::Key << "lr" << YAML::Value << d.config.learning_rate;
  e << YAML::Key << "mode" << YAML::Value << name_of(kDistillModeNames, d.config.mode);
  e << YAML::EndMap;

  e << YAML::Key << "limitation" << YAML::Value << YAML::BeginMap;
  emit_limit(e, "memory", c.limits.memory);
  emit_limit(e, "bandwidth", c.limits.bandwidth);
  e << YAML::EndMap;

  e << YAML::Key << "cost" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "bytes_per_param" << YAML::Value << c.cost.bytes_per_param;
  e << YAML::Key << "train_overhead_factor" << YAML::Value << c.cost.train_overhead_factor;
  e << YAML::Key << "bytes_per_activation" << YAML::Value << c.cost.bytes_per_activation;
  e << YAML::Key << "comm_deadline_s" << YAML::Value << c.cost.comm_deadline_s;
  e << YAML::Key << "protocol_overhead_factor" << YAML::Value << c.cost.protocol_overhead_factor;
  e << YAML::Key << "train_kappa" << YAML::Value << c.train_kappa;
  e << YAML::Key << "server_overhead_s" << YAML::Value << c.server_overhead_s;
  e << YAML::EndMap;

  e << YAML::Key << "data" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "classes" << YAML::Value << c.data.classes;
  e << YAML::Key << "in_dim" << YAML::Value << c.data.in_dim;
  e << YAML::Key << "per_class" << YAML::Value << c.data.per_class;
  e << YAML::Key << "partition" << YAML::Value << name_of(kPartitionNames, c.data.partition);
  e << YAML::Key << "alpha" << YAML::Value << c.data.alpha;
  e << YAML::Key << "test_fraction" << YAML::Value << c.data.test_fraction;
  e << YAML::Key << "csv_path" << YAML::Value << YAML::DoubleQuoted << c.data.csv_path;
  e << YAML::EndMap;

  const auto &o = c.train.optimizer;
  e << YAML::Key << "optimizer" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "kind" << YAML::Value << name_of(kOptimizerNames, o.kind);
  e << YAML::Key << "lr" << YAML::Value << o.learning_rate;
  e << YAML::Key << "momentum" << YAML::Value << o.momentum;
  e << YAML::Key << "weight_decay" << YAML::Value << o.weight_decay;
  e << YAML::Key << "beta1" << YAML::Value << o.beta1;
  e << YAML::Key << "beta2" << YAML::Value << o.beta2;
  e << YAML::Key << "epsilon" << YAML::Value << o.epsilon;
  e << YAML::Key << "milestones" << YAML::Value << YAML::Flow << c.train.milestones;
  e << YAML::Key << "gamma" << YAML::Value << c.train.gamma;
  e << YAML::EndMap;

  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

}  // namespace hetfed
