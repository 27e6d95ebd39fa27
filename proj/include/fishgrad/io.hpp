// Copyright 2026 The fishgrad Authors.
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

#pragma once

// JSON serialization of every artifact type and the binary model checkpoint.
//
// Non-finite doubles are written as null. 64-bit hashes are written as
// 16-digit hex strings.

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fishgrad/dataset.hpp"
#include "fishgrad/error.hpp"
#include "fishgrad/fisher.hpp"
#include "fishgrad/grid.hpp"
#include "fishgrad/ird.hpp"
#include "fishgrad/model.hpp"
#include "fishgrad/trainer.hpp"

namespace fishgrad {

using json = nlohmann::json;

namespace detail {

inline json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline double number_from(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

inline std::uint64_t parse_hex64(const std::string& s) {
  require(!s.empty() && s.size() <= 16, "malformed hash '" + s + "'");
  std::uint64_t v = 0;
  for (char c : s) {
    v <<= 4;
    if (c >= '0' && c <= '9') {
      v |= static_cast<std::uint64_t>(c - '0');
    } else if (c >= 'a' && c <= 'f') {
      v |= static_cast<std::uint64_t>(c - 'a' + 10);
    } else {
      fail(ErrorKind::validation, "malformed hash '" + s + "'");
    }
  }
  return v;
}

inline std::uint64_t hash_from(const json& j) {
  return j.is_string() ? parse_hex64(j.get<std::string>()) : j.get<std::uint64_t>();
}

template <class T>
T value_or(const json& j, const char* key, T fallback) {
  const auto it = j.find(key);
  return it == j.end() || it->is_null() ? fallback : it->get<T>();
}

}  // namespace detail

// -- model and training -------------------------------------------------------

inline void to_json(json& j, const ModelSpec& s) {
  j = json{{"kind", to_string(s.kind)},
           {"input_dim", s.input_dim},
           {"hidden", s.hidden},
           {"num_classes", s.num_classes},
           {"scalar_output", s.scalar_output},
           {"activation", to_string(s.activation)},
           {"vocab_size", s.vocab_size},
           {"embed_dim", s.embed_dim},
           {"seed", s.seed}};
}

inline void from_json(const json& j, ModelSpec& s) {
  s = ModelSpec{};
  s.kind = parse_model_kind(j.at("kind").get<std::string>());
  s.input_dim = j.at("input_dim").get<std::size_t>();
  s.hidden = detail::value_or(j, "hidden", std::vector<std::size_t>{});
  s.scalar_output = detail::value_or(j, "scalar_output", s.kind == ModelKind::linear_regressor);
  s.num_classes = detail::value_or<std::size_t>(j, "num_classes", s.scalar_output ? 1 : 2);
  s.activation = parse_activation(detail::value_or<std::string>(j, "activation", "relu"));
  s.vocab_size = detail::value_or<std::size_t>(j, "vocab_size", 2048);
  s.embed_dim = detail::value_or<std::size_t>(j, "embed_dim", 16);
  s.seed = detail::value_or<std::uint64_t>(j, "seed", 0);
}

inline void to_json(json& j, const TrainConfig& c) {
  j = json{{"optimizer", to_string(c.optimizer)},
           {"learning_rate", c.learning_rate},
           {"batch_size", c.batch_size},
           {"max_epochs", c.max_epochs},
           {"patience", c.patience},
           {"stop_threshold", c.stop_threshold},
           {"seed", c.seed},
           {"loss", c.loss ? json(to_string(*c.loss)) : json(nullptr)},
           {"metric", c.metric ? json(to_string(*c.metric)) : json(nullptr)},
           {"beta1", c.beta1},
           {"beta2", c.beta2},
           {"epsilon", c.epsilon}};
}

inline void from_json(const json& j, TrainConfig& c) {
  c = TrainConfig{};
  c.optimizer = parse_optimizer(detail::value_or<std::string>(j, "optimizer", "adam"));
  c.learning_rate = detail::value_or(j, "learning_rate", c.learning_rate);
  c.batch_size = detail::value_or(j, "batch_size", c.batch_size);
  c.max_epochs = detail::value_or(j, "max_epochs", c.max_epochs);
  c.patience = detail::value_or(j, "patience", c.patience);
  c.stop_threshold = detail::value_or(j, "stop_threshold", c.stop_threshold);
  c.seed = detail::value_or(j, "seed", c.seed);
  if (j.contains("loss") && !j["loss"].is_null()) c.loss = parse_loss(j["loss"].get<std::string>());
  if (j.contains("metric") && !j["metric"].is_null()) c.metric = parse_metric(j["metric"].get<std::string>());
  c.beta1 = detail::value_or(j, "beta1", c.beta1);
  c.beta2 = detail::value_or(j, "beta2", c.beta2);
  c.epsilon = detail::value_or(j, "epsilon", c.epsilon);
  c.validate();
}

inline void to_json(json& j, const TrainReport& r) {
  json losses = json::array(), metrics = json::array();
  for (double v : r.train_loss) losses.push_back(detail::number_or_null(v));
  for (double v : r.valid_metric) metrics.push_back(detail::number_or_null(v));
  j = json{{"epochs_run", r.epochs_run},
           {"train_loss", losses},
           {"valid_metric", metrics},
           {"stopped_early", r.stopped_early},
           {"best_metric", detail::number_or_null(r.best_metric)},
           {"best_epoch", r.best_epoch},
           {"final_params_hash", hex64(r.final_params_hash)}};
}

inline void from_json(const json& j, TrainReport& r) {
  r = TrainReport{};
  r.epochs_run = j.at("epochs_run").get<std::size_t>();
  for (const auto& v : j.at("train_loss")) r.train_loss.push_back(detail::number_from(v));
  for (const auto& v : j.at("valid_metric")) r.valid_metric.push_back(detail::number_from(v));
  r.stopped_early = j.at("stopped_early").get<bool>();
  r.best_metric = j.at("best_metric").is_null() ? -std::numeric_limits<double>::infinity()
                                                : j.at("best_metric").get<double>();
  r.best_epoch = j.at("best_epoch").get<std::size_t>();
  r.final_params_hash = detail::hash_from(j.at("final_params_hash"));
}

inline void to_json(json& j, const SyntheticSpec& s) {
  j = json{{"generator", to_string(s.generator)}, {"n", s.n},         {"dims", s.dims},
           {"classes", s.classes},                {"noise", s.noise}, {"seed", s.seed},
           {"vocab_size", s.vocab_size}};
}

inline void from_json(const json& j, SyntheticSpec& s) {
  s = SyntheticSpec{};
  s.generator = parse_generator(detail::value_or<std::string>(j, "generator", "gaussian_blobs"));
  s.n = detail::value_or(j, "n", s.n);
  s.dims = detail::value_or(j, "dims", s.dims);
  s.classes = detail::value_or(j, "classes", s.classes);
  s.noise = detail::value_or(j, "noise", s.noise);
  s.seed = detail::value_or(j, "seed", s.seed);
  s.vocab_size = detail::value_or(j, "vocab_size", s.vocab_size);
}

// -- Fisher, masks, subsets ---------------------------------------------------

inline void to_json(json& j, const FisherDiagonal& f) {
  j = json{{"model_hash", hex64(f.model_hash)},
           {"source", to_string(f.source)},
           {"sample_ids", f.sample_ids},
           {"values", f.values}};
}

inline void from_json(const json& j, FisherDiagonal& f) {
  f = FisherDiagonal{};
  f.model_hash = detail::hash_from(j.at("model_hash"));
  f.source = parse_fisher_source(j.at("source").get<std::string>());
  f.sample_ids = j.at("sample_ids").get<std::vector<std::size_t>>();
  f.values = j.at("values").get<std::vector<double>>();
  for (double v : f.values) require(std::isfinite(v) && v >= 0.0, "Fisher values must be finite and >= 0");
}

inline void to_json(json& j, const Mask& m) {
  j = json{{"model_hash", hex64(m.model_hash)},
           {"sparsity", m.sparsity},
           {"num_params", m.num_params},
           {"selected", m.selected}};
}

inline void from_json(const json& j, Mask& m) {
  m = Mask{};
  m.model_hash = detail::hash_from(j.at("model_hash"));
  m.sparsity = j.at("sparsity").get<double>();
  m.selected = j.at("selected").get<std::vector<std::size_t>>();
  m.num_params = detail::value_or<std::size_t>(j, "num_params", m.selected.empty() ? 0 : m.selected.back() + 1);
  m.validate();
}

inline void to_json(json& j, const SampleSubset& s) {
  j = json{{"ids", s.ids}};
  if (!s.scores.empty()) j["scores"] = s.scores;
}

inline void from_json(const json& j, SampleSubset& s) {
  s = SampleSubset{};
  s.ids = j.at("ids").get<std::vector<std::size_t>>();
  s.scores = detail::value_or(j, "scores", std::vector<double>{});
}

// -- search traces and grids --------------------------------------------------

inline void to_json(json& j, const TraceRecord& r) {
  j = json{{"iteration", r.iteration},
           {"phase", to_string(r.phase)},
           {"score", detail::number_or_null(r.score)},
           {"status", r.status},
           {"mask", r.mask},
           {"subset", r.subset}};
}

inline void from_json(const json& j, TraceRecord& r) {
  r = TraceRecord{};
  r.iteration = j.at("iteration").get<std::size_t>();
  r.phase = parse_trace_phase(j.at("phase").get<std::string>());
  r.score = detail::number_from(j.at("score"));
  r.status = j.at("status").get<std::string>();
  r.mask = j.at("mask").get<Mask>();
  r.subset = j.at("subset").get<SampleSubset>();
}

inline void to_json(json& j, const IRDTrace& t) {
  j = json{{"direction", to_string(t.direction)},
           {"num_params", t.num_params},
           {"initial_sparsity", t.initial_sparsity},
           {"initial_mask", t.initial_mask},
           {"initial_subset", t.initial_subset},
           {"initial_score", detail::number_or_null(t.initial_score)},
           {"initial_status", t.initial_status},
           {"records", t.records}};
}

inline void from_json(const json& j, IRDTrace& t) {
  t = IRDTrace{};
  const auto dir = j.at("direction").get<std::string>();
  require(dir == "ird" || dir == "ird_inverse", "unknown trace direction '" + dir + "'");
  t.direction = dir == "ird" ? SearchDirection::forward : SearchDirection::inverse;
  t.num_params = j.at("num_params").get<std::size_t>();
  t.initial_sparsity = j.at("initial_sparsity").get<double>();
  t.initial_mask = j.at("initial_mask").get<Mask>();
  t.initial_subset = j.at("initial_subset").get<SampleSubset>();
  t.initial_score = detail::number_from(j.at("initial_score"));
  t.initial_status = j.at("initial_status").get<std::string>();
  t.records = j.at("records").get<std::vector<TraceRecord>>();
}

inline void to_json(json& j, const GridSpec& s) {
  j = json{{"sparsities", s.sparsities}, {"sample_counts", s.sample_counts}, {"mode", to_string(s.mode)},
           {"seeds", s.seeds},           {"master_seed", s.master_seed},     {"schedule", to_string(s.schedule)}};
}

inline void from_json(const json& j, GridSpec& s) {
  s = GridSpec{};
  s.sparsities = detail::value_or(j, "sparsities", s.sparsities);
  s.sample_counts = detail::value_or(j, "sample_counts", s.sample_counts);
  s.mode = parse_grid_mode(detail::value_or<std::string>(j, "mode", "fish_random"));
  s.seeds = detail::value_or(j, "seeds", s.seeds);
  s.master_seed = detail::value_or(j, "master_seed", s.master_seed);
  s.schedule = parse_schedule(detail::value_or<std::string>(j, "schedule", "axes"));
  s.validate();
}

inline void to_json(json& j, const GridCell& c) {
  j = json{{"sparsity", c.sparsity},
           {"n_samples", c.n_samples},
           {"seed", c.seed},
           {"score", detail::number_or_null(c.score)},
           {"status", c.status}};
}

inline void from_json(const json& j, GridCell& c) {
  c = GridCell{};
  c.sparsity = j.at("sparsity").get<double>();
  c.n_samples = j.at("n_samples").get<std::size_t>();
  c.seed = detail::value_or<std::uint64_t>(j, "seed", 0);
  c.score = detail::number_from(j.at("score"));
  c.status = detail::value_or<std::string>(j, "status", std::string(kStatusOk));
}

inline void to_json(json& j, const GridResult& g) {
  j = json{{"spec", g.spec},
           {"sparsity_axis", g.sparsity_axis},
           {"sample_axis", g.sample_axis},
           {"cells", g.cells},
           {"traces", g.traces}};
}

inline void from_json(const json& j, GridResult& g) {
  g = GridResult{};
  g.spec = j.at("spec").get<GridSpec>();
  g.sparsity_axis = detail::value_or(j, "sparsity_axis", g.spec.sparsities);
  g.sample_axis = detail::value_or(j, "sample_axis", g.spec.sample_counts);
  g.cells = j.at("cells").get<std::vector<GridCell>>();
  g.traces = detail::value_or(j, "traces", std::vector<IRDTrace>{});
}

inline void to_json(json& j, const CellVerdict& c) {
  j = json{{"sparsity", c.sparsity},
           {"n_samples", c.n_samples},
           {"baseline", c.baseline},
           {"candidate", c.candidate},
           {"verdict", to_string(c.verdict)}};
}

inline void from_json(const json& j, CellVerdict& c) {
  c.sparsity = j.at("sparsity").get<double>();
  c.n_samples = j.at("n_samples").get<std::size_t>();
  c.baseline = j.at("baseline").get<double>();
  c.candidate = j.at("candidate").get<double>();
  c.verdict = parse_verdict(j.at("verdict").get<std::string>());
}

inline void to_json(json& j, const CellComparison& c) {
  j = json{{"sparsity_axis", c.sparsity_axis},
           {"sample_axis", c.sample_axis},
           {"cells", c.cells},
           {"ups", c.ups},
           {"downs", c.downs},
           {"ties", c.ties}};
}

inline void from_json(const json& j, CellComparison& c) {
  c = CellComparison{};
  c.sparsity_axis = j.at("sparsity_axis").get<std::vector<double>>();
  c.sample_axis = j.at("sample_axis").get<std::vector<std::size_t>>();
  c.cells = j.at("cells").get<std::vector<CellVerdict>>();
  c.ups = j.at("ups").get<std::size_t>();
  c.downs = j.at("downs").get<std::size_t>();
  c.ties = j.at("ties").get<std::size_t>();
}

// -- files --------------------------------------------------------------------

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::validation, "cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::validation, "'" + path + "' is not valid JSON: " + e.what());
  }
}

template <class T>
T read_json_as(const std::string& path) {
  const json j = read_json_file(path);
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    fail(ErrorKind::validation, "'" + path + "': " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::runtime, "cannot write '" + path + "'");
  out << text;
  if (!out) fail(ErrorKind::runtime, "write to '" + path + "' failed");
}

inline void write_json_file(const std::string& path, const json& j) { write_text_file(path, j.dump(2) + "\n"); }

// -- checkpoints --------------------------------------------------------------

inline constexpr const char* kCheckpointFormat = "fishgrad-checkpoint";

/// One line of JSON header followed by the parameters as little-endian
/// 64-bit floats.
inline void write_checkpoint(std::ostream& out, const Model& model) {
  json segs = json::array();
  for (const auto& s : model.params().segments()) {
    segs.push_back({{"name", s.name}, {"offset", s.offset}, {"rows", s.rows}, {"cols", s.cols}});
  }
  const json header{{"format", kCheckpointFormat},
                    {"version", 1},
                    {"spec", model.spec()},
                    {"seed", model.spec().seed},
                    {"num_params", model.num_params()},
                    {"segments", segs},
                    {"content_hash", hex64(model.params().hash())}};
  out << header.dump() << '\n';
  for (double v : model.params().values()) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    char le[8];
    for (int b = 0; b < 8; ++b) le[b] = static_cast<char>((bits >> (8 * b)) & 0xFF);
    out.write(le, 8);
  }
  if (!out) fail(ErrorKind::runtime, "checkpoint write failed");
}

inline Model read_checkpoint(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::validation, "checkpoint: missing header");
  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception& e) {
    fail(ErrorKind::validation, std::string("checkpoint: malformed header: ") + e.what());
  }
  require(header.value("format", "") == kCheckpointFormat, "checkpoint: unrecognized format");
  const auto spec = header.at("spec").get<ModelSpec>();
  ParamVector params;
  for (const auto& s : header.at("segments")) {
    const auto off = params.add_segment(s.at("name").get<std::string>(), s.at("rows").get<std::size_t>(),
                                        s.at("cols").get<std::size_t>());
    require(params.segments()[off].offset == s.at("offset").get<std::size_t>(), "checkpoint: segment gap");
  }
  require(params.size() == header.at("num_params").get<std::size_t>(), "checkpoint: size mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    char le[8];
    if (!in.read(le, 8)) fail(ErrorKind::validation, "checkpoint: truncated payload");
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(le[b])) << (8 * b);
    params[i] = std::bit_cast<double>(bits);
  }
  require(in.peek() == std::char_traits<char>::eof(), "checkpoint: trailing bytes after payload");
  require(hex64(params.hash()) == header.at("content_hash").get<std::string>(), "checkpoint: content hash mismatch");
  return Model::from_params(spec, std::move(params));
}

inline void save_checkpoint(const std::string& path, const Model& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::runtime, "cannot write '" + path + "'");
  write_checkpoint(out, model);
}

inline Model load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::validation, "cannot open '" + path + "'");
  return read_checkpoint(in);
}

}  // namespace fishgrad
