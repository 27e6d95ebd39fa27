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

// Datasets: TSV/JSONL ingestion, hashed text featurization, seeded splits and
// synthetic task generators.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "fishgrad/error.hpp"
#include "fishgrad/random.hpp"
#include "fishgrad/tensor.hpp"

namespace fishgrad {

enum class TaskKind { binary, multiclass, regression };

inline std::string_view to_string(TaskKind t) {
  switch (t) {
    case TaskKind::binary: return "binary";
    case TaskKind::multiclass: return "multiclass";
    case TaskKind::regression: return "regression";
  }
  return "?";
}

inline TaskKind parse_task_kind(std::string_view s) {
  if (s == "binary") return TaskKind::binary;
  if (s == "multiclass") return TaskKind::multiclass;
  if (s == "regression") return TaskKind::regression;
  fail(ErrorKind::validation, "unknown task kind '" + std::string(s) + "'");
}

struct Row {
  std::vector<double> features;
  std::string text1;  // empty for numeric rows
  std::string text2;
  double label = 0.0;

  friend bool operator==(const Row&, const Row&) = default;
};

struct Dataset {
  TaskKind task = TaskKind::binary;
  std::size_t num_classes = 2;  // 0 for regression
  std::size_t feature_dim = 0;
  bool text = false;            // rows carry raw text next to their features
  std::string split = "all";
  std::vector<Row> rows;

  [[nodiscard]] std::size_t size() const noexcept { return rows.size(); }

  [[nodiscard]] Tensor batch(std::span<const std::size_t> ids) const {
    Tensor t = Tensor::zeros(ids.size(), feature_dim);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const auto& f = rows.at(ids[i]).features;
      std::copy(f.begin(), f.end(), t.data().begin() + static_cast<std::ptrdiff_t>(i * feature_dim));
    }
    return t;
  }

  [[nodiscard]] Tensor all_features() const {
    std::vector<std::size_t> ids(rows.size());
    std::iota(ids.begin(), ids.end(), std::size_t{0});
    return batch(ids);
  }

  [[nodiscard]] std::vector<double> labels(std::span<const std::size_t> ids) const {
    std::vector<double> out(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) out[i] = rows.at(ids[i]).label;
    return out;
  }

  [[nodiscard]] std::vector<double> all_labels() const {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r.label);
    return out;
  }

  [[nodiscard]] Dataset subset(std::span<const std::size_t> ids) const {
    Dataset d = *this;
    d.rows.clear();
    d.rows.reserve(ids.size());
    for (auto i : ids) d.rows.push_back(rows.at(i));
    return d;
  }

  [[nodiscard]] std::uint64_t hash() const {
    std::uint64_t h = fnv1a(to_string(task));
    for (const auto& r : rows) {
      h = hash_values(r.features, h);
      h = fnv1a(r.text1, h);
      h = fnv1a(r.text2, h);
      const double l[1] = {r.label};
      h = hash_values(l, h);
    }
    return h;
  }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// -- featurization ------------------------------------------------------------

inline std::vector<std::string> whitespace_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
    } else {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

inline std::uint64_t token_hash(std::string_view token, std::uint64_t seed) {
  unsigned char le[8];
  for (int b = 0; b < 8; ++b) le[b] = static_cast<unsigned char>(seed >> (8 * b));
  return fnv1a(token, fnv1a(le, 8));
}

/// Hashed bag of words: lowercase whitespace tokens, counts L2-normalized.
/// Empty text maps to the zero vector.
inline std::vector<double> featurize_text(std::string_view text, std::size_t dim = 2048,
                                          std::uint64_t seed = 0) {
  require(dim >= 2, "featurize_text: dim must be >= 2");
  std::vector<double> v(dim, 0.0);
  for (const auto& tok : whitespace_tokens(text)) v[token_hash(tok, seed) % dim] += 1.0;
  double norm = 0.0;
  for (double x : v) norm += x * x;
  if (norm > 0.0) {
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
  }
  return v;
}

/// Hashed token ids for sequence models. Id 0 is padding; real tokens map
/// into [1, vocab).
inline std::vector<double> tokenize_ids(std::string_view text, std::size_t vocab,
                                        std::size_t seq_len, std::uint64_t seed = 0) {
  require(vocab >= 2, "tokenize_ids: vocab must be >= 2");
  std::vector<double> ids(seq_len, 0.0);
  const auto toks = whitespace_tokens(text);
  for (std::size_t i = 0; i < seq_len && i < toks.size(); ++i) {
    ids[i] = static_cast<double>(1 + token_hash(toks[i], seed) % (vocab - 1));
  }
  return ids;
}

inline std::string join_pair(std::string_view a, std::string_view b) {
  if (b.empty()) return std::string(a);
  return std::string(a) + " [SEP] " + std::string(b);
}

// -- loading ------------------------------------------------------------------

enum class FileFormat { tsv, jsonl };
enum class TextEncoding { bag_of_words, token_ids };

inline FileFormat format_from_path(std::string_view path) {
  if (path.ends_with(".jsonl") || path.ends_with(".json")) return FileFormat::jsonl;
  return FileFormat::tsv;
}

struct LoadOptions {
  TextEncoding encoding = TextEncoding::bag_of_words;
  std::size_t text_dim = 2048;  // bag-of-words width, or vocab for token ids
  std::size_t seq_len = 16;     // token ids only
  std::uint64_t hash_seed = 0;
  std::optional<TaskKind> task;
  std::optional<std::size_t> num_classes;
};

namespace detail {

inline double parse_number(std::string_view s, std::size_t line, const char* what) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || ptr != end || !std::isfinite(v)) {
    fail(ErrorKind::validation, "line " + std::to_string(line) + ": unparseable " + what + " '" +
                                    std::string(s) + "'");
  }
  return v;
}

inline std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find('\t', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string_view chomp(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

/// Assigns task kind and class count, validating every label. `lines` holds
/// the source line of each row for error messages.
inline void finalize(Dataset& ds, const std::vector<std::size_t>& lines, const LoadOptions& opt) {
  require(!ds.rows.empty(), "dataset has no rows");
  bool integral = true;
  double max_label = 0.0;
  for (const auto& r : ds.rows) {
    if (r.label < 0.0 || r.label != std::floor(r.label)) integral = false;
    max_label = std::max(max_label, r.label);
  }
  if (opt.task) {
    ds.task = *opt.task;
  } else {
    ds.task = !integral ? TaskKind::regression : (max_label <= 1.0 ? TaskKind::binary : TaskKind::multiclass);
  }
  if (ds.task == TaskKind::regression) {
    ds.num_classes = 0;
    return;
  }
  ds.num_classes = opt.num_classes.value_or(ds.task == TaskKind::binary
                                                ? 2
                                                : static_cast<std::size_t>(max_label) + 1);
  if (ds.task == TaskKind::binary) ds.num_classes = 2;
  require(ds.num_classes >= 2, "classification needs at least two classes");
  for (std::size_t i = 0; i < ds.rows.size(); ++i) {
    const double l = ds.rows[i].label;
    if (l < 0.0 || l != std::floor(l) || l >= static_cast<double>(ds.num_classes)) {
      fail(ErrorKind::validation, "line " + std::to_string(lines[i]) + ": unknown label " +
                                      std::to_string(l));
    }
  }
}

inline std::vector<double> encode_text(const Row& r, const LoadOptions& opt) {
  const auto joined = join_pair(r.text1, r.text2);
  if (opt.encoding == TextEncoding::token_ids) {
    return tokenize_ids(joined, opt.text_dim, opt.seq_len, opt.hash_seed);
  }
  return featurize_text(joined, opt.text_dim, opt.hash_seed);
}

}  // namespace detail

inline Dataset parse_tsv(std::istream& in, const LoadOptions& opt = {}) {
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineno;
    auto l = detail::chomp(line);
    if (l.empty()) continue;
    for (auto c : detail::split_tabs(l)) header.emplace_back(c);
    break;
  }
  require(!header.empty(), "empty file: no header row");
  require(header.back() == "label", "line " + std::to_string(lineno) +
                                        ": last header column must be 'label'");

  Dataset ds;
  const std::size_t ncols = header.size();
  ds.text = header[0] == "text1";
  if (ds.text) {
    require(ncols == 2 || (ncols == 3 && header[1] == "text2"),
            "line " + std::to_string(lineno) + ": text header must be text1[<TAB>text2]<TAB>label");
  } else {
    for (std::size_t c = 0; c + 1 < ncols; ++c) {
      require(header[c] == "f" + std::to_string(c),
              "line " + std::to_string(lineno) + ": expected feature column f" + std::to_string(c));
    }
    require(ncols >= 2, "feature TSV needs at least one feature column");
    ds.feature_dim = ncols - 1;
  }

  std::vector<std::size_t> lines;
  while (std::getline(in, line)) {
    ++lineno;
    auto l = detail::chomp(line);
    if (l.empty()) continue;
    const auto cols = detail::split_tabs(l);
    if (cols.size() != ncols) {
      fail(ErrorKind::validation, "line " + std::to_string(lineno) + ": ragged row with " +
                                      std::to_string(cols.size()) + " columns, expected " +
                                      std::to_string(ncols));
    }
    Row r;
    r.label = detail::parse_number(cols.back(), lineno, "label");
    if (ds.text) {
      r.text1 = std::string(cols[0]);
      if (ncols == 3) r.text2 = std::string(cols[1]);
    } else {
      r.features.reserve(ds.feature_dim);
      for (std::size_t c = 0; c + 1 < ncols; ++c) {
        r.features.push_back(detail::parse_number(cols[c], lineno, "feature"));
      }
    }
    ds.rows.push_back(std::move(r));
    lines.push_back(lineno);
  }
  require(!ds.rows.empty(), "file has a header but no rows");
  if (ds.text) {
    ds.feature_dim = opt.encoding == TextEncoding::token_ids ? opt.seq_len : opt.text_dim;
    for (auto& r : ds.rows) r.features = detail::encode_text(r, opt);
  }
  detail::finalize(ds, lines, opt);
  return ds;
}

inline Dataset parse_jsonl(std::istream& in, const LoadOptions& opt = {}) {
  Dataset ds;
  std::optional<bool> text;
  std::vector<std::size_t> lines;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto l = detail::chomp(line);
    if (l.find_first_not_of(" \t") == std::string_view::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(l);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::validation, "line " + std::to_string(lineno) + ": invalid JSON: " + e.what());
    }
    const auto where = "line " + std::to_string(lineno) + ": ";
    require(j.is_object() && j.contains("label") && j["label"].is_number(),
            where + "row needs a numeric 'label'");
    const bool is_text = j.contains("text1");
    require(is_text || j.contains("features"), where + "row needs 'features' or 'text1'");
    if (!text) text = is_text;
    require(*text == is_text, where + "mixed text and feature rows");
    Row r;
    r.label = j["label"].get<double>();
    if (is_text) {
      require(j["text1"].is_string(), where + "'text1' must be a string");
      r.text1 = j["text1"].get<std::string>();
      if (j.contains("text2")) {
        require(j["text2"].is_string(), where + "'text2' must be a string");
        r.text2 = j["text2"].get<std::string>();
      }
    } else {
      require(j["features"].is_array(), where + "'features' must be an array");
      for (const auto& v : j["features"]) {
        require(v.is_number(), where + "non-numeric feature");
        r.features.push_back(v.get<double>());
      }
      if (ds.rows.empty()) ds.feature_dim = r.features.size();
      if (r.features.size() != ds.feature_dim) {
        fail(ErrorKind::validation, where + "ragged row with " + std::to_string(r.features.size()) +
                                        " features, expected " + std::to_string(ds.feature_dim));
      }
    }
    ds.rows.push_back(std::move(r));
    lines.push_back(lineno);
  }
  require(!ds.rows.empty(), "empty file: no rows");
  ds.text = *text;
  if (ds.text) {
    ds.feature_dim = opt.encoding == TextEncoding::token_ids ? opt.seq_len : opt.text_dim;
    for (auto& r : ds.rows) r.features = detail::encode_text(r, opt);
  }
  require(ds.text || ds.feature_dim > 0, "rows have no features");
  detail::finalize(ds, lines, opt);
  return ds;
}

inline Dataset load_dataset(const std::string& path, std::optional<FileFormat> format = {},
                            const LoadOptions& opt = {}) {
  std::ifstream in(path, std::ios::binary);
  require(bool(in), "cannot open dataset '" + path + "'", ErrorKind::validation);
  return format.value_or(format_from_path(path)) == FileFormat::jsonl ? parse_jsonl(in, opt)
                                                                      : parse_tsv(in, opt);
}

namespace detail {
inline std::string number(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}
}  // namespace detail

/// Writes rows so that loading them back reproduces every value exactly.
/// Text datasets write their raw text; labels of classifiers are integers.
inline void write_dataset(std::ostream& out, const Dataset& ds, FileFormat format) {
  auto label = [&](double l) { return detail::number(l); };
  if (format == FileFormat::tsv) {
    const bool pair = ds.text && std::any_of(ds.rows.begin(), ds.rows.end(),
                                             [](const Row& r) { return !r.text2.empty(); });
    if (ds.text) {
      out << "text1\t" << (pair ? "text2\t" : "") << "label\n";
    } else {
      for (std::size_t c = 0; c < ds.feature_dim; ++c) out << 'f' << c << '\t';
      out << "label\n";
    }
    for (const auto& r : ds.rows) {
      if (ds.text) {
        for (const auto* t : {&r.text1, &r.text2}) {
          require(t->find_first_of("\t\n\r") == std::string::npos,
                  "text contains a tab or newline and cannot be written as TSV");
        }
        out << r.text1 << '\t';
        if (pair) out << r.text2 << '\t';
      } else {
        for (double f : r.features) out << detail::number(f) << '\t';
      }
      out << label(r.label) << '\n';
    }
    return;
  }
  for (const auto& r : ds.rows) {
    nlohmann::json j;
    if (ds.text) {
      j["text1"] = r.text1;
      if (!r.text2.empty()) j["text2"] = r.text2;
    } else {
      j["features"] = r.features;
    }
    j["label"] = r.label;
    out << j.dump() << '\n';
  }
}

inline void save_dataset(const std::string& path, const Dataset& ds,
                         std::optional<FileFormat> format = {}) {
  std::ofstream out(path, std::ios::binary);
  require(bool(out), "cannot write dataset '" + path + "'", ErrorKind::runtime);
  write_dataset(out, ds, format.value_or(format_from_path(path)));
}

// -- splits -------------------------------------------------------------------

/// Seeded shuffle, then consecutive partition. All parts but the last get
/// round(fraction * n) rows; the last takes the remainder.
inline std::vector<Dataset> split(const Dataset& ds, std::span<const double> fractions,
                                  std::uint64_t seed) {
  require(!fractions.empty(), "split: no fractions");
  double total = 0.0;
  for (double f : fractions) {
    require(f > 0.0, "split: fractions must be positive");
    total += f;
  }
  require(std::abs(total - 1.0) < 1e-9, "split: fractions must sum to 1");
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(order);

  std::vector<Dataset> parts;
  std::size_t start = 0;
  for (std::size_t p = 0; p < fractions.size(); ++p) {
    std::size_t count = ds.size() - start;
    if (p + 1 < fractions.size()) {
      count = std::min(count, static_cast<std::size_t>(
                                  std::llround(fractions[p] * static_cast<double>(ds.size()))));
    }
    parts.push_back(ds.subset(std::span(order).subspan(start, count)));
    start += count;
  }
  return parts;
}

struct TrainValid {
  Dataset train;
  Dataset valid;
};

inline TrainValid train_valid_split(const Dataset& ds, double train_fraction, std::uint64_t seed) {
  require(train_fraction > 0.0 && train_fraction < 1.0, "train fraction must be in (0, 1)");
  const double f[2] = {train_fraction, 1.0 - train_fraction};
  auto parts = split(ds, f, seed);
  parts[0].split = "train";
  parts[1].split = "validation";
  return {std::move(parts[0]), std::move(parts[1])};
}

// -- synthetic tasks ----------------------------------------------------------

enum class Generator { gaussian_blobs, xor_ring, linear_regression, token_topic };

inline std::string_view to_string(Generator g) {
  switch (g) {
    case Generator::gaussian_blobs: return "gaussian_blobs";
    case Generator::xor_ring: return "xor_ring";
    case Generator::linear_regression: return "linear_regression";
    case Generator::token_topic: return "token_topic";
  }
  return "?";
}

inline Generator parse_generator(std::string_view s) {
  if (s == "gaussian_blobs") return Generator::gaussian_blobs;
  if (s == "xor_ring") return Generator::xor_ring;
  if (s == "linear_regression") return Generator::linear_regression;
  if (s == "token_topic") return Generator::token_topic;
  fail(ErrorKind::validation, "unknown generator '" + std::string(s) + "'");
}

struct SyntheticSpec {
  Generator generator = Generator::gaussian_blobs;
  std::size_t n = 100;
  std::size_t dims = 2;  // sequence length for token_topic
  std::size_t classes = 2;
  double noise = 0.1;
  std::uint64_t seed = 0;
  std::size_t vocab_size = 2048;  // token_topic only

  void validate() const {
    require(n >= 4, "synthetic spec: n must be >= 4");
    require(noise >= 0.0 && std::isfinite(noise), "synthetic spec: noise must be >= 0");
    require(dims >= 1, "synthetic spec: dims must be >= 1");
    switch (generator) {
      case Generator::gaussian_blobs:
        require(classes >= 2, "gaussian_blobs needs >= 2 classes");
        break;
      case Generator::xor_ring:
        require(dims >= 2, "xor_ring needs dims >= 2");
        require(classes == 2, "xor_ring is a binary task");
        break;
      case Generator::linear_regression:
        break;
      case Generator::token_topic:
        require(classes >= 2, "token_topic needs >= 2 classes");
        require(noise <= 1.0, "token_topic noise is a probability");
        require(vocab_size > classes + 1, "token_topic vocab too small for its topics");
        break;
    }
  }
};

/// True weights of the linear_regression generator for `spec`.
inline std::vector<double> linear_regression_weights(const SyntheticSpec& spec) {
  Rng rng(spec.seed);
  std::vector<double> w(spec.dims);
  const double s = 1.0 / std::sqrt(static_cast<double>(spec.dims));
  for (double& v : w) v = rng.normal() * s;
  return w;
}

/// Seeded synthetic task.
///
/// gaussian_blobs: class means drawn uniformly on the unit sphere, isotropic
/// Gaussian noise of standard deviation `noise`, labels cycling 0..k-1.
/// xor_ring: label is (quadrant parity) xor (radius > 1) on the first two
/// coordinates; remaining coordinates are pure noise.
/// linear_regression: y = w.x + noise * eps with x ~ N(0, I).
/// token_topic: each class owns a block of token ids; every position draws
/// from the class block with probability 1 - noise, else uniformly.
inline Dataset generate(const SyntheticSpec& spec) {
  spec.validate();
  Dataset ds;
  ds.feature_dim = spec.dims;
  ds.rows.resize(spec.n);
  switch (spec.generator) {
    case Generator::gaussian_blobs: {
      Rng rng(spec.seed);
      std::vector<std::vector<double>> means(spec.classes, std::vector<double>(spec.dims));
      for (auto& m : means) {
        double norm = 0.0;
        do {
          norm = 0.0;
          for (double& v : m) {
            v = rng.normal();
            norm += v * v;
          }
        } while (norm == 0.0);
        norm = std::sqrt(norm);
        for (double& v : m) v /= norm;
      }
      for (std::size_t i = 0; i < spec.n; ++i) {
        auto& r = ds.rows[i];
        const std::size_t c = i % spec.classes;
        r.label = static_cast<double>(c);
        r.features = means[c];
        for (double& v : r.features) v += spec.noise * rng.normal();
      }
      ds.task = spec.classes == 2 ? TaskKind::binary : TaskKind::multiclass;
      ds.num_classes = spec.classes;
      break;
    }
    case Generator::xor_ring: {
      Rng rng(spec.seed);
      for (auto& r : ds.rows) {
        const double radius = rng.uniform(0.0, 2.0);
        const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
        r.features.assign(spec.dims, 0.0);
        r.features[0] = radius * std::cos(angle);
        r.features[1] = radius * std::sin(angle);
        for (std::size_t d = 2; d < spec.dims; ++d) r.features[d] = rng.normal();
        const bool parity = (r.features[0] > 0.0) != (r.features[1] > 0.0);
        r.label = (parity != (radius > 1.0)) ? 1.0 : 0.0;
        for (double& v : r.features) v += spec.noise * rng.normal();
      }
      ds.task = TaskKind::binary;
      ds.num_classes = 2;
      break;
    }
    case Generator::linear_regression: {
      const auto w = linear_regression_weights(spec);
      Rng rng(derive_seed({spec.seed, 1}));
      for (auto& r : ds.rows) {
        r.features.resize(spec.dims);
        double y = 0.0;
        for (std::size_t d = 0; d < spec.dims; ++d) {
          r.features[d] = rng.normal();
          y += w[d] * r.features[d];
        }
        r.label = y + spec.noise * rng.normal();
      }
      ds.task = TaskKind::regression;
      ds.num_classes = 0;
      break;
    }
    case Generator::token_topic: {
      Rng rng(spec.seed);
      const std::size_t usable = spec.vocab_size - 1;
      const std::size_t block = std::max<std::size_t>(1, std::min<std::size_t>(16, usable / spec.classes));
      for (std::size_t i = 0; i < spec.n; ++i) {
        auto& r = ds.rows[i];
        const std::size_t c = i % spec.classes;
        r.label = static_cast<double>(c);
        r.features.resize(spec.dims);
        for (double& t : r.features) {
          const std::size_t id = rng.uniform() < spec.noise ? 1 + rng.below(usable)
                                                            : 1 + c * block + rng.below(block);
          t = static_cast<double>(id);
        }
      }
      ds.task = spec.classes == 2 ? TaskKind::binary : TaskKind::multiclass;
      ds.num_classes = spec.classes;
      break;
    }
  }
  return ds;
}

}  // namespace fishgrad
