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

// Command-line driver. Kept in a header so tests can run it in-process.
//
// Every subcommand writes its results into --out together with a
// manifest.json. Result files hold no timestamps; wall-clock data lives in
// the manifest only.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11/CLI11.hpp>
#include "fishgrad.hpp"

namespace fishgrad::cli {

inline constexpr const char* kVersion = "0.1.0";

inline int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::usage: return 1;
    case ErrorKind::validation: return 2;
    case ErrorKind::runtime: return 3;
  }
  return 3;
}

struct Options {
  std::uint64_t seed = 0;
  std::string config;
  std::string out = ".";
  std::string mode;
  std::string sparsity;
  std::string samples;
  std::string task;
  std::string model;
  std::string mask;
  std::string fisher;
  std::string baseline;
  std::string candidate;
  std::string format = "tsv";
  std::string source = "empirical";
  double valid_fraction = 0.2;
  std::size_t threads = 0;
};

/// Loads a config file. A manifest written by an earlier run is accepted
/// too; its config snapshot is used.
inline json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  json j = read_json_file(path);
  if (j.contains("config") && j.contains("tool")) j = j["config"];
  require(j.is_object(), "config must be a JSON object");
  return j;
}

inline std::uint64_t file_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return 0;
  std::ostringstream ss;
  ss << in.rdbuf();
  return fnv1a(ss.str());
}

inline std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      require(used == item.size(), "malformed number '" + item + "'", ErrorKind::usage);
    } catch (const std::logic_error&) {
      fail(ErrorKind::usage, "malformed number '" + item + "'");
    }
  }
  return out;
}

inline std::vector<std::size_t> parse_size_list(const std::string& s) {
  std::vector<std::size_t> out;
  for (double v : parse_double_list(s)) {
    require(v >= 1 && v == static_cast<double>(static_cast<std::size_t>(v)), "sample counts must be positive integers",
            ErrorKind::usage);
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

class Run {
 public:
  Run(std::string command, std::vector<std::string> argv, const Options& opt)
      : command_(std::move(command)), argv_(std::move(argv)), opt_(opt), start_(std::chrono::steady_clock::now()) {
    config_ = load_config(opt.config);
    if (!opt.config.empty()) inputs_[opt.config] = hex64(file_hash(opt.config));
    std::filesystem::create_directories(opt.out);
  }

  const json& config() const { return config_; }
  json section(const char* key) const { return config_.contains(key) ? config_[key] : json::object(); }
  void record_config(const char* key, const json& value) { effective_[key] = value; }

  void input(const std::string& path) { inputs_[path] = hex64(file_hash(path)); }

  std::string path(const std::string& name) const { return (std::filesystem::path(opt_.out) / name).string(); }

  void write_json(const std::string& name, json j) {
    j["manifest"] = "manifest.json";
    write_json_file(path(name), j);
    outputs_.push_back(name);
  }

  void write_text(const std::string& name, const std::string& text) {
    write_text_file(path(name), text);
    outputs_.push_back(name);
  }

  void note_output(const std::string& name) { outputs_.push_back(name); }

  void finish() {
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    json manifest{{"tool", {{"name", "fishgrad"}, {"version", kVersion}}},
                  {"command", command_},
                  {"argv", argv_},
                  {"config", effective_},
                  {"inputs", inputs_},
                  {"outputs", outputs_},
                  {"master_seed", opt_.seed},
                  {"wall_clock_seconds", secs}};
    write_json_file(path("manifest.json"), manifest);
  }

 private:
  std::string command_;
  std::vector<std::string> argv_;
  Options opt_;
  std::chrono::steady_clock::time_point start_;
  json config_;
  json effective_ = json::object();
  json inputs_ = json::object();
  std::vector<std::string> outputs_;
};

// -- shared loaders -----------------------------------------------------------

inline LoadOptions load_options(const json& data_cfg, const std::optional<ModelSpec>& model) {
  LoadOptions lo;
  if (data_cfg.contains("encoding")) {
    const auto e = data_cfg["encoding"].get<std::string>();
    require(e == "bag_of_words" || e == "token_ids", "unknown text encoding '" + e + "'");
    lo.encoding = e == "token_ids" ? TextEncoding::token_ids : TextEncoding::bag_of_words;
  } else if (model && model->kind == ModelKind::tiny_attention) {
    lo.encoding = TextEncoding::token_ids;
  }
  lo.text_dim = detail::value_or<std::size_t>(data_cfg, "text_dim", lo.text_dim);
  lo.seq_len = detail::value_or<std::size_t>(data_cfg, "seq_len", lo.seq_len);
  lo.hash_seed = detail::value_or<std::uint64_t>(data_cfg, "hash_seed", lo.hash_seed);
  if (model && model->kind == ModelKind::tiny_attention) {
    lo.seq_len = model->input_dim;
    lo.text_dim = model->vocab_size;
  }
  return lo;
}

inline std::optional<std::string> find_split(const std::filesystem::path& dir, const std::string& stem) {
  for (const char* ext : {".tsv", ".jsonl"}) {
    const auto p = dir / (stem + ext);
    if (std::filesystem::exists(p)) return p.string();
  }
  return std::nullopt;
}

/// --task names a directory holding train/valid files, or a single data
/// file that is split by --seed.
inline TrainValid load_task(Run& run, const Options& opt, const std::optional<ModelSpec>& model) {
  require(!opt.task.empty(), "--task is required", ErrorKind::usage);
  const json data_cfg = run.section("data");
  LoadOptions lo = load_options(data_cfg, model);
  run.record_config("data", data_cfg);
  const std::filesystem::path p(opt.task);
  if (std::filesystem::is_directory(p)) {
    const auto train_path = find_split(p, "train");
    const auto valid_path = find_split(p, "valid");
    require(train_path && valid_path, "task directory '" + opt.task + "' needs train and valid files");
    run.input(*train_path);
    run.input(*valid_path);
    TrainValid tv{load_dataset(*train_path, {}, lo), {}};
    lo.task = tv.train.task;
    if (tv.train.task != TaskKind::regression) lo.num_classes = tv.train.num_classes;
    tv.valid = load_dataset(*valid_path, {}, lo);
    tv.train.split = "train";
    tv.valid.split = "valid";
    return tv;
  }
  require(std::filesystem::exists(p), "task path '" + opt.task + "' does not exist");
  run.input(opt.task);
  return train_valid_split(load_dataset(opt.task, {}, lo), 1.0 - opt.valid_fraction, derive_seed({opt.seed, 7}));
}

inline ModelSpec default_model_spec(const Dataset& train, std::uint64_t seed) {
  if (train.task == TaskKind::regression) return linear_regressor_spec(train.feature_dim, seed);
  return mlp_spec(train.feature_dim, {16}, train.num_classes, seed);
}

inline std::optional<ModelSpec> configured_model_spec(const Run& run, const Options& opt) {
  if (!run.config().contains("model")) return std::nullopt;
  ModelSpec s = run.config()["model"].get<ModelSpec>();
  if (!run.config()["model"].contains("seed")) s.seed = opt.seed;
  return s;
}

/// The model for fisher/train/ird: a checkpoint when --model is given, else
/// built from config (or a default sized to the data).
inline Model resolve_model(Run& run, const Options& opt, const Dataset& train) {
  if (!opt.model.empty()) {
    run.input(opt.model);
    Model m = load_checkpoint(opt.model);
    run.record_config("model", m.spec());
    return m;
  }
  ModelSpec spec = configured_model_spec(run, opt).value_or(default_model_spec(train, opt.seed));
  run.record_config("model", spec);
  return Model::build(spec);
}

inline TrainConfig resolve_train_config(Run& run, const Options& opt) {
  json j = run.section("train");
  if (!j.contains("seed")) j["seed"] = opt.seed;
  TrainConfig c = j.get<TrainConfig>();
  run.record_config("train", c);
  return c;
}

inline IrdConfig resolve_ird_config(Run& run, const Options& opt) {
  IrdConfig c;
  c.train = resolve_train_config(run, opt);
  const json j = run.section("ird");
  c.fisher_source = parse_fisher_source(detail::value_or<std::string>(j, "fisher_source", opt.source));
  c.restrict_sample_scores = detail::value_or(j, "restrict_sample_scores", false);
  c.train_on_subset = detail::value_or(j, "train_on_subset", false);
  c.score_initial = detail::value_or(j, "score_initial", true);
  run.record_config("ird", {{"fisher_source", to_string(c.fisher_source)},
                            {"restrict_sample_scores", c.restrict_sample_scores},
                            {"train_on_subset", c.train_on_subset},
                            {"score_initial", c.score_initial}});
  return c;
}

inline double single_sparsity(const Options& opt, double fallback) {
  if (opt.sparsity.empty()) return fallback;
  const auto v = parse_double_list(opt.sparsity);
  require(v.size() == 1, "--sparsity takes one value here", ErrorKind::usage);
  return v[0];
}

inline std::size_t single_samples(const Options& opt, std::size_t fallback) {
  if (opt.samples.empty()) return fallback;
  const auto v = parse_size_list(opt.samples);
  require(v.size() == 1, "--samples takes one value here", ErrorKind::usage);
  return v[0];
}

// -- subcommands --------------------------------------------------------------

inline void cmd_gen_data(Run& run, const Options& opt, std::ostream& out) {
  json j = run.section("synthetic");
  if (!opt.task.empty()) j["generator"] = opt.task;
  if (!j.contains("seed")) j["seed"] = opt.seed;
  if (!opt.samples.empty()) j["n"] = single_samples(opt, 0);
  const SyntheticSpec spec = j.get<SyntheticSpec>();
  run.record_config("synthetic", spec);
  const Dataset ds = generate(spec);
  auto tv = train_valid_split(ds, 1.0 - opt.valid_fraction, derive_seed({spec.seed, 7}));
  const FileFormat fmt = opt.format == "jsonl" ? FileFormat::jsonl : FileFormat::tsv;
  require(opt.format == "tsv" || opt.format == "jsonl", "--format must be tsv or jsonl", ErrorKind::usage);
  const std::string ext = fmt == FileFormat::jsonl ? ".jsonl" : ".tsv";
  save_dataset(run.path("train" + ext), tv.train, fmt);
  save_dataset(run.path("valid" + ext), tv.valid, fmt);
  run.note_output("train" + ext);
  run.note_output("valid" + ext);
  out << "wrote " << tv.train.size() << " train and " << tv.valid.size() << " valid rows\n";
}

inline void cmd_fisher(Run& run, const Options& opt, std::ostream& out) {
  const auto spec = configured_model_spec(run, opt);
  const TrainValid tv = load_task(run, opt, spec);
  const Model model = resolve_model(run, opt, tv.train);
  const std::size_t n = single_samples(opt, tv.train.size());
  const SampleSubset subset = n >= tv.train.size() ? all_samples(tv.train)
                                                   : random_samples(tv.train.size(), n, derive_seed({opt.seed, 0x5a, n}));
  const FisherSource source = parse_fisher_source(opt.source);
  const FisherDiagonal f = estimate_fisher(source, model, tv.train, subset);
  run.record_config("fisher", {{"source", to_string(source)}, {"samples", subset.size()}});
  save_checkpoint(run.path("model.ckpt"), model);
  run.note_output("model.ckpt");
  run.write_json("fisher.json", f);
  out << "fisher over " << subset.size() << " samples, " << f.size() << " parameters\n";
}

inline void cmd_mask(Run& run, const Options& opt, std::ostream& out) {
  require(!opt.fisher.empty(), "--fisher is required", ErrorKind::usage);
  run.input(opt.fisher);
  const auto f = read_json_as<FisherDiagonal>(opt.fisher);
  require(!opt.sparsity.empty(), "--sparsity is required", ErrorKind::usage);
  const double s = single_sparsity(opt, 0.0);
  const std::string kind = opt.mode.empty() ? "fisher" : opt.mode;
  require(kind == "fisher" || kind == "random", "mask --mode must be fisher or random", ErrorKind::usage);
  const Mask m = kind == "fisher" ? top_k_mask(f, s) : random_mask(f.size(), s, opt.seed, f.model_hash);
  run.record_config("mask", {{"mode", kind}, {"sparsity", s}});
  run.write_json("mask.json", m);
  out << "selected " << m.size() << " of " << m.num_params << " parameters\n";
}

inline void cmd_train(Run& run, const Options& opt, std::ostream& out) {
  const auto spec = configured_model_spec(run, opt);
  const TrainValid tv = load_task(run, opt, spec);
  Model model = resolve_model(run, opt, tv.train);
  const TrainConfig cfg = resolve_train_config(run, opt);
  TrainReport report;
  if (!opt.mask.empty()) {
    run.input(opt.mask);
    const Mask m = read_json_as<Mask>(opt.mask);
    report = train_masked(model, m, tv.train, tv.valid, cfg);
  } else {
    report = train_dense(model, tv.train, tv.valid, cfg);
  }
  save_checkpoint(run.path("model.ckpt"), model);
  run.note_output("model.ckpt");
  run.write_json("report.json", report);
  out << "trained " << report.epochs_run << " epochs, best validation metric " << format4(report.best_metric)
      << "\n";
}

inline void cmd_ird(Run& run, const Options& opt, std::ostream& out) {
  const auto spec = configured_model_spec(run, opt);
  const TrainValid tv = load_task(run, opt, spec);
  const Model model = resolve_model(run, opt, tv.train);
  IrdConfig cfg = resolve_ird_config(run, opt);
  const std::string mode = opt.mode.empty() ? "ird" : opt.mode;
  require(mode == "ird" || mode == "ird-inverse" || mode == "ird_inverse", "ird --mode must be ird or ird-inverse",
          ErrorKind::usage);
  const std::size_t n0 = std::min(single_samples(opt, 128), tv.train.size());
  const double s0 = single_sparsity(opt, 0.025);
  const SampleSubset x0 = random_samples(tv.train.size(), n0, derive_seed({opt.seed, 0x5a, n0}));
  const IRDTrace trace = mode == "ird" ? ird(model, tv.train, tv.valid, x0, s0, cfg)
                                       : ird_inverse(model, tv.train, tv.valid, x0, s0, cfg);
  run.record_config("search", {{"mode", mode}, {"samples", n0}, {"sparsity", s0}});
  run.write_json("trace.json", trace);
  out << trace.iterations() << " iterations, " << trace.records.size() << " scored records\n";
}

inline void cmd_grid(Run& run, const Options& opt, std::ostream& out) {
  const auto spec_cfg = configured_model_spec(run, opt);
  const TrainValid tv = load_task(run, opt, spec_cfg);
  json gj = run.section("grid");
  if (!opt.mode.empty()) gj["mode"] = opt.mode == "fish" ? "fish_random" : opt.mode;
  if (!opt.sparsity.empty()) gj["sparsities"] = parse_double_list(opt.sparsity);
  if (!opt.samples.empty()) gj["sample_counts"] = parse_size_list(opt.samples);
  if (!gj.contains("master_seed")) gj["master_seed"] = opt.seed;
  const GridSpec gs = gj.get<GridSpec>();
  const ModelSpec ms = spec_cfg.value_or(default_model_spec(tv.train, 0));
  run.record_config("model", ms);
  run.record_config("grid", gs);
  const IrdConfig cfg = resolve_ird_config(run, opt);
  const GridResult result = run_grid(gs, tv.train, tv.valid, ms, cfg, opt.threads);
  run.write_json("grid.json", result);
  run.write_text("grid.csv", grid_csv(result));
  run.write_text("heatmap.svg", render_heatmap(result));
  out << result.cells.size() << " cells, best " << format4(best_cell_score(result)) << "\n";
}

inline void cmd_report(Run& run, const Options& opt, std::ostream& out) {
  require(!opt.baseline.empty() && !opt.candidate.empty(), "--baseline and --candidate are required",
          ErrorKind::usage);
  run.input(opt.baseline);
  run.input(opt.candidate);
  const auto a = read_json_as<GridResult>(opt.baseline);
  const auto b = read_json_as<GridResult>(opt.candidate);
  const CellComparison cmp = compare_grids(a, b);
  run.write_json("comparison.json", cmp);
  run.write_text("comparison.csv", comparison_csv(cmp));
  run.write_text("heatmap.svg", render_heatmap(b, &cmp));
  run.write_text("baseline.svg", render_heatmap(a));
  out << "ups " << cmp.ups << ", downs " << cmp.downs << ", ties " << cmp.ties << "\n";
}

// -- entry point --------------------------------------------------------------

inline void print_error(std::ostream& err, ErrorKind kind, const std::string& message) {
  err << json{{"error", {{"kind", to_string(kind)}, {"message", message}, {"exit_code", exit_code(kind)}}}}.dump()
      << "\n";
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"fishgrad: Fisher-information parameter masks and range-decreasing search"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  Options opt;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--seed", opt.seed, "master seed");
    sub->add_option("--config", opt.config, "JSON config file, or a manifest from an earlier run");
    sub->add_option("--out", opt.out, "output directory");
    sub->add_option("--threads", opt.threads, "worker cap (default: FISHGRAD_THREADS or all cores)");
  };
  auto with_task = [&](CLI::App* sub) {
    sub->add_option("--task", opt.task, "task directory (train/valid files) or a single data file");
    sub->add_option("--valid-fraction", opt.valid_fraction, "validation share when --task is a single file");
  };

  auto* gen = app.add_subcommand("gen-data", "generate a synthetic task");
  common(gen);
  gen->add_option("--task", opt.task, "generator: gaussian_blobs, xor_ring, linear_regression, token_topic");
  gen->add_option("--samples", opt.samples, "number of rows");
  gen->add_option("--format", opt.format, "tsv or jsonl");
  gen->add_option("--valid-fraction", opt.valid_fraction, "validation share");

  auto* fisher = app.add_subcommand("fisher", "estimate the diagonal Fisher");
  common(fisher);
  with_task(fisher);
  fisher->add_option("--model", opt.model, "model checkpoint");
  fisher->add_option("--samples", opt.samples, "number of random training samples (default all)");
  fisher->add_option("--source", opt.source, "empirical or expectation");

  auto* mask = app.add_subcommand("mask", "build a parameter mask");
  common(mask);
  mask->add_option("--fisher", opt.fisher, "Fisher dump")->required();
  mask->add_option("--sparsity", opt.sparsity, "fraction of parameters to select");
  mask->add_option("--mode", opt.mode, "fisher (top-k) or random");

  auto* train = app.add_subcommand("train", "masked fine-tuning");
  common(train);
  with_task(train);
  train->add_option("--model", opt.model, "model checkpoint");
  train->add_option("--mask", opt.mask, "mask file (dense training when omitted)");

  auto* irdc = app.add_subcommand("ird", "range-decreasing search");
  common(irdc);
  with_task(irdc);
  irdc->add_option("--model", opt.model, "model checkpoint");
  irdc->add_option("--mode", opt.mode, "ird or ird-inverse");
  irdc->add_option("--samples", opt.samples, "initial sample count");
  irdc->add_option("--sparsity", opt.sparsity, "initial sparsity");
  irdc->add_option("--source", opt.source, "empirical or expectation");

  auto* grid = app.add_subcommand("grid", "sparsity x samples grid");
  common(grid);
  with_task(grid);
  grid->add_option("--mode", opt.mode, "fish, ird or ird-inverse");
  grid->add_option("--sparsity", opt.sparsity, "comma-separated descending sparsities");
  grid->add_option("--samples", opt.samples, "comma-separated descending sample counts");
  grid->add_option("--source", opt.source, "empirical or expectation");

  auto* report = app.add_subcommand("report", "compare two grids");
  common(report);
  report->add_option("--baseline", opt.baseline, "baseline grid.json")->required();
  report->add_option("--candidate", opt.candidate, "candidate grid.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    print_error(err, ErrorKind::usage, e.what());
    return 1;
  }

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    CLI::App* sub = app.get_subcommands().front();
    Run r(sub->get_name(), args, opt);
    if (sub == gen) cmd_gen_data(r, opt, out);
    if (sub == fisher) cmd_fisher(r, opt, out);
    if (sub == mask) cmd_mask(r, opt, out);
    if (sub == train) cmd_train(r, opt, out);
    if (sub == irdc) cmd_ird(r, opt, out);
    if (sub == grid) cmd_grid(r, opt, out);
    if (sub == report) cmd_report(r, opt, out);
    r.finish();
    return 0;
  } catch (const Error& e) {
    print_error(err, e.kind(), e.what());
    return exit_code(e.kind());
  } catch (const json::exception& e) {
    print_error(err, ErrorKind::validation, e.what());
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    print_error(err, ErrorKind::runtime, e.what());
    return 3;
  } catch (const std::exception& e) {
    print_error(err, ErrorKind::runtime, e.what());
    return 3;
  }
}

}  // namespace fishgrad::cli
