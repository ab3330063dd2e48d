// Copyright 2026 The wop Authors.
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

#include "wop/cli.h"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "wop/attention.h"
#include "wop/attnprobe.h"
#include "wop/corpus.h"
#include "wop/error.h"
#include "wop/explain.h"
#include "wop/filter.h"
#include "wop/gateway.h"
#include "wop/io.h"
#include "wop/lexicon.h"
#include "wop/metrics.h"
#include "wop/perturb.h"
#include "wop/random.h"
#include "wop/synthgen.h"
#include "wop/text.h"

namespace wop {

namespace {

namespace fs = std::filesystem;

// Every option value any subcommand can take. Each parse pass binds a fresh
// instance.
struct Params {
  std::string config;
  std::string gateway = "builtin:lexicon";
  std::string log_level = "warn";
  std::string task;
  std::string input;
  std::string format;
  std::string out;
  std::string out_dir;
  std::string manifest;
  uint64_t seed = 0;
  size_t jobs = 1;
  size_t batch_size = 64;

  size_t n = 1;
  size_t runs = 1;
  std::string real;
  std::vector<std::string> shuffled;
  std::vector<std::string> preds;
  std::vector<std::string> inputs;
  int k = 5;

  std::string mode = "lime";
  size_t samples = 1000;
  double kernel_width = 25.0;
  int field = -1;
  bool both_fields = false;
  size_t limit = 0;

  std::string original;
  std::string shuffled_maps;
  std::string shuffle_manifest;
  bool use_abs = false;
  std::string maps;
  std::string lexicon;

  std::vector<std::string> attn;
  std::vector<std::string> shuffled_attn;
  std::string shuffled_input;
  std::string attn_out;
  int budget = kEditBudget;
  std::string direction = "both";

  std::string reports;
  std::string strategy = "top_k";
  int layers = 0;
  int heads = 0;
  std::vector<std::string> plans;

  std::string train;
  std::string dev;
};

void Define(CLI::App& app, Params& p, bool strict) {
  app.require_subcommand(1, 1);
  // Global options may follow the subcommand name.
  app.fallthrough();
  app.set_version_flag("--version", ToolVersion());
  app.add_option("--config", p.config, "Flat key = value config file");
  app.add_option("--gateway", p.gateway,
                 "Classifier URI (builtin:lexicon, builtin:overlap[:t], "
                 "builtin:first-token, builtin:table:<preds>, exec:<cmd>, "
                 "tcp:<host>:<port>)");
  app.add_option("--log-level", p.log_level, "trace|debug|info|warn|error|off");

  auto req = [strict](CLI::Option* o) { return strict ? o->required() : o; };
  auto common = [&](CLI::App* s, bool needs_task) {
    auto* t = s->add_option("--task", p.task, "Task id (" + Join(BuiltinTaskIds(), ", ") + ")");
    if (needs_task) req(t);
    s->add_option("--format", p.format, "Input format: tsv or jsonl (default: by extension)");
    s->add_option("--manifest", p.manifest, "Where to write the run manifest");
    s->add_option("--batch-size", p.batch_size, "Examples per classifier request")
        ->check(CLI::PositiveNumber);
  };

  auto* filter = app.add_subcommand("filter", "Select single-sentence, correctly classified, balanced examples");
  common(filter, true);
  req(filter->add_option("--input", p.input, "Dataset to filter"));
  req(filter->add_option("--out", p.out, "Filtered dataset path"));
  filter->add_option("--seed", p.seed, "Balancing seed");

  auto* shuffle = app.add_subcommand("shuffle", "Shuffle the target field's n-grams");
  common(shuffle, true);
  req(shuffle->add_option("--input", p.input, "Filtered dataset"));
  req(shuffle->add_option("--out-dir", p.out_dir, "Directory for shuffled runs"));
  shuffle->add_option("--n", p.n, "Chunk size")->check(CLI::Range(1, 3));
  shuffle->add_option("--seed", p.seed, "Run seed");
  shuffle->add_option("--runs", p.runs, "Independent runs")->check(CLI::PositiveNumber);
  shuffle->add_option("--jobs", p.jobs, "Worker threads")->check(CLI::PositiveNumber);

  auto* predict = app.add_subcommand("predict", "Classify a dataset through the gateway");
  common(predict, true);
  req(predict->add_option("--input", p.input, "Dataset"));
  req(predict->add_option("--out", p.out, "Predictions JSONL"));
  predict->add_option("--plan", p.plans, "Ablation plan JSON")->expected(0, 1);

  auto* wos = app.add_subcommand("wos", "Word-order sensitivity of shuffled runs");
  common(wos, true);
  req(wos->add_option("--real", p.real, "Filtered real dev set"));
  wos->add_option("--shuffled", p.shuffled, "Shuffled dev sets, one per run")->delimiter(',');
  wos->add_option("--preds", p.preds, "Predictions per shuffled set (default: query the gateway)")
      ->delimiter(',');
  wos->add_option("--n", p.n, "Chunk size when shuffling in memory")->check(CLI::Range(1, 3));
  wos->add_option("--runs", p.runs, "Runs when shuffling in memory")->check(CLI::PositiveNumber);
  wos->add_option("--seed", p.seed, "Run seed when shuffling in memory");
  wos->add_option("--jobs", p.jobs, "Worker threads")->check(CLI::PositiveNumber);
  wos->add_option("--out", p.out, "Report TSV (JSON alongside)");

  auto* conf = app.add_subcommand("confidence", "Mean confidence per dataset");
  common(conf, true);
  req(conf->add_option("--inputs", p.inputs, "Datasets")->delimiter(','));
  conf->add_option("--preds", p.preds, "Predictions per dataset (default: query the gateway)")
      ->delimiter(',');
  conf->add_option("--out", p.out, "Report TSV (JSON alongside)");

  auto* bins = app.add_subcommand("bins", "Bin regression scores into six unit ranges");
  common(bins, true);
  req(bins->add_option("--input", p.input, "Dataset"));
  bins->add_option("--preds", p.preds, "Predictions (default: query the gateway)")
      ->expected(0, 1);
  bins->add_option("--out", p.out, "Report TSV (JSON alongside)");

  auto* groups = app.add_subcommand("groups", "Consistency groups over k 1-gram shuffle runs");
  common(groups, true);
  req(groups->add_option("--input", p.input, "Filtered real dev set"));
  groups->add_option("--k", p.k, "Runs")->check(CLI::PositiveNumber);
  groups->add_option("--seed", p.seed, "Run seed");
  groups->add_option("--out", p.out, "Report TSV (JSON alongside)");

  auto* explain = app.add_subcommand("explain", "Token attributions");
  common(explain, true);
  req(explain->add_option("--input", p.input, "Dataset"));
  req(explain->add_option("--out", p.out, "Attribution maps JSONL"));
  explain->add_option("--mode", p.mode, "lime or occlusion");
  explain->add_option("--samples", p.samples, "Sampled masks above the exhaustive size")
      ->check(CLI::Range(size_t{2}, size_t{1} << 24));
  explain->add_option("--kernel-width", p.kernel_width, "Kernel width on the x100 cosine distance")
      ->check(CLI::PositiveNumber);
  explain->add_option("--field", p.field, "Field index (default: the task's target field)");
  explain->add_flag("--both-fields", p.both_fields, "Attribute every field");
  explain->add_option("--seed", p.seed, "Sampling seed");
  explain->add_option("--limit", p.limit, "Only the first N examples (0 = all)");

  auto* hsim = app.add_subcommand("heatmap-sim", "Cosine of original vs realigned shuffled heatmaps");
  common(hsim, false);
  req(hsim->add_option("--original", p.original, "Maps of the real set"));
  req(hsim->add_option("--shuffled", p.shuffled_maps, "Maps of the shuffled set"));
  req(hsim->add_option("--shuffle-manifest", p.shuffle_manifest, "Manifest of the shuffle run"));
  hsim->add_flag("--abs", p.use_abs, "Compare absolute scores");
  hsim->add_option("--out", p.out, "Report TSV (JSON alongside)");

  auto* lex = app.add_subcommand("lexicon-stats", "Polarity of each example's top-1 word");
  common(lex, true);
  req(lex->add_option("--maps", p.maps, "Attribution maps"));
  req(lex->add_option("--input", p.input, "Dataset with gold labels"));
  lex->add_option("--lexicon", p.lexicon,
                  "Lexicon file: signed list, or word<TAB>score (default: built-in)");
  lex->add_option("--out", p.out, "Report TSV (JSON alongside)");

  auto* match = app.add_subcommand("attn-match", "Find word-matching attention heads");
  common(match, true);
  req(match->add_option("--input", p.input, "Dataset the tensors belong to"));
  match->add_option("--attn", p.attn, "ATTN1/JSON files or directories (default: query the gateway)")
      ->delimiter(',');
  match->add_option("--attn-out", p.attn_out, "Save gateway tensors here as ATTN1");
  match->add_option("--shuffled-input", p.shuffled_input, "Shuffled dataset for overlap scores");
  match->add_option("--shuffled-attn", p.shuffled_attn, "Tensors of the shuffled dataset")
      ->delimiter(',');
  match->add_option("--budget", p.budget, "Total edit-distance budget")->check(CLI::NonNegativeNumber);
  match->add_option("--direction", p.direction, "both, first-to-second or second-to-first");
  match->add_option("--out", p.out, "Report TSV (JSON alongside)");

  auto* ablate = app.add_subcommand("ablate", "Accuracy with attention heads zeroed");
  common(ablate, true);
  req(ablate->add_option("--input", p.input, "Dataset"));
  ablate->add_option("--reports", p.reports, "attn-match JSON to build a plan from");
  ablate->add_option("--k", p.k, "Heads to ablate")->check(CLI::PositiveNumber);
  ablate->add_option("--strategy", p.strategy, "top_k or random");
  ablate->add_option("--seed", p.seed, "Seed for the random strategy");
  ablate->add_option("--layers", p.layers, "Model layers (random strategy)");
  ablate->add_option("--heads", p.heads, "Heads per layer (random strategy)");
  ablate->add_option("--plan", p.plans, "Extra plan JSON files")->delimiter(',');
  ablate->add_option("--out", p.out, "Report TSV (JSON alongside)");

  auto* synth = app.add_subcommand("synth", "Build real/fake word-order datasets");
  common(synth, true);
  synth->add_option("--train", p.train, "Source training set");
  synth->add_option("--dev", p.dev, "Source dev set");
  synth->add_option("--seed", p.seed, "Swap seed");
  req(synth->add_option("--out-dir", p.out_dir, "Output directory"));

  auto* report = app.add_subcommand("report", "Merge wos JSON reports into one table");
  req(report->add_option("--inputs", p.inputs, "wos JSON reports")->delimiter(','));
  report->add_option("--manifest", p.manifest, "Where to write the run manifest");
  report->add_option("--out", p.out, "Report TSV (JSON alongside)");
}

// ---------------------------------------------------------------------------
// Config resolution.

std::map<std::string, std::string> ReadConfigFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file '" + path + "'");
  std::map<std::string, std::string> kv;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view t = Trim(line);
    if (t.empty() || t.front() == '#') continue;
    const size_t eq = t.find('=');
    if (eq == std::string_view::npos) {
      throw UsageError(path + ":" + std::to_string(line_no) + ": expected key = value");
    }
    std::string key(Trim(t.substr(0, eq)));
    std::replace(key.begin(), key.end(), '_', '-');
    kv[key] = std::string(Trim(t.substr(eq + 1)));
  }
  return kv;
}

std::string EnvName(const std::string& key) {
  std::string name = "WOP_";
  for (char c : key) {
    name += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  }
  return name;
}

// Options of the app and the chosen subcommand that the command line left
// unset, as "--name=value" arguments drawn from env or config.
std::vector<std::string> Fallbacks(CLI::App& app, const Params& p,
                                   const EnvLookup& env) {
  std::map<std::string, std::string> config;
  std::string config_path = p.config;
  if (config_path.empty()) {
    if (auto v = env("WOP_CONFIG")) config_path = *v;
  }
  if (!config_path.empty()) config = ReadConfigFile(config_path);

  std::vector<std::string> extra;
  auto visit = [&](CLI::App* scope) {
    for (CLI::Option* opt : scope->get_options()) {
      if (opt->count() > 0 || opt->get_lnames().empty()) continue;
      const std::string& name = opt->get_lnames().front();
      if (name == "help" || name == "version" || name == "config") continue;
      std::optional<std::string> value = env(EnvName(name));
      if (!value) {
        if (auto it = config.find(name); it != config.end()) value = it->second;
      }
      if (value) extra.push_back("--" + name + "=" + *value);
    }
  };
  visit(&app);
  for (CLI::App* sub : app.get_subcommands()) visit(sub);
  return extra;
}

// ---------------------------------------------------------------------------
// Shared plumbing for subcommands.

class Run {
 public:
  Run(const Params& p, CLI::App* sub, std::ostream& out)
      : p_(p), sub_(sub), stdout_(out) {
    manifest_.command = sub->get_name();
    for (CLI::Option* opt : sub->get_options()) {
      if (opt->get_lnames().empty() || opt->count() == 0) continue;
      const std::string& name = opt->get_lnames().front();
      if (name == "help") continue;
      manifest_.config[name] = Join(opt->results(), ",");
    }
  }

  const TaskSpec& spec() const { return BuiltinTaskSpec(p_.task); }

  DataFormat FormatFor(const std::string& path) const {
    return p_.format.empty() ? DataFormatFromPath(path) : ParseDataFormat(p_.format);
  }

  Dataset Load(const std::string& path, const TaskSpec& spec) {
    manifest_.AddInput(path);
    return LoadDataset(path, FormatFor(path), spec);
  }

  void Input(const std::string& path) { manifest_.AddInput(path); }

  Classifier& clf() {
    if (!clf_) {
      clf_ = MakeClassifier(p_.gateway);
      manifest_.config["gateway"] = p_.gateway;
    }
    return *clf_;
  }

  void Seed(const std::string& name, uint64_t seed) { manifest_.seeds[name] = seed; }

  // Queued so nothing lands on disk unless the whole command succeeds.
  void Output(const std::string& path, std::string content) {
    manifest_.outputs.push_back(path);
    pending_.emplace_back(path, std::move(content));
  }

  // TSV report: to --out (plus JSON alongside) or to stdout.
  void Report(const std::string& tsv, const Json& json) {
    if (p_.out.empty()) {
      stdout_ << tsv;
      return;
    }
    Output(p_.out, tsv);
    Output(Sibling(p_.out, ".json"), json.dump(2) + "\n");
  }

  // base(path) + suffix, where base drops one extension.
  static std::string Sibling(const std::string& path, const std::string& suffix) {
    const fs::path fp(path);
    if (!fp.has_extension()) return path + suffix;
    return (fp.parent_path() / fp.stem()).string() + suffix;
  }

  void Commit() {
    std::string manifest_path = p_.manifest;
    if (manifest_path.empty()) {
      if (!p_.out_dir.empty()) {
        manifest_path = (fs::path(p_.out_dir) / "manifest.json").string();
      } else if (!p_.out.empty()) {
        manifest_path = Sibling(p_.out, ".manifest.json");
      }
    }
    for (const auto& [path, content] : pending_) AtomicWriteFile(path, content);
    if (!manifest_path.empty()) {
      AtomicWriteFile(manifest_path, manifest_.ToJson().dump(2) + "\n");
    }
  }

  std::ostream& out() { return stdout_; }
  const Params& p() const { return p_; }
  CLI::App* sub() const { return sub_; }

 private:
  const Params& p_;
  CLI::App* sub_;
  std::ostream& stdout_;
  RunManifest manifest_;
  std::unique_ptr<Classifier> clf_;
  std::vector<std::pair<std::string, std::string>> pending_;
};

std::string Fixed2(double v) { return FormatFixed(v, 2); }

Json OptionalJson(const std::optional<double>& v) {
  return v ? Json(*v) : Json(nullptr);
}

// Reorders preds to follow ds, failing on any id difference.
std::vector<PredictionRecord> AlignPredictions(std::vector<PredictionRecord> preds,
                                               const Dataset& ds,
                                               const std::string& source) {
  std::map<std::string, PredictionRecord> by_id;
  for (auto& pr : preds) {
    const std::string id = pr.example_id;
    if (!by_id.emplace(id, std::move(pr)).second) {
      throw DataError(source + ": duplicate prediction for '" + id + "'");
    }
  }
  if (by_id.size() != ds.size()) {
    throw DataError(source + ": id mismatch: " + std::to_string(by_id.size()) +
                    " predictions for " + std::to_string(ds.size()) + " examples");
  }
  std::vector<PredictionRecord> out;
  out.reserve(ds.size());
  for (const auto& ex : ds.examples) {
    auto it = by_id.find(ex.id);
    if (it == by_id.end()) {
      throw DataError(source + ": id mismatch: no prediction for '" + ex.id + "'");
    }
    out.push_back(std::move(it->second));
  }
  return out;
}

std::vector<PredictionRecord> PredictionsFor(Run& run, const Dataset& ds,
                                             const TaskSpec& spec,
                                             const std::vector<std::string>& files,
                                             size_t index) {
  if (index < files.size()) {
    run.Input(files[index]);
    return AlignPredictions(LoadPredictions(files[index]), ds, files[index]);
  }
  return PredictDataset(run.clf(), spec, ds, run.p().batch_size);
}

AblationPlan LoadPlan(const std::string& path) {
  try {
    return AblationPlanFromJson(Json::parse(ReadFile(path)));
  } catch (const Json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Subcommands.

void CmdFilter(Run& run) {
  const auto& p = run.p();
  const TaskSpec& spec = run.spec();
  run.Seed("seed", p.seed);
  const Dataset ds = run.Load(p.input, spec);
  const FilterResult r = FilterExamples(ds, spec, run.clf(), p.seed, p.batch_size);

  std::ostringstream data;
  WriteDataset(data, r.dataset, run.FormatFor(p.out), spec);
  run.Output(p.out, data.str());

  std::ostringstream tsv;
  tsv << "label\traw\tstep1\tstep2\tstep3\n";
  for (const auto& [label, c] : r.trace.counts) {
    tsv << label << '\t' << c[0] << '\t' << c[1] << '\t' << c[2] << '\t' << c[3] << '\n';
  }
  run.Output(Run::Sibling(p.out, ".trace.tsv"), tsv.str());
  run.Output(Run::Sibling(p.out, ".trace.json"), r.trace.ToJson().dump(2) + "\n");
  run.out() << tsv.str();
}

void CmdShuffle(Run& run) {
  const auto& p = run.p();
  const TaskSpec& spec = run.spec();
  run.Seed("seed", p.seed);
  const Dataset ds = run.Load(p.input, spec);
  std::ostringstream tsv;
  tsv << "run\tseed\tpath\tshuffled\tdropped\n";
  for (size_t r = 0; r < p.runs; ++r) {
    const uint64_t seed = DeriveRunSeed(p.seed, r);
    run.Seed("run" + std::to_string(r), seed);
    const ShuffledDataset sd = ShuffleDataset(ds, spec, p.n, seed, p.jobs);
    const std::string stem = "devs_n" + std::to_string(p.n) + "_run" + std::to_string(r);
    const std::string path = (fs::path(p.out_dir) / (stem + ".jsonl")).string();
    std::ostringstream data;
    WriteDataset(data, sd.dataset, DataFormat::kJsonl, spec);
    run.Output(path, data.str());
    run.Output((fs::path(p.out_dir) / (stem + ".shuffle.json")).string(),
               sd.ManifestJson().dump(2) + "\n");
    tsv << r << '\t' << seed << '\t' << path << '\t' << sd.dataset.size() << '\t'
        << sd.dropped_ids.size() << '\n';
  }
  run.out() << tsv.str();
}

void CmdPredict(Run& run) {
  const auto& p = run.p();
  const TaskSpec& spec = run.spec();
  const Dataset ds = run.Load(p.input, spec);
  std::optional<AblationPlan> plan;
  if (!p.plans.empty()) {
    run.Input(p.plans.front());
    plan = LoadPlan(p.plans.front());
  }
  const auto preds = PredictDataset(run.clf(), spec, ds, p.batch_size,
                                    plan ? &*plan : nullptr);
  std::ostringstream data;
  WritePredictions(data, preds);
  run.Output(p.out, data.str());
  if (!spec.is_regression()) {
    run.out() << "n\taccuracy\n" << ds.size() << '\t' << Fixed2(Accuracy(preds, ds)) << '\n';
  }
}

struct RunScore {
  std::string name;
  size_t n = 0;
  double p = 0.0;
  std::optional<double> confidence;
};

std::optional<double> MaybeMeanConfidence(const std::vector<PredictionRecord>& preds) {
  for (const auto& pr : preds) {
    if (!pr.confidence) return std::nullopt;
  }
  return MeanConfidence(preds);
}

void CmdWos(Run& run) {
  const auto& p = run.p();
  const TaskSpec& spec = run.spec();
  if (spec.is_regression()) {
    throw UsageError("wos needs a binary task; use bins for " + spec.task_id);
  }
  const Dataset real = run.Load(p.real, spec);
  if (real.empty()) throw DataError("'" + p.real + "' is empty");
  std::set<std::string> real_ids;
  for (const auto& ex : real.examples) real_ids.insert(ex.id);

  std::vector<std::pair<std::string, Dataset>> sets;
  if (!p.shuffled.empty()) {
    if (!p.preds.empty() && p.preds.size() != p.shuffled.size()) {
      throw UsageError("need one --preds file per --shuffled set");
    }
    for (const auto& path : p.shuffled) sets.emplace_back(path, run.Load(path, spec));
  } else {
    if (!p.preds.empty()) throw UsageError("--preds needs --shuffled");
    run.Seed("seed", p.seed);
    for (size_t r = 0; r < p.runs; ++r) {
      const uint64_t seed = DeriveRunSeed(p.seed, r);
      run.Seed("run" + std::to_string(r), seed);
      sets.emplace_back("run" + std::to_string(r),
                        ShuffleDataset(real, spec, p.n, seed, p.jobs).dataset);
    }
  }

  std::vector<RunScore> scores;
  for (size_t i = 0; i < sets.size(); ++i) {
    const auto& [name, ds] = sets[i];
    if (ds.empty()) throw DataError("shuffled set '" + name + "' is empty");
    for (const auto& ex : ds.examples) {
      if (!real_ids.count(ex.id)) {
        throw DataError("'" + name + "' has id '" + ex.id + "' not in the real set");
      }
    }
    const auto preds = PredictionsFor(run, ds, spec, p.preds, i);
    scores.push_back({name, ds.size(), Accuracy(preds, ds), MaybeMeanConfidence(preds)});
  }

  double sum_p = 0.0;
  double sum_c = 0.0;
  bool have_c = true;
  for (const auto& s : scores) {
    sum_p += s.p;
    have_c = have_c && s.confidence.has_value();
    if (s.confidence) sum_c += *s.confidence;
  }
  const double runs = static_cast<double>(scores.size());
  const double mean_p = sum_p / runs;
  std::optional<double> mean_c;
  if (have_c) mean_c = sum_c / runs;
  const WosScore w = Wos(mean_p);

  std::ostringstream tsv;
  tsv << "task\tn\truns\tmean_p\tmean_confidence\twos\n";
  tsv << spec.task_id << '\t' << real.size() << '\t' << scores.size() << '\t'
      << Fixed2(mean_p) << '\t' << (mean_c ? Fixed2(*mean_c) : "NA") << '\t'
      << Fixed2(w.rounded()) << '\n';
  Json j;
  j["task"] = spec.task_id;
  j["n"] = real.size();
  j["runs"] = scores.size();
  j["mean_p"] = mean_p;
  j["mean_confidence"] = OptionalJson(mean_c);
  j["wos"] = w.rounded();
  j["wos_raw"] = w.s;
  Json per = Json::array();
  for (const auto& s : scores) {
    per.push_back({{"set", s.name}, {"n", s.n}, {"p", s.p},
                   {"confidence", OptionalJson(s.confidence)}});
  }
  j["per_run"] = std::move(per);
  run.Report(tsv.str(), j);
}

void CmdConfidence(Run& run) {
  const auto& p = run.p();
  const TaskSpec& spec = run.spec();
  if (spec.is_regression()) throw UsageError("confidence needs a binary task");
  if (!p.preds.empty() && p.preds.size() != p.inputs.size()) {
    throw UsageError("need one --preds file per --inputs set");
  }
  std::ostringstream tsv;
  tsv << "input\tn\taccuracy\tmean_confidence\n";
  Json rows = Json::array();
  double sum = 0.0;
  for (size_t i = 0; i < p.inputs.size(); ++i) {
    const Dataset ds = run.Load(p.inputs[i], spec);
    if (ds.empty()) throw DataError("'" + p.inputs[i] + "' is empty");
    const auto preds = PredictionsFor(run, ds, spec, p.preds, i);
    const double c = MeanConfidence(preds);
    const double acc = Accuracy(preds, ds);
    sum += c;
    tsv << p.inputs[i] << '\t' << ds.size() << '\t' << Fixed2(acc) << '\t'
        << FormatFixed(c, 4) << '\n';
    rows.push_back({{"input", p.inputs[i]}, {"n", ds.size()}, {"accuracy", acc},
                    {"mean_confidence", c}});
  }
  const double mean = sum / static_cast<double>(p.inputs.size());
  tsv << "mean\t\t\t" << FormatFixed(mean, 4) << '\n';
  Json j;
  j["task"] = spec.task_id;
  j["sets"] = std::move(rows);
  j["mean_confidence"] = mean;
  run.Report(tsv.str(), j);
}

void CmdBins(Run& run) {
  const auto& p = run.p();
  const TaskSpec& spec = run.spec();
  if (!spec.is_regression()) throw UsageError("bins needs a regression task");
  const Dataset ds = run.Load(p.input, spec);
  if (ds.empty()) throw DataError("'" + p.input + "' is empty");
  const auto preds = PredictionsFor(run, ds, spec, p.preds, 0);
  std::vector<double> predicted;
  std::vector<double> gold;
  for (size_t i = 0; i < preds.size(); ++i) {
    const auto* v = std::get_if<double>(&preds[i].label);
    if (!v) throw DataError("prediction '" + preds[i].example_id + "' is not a score");
    predicted.push_back(*v);
    gold.push_back(std::get<double>(ds.examples[i].gold_label));
  }
  const auto counts = BinScores(predicted);
  std::optional<double> rho;
  try {
    rho = Spearman(predicted, gold);
  } catch (const DataError& e) {
    spdlog::warn("spearman: {}", e.what());
  }
  static const char* kRanges[] = {"[0,1)", "[1,2)", "[2,3)", "[3,4)", "[4,5)", "[5,inf)"};
  std::ostringstream tsv;
  tsv << "bin\tcount\n";
  for (size_t b = 0; b < counts.size(); ++b) tsv << kRanges[b] << '\t' << counts[b] << '\n';
  tsv << "spearman\t" << (rho ? Fixed2(*rho) : "NA") << '\n';
  Json j;
  j["task"] = spec.task_id;
  j["n"] = ds.size();
  j["counts"] = counts;
  j["spearman"] = OptionalJson(rho);
  run.Report(tsv.str(), j);
}

void CmdGroups(Run& run) {
  const auto& p = run.p();
  const TaskSpec& spec = run.spec();
  if (spec.is_regression()) throw UsageError("groups needs a binary task");
  run.Seed("seed", p.seed);
  const Dataset ds = run.Load(p.input, spec);
  const ConsistencyGroups g =
      ComputeConsistencyGroups(ds, spec, run.clf(), p.k, p.seed, p.batch_size);
  std::ostringstream tsv;
  tsv << "group\tcount\tshare\n";
  for (const auto& [m, ids] : g.groups) {
    const double share = ds.empty() ? 0.0
        : 100.0 * static_cast<double>(ids.size()) / static_cast<double>(ds.size());
    tsv << m << '/' << g.k << '\t' << ids.size() << '\t' << Fixed2(share) << '\n';
  }
  Json j = g.ToJson();
  j["task"] = spec.task_id;
  j["n"] = ds.size();
  run.Report(tsv.str(), j);
}

void CmdExplain(Run& run) {
  const auto& p = run.p();
  const TaskSpec& spec = run.spec();
  run.Seed("seed", p.seed);
  const Dataset ds = run.Load(p.input, spec);
  AttributionConfig cfg;
  cfg.mode = ParseAttributionMode(p.mode);
  cfg.n_samples = p.samples;
  cfg.kernel_width = p.kernel_width;
  cfg.batch_size = std::max<size_t>(p.batch_size, 1);

  std::vector<size_t> fields;
  if (p.both_fields) {
    for (size_t f = 0; f < spec.field_names.size(); ++f) fields.push_back(f);
  } else if (p.field >= 0) {
    if (static_cast<size_t>(p.field) >= spec.field_names.size()) {
      throw UsageError("--field " + std::to_string(p.field) + " out of range");
    }
    fields.push_back(static_cast<size_t>(p.field));
  } else {
    fields.push_back(spec.target_field);
  }

  std::vector<AttributionMap> maps;
  const size_t limit = p.limit == 0 ? ds.size() : std::min(p.limit, ds.size());
  for (size_t i = 0; i < limit; ++i) {
    const Example& ex = ds.examples[i];
    for (size_t f : fields) {
      cfg.seed = DeriveSeed(p.seed, ex.id + "/" + std::to_string(f));
      maps.push_back(Attribute(run.clf(), spec, ex, f, cfg));
    }
  }
  std::ostringstream data;
  WriteAttributionMaps(data, maps);
  run.Output(p.out, data.str());
  run.out() << "maps\t" << maps.size() << '\n';
}

void CmdHeatmapSim(Run& run) {
  const auto& p = run.p();
  run.Input(p.original);
  run.Input(p.shuffled_maps);
  run.Input(p.shuffle_manifest);
  const auto original = LoadAttributionMaps(p.original);
  const auto shuffled = LoadAttributionMaps(p.shuffled_maps);
  Json manifest;
  try {
    manifest = Json::parse(ReadFile(p.shuffle_manifest));
  } catch (const Json::exception& e) {
    throw DataError(p.shuffle_manifest + ": " + e.what());
  }
  const size_t n = manifest.at("n").get<size_t>();
  const Json& perms = manifest.at("permutations");

  std::map<std::string, const AttributionMap*> by_id;
  for (const auto& m : shuffled) by_id[m.example_id + "/" + std::to_string(m.field)] = &m;

  std::ostringstream tsv;
  tsv << "id\tcosine\n";
  Json rows = Json::array();
  std::vector<AttributionMap> before;
  std::vector<AttributionMap> after;
  double sum = 0.0;
  size_t used = 0;
  size_t skipped = 0;
  for (const auto& o : original) {
    auto it = by_id.find(o.example_id + "/" + std::to_string(o.field));
    auto perm = perms.find(o.example_id);
    if (it == by_id.end() || perm == perms.end()) {
      ++skipped;
      continue;
    }
    ShuffleResult sr;
    sr.sentence.tokens = it->second->tokens;
    sr.n = n;
    sr.permutation = perm->get<std::vector<size_t>>();
    AttributionMap realigned = Realign(*it->second, sr);
    realigned.example_id = o.example_id;
    double cos = 0.0;
    try {
      cos = HeatmapSimilarity(o, realigned, p.use_abs);
    } catch (const DataError& e) {
      spdlog::warn("heatmap-sim: skipping '{}': {}", o.example_id, e.what());
      ++skipped;
      continue;
    }
    sum += cos;
    ++used;
    before.push_back(o);
    after.push_back(std::move(realigned));
    tsv << o.example_id << '\t' << FormatFixed(cos, 4) << '\n';
    rows.push_back({{"id", o.example_id}, {"cosine", cos}});
  }
  if (used == 0) throw DataError("no comparable heatmap pairs");
  const double mean = sum / static_cast<double>(used);
  const double delta = ImportanceDelta(before, after);
  tsv << "mean\t" << FormatFixed(mean, 4) << '\n';
  tsv << "importance_delta\t" << FormatFixed(delta, 4) << '\n';
  Json j;
  j["pairs"] = used;
  j["skipped"] = skipped;
  j["abs"] = p.use_abs;
  j["mean_cosine"] = mean;
  j["importance_delta"] = delta;
  j["per_example"] = std::move(rows);
  run.Report(tsv.str(), j);
}

void CmdLexiconStats(Run& run) {
  const auto& p = run.p();
  const TaskSpec& spec = run.spec();
  run.Input(p.maps);
  const auto maps = LoadAttributionMaps(p.maps);
  const Dataset ds = run.Load(p.input, spec);
  PolarityLexicon lex = DefaultLexicon();
  if (!p.lexicon.empty()) {
    run.Input(p.lexicon);
    lex = LoadLexicon(p.lexicon);
  }
  const LexiconAnalysis a = AnalyzeTopWords(maps, ds, spec, lex);
  auto rate = [](const std::optional<double>& r) {
    return r ? Fixed2(100.0 * *r) : std::string("NA");
  };
  std::ostringstream tsv;
  tsv << "metric\tnum\tden\trate\n";
  tsv << "found\t" << a.found << '\t' << a.examples << '\t' << rate(a.found_rate()) << '\n';
  tsv << "pos_given_pos\t" << a.pos_given_pos_num << '\t' << a.pos_given_pos_den << '\t'
      << rate(a.p_pos_given_pos()) << '\n';
  tsv << "neg_given_neg\t" << a.neg_given_neg_num << '\t' << a.neg_given_neg_den << '\t'
      << rate(a.p_neg_given_neg()) << '\n';
  run.Report(tsv.str(), a.ToJson());
}

std::vector<std::string> ExpandAttnPaths(const std::vector<std::string>& paths) {
  std::vector<std::string> out;
  for (const auto& path : paths) {
    if (fs::is_directory(path)) {
      std::vector<std::string> files;
      for (const auto& entry : fs::directory_iterator(path)) {
        const auto ext = entry.path().extension();
        if (ext == ".attn" || ext == ".json") files.push_back(entry.path().string());
      }
      std::sort(files.begin(), files.end());
      out.insert(out.end(), files.begin(), files.end());
    } else {
      out.push_back(path);
    }
  }
  return out;
}

AttentionRecord LoadAttentionFile(const std::string& path) {
  if (fs::path(path).extension() == ".json") {
    try {
      return AttentionFromJson(Json::parse(ReadFile(path)));
    } catch (const Json::exception& e) {
      throw DataError(path + ": " + e.what());
    }
  }
  return LoadAttn1(path);
}

// Match reports for every example of ds, from files or the gateway.
std::vector<MatchReport> MatchAll(Run& run, const Dataset& ds, const TaskSpec& spec,
                                  const std::vector<std::string>& attn_paths,
                                  const std::string& save_dir) {
  const auto& p = run.p();
  const CrossDirection dir = ParseCrossDirection(p.direction);
  std::map<std::string, const Example*> by_id;
  for (const auto& ex : ds.examples) by_id[ex.id] = &ex;

  std::vector<MatchReport> reports;
  auto add = [&](const AttentionRecord& rec, const Example& ex) {
    MatchReport r = SelectMatrix(rec, FieldWords(ex), dir);
    r.within_budget = r.total_edit <= p.budget;
    reports.push_back(std::move(r));
  };
  if (!attn_paths.empty()) {
    for (const auto& path : ExpandAttnPaths(attn_paths)) {
      run.Input(path);
      const AttentionRecord rec = LoadAttentionFile(path);
      auto it = by_id.find(rec.example_id);
      if (it == by_id.end()) {
        throw DataError(path + ": example '" + rec.example_id + "' is not in the dataset");
      }
      add(rec, *it->second);
    }
    return reports;
  }
  for (const auto& ex : ds.examples) {
    const AttentionRecord rec = Attend(run.clf(), spec, ex);
    if (!save_dir.empty()) {
      std::ostringstream bin;
      WriteAttn1(bin, rec);
      char name[32];
      std::snprintf(name, sizeof(name), "%016llx.attn",
                    static_cast<unsigned long long>(Fnv1a64(ex.id)));
      run.Output((fs::path(save_dir) / name).string(), bin.str());
    }
    add(rec, ex);
  }
  return reports;
}

void CmdAttnMatch(Run& run) {
  const auto& p = run.p();
  const TaskSpec& spec = run.spec();
  if (spec.field_names.size() != 2) throw UsageError("attn-match needs a sequence-pair task");
  const Dataset ds = run.Load(p.input, spec);
  const auto reports = MatchAll(run, ds, spec, p.attn, p.attn_out);
  if (reports.empty()) throw DataError("no attention records");
  const HeadHistogram hist = BuildHeadHistogram(reports);

  std::ostringstream tsv;
  WriteMatchReportsTsv(tsv, reports);
  Json j;
  j["budget"] = p.budget;
  j["direction"] = p.direction;
  j["total"] = reports.size();
  j["within_budget"] = hist.total;
  Json rj = Json::array();
  for (const auto& r : reports) rj.push_back(r.ToJson());
  j["reports"] = std::move(rj);
  j["histogram"] = hist.ToJson();

  if (!p.shuffled_input.empty()) {
    const Dataset sds = run.Load(p.shuffled_input, spec);
    const auto sreports = MatchAll(run, sds, spec, p.shuffled_attn, "");
    std::map<std::string, const MatchReport*> sby;
    for (const auto& r : sreports) sby[r.example_id] = &r;
    std::ostringstream otsv;
    otsv << "id\toverlap\n";
    Json oj = Json::array();
    double sum = 0.0;
    size_t count = 0;
    for (const auto& r : reports) {
      auto it = sby.find(r.example_id);
      if (it == sby.end()) continue;
      const double o = OverlapScore(r, *it->second);
      sum += o;
      ++count;
      otsv << r.example_id << '\t' << FormatFixed(o, 4) << '\n';
      oj.push_back({{"id", r.example_id}, {"overlap", o}});
    }
    if (count == 0) throw DataError("no shuffled reports pair with the originals");
    j["overlap"] = {{"pairs", count}, {"mean", sum / static_cast<double>(count)},
                    {"per_example", std::move(oj)}};
    if (!p.out.empty()) run.Output(Run::Sibling(p.out, ".overlap.tsv"), otsv.str());
  }

  if (!p.out.empty()) {
    std::ostringstream htsv;
    WriteHistogramTsv(htsv, hist);
    run.Output(Run::Sibling(p.out, ".hist.tsv"), htsv.str());
  }
  run.Report(tsv.str(), j);
  if (!p.out.empty()) {
    run.out() << "within_budget\t" << hist.total << '/' << reports.size() << '\n';
  }
}

void CmdAblate(Run& run) {
  const auto& p = run.p();
  const TaskSpec& spec = run.spec();
  const Dataset ds = run.Load(p.input, spec);
  std::vector<std::pair<std::string, AblationPlan>> plans;
  if (!p.reports.empty()) {
    run.Input(p.reports);
    Json j;
    try {
      j = Json::parse(ReadFile(p.reports));
    } catch (const Json::exception& e) {
      throw DataError(p.reports + ": " + e.what());
    }
    std::vector<MatchReport> reports;
    for (const auto& r : j.at("reports")) reports.push_back(MatchReport::FromJson(r));
    for (auto& r : reports) r.within_budget = r.within_budget && r.total_edit <= p.budget;
    const HeadHistogram hist = BuildHeadHistogram(reports);
    AblationStrategy strategy;
    if (p.strategy == "top_k") {
      strategy = AblationStrategy::kTopK;
    } else if (p.strategy == "random") {
      strategy = AblationStrategy::kRandom;
      run.Seed("seed", p.seed);
    } else {
      throw UsageError("unknown strategy '" + p.strategy + "'");
    }
    AblationPlan plan = MakeAblationPlan(hist, static_cast<size_t>(p.k), strategy,
                                         p.seed, p.layers, p.heads);
    if (!p.out.empty()) {
      run.Output(Run::Sibling(p.out, ".plan.json"), AblationPlanToJson(plan).dump() + "\n");
    }
    plans.emplace_back(p.strategy + ":" + std::to_string(p.k), std::move(plan));
  }
  for (const auto& path : p.plans) {
    run.Input(path);
    plans.emplace_back(path, LoadPlan(path));
  }
  if (plans.empty()) throw UsageError("ablate needs --reports or --plan");
  const auto rows = AblationEval(run.clf(), spec, ds, plans, p.batch_size);
  std::ostringstream tsv;
  WriteAblationTsv(tsv, rows);
  Json j = Json::array();
  for (size_t i = 0; i < rows.size(); ++i) {
    Json row = {{"plan", rows[i].name}, {"heads", rows[i].heads},
                {"n", rows[i].n}, {"accuracy", rows[i].accuracy}};
    if (i > 0) row["ablate_heads"] = AblationPlanToJson(plans[i - 1].second)["ablate_heads"];
    j.push_back(std::move(row));
  }
  run.Report(tsv.str(), Json{{"task", spec.task_id}, {"rows", std::move(j)}});
}

void CmdSynth(Run& run) {
  const auto& p = run.p();
  const TaskSpec& spec = run.spec();
  if (p.train.empty() && p.dev.empty()) throw UsageError("synth needs --train and/or --dev");
  run.Seed("seed", p.seed);
  std::ostringstream tsv;
  tsv << "split\tsources\texamples\tdropped\n";
  for (const auto& [name, path] : {std::pair<std::string, std::string>{"train", p.train},
                                   {"dev", p.dev}}) {
    if (path.empty()) continue;
    const Dataset ds = run.Load(path, spec);
    const SyntheticSet set = BuildSyntheticSplit(ds, spec, p.seed);
    std::ostringstream data;
    WriteSyntheticJsonl(data, set);
    run.Output((fs::path(p.out_dir) / ("synth_" + name + ".jsonl")).string(), data.str());
    run.Output((fs::path(p.out_dir) / ("synth_" + name + ".swaps.json")).string(),
               set.ManifestJson().dump(2) + "\n");
    tsv << name << '\t' << ds.size() << '\t' << set.examples.size() << '\t'
        << set.dropped_ids.size() << '\n';
  }
  run.out() << tsv.str();
}

void CmdReport(Run& run) {
  const auto& p = run.p();
  std::vector<Json> rows;
  for (const auto& path : p.inputs) {
    run.Input(path);
    try {
      Json j = Json::parse(ReadFile(path));
      for (const char* key : {"task", "n", "runs", "mean_p", "wos_raw"}) {
        if (!j.contains(key)) throw DataError(path + ": not a wos report (no '" + key + "')");
      }
      rows.push_back(std::move(j));
    } catch (const Json::exception& e) {
      throw DataError(path + ": " + e.what());
    }
  }
  // Most order-sensitive first; task id breaks ties.
  std::stable_sort(rows.begin(), rows.end(), [](const Json& a, const Json& b) {
    const double wa = a["wos_raw"].get<double>();
    const double wb = b["wos_raw"].get<double>();
    if (wa != wb) return wa > wb;
    return a["task"].get<std::string>() < b["task"].get<std::string>();
  });
  std::ostringstream tsv;
  tsv << "task\tn\truns\tmean_p\tmean_confidence\twos\n";
  Json out = Json::array();
  for (const auto& r : rows) {
    const Json& c = r["mean_confidence"];
    tsv << r["task"].get<std::string>() << '\t' << r["n"].get<size_t>() << '\t'
        << r["runs"].get<size_t>() << '\t' << Fixed2(r["mean_p"].get<double>()) << '\t'
        << (c.is_number() ? Fixed2(c.get<double>()) : "NA") << '\t'
        << Fixed2(Wos(r["mean_p"].get<double>()).rounded()) << '\n';
    out.push_back({{"task", r["task"]}, {"n", r["n"]}, {"runs", r["runs"]},
                   {"mean_p", r["mean_p"]}, {"mean_confidence", c},
                   {"wos", r["wos"]}, {"wos_raw", r["wos_raw"]}});
  }
  run.Report(tsv.str(), out);
}

void Dispatch(Run& run) {
  const std::string& name = run.sub()->get_name();
  if (name == "filter") return CmdFilter(run);
  if (name == "shuffle") return CmdShuffle(run);
  if (name == "predict") return CmdPredict(run);
  if (name == "wos") return CmdWos(run);
  if (name == "confidence") return CmdConfidence(run);
  if (name == "bins") return CmdBins(run);
  if (name == "groups") return CmdGroups(run);
  if (name == "explain") return CmdExplain(run);
  if (name == "heatmap-sim") return CmdHeatmapSim(run);
  if (name == "lexicon-stats") return CmdLexiconStats(run);
  if (name == "attn-match") return CmdAttnMatch(run);
  if (name == "ablate") return CmdAblate(run);
  if (name == "synth") return CmdSynth(run);
  if (name == "report") return CmdReport(run);
  throw UsageError("unknown command '" + name + "'");
}

int ParseInto(CLI::App& app, const std::vector<std::string>& args,
              std::ostream& out, std::ostream& err, bool* done) {
  std::vector<std::string> argv_store;
  argv_store.reserve(args.size() + 1);
  argv_store.push_back("wop");
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());
  *done = false;
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    *done = true;
    if (e.get_exit_code() == 0) {
      // --help / --version
      return app.exit(e, out, err);
    }
    err << "wop: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitOk;
}

// Routes spdlog to err while a command runs.
class LogScope {
 public:
  explicit LogScope(std::ostream& err)
      : previous_(spdlog::default_logger()) {
    auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err, true);
    auto logger = std::make_shared<spdlog::logger>("wop", sink);
    logger->set_pattern("wop: %l: %v");
    logger->set_level(spdlog::level::warn);
    spdlog::set_default_logger(logger);
  }
  ~LogScope() { spdlog::set_default_logger(previous_); }

 private:
  std::shared_ptr<spdlog::logger> previous_;
};

}  // namespace

std::optional<std::string> ProcessEnv(const std::string& name) {
  const char* v = std::getenv(name.c_str());
  if (!v) return std::nullopt;
  return std::string(v);
}

int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err, const EnvLookup& env) {
  LogScope log(err);
  try {
    // Pass 1 learns the subcommand and which options the command line set.
    Params first;
    CLI::App probe{"Word-order sensitivity toolkit", "wop"};
    Define(probe, first, /*strict=*/false);
    bool done = false;
    int code = ParseInto(probe, args, out, err, &done);
    if (done) return code;

    std::vector<std::string> full = args;
    for (auto& extra : Fallbacks(probe, first, env)) full.push_back(std::move(extra));

    Params p;
    CLI::App app{"Word-order sensitivity toolkit", "wop"};
    Define(app, p, /*strict=*/true);
    code = ParseInto(app, full, out, err, &done);
    if (done) return code;

    const auto level = spdlog::level::from_str(p.log_level);
    if (level == spdlog::level::off && p.log_level != "off") {
      throw UsageError("unknown log level '" + p.log_level + "'");
    }
    spdlog::set_level(level);

    Run run(p, app.get_subcommands().front(), out);
    Dispatch(run);
    run.Commit();
    return kExitOk;
  } catch (const UsageError& e) {
    err << "wop: usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const GatewayError& e) {
    err << "wop: gateway error: " << e.what() << "\n";
    return kExitGateway;
  } catch (const DataError& e) {
    err << "wop: data error: " << e.what() << "\n";
    return kExitData;
  } catch (const PerturbError& e) {
    err << "wop: data error: " << e.what() << "\n";
    return kExitData;
  } catch (const Json::exception& e) {
    err << "wop: data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "wop: data error: " << e.what() << "\n";
    return kExitData;
  }
}

}  // namespace wop
