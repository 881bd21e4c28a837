// Command-line pipeline over the gfsml C API. Stages: synth | ingest | stats |
// partition | episodes | train | eval | report. Every stage consumes the
// previous stage's artifact, writes its own plus a manifest (resolved config,
// seed, input/output hashes), and exits nonzero with a JSON error on stderr
// on failure.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "gfsml.h"

#include "CLI11.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliError : std::runtime_error {
  int status;
  CliError(int st, const std::string& msg) : std::runtime_error(msg), status(st) {}
};

void check(gfsml_status st) {
  if (st != GFSML_OK) throw CliError(static_cast<int>(st), gfsml_last_error());
}

std::string take(char* s) {
  std::string out = s ? s : "";
  gfsml_string_free(s);
  return out;
}

struct DatasetDel {
  void operator()(gfsml_dataset* p) const { gfsml_dataset_free(p); }
};
struct PartitionDel {
  void operator()(gfsml_partition* p) const { gfsml_partition_free(p); }
};
struct ModelDel {
  void operator()(gfsml_model* p) const { gfsml_model_free(p); }
};
using DatasetPtr = std::unique_ptr<gfsml_dataset, DatasetDel>;
using PartitionPtr = std::unique_ptr<gfsml_partition, PartitionDel>;
using ModelPtr = std::unique_ptr<gfsml_model, ModelDel>;

const char* status_name(int st) {
  switch (st) {
    case GFSML_ERR_IO: return "io";
    case GFSML_ERR_PARSE: return "parse";
    case GFSML_ERR_INVALID: return "invalid";
    case GFSML_ERR_INFEASIBLE: return "infeasible";
    case GFSML_ERR_INTERNAL: return "internal";
    case 64: return "usage";
  }
  return "internal";
}

// ------------------------------------------------------------------ config --

json g_cfg = json::object();

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

// key=value lines with dotted keys; values are JSON scalars/arrays when they
// parse as such, bare strings otherwise. '#' starts a comment line.
json parse_kv_config(const std::string& text, const std::string& path) {
  json root = json::object();
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw CliError(GFSML_ERR_PARSE,
                     path + ":" + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(t.substr(0, eq));
    const std::string val = trim(t.substr(eq + 1));
    if (key.empty())
      throw CliError(GFSML_ERR_PARSE, path + ":" + std::to_string(lineno) + ": empty key");
    json v;
    try {
      v = json::parse(val);
    } catch (const std::exception&) {
      v = val;
    }
    json* cur = &root;
    std::size_t start = 0;
    while (true) {
      const auto dot = key.find('.', start);
      const std::string part =
          key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
      if (dot == std::string::npos) {
        (*cur)[part] = v;
        break;
      }
      cur = &(*cur)[part];
      if (!cur->is_object()) *cur = json::object();
      start = dot + 1;
    }
  }
  return root;
}

json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CliError(GFSML_ERR_IO, "cannot read config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    try {
      return json::parse(text);
    } catch (const std::exception& e) {
      throw CliError(GFSML_ERR_PARSE, "config " + path + ": " + e.what());
    }
  }
  return parse_kv_config(text, path);
}

const json* find_path(const json& root, const std::string& dotted) {
  const json* cur = &root;
  std::size_t start = 0;
  while (true) {
    if (!cur->is_object()) return nullptr;
    const auto dot = dotted.find('.', start);
    const std::string part =
        dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    const auto it = cur->find(part);
    if (it == cur->end()) return nullptr;
    cur = &*it;
    if (dot == std::string::npos) return cur;
    start = dot + 1;
  }
}

// Precedence: CLI flag > config "<scope>.<key>" > config "<key>" > built-in
// default already in `var`.
template <typename T>
void fill(CLI::App* cmd, const std::string& flag, const std::string& scope,
          const std::string& key, T& var) {
  if (cmd->count(flag) > 0) return;
  const json* v = find_path(g_cfg, scope + "." + key);
  if (!v) v = find_path(g_cfg, key);
  if (!v) return;
  try {
    var = v->get<T>();
  } catch (const std::exception& e) {
    throw CliError(GFSML_ERR_INVALID, "config key '" + key + "': " + e.what());
  }
}

bool present(CLI::App* cmd, const std::string& flag, const std::string& scope,
             const std::string& key) {
  return cmd->count(flag) > 0 || find_path(g_cfg, scope + "." + key) != nullptr ||
         find_path(g_cfg, key) != nullptr;
}

// --------------------------------------------------------------- artifacts --

void need_file(const std::string& path, const std::string& hint) {
  if (!fs::exists(path))
    throw CliError(GFSML_ERR_IO, path + " not found; " + hint);
}

void write_text(const std::string& path, const std::string& content) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CliError(GFSML_ERR_IO, "cannot write " + path);
  out << content;
}

std::string hash_file(const std::string& path) {
  char* hex = nullptr;
  check(gfsml_file_hash(path.c_str(), &hex));
  return take(hex);
}

// No timestamps: reruns of the same command are byte-identical.
void write_manifest(const std::string& path, const std::string& command, std::uint64_t seed,
                    const json& resolved, const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs) {
  json m;
  m["command"] = command;
  m["version"] = gfsml_version();
  m["seed"] = seed;
  m["config"] = resolved;
  m["inputs"] = json::object();
  for (const auto& p : inputs) m["inputs"][p] = hash_file(p);
  m["outputs"] = json::object();
  for (const auto& p : outputs) m["outputs"][p] = hash_file(p);
  write_text(path, m.dump(2) + "\n");
}

const char* kDataHint =
    "run `gfsml synth --out <dir>` or `gfsml ingest` to create the dataset first";

// Canonical artifacts were filtered at ingest time; reload them untouched.
DatasetPtr load_data_dir(const std::string& dir) {
  if (dir.empty())
    throw CliError(64, "missing dataset directory: pass --data or config key 'data'");
  const std::string vocab = dir + "/vocab.txt";
  const std::string meta = dir + "/metadata.csv";
  const std::string emb = dir + "/embeddings.csv";
  need_file(vocab, kDataHint);
  need_file(meta, kDataHint);
  const bool has_emb = fs::exists(emb);
  gfsml_dataset* ds = nullptr;
  check(gfsml_dataset_load(vocab.c_str(), meta.c_str(), has_emb ? emb.c_str() : nullptr,
                           R"({"min_age":-1000000000,"max_age":1000000000})", &ds));
  return DatasetPtr(ds);
}

std::vector<std::string> data_dir_files(const std::string& dir) {
  std::vector<std::string> files{dir + "/vocab.txt", dir + "/metadata.csv"};
  if (fs::exists(dir + "/embeddings.csv")) files.push_back(dir + "/embeddings.csv");
  return files;
}

PartitionPtr load_partition_file(const gfsml_dataset* ds, const std::string& path) {
  need_file(path, "run `gfsml partition` first");
  gfsml_partition* part = nullptr;
  check(gfsml_partition_load(ds, path.c_str(), &part));
  return PartitionPtr(part);
}

ModelPtr load_model_file(const std::string& path) {
  need_file(path, "run `gfsml train` first");
  gfsml_model* model = nullptr;
  check(gfsml_model_load(path.c_str(), &model));
  return ModelPtr(model);
}

std::string default_manifest(const std::string& out_dir, const std::string& command) {
  return out_dir + "/manifest-" + command + ".json";
}

std::string parent_or_dot(const std::string& path) {
  const auto parent = fs::path(path).parent_path().string();
  return parent.empty() ? "." : parent;
}

// --------------------------------------------------------------- commands --

// Generator knobs stay out of this struct on purpose: the library owns their
// defaults, so the CLI forwards only the keys the user actually set.
struct SynthArgs {
  std::string out;
  std::string manifest;
  std::uint64_t seed = 0;
  int n_trn_classes = 0, n_val_classes = 0, n_tst_classes = 0;
  int count_trn = 0, count_val = 0, count_tst = 0;
  int n_not_finding = 0, n_sources = 0, dim = 0;
  double separation = 0.0, noise = 0.0, co_label = 0.0;
  json cfg = json::object();  // the keys that were actually given
};

void run_synth(const SynthArgs& a) {
  const json& cfg = a.cfg;
  gfsml_dataset* raw = nullptr;
  check(gfsml_dataset_synth(cfg.dump().c_str(), a.seed, &raw));
  DatasetPtr ds(raw);
  fs::create_directories(a.out);
  const std::string vocab = a.out + "/vocab.txt";
  const std::string meta = a.out + "/metadata.csv";
  const std::string emb = a.out + "/embeddings.csv";
  check(gfsml_dataset_save(ds.get(), vocab.c_str(), meta.c_str(), emb.c_str()));

  char* stats = nullptr;
  check(gfsml_dataset_stats(ds.get(), nullptr, &stats));
  const json st = json::parse(take(stats));
  const std::string manifest =
      a.manifest.empty() ? default_manifest(a.out, "synth") : a.manifest;
  write_manifest(manifest, "synth", a.seed, cfg, {}, {vocab, meta, emb});
  json summary = {{"out", a.out},
                  {"examples", st.at("n_examples")},
                  {"classes", st.at("classes").size()},
                  {"sources", st.at("sources").size()},
                  {"embedding_dim", st.at("embedding_dim")},
                  {"manifest", manifest}};
  std::printf("%s\n", summary.dump(2).c_str());
}

struct IngestArgs {
  std::string vocab, metadata, embeddings;
  std::string out;
  std::string manifest;
  int min_age = 10, max_age = 80;
};

void run_ingest(const IngestArgs& a) {
  need_file(a.vocab, "check the --vocab path");
  need_file(a.metadata, "check the --metadata path");
  if (!a.embeddings.empty()) need_file(a.embeddings, "check the --embeddings path");
  const json opts = {{"min_age", a.min_age}, {"max_age", a.max_age}};
  gfsml_dataset* raw = nullptr;
  check(gfsml_dataset_load(a.vocab.c_str(), a.metadata.c_str(),
                           a.embeddings.empty() ? nullptr : a.embeddings.c_str(),
                           opts.dump().c_str(), &raw));
  DatasetPtr ds(raw);
  fs::create_directories(a.out);
  const std::string vocab = a.out + "/vocab.txt";
  const std::string meta = a.out + "/metadata.csv";
  const std::string emb = a.out + "/embeddings.csv";
  check(gfsml_dataset_save(ds.get(), vocab.c_str(), meta.c_str(),
                           a.embeddings.empty() ? nullptr : emb.c_str()));

  char* stats = nullptr;
  check(gfsml_dataset_stats(ds.get(), nullptr, &stats));
  const json st = json::parse(take(stats));
  std::vector<std::string> inputs{a.vocab, a.metadata};
  if (!a.embeddings.empty()) inputs.push_back(a.embeddings);
  std::vector<std::string> outputs{vocab, meta};
  if (!a.embeddings.empty()) outputs.push_back(emb);
  const std::string manifest =
      a.manifest.empty() ? default_manifest(a.out, "ingest") : a.manifest;
  write_manifest(manifest, "ingest", 0, opts, inputs, outputs);
  json summary = {{"out", a.out},
                  {"examples", st.at("n_examples")},
                  {"not_finding", st.at("n_not_finding")},
                  {"embedding_dim", st.at("embedding_dim")},
                  {"manifest", manifest}};
  std::printf("%s\n", summary.dump(2).c_str());
}

struct StatsArgs {
  std::string data;
  std::string denominator = "labeled";
  std::string out;
  std::string manifest;
};

void run_stats(const StatsArgs& a) {
  auto ds = load_data_dir(a.data);
  const json opts = {{"denominator", a.denominator}};
  char* stats = nullptr;
  check(gfsml_dataset_stats(ds.get(), opts.dump().c_str(), &stats));
  const std::string text = take(stats);
  std::printf("%s\n", text.c_str());
  std::vector<std::string> outputs;
  if (!a.out.empty()) {
    write_text(a.out, text + "\n");
    outputs.push_back(a.out);
  }
  const std::string manifest =
      a.manifest.empty() ? default_manifest(a.data, "stats") : a.manifest;
  write_manifest(manifest, "stats", 0, opts, data_dir_files(a.data), outputs);
}

struct PartitionArgs {
  std::string data;
  std::string out = "partition.json";
  std::string manifest;
  std::uint64_t seed = 0;
  int n_tst = 5, n_val = 3;
  double val_reserve = 0.1, tst_reserve = 0.2;
  double notfinding_val = 0.1, notfinding_tst = 0.3;
};

void run_partition(const PartitionArgs& a) {
  auto ds = load_data_dir(a.data);
  const json opts = {{"n_tst", a.n_tst},
                     {"n_val", a.n_val},
                     {"val_reserve", a.val_reserve},
                     {"tst_reserve", a.tst_reserve},
                     {"notfinding_val", a.notfinding_val},
                     {"notfinding_tst", a.notfinding_tst}};
  gfsml_partition* raw = nullptr;
  check(gfsml_partition_build(ds.get(), opts.dump().c_str(), a.seed, &raw));
  PartitionPtr part(raw);
  check(gfsml_partition_save(ds.get(), part.get(), a.out.c_str()));
  char* desc = nullptr;
  check(gfsml_partition_describe(ds.get(), part.get(), &desc));
  std::printf("%s\n", take(desc).c_str());
  const std::string manifest =
      a.manifest.empty() ? default_manifest(parent_or_dot(a.out), "partition") : a.manifest;
  write_manifest(manifest, "partition", a.seed, opts, data_dir_files(a.data), {a.out});
}

struct EpisodesArgs {
  std::string data;
  std::string partition = "partition.json";
  std::string out = "episodes.json";
  std::string manifest;
  std::uint64_t seed = 0;
  std::int64_t count = 10;
  int n_seen = 3, n_unseen = 0, k_trn = 30, k_tst = 30;
  std::string phase = "meta-test";
};

void run_episodes(const EpisodesArgs& a) {
  auto ds = load_data_dir(a.data);
  auto part = load_partition_file(ds.get(), a.partition);
  const json spec = {{"n_seen", a.n_seen},
                     {"n_unseen", a.n_unseen},
                     {"k_trn", a.k_trn},
                     {"k_tst", a.k_tst},
                     {"phase", a.phase}};
  char* out = nullptr;
  check(gfsml_episodes_sample(ds.get(), part.get(), spec.dump().c_str(), a.seed, a.count, &out));
  write_text(a.out, take(out) + "\n");
  json resolved = spec;
  resolved["count"] = a.count;
  const std::string manifest =
      a.manifest.empty() ? default_manifest(parent_or_dot(a.out), "episodes") : a.manifest;
  auto inputs = data_dir_files(a.data);
  inputs.push_back(a.partition);
  write_manifest(manifest, "episodes", a.seed, resolved, inputs, {a.out});
  json summary = {{"out", a.out}, {"episodes", a.count}, {"manifest", manifest}};
  std::printf("%s\n", summary.dump(2).c_str());
}

// Hyperparameter defaults live in the library; the CLI forwards only
// user-set keys, gathered into the enc/trn/val JSON objects at dispatch.
struct TrainArgs {
  std::string data;
  std::string partition = "partition.json";
  std::string out = "checkpoint.json";
  std::string manifest;
  std::string method = "batchbased";
  std::uint64_t seed = 0;
  std::vector<int> hidden;
  int output_dim = 0;
  int batch_size = 0;
  double lr = 0.0;
  int max_epochs = 0;
  std::string stop_metric;
  int patience = 0;
  std::int64_t episodes_trn = 0, episodes_val = 0, episodes_tst = 0;
  int t_steps = 0;
  double ptc_trn = 0.0, lr_head = 0.0;
  int val_n_seen = 0, val_n_unseen = 0, val_k_trn = 0, val_k_tst = 0;
  json enc = json::object(), trn = json::object(), val = json::object();
};

void run_train(const TrainArgs& a) {
  auto ds = load_data_dir(a.data);
  auto part = load_partition_file(ds.get(), a.partition);
  json cfg = {{"method", a.method}};
  if (!a.enc.empty()) cfg["encoder"] = a.enc;
  if (!a.trn.empty()) cfg["train"] = a.trn;
  if (!a.val.empty()) cfg["val_spec"] = a.val;
  gfsml_model* raw = nullptr;
  check(gfsml_train(ds.get(), part.get(), cfg.dump().c_str(), a.seed, &raw));
  ModelPtr model(raw);
  check(gfsml_model_save(model.get(), a.out.c_str()));
  char* desc = nullptr;
  check(gfsml_model_describe(model.get(), &desc));
  std::printf("%s\n", take(desc).c_str());
  const std::string manifest =
      a.manifest.empty() ? default_manifest(parent_or_dot(a.out), "train") : a.manifest;
  auto inputs = data_dir_files(a.data);
  inputs.push_back(a.partition);
  write_manifest(manifest, "train", a.seed, cfg, inputs, {a.out});
}

struct EvalArgs {
  std::string data;
  std::string partition = "partition.json";
  std::string model = "checkpoint.json";
  std::string report_dir;
  std::string out;  // overrides report_dir/report.json
  std::string manifest;
  std::string phase = "meta-test";
  std::int64_t episodes = -1;
  std::uint64_t seed = 0;
  int workers = 1;
  int n_seen = 0, n_unseen = 0, k_trn = 0, k_tst = 0;
  std::vector<int> grid_n_way, grid_n_unseen, grid_k;
  std::string per_episode_csv;
};

void run_eval(CLI::App* cmd, const EvalArgs& a) {
  auto ds = load_data_dir(a.data);
  auto part = load_partition_file(ds.get(), a.partition);
  auto model = load_model_file(a.model);

  const bool has_grid = present(cmd, "--grid-n-way", "eval", "grid_n_way") ||
                        present(cmd, "--grid-n-unseen", "eval", "grid_n_unseen") ||
                        present(cmd, "--grid-k", "eval", "grid_k");
  json spec = json::object();
  auto spec_key = [&](const char* flag, const char* key, int v) {
    if (present(cmd, flag, "eval", key)) spec[key] = v;
  };
  spec_key("--n-seen", "n_seen", a.n_seen);
  spec_key("--n-unseen", "n_unseen", a.n_unseen);
  spec_key("--k-trn", "k_trn", a.k_trn);
  spec_key("--k-tst", "k_tst", a.k_tst);
  if (has_grid && !spec.empty())
    throw CliError(GFSML_ERR_INVALID,
                   "pass either the grid flags or the single-spec flags, not both");

  json opts = {{"phase", a.phase}, {"seed", a.seed}, {"workers", a.workers}};
  if (a.episodes >= 0) opts["episodes"] = a.episodes;
  if (has_grid) {
    opts["grid"] = {{"n_way", a.grid_n_way}, {"n_unseen", a.grid_n_unseen}, {"k", a.grid_k}};
  } else if (!spec.empty()) {
    opts["spec"] = spec;
  }
  if (!a.per_episode_csv.empty()) opts["per_episode_csv"] = a.per_episode_csv;

  char* raw = nullptr;
  check(gfsml_evaluate(ds.get(), part.get(), model.get(), opts.dump().c_str(), &raw));
  const std::string report = take(raw);

  std::string report_path = a.out;
  if (report_path.empty()) report_path = a.report_dir + "/report.json";
  write_text(report_path, report + "\n");

  char* text = nullptr;
  check(gfsml_report_render(report.c_str(), &text));
  std::printf("%s", take(text).c_str());

  const std::string manifest =
      a.manifest.empty() ? default_manifest(parent_or_dot(report_path), "eval") : a.manifest;
  auto inputs = data_dir_files(a.data);
  inputs.push_back(a.partition);
  inputs.push_back(a.model);
  std::vector<std::string> outputs{report_path};
  if (!a.per_episode_csv.empty()) outputs.push_back(a.per_episode_csv);
  write_manifest(manifest, "eval", a.seed, opts, inputs, outputs);
}

struct ReportArgs {
  std::string report = "report.json";
  std::string out;
  std::string manifest;
};

void run_report(const ReportArgs& a) {
  need_file(a.report, "run `gfsml eval` first");
  std::ifstream in(a.report);
  std::stringstream buf;
  buf << in.rdbuf();
  char* text = nullptr;
  check(gfsml_report_render(buf.str().c_str(), &text));
  const std::string rendered = take(text);
  std::printf("%s", rendered.c_str());
  std::vector<std::string> outputs;
  if (!a.out.empty()) {
    write_text(a.out, rendered);
    outputs.push_back(a.out);
  }
  const std::string manifest =
      a.manifest.empty() ? default_manifest(parent_or_dot(a.report), "report") : a.manifest;
  write_manifest(manifest, "report", 0, {{"report", a.report}}, {a.report}, outputs);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"generalized few-shot multi-label benchmark pipeline"};
  app.set_version_flag("--version", gfsml_version());
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "JSON or key=value config file; flags override it");

  SynthArgs sy;
  auto* synth = app.add_subcommand("synth", "generate a synthetic benchmark corpus");
  synth->add_option("--out", sy.out, "output dataset directory")->required();
  synth->add_option("--seed", sy.seed, "generator seed");
  synth->add_option("--manifest", sy.manifest, "manifest path override");
  synth->add_option("--n-trn-classes", sy.n_trn_classes, "meta-train-tier classes");
  synth->add_option("--n-val-classes", sy.n_val_classes, "meta-val-tier classes");
  synth->add_option("--n-tst-classes", sy.n_tst_classes, "meta-test-tier classes");
  synth->add_option("--count-trn", sy.count_trn, "positives per meta-train-tier class");
  synth->add_option("--count-val", sy.count_val, "positives per meta-val-tier class");
  synth->add_option("--count-tst", sy.count_tst, "positives per meta-test-tier class");
  synth->add_option("--not-finding", sy.n_not_finding, "not-finding example count");
  synth->add_option("--sources", sy.n_sources, "source site count");
  synth->add_option("--dim", sy.dim, "embedding dimension");
  synth->add_option("--separation", sy.separation, "class center distance from origin");
  synth->add_option("--noise", sy.noise, "cluster noise sigma");
  synth->add_option("--co-label", sy.co_label, "chance of a second label");

  IngestArgs ig;
  auto* ingest = app.add_subcommand("ingest", "validate raw files and write canonical artifacts");
  ingest->add_option("--vocab", ig.vocab, "class vocabulary, one name per line")->required();
  ingest->add_option("--metadata", ig.metadata, "metadata CSV id,source,age,labels")->required();
  ingest->add_option("--embeddings", ig.embeddings, "embeddings CSV id,v0,...");
  ingest->add_option("--out", ig.out, "output dataset directory")->required();
  ingest->add_option("--min-age", ig.min_age, "drop records younger than this");
  ingest->add_option("--max-age", ig.max_age, "drop records older than this");
  ingest->add_option("--manifest", ig.manifest, "manifest path override");

  StatsArgs st;
  auto* stats = app.add_subcommand("stats", "corpus statistics as JSON");
  stats->add_option("--data", st.data, "dataset directory");
  stats->add_option("--denominator", st.denominator, "cardinality denominator: labeled|all");
  stats->add_option("--out", st.out, "also write the JSON here");
  stats->add_option("--manifest", st.manifest, "manifest path override");

  PartitionArgs pa;
  auto* partition = app.add_subcommand("partition", "build the class split and example pools");
  partition->add_option("--data", pa.data, "dataset directory");
  partition->add_option("--out", pa.out, "partition manifest path");
  partition->add_option("--seed", pa.seed, "pool shuffle seed");
  partition->add_option("--n-tst", pa.n_tst, "meta-test class count");
  partition->add_option("--n-val", pa.n_val, "meta-val class count");
  partition->add_option("--val-reserve", pa.val_reserve, "train-only examples routed to val pool");
  partition->add_option("--tst-reserve", pa.tst_reserve, "train-only examples routed to test pool");
  partition->add_option("--notfinding-val", pa.notfinding_val, "not-finding share to val pool");
  partition->add_option("--notfinding-tst", pa.notfinding_tst, "not-finding share to test pool");
  partition->add_option("--manifest", pa.manifest, "manifest path override");

  EpisodesArgs ep;
  auto* episodes = app.add_subcommand("episodes", "sample an episode batch to JSON");
  episodes->add_option("--data", ep.data, "dataset directory");
  episodes->add_option("--partition", ep.partition, "partition manifest");
  episodes->add_option("--out", ep.out, "episode batch output path");
  episodes->add_option("--seed", ep.seed, "stream master seed");
  episodes->add_option("--count", ep.count, "episode count");
  episodes->add_option("--n-seen", ep.n_seen, "seen classes per episode");
  episodes->add_option("--n-unseen", ep.n_unseen, "unseen classes per episode");
  episodes->add_option("--k-trn", ep.k_trn, "training shots per class");
  episodes->add_option("--k-tst", ep.k_tst, "test shots per class");
  episodes->add_option("--phase", ep.phase, "meta-train|meta-val|meta-test");
  episodes->add_option("--manifest", ep.manifest, "manifest path override");

  TrainArgs tr;
  auto* train = app.add_subcommand("train", "train a model with early stopping");
  train->add_option("--data", tr.data, "dataset directory");
  train->add_option("--partition", tr.partition, "partition manifest");
  train->add_option("--out", tr.out, "checkpoint output path");
  train->add_option("--method", tr.method, "batchbased|protonet-ml");
  train->add_option("--seed", tr.seed, "training seed");
  train->add_option("--hidden", tr.hidden, "encoder hidden widths (0 = linear)")
      ->delimiter(',');
  train->add_option("--output-dim", tr.output_dim, "embedding dimension");
  train->add_option("--batch-size", tr.batch_size, "pretraining batch size");
  train->add_option("--lr", tr.lr, "optimizer learning rate");
  train->add_option("--max-epochs", tr.max_epochs, "epoch cap");
  train->add_option("--stop-metric", tr.stop_metric, "early-stop metric (hm)");
  train->add_option("--patience", tr.patience, "early-stop patience in epochs");
  train->add_option("--episodes-trn", tr.episodes_trn, "training episodes per epoch");
  train->add_option("--episodes-val", tr.episodes_val, "fixed validation episode count");
  train->add_option("--episodes-tst", tr.episodes_tst, "default evaluation episode count");
  train->add_option("--t-steps", tr.t_steps, "head adaptation steps");
  train->add_option("--ptc-trn", tr.ptc_trn, "head adaptation subset fraction");
  train->add_option("--lr-head", tr.lr_head, "head adaptation learning rate");
  train->add_option("--val-n-seen", tr.val_n_seen, "validation episode seen classes");
  train->add_option("--val-n-unseen", tr.val_n_unseen, "validation episode unseen classes");
  train->add_option("--val-k-trn", tr.val_k_trn, "validation training shots");
  train->add_option("--val-k-tst", tr.val_k_tst, "validation test shots");
  train->add_option("--manifest", tr.manifest, "manifest path override");

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint and write a report");
  eval->add_option("--data", ev.data, "dataset directory");
  eval->add_option("--partition", ev.partition, "partition manifest");
  eval->add_option("--model", ev.model, "checkpoint path");
  eval->add_option("--report-dir", ev.report_dir, "report output directory");
  eval->add_option("--out", ev.out, "report path override");
  eval->add_option("--phase", ev.phase, "meta-train|meta-val|meta-test");
  eval->add_option("--episodes", ev.episodes, "episodes per cell");
  eval->add_option("--seed", ev.seed, "evaluation stream seed");
  eval->add_option("--workers", ev.workers, "scoring threads");
  eval->add_option("--n-seen", ev.n_seen, "seen classes (single spec)");
  eval->add_option("--n-unseen", ev.n_unseen, "unseen classes (single spec)");
  eval->add_option("--k-trn", ev.k_trn, "training shots (single spec)");
  eval->add_option("--k-tst", ev.k_tst, "test shots (single spec)");
  eval->add_option("--grid-n-way", ev.grid_n_way, "grid n-way values")->delimiter(',');
  eval->add_option("--grid-n-unseen", ev.grid_n_unseen, "grid n-unseen values")->delimiter(',');
  eval->add_option("--grid-k", ev.grid_k, "grid shot values")->delimiter(',');
  eval->add_option("--per-episode-csv", ev.per_episode_csv, "per-episode scores CSV (single spec)");
  eval->add_option("--manifest", ev.manifest, "manifest path override");

  ReportArgs rp;
  auto* report = app.add_subcommand("report", "render a report JSON as text");
  report->add_option("--report", rp.report, "report JSON path");
  report->add_option("--out", rp.out, "also write the rendered text here");
  report->add_option("--manifest", rp.manifest, "manifest path override");

  try {
    app.parse(argc, argv);

    if (app.count("--config")) g_cfg = load_config(config_path);

    if (app.got_subcommand(synth)) {
      fill(synth, "--out", "synth", "out", sy.out);
      fill(synth, "--seed", "synth", "seed", sy.seed);
      auto knob = [&](const char* flag, const char* key, auto& var) {
        if (!present(synth, flag, "synth", key)) return;
        fill(synth, flag, "synth", key, var);
        sy.cfg[key] = var;
      };
      knob("--n-trn-classes", "n_trn_classes", sy.n_trn_classes);
      knob("--n-val-classes", "n_val_classes", sy.n_val_classes);
      knob("--n-tst-classes", "n_tst_classes", sy.n_tst_classes);
      knob("--count-trn", "count_trn", sy.count_trn);
      knob("--count-val", "count_val", sy.count_val);
      knob("--count-tst", "count_tst", sy.count_tst);
      knob("--not-finding", "n_not_finding", sy.n_not_finding);
      knob("--sources", "n_sources", sy.n_sources);
      knob("--dim", "dim", sy.dim);
      knob("--separation", "separation", sy.separation);
      knob("--noise", "noise", sy.noise);
      knob("--co-label", "co_label", sy.co_label);
      run_synth(sy);
    } else if (app.got_subcommand(ingest)) {
      fill(ingest, "--min-age", "ingest", "min_age", ig.min_age);
      fill(ingest, "--max-age", "ingest", "max_age", ig.max_age);
      run_ingest(ig);
    } else if (app.got_subcommand(stats)) {
      fill(stats, "--data", "stats", "data", st.data);
      fill(stats, "--denominator", "stats", "denominator", st.denominator);
      run_stats(st);
    } else if (app.got_subcommand(partition)) {
      fill(partition, "--data", "partition", "data", pa.data);
      fill(partition, "--out", "partition", "out", pa.out);
      fill(partition, "--seed", "partition", "seed", pa.seed);
      fill(partition, "--n-tst", "partition", "n_tst", pa.n_tst);
      fill(partition, "--n-val", "partition", "n_val", pa.n_val);
      fill(partition, "--val-reserve", "partition", "val_reserve", pa.val_reserve);
      fill(partition, "--tst-reserve", "partition", "tst_reserve", pa.tst_reserve);
      fill(partition, "--notfinding-val", "partition", "notfinding_val", pa.notfinding_val);
      fill(partition, "--notfinding-tst", "partition", "notfinding_tst", pa.notfinding_tst);
      run_partition(pa);
    } else if (app.got_subcommand(episodes)) {
      fill(episodes, "--data", "episodes", "data", ep.data);
      fill(episodes, "--partition", "episodes", "partition", ep.partition);
      fill(episodes, "--out", "episodes", "out", ep.out);
      fill(episodes, "--seed", "episodes", "seed", ep.seed);
      fill(episodes, "--count", "episodes", "count", ep.count);
      fill(episodes, "--n-seen", "episodes", "n_seen", ep.n_seen);
      fill(episodes, "--n-unseen", "episodes", "n_unseen", ep.n_unseen);
      fill(episodes, "--k-trn", "episodes", "k_trn", ep.k_trn);
      fill(episodes, "--k-tst", "episodes", "k_tst", ep.k_tst);
      fill(episodes, "--phase", "episodes", "phase", ep.phase);
      run_episodes(ep);
    } else if (app.got_subcommand(train)) {
      fill(train, "--data", "train", "data", tr.data);
      fill(train, "--partition", "train", "partition", tr.partition);
      fill(train, "--out", "train", "out", tr.out);
      fill(train, "--method", "train", "method", tr.method);
      fill(train, "--seed", "train", "seed", tr.seed);
      auto knob_as = [&](json& dst, const char* flag, const char* cfg_key,
                         const char* json_key, auto& var) {
        if (!present(train, flag, "train", cfg_key)) return;
        fill(train, flag, "train", cfg_key, var);
        dst[json_key] = var;
      };
      auto knob = [&](json& dst, const char* flag, const char* key, auto& var) {
        knob_as(dst, flag, key, key, var);
      };
      if (present(train, "--hidden", "train", "hidden")) {
        fill(train, "--hidden", "train", "hidden", tr.hidden);
        if (tr.hidden.size() == 1 && tr.hidden[0] == 0) tr.hidden.clear();  // 0 = linear
        tr.enc["hidden"] = tr.hidden;
      }
      knob(tr.enc, "--output-dim", "output_dim", tr.output_dim);
      knob(tr.trn, "--batch-size", "batch_size", tr.batch_size);
      knob(tr.trn, "--lr", "lr", tr.lr);
      knob(tr.trn, "--max-epochs", "max_epochs", tr.max_epochs);
      knob(tr.trn, "--stop-metric", "stop_metric", tr.stop_metric);
      knob(tr.trn, "--patience", "patience", tr.patience);
      knob(tr.trn, "--episodes-trn", "episodes_trn", tr.episodes_trn);
      knob(tr.trn, "--episodes-val", "episodes_val", tr.episodes_val);
      knob(tr.trn, "--episodes-tst", "episodes_tst", tr.episodes_tst);
      knob(tr.trn, "--t-steps", "t_steps", tr.t_steps);
      knob(tr.trn, "--ptc-trn", "ptc_trn", tr.ptc_trn);
      knob(tr.trn, "--lr-head", "lr_head", tr.lr_head);
      knob_as(tr.val, "--val-n-seen", "val_n_seen", "n_seen", tr.val_n_seen);
      knob_as(tr.val, "--val-n-unseen", "val_n_unseen", "n_unseen", tr.val_n_unseen);
      knob_as(tr.val, "--val-k-trn", "val_k_trn", "k_trn", tr.val_k_trn);
      knob_as(tr.val, "--val-k-tst", "val_k_tst", "k_tst", tr.val_k_tst);
      run_train(tr);
    } else if (app.got_subcommand(eval)) {
      fill(eval, "--data", "eval", "data", ev.data);
      fill(eval, "--partition", "eval", "partition", ev.partition);
      fill(eval, "--model", "eval", "model", ev.model);
      fill(eval, "--out", "eval", "out", ev.out);
      fill(eval, "--phase", "eval", "phase", ev.phase);
      fill(eval, "--episodes", "eval", "episodes", ev.episodes);
      fill(eval, "--seed", "eval", "seed", ev.seed);
      fill(eval, "--workers", "eval", "workers", ev.workers);
      fill(eval, "--n-seen", "eval", "n_seen", ev.n_seen);
      fill(eval, "--n-unseen", "eval", "n_unseen", ev.n_unseen);
      fill(eval, "--k-trn", "eval", "k_trn", ev.k_trn);
      fill(eval, "--k-tst", "eval", "k_tst", ev.k_tst);
      fill(eval, "--grid-n-way", "eval", "grid_n_way", ev.grid_n_way);
      fill(eval, "--grid-n-unseen", "eval", "grid_n_unseen", ev.grid_n_unseen);
      fill(eval, "--grid-k", "eval", "grid_k", ev.grid_k);
      fill(eval, "--per-episode-csv", "eval", "per_episode_csv", ev.per_episode_csv);
      // Report directory precedence: flag > GFSML_REPORT_DIR > config > ".".
      if (eval->count("--report-dir") == 0) {
        if (const char* env = std::getenv("GFSML_REPORT_DIR"); env && *env) {
          ev.report_dir = env;
        } else {
          ev.report_dir = ".";
          fill(eval, "--report-dir", "eval", "report_dir", ev.report_dir);
        }
      }
      run_eval(eval, ev);
    } else if (app.got_subcommand(report)) {
      fill(report, "--report", "report", "report", rp.report);
      fill(report, "--out", "report", "out", rp.out);
      run_report(rp);
    }
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    const json err = {
        {"error", {{"status", 64}, {"code", "usage"}, {"message", e.what()}}}};
    std::fprintf(stderr, "%s\n", err.dump().c_str());
    return 64;
  } catch (const CliError& e) {
    const json err = {{"error",
                       {{"status", e.status},
                        {"code", status_name(e.status)},
                        {"message", e.what()}}}};
    std::fprintf(stderr, "%s\n", err.dump().c_str());
    return e.status;
  } catch (const std::exception& e) {
    const json err = {{"error",
                       {{"status", GFSML_ERR_INTERNAL},
                        {"code", "internal"},
                        {"message", e.what()}}}};
    std::fprintf(stderr, "%s\n", err.dump().c_str());
    return GFSML_ERR_INTERNAL;
  }
  return 0;
}
