#include "gfsml.h"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gfsml/dataset.hpp"
#include "gfsml/episodes.hpp"
#include "gfsml/eval.hpp"
#include "gfsml/models.hpp"
#include "gfsml/partition.hpp"
#include "gfsml/pipeline.hpp"
#include "gfsml/synth.hpp"

#include "json.hpp"

using nlohmann::json;

struct gfsml_dataset {
  gfsml::MetaDataset ds;
};

struct gfsml_partition {
  gfsml::Partition part;
};

struct gfsml_model {
  gfsml::TrainOutcome m;
};

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

gfsml_status to_status(gfsml::Errc c) {
  switch (c) {
    case gfsml::Errc::io: return GFSML_ERR_IO;
    case gfsml::Errc::parse: return GFSML_ERR_PARSE;
    case gfsml::Errc::invalid: return GFSML_ERR_INVALID;
    case gfsml::Errc::infeasible: return GFSML_ERR_INFEASIBLE;
    case gfsml::Errc::internal: return GFSML_ERR_INTERNAL;
  }
  return GFSML_ERR_INTERNAL;
}

template <typename F>
gfsml_status wrap(F&& body) noexcept {
  try {
    body();
    return GFSML_OK;
  } catch (const gfsml::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const json::exception& e) {
    g_last_error = e.what();
    return GFSML_ERR_PARSE;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return GFSML_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return GFSML_ERR_INTERNAL;
  }
}

void require(const void* p, const char* name) {
  if (!p) throw gfsml::Error(gfsml::Errc::invalid, std::string("null argument: ") + name);
}

json parse_object(const char* s, const char* what) {
  if (!s || !*s) return json::object();
  json j;
  try {
    j = json::parse(s);
  } catch (const std::exception& e) {
    throw gfsml::Error(gfsml::Errc::parse, std::string(what) + ": " + e.what());
  }
  if (!j.is_object())
    throw gfsml::Error(gfsml::Errc::invalid, std::string(what) + " must be a JSON object");
  return j;
}

void reject_unknown(const json& j, std::initializer_list<const char*> allowed,
                    const char* what) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        known = true;
        break;
      }
    if (!known)
      throw gfsml::Error(gfsml::Errc::invalid,
                         "unknown key '" + it.key() + "' in " + what);
  }
}

gfsml::SynthConfig synth_config(const json& j) {
  reject_unknown(j,
                 {"n_trn_classes", "n_val_classes", "n_tst_classes", "count_trn", "count_val",
                  "count_tst", "n_not_finding", "n_sources", "dim", "separation", "noise",
                  "co_label"},
                 "synth config");
  gfsml::SynthConfig c;
  c.n_trn_classes = j.value("n_trn_classes", c.n_trn_classes);
  c.n_val_classes = j.value("n_val_classes", c.n_val_classes);
  c.n_tst_classes = j.value("n_tst_classes", c.n_tst_classes);
  c.count_trn = j.value("count_trn", c.count_trn);
  c.count_val = j.value("count_val", c.count_val);
  c.count_tst = j.value("count_tst", c.count_tst);
  c.n_not_finding = j.value("n_not_finding", c.n_not_finding);
  c.n_sources = j.value("n_sources", c.n_sources);
  c.dim = j.value("dim", c.dim);
  c.separation = j.value("separation", c.separation);
  c.noise = j.value("noise", c.noise);
  c.co_label = j.value("co_label", c.co_label);
  return c;
}

// Partial spec: unset keys keep `base`; phase is handled by the caller.
gfsml::EpisodeSpec spec_overrides(const json& j, gfsml::EpisodeSpec base, const char* what) {
  reject_unknown(j, {"n_seen", "n_unseen", "k_trn", "k_tst", "phase"}, what);
  base.n_seen = j.value("n_seen", base.n_seen);
  base.n_unseen = j.value("n_unseen", base.n_unseen);
  base.k_trn = j.value("k_trn", base.k_trn);
  base.k_tst = j.value("k_tst", base.k_tst);
  if (j.contains("phase")) base.phase = gfsml::phase_from_name(j.at("phase").get<std::string>());
  return base;
}

gfsml::TrainConfig train_config(const json& j) {
  reject_unknown(j,
                 {"batch_size", "lr", "max_epochs", "stop_metric", "patience", "episodes_trn",
                  "episodes_val", "episodes_tst", "t_steps", "ptc_trn", "lr_head"},
                 "train config");
  gfsml::TrainConfig c;
  c.batch_size = j.value("batch_size", c.batch_size);
  c.lr = j.value("lr", c.lr);
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.stop_metric = j.value("stop_metric", c.stop_metric);
  c.patience = j.value("patience", c.patience);
  c.episodes_trn = j.value("episodes_trn", c.episodes_trn);
  c.episodes_val = j.value("episodes_val", c.episodes_val);
  c.episodes_tst = j.value("episodes_tst", c.episodes_tst);
  c.t_steps = j.value("t_steps", c.t_steps);
  c.ptc_trn = j.value("ptc_trn", c.ptc_trn);
  c.lr_head = j.value("lr_head", c.lr_head);
  return c;
}

std::vector<std::string> class_names(const gfsml::MetaDataset& ds, const std::vector<int>& idx) {
  std::vector<std::string> names;
  names.reserve(idx.size());
  for (int c : idx) names.push_back(ds.vocab.names.at(static_cast<std::size_t>(c)));
  return names;
}

}  // namespace

extern "C" {

const char* gfsml_version(void) { return "0.1.0"; }

const char* gfsml_last_error(void) { return g_last_error.c_str(); }

void gfsml_string_free(char* s) { delete[] s; }

gfsml_status gfsml_dataset_synth(const char* config_json, uint64_t seed, gfsml_dataset** out) {
  return wrap([&] {
    require(out, "out");
    const auto cfg = synth_config(parse_object(config_json, "synth config"));
    *out = new gfsml_dataset{gfsml::synth_dataset(cfg, seed)};
  });
}

gfsml_status gfsml_dataset_load(const char* vocab_path, const char* metadata_csv,
                                const char* embeddings_csv, const char* options_json,
                                gfsml_dataset** out) {
  return wrap([&] {
    require(vocab_path, "vocab_path");
    require(metadata_csv, "metadata_csv");
    require(out, "out");
    const json opts = parse_object(options_json, "load options");
    reject_unknown(opts, {"min_age", "max_age"}, "load options");
    gfsml::AgeFilter filter;
    filter.min_age = opts.value("min_age", filter.min_age);
    filter.max_age = opts.value("max_age", filter.max_age);
    const auto vocab = gfsml::PathologyVocab::load(vocab_path);
    auto ds = gfsml::ingest_metadata(metadata_csv, vocab, filter);
    if (embeddings_csv && *embeddings_csv) gfsml::load_embeddings(ds, embeddings_csv);
    *out = new gfsml_dataset{std::move(ds)};
  });
}

gfsml_status gfsml_dataset_save(const gfsml_dataset* ds, const char* vocab_path,
                                const char* metadata_csv, const char* embeddings_csv) {
  return wrap([&] {
    require(ds, "ds");
    require(vocab_path, "vocab_path");
    require(metadata_csv, "metadata_csv");
    gfsml::write_vocab(ds->ds.vocab, vocab_path);
    gfsml::write_metadata_csv(ds->ds, metadata_csv);
    if (embeddings_csv && *embeddings_csv) gfsml::write_embeddings_csv(ds->ds, embeddings_csv);
  });
}

gfsml_status gfsml_dataset_stats(const gfsml_dataset* ds, const char* options_json,
                                 char** json_out) {
  return wrap([&] {
    require(ds, "ds");
    require(json_out, "json_out");
    const json opts = parse_object(options_json, "stats options");
    reject_unknown(opts, {"denominator"}, "stats options");
    const std::string denom = opts.value("denominator", "labeled");
    gfsml::CardinalityDenom d;
    if (denom == "labeled")
      d = gfsml::CardinalityDenom::labeled_only;
    else if (denom == "all")
      d = gfsml::CardinalityDenom::all_examples;
    else
      throw gfsml::Error(gfsml::Errc::invalid,
                         "denominator must be 'labeled' or 'all', got '" + denom + "'");
    const auto st = gfsml::compute_stats(ds->ds, d);
    json j;
    j["n_examples"] = st.n_examples;
    j["n_labeled"] = st.n_multilabeled;
    j["n_not_finding"] = st.n_normal;
    j["label_cardinality"] = st.label_cardinality;
    j["label_density"] = st.label_density;
    j["denominator"] = denom;
    j["positive_total"] =
        std::accumulate(ds->ds.freq.begin(), ds->ds.freq.end(), std::int64_t{0});
    j["classes"] = ds->ds.vocab.names;
    j["freq"] = ds->ds.freq;
    j["sources"] = ds->ds.sources;
    j["per_source_freq"] = ds->ds.per_source_freq;
    j["cooccurrence"] = st.cooccurrence;
    j["embedding_dim"] = ds->ds.embedding_dim;
    *json_out = dup_string(j.dump(2));
  });
}

void gfsml_dataset_free(gfsml_dataset* ds) { delete ds; }

gfsml_status gfsml_partition_build(const gfsml_dataset* ds, const char* options_json,
                                   uint64_t seed, gfsml_partition** out) {
  return wrap([&] {
    require(ds, "ds");
    require(out, "out");
    const json opts = parse_object(options_json, "partition options");
    reject_unknown(
        opts, {"n_tst", "n_val", "val_reserve", "tst_reserve", "notfinding_val", "notfinding_tst"},
        "partition options");
    gfsml::PoolFractions f;
    f.val_reserve = opts.value("val_reserve", f.val_reserve);
    f.tst_reserve = opts.value("tst_reserve", f.tst_reserve);
    f.notfinding_val = opts.value("notfinding_val", f.notfinding_val);
    f.notfinding_tst = opts.value("notfinding_tst", f.notfinding_tst);
    const int n_tst = opts.value("n_tst", 5);
    const int n_val = opts.value("n_val", 3);
    *out = new gfsml_partition{gfsml::build_partition(ds->ds, n_tst, n_val, f, seed)};
  });
}

gfsml_status gfsml_partition_save(const gfsml_dataset* ds, const gfsml_partition* part,
                                  const char* path) {
  return wrap([&] {
    require(ds, "ds");
    require(part, "part");
    require(path, "path");
    gfsml::save_partition(ds->ds, part->part, path);
  });
}

gfsml_status gfsml_partition_load(const gfsml_dataset* ds, const char* path,
                                  gfsml_partition** out) {
  return wrap([&] {
    require(ds, "ds");
    require(path, "path");
    require(out, "out");
    *out = new gfsml_partition{gfsml::load_partition(ds->ds, path)};
  });
}

gfsml_status gfsml_partition_describe(const gfsml_dataset* ds, const gfsml_partition* part,
                                      char** json_out) {
  return wrap([&] {
    require(ds, "ds");
    require(part, "part");
    require(json_out, "json_out");
    const auto& p = part->part;
    json j;
    j["meta_trn"] = class_names(ds->ds, p.classes.meta_trn);
    j["meta_val"] = class_names(ds->ds, p.classes.meta_val);
    j["meta_tst"] = class_names(ds->ds, p.classes.meta_tst);
    j["pool_sizes"] = {{"d_meta_trn", p.pools.d_meta_trn.size()},
                       {"d_meta_val", p.pools.d_meta_val.size()},
                       {"d_meta_tst", p.pools.d_meta_tst.size()}};
    j["fractions"] = {{"val_reserve", p.pools.fractions.val_reserve},
                      {"tst_reserve", p.pools.fractions.tst_reserve},
                      {"notfinding_val", p.pools.fractions.notfinding_val},
                      {"notfinding_tst", p.pools.fractions.notfinding_tst}};
    j["seed"] = p.pools.seed;
    json warnings = json::array();
    for (const auto& w : p.pools.warnings)
      warnings.push_back({{"pool", w.pool}, {"message", w.message}});
    j["warnings"] = warnings;
    *json_out = dup_string(j.dump(2));
  });
}

void gfsml_partition_free(gfsml_partition* part) { delete part; }

gfsml_status gfsml_episodes_sample(const gfsml_dataset* ds, const gfsml_partition* part,
                                   const char* spec_json, uint64_t seed, int64_t count,
                                   char** json_out) {
  return wrap([&] {
    require(ds, "ds");
    require(part, "part");
    require(json_out, "json_out");
    const auto spec =
        spec_overrides(parse_object(spec_json, "episode spec"), gfsml::EpisodeSpec{}, "episode spec");
    const auto episodes = gfsml::episode_stream(ds->ds, part->part, spec, seed, count);
    json arr = json::array();
    for (const auto& ep : episodes) arr.push_back(gfsml::episode_to_json(ds->ds, ep));
    json j;
    j["format"] = "gfsml-episodes-v1";
    j["seed"] = seed;
    j["count"] = count;
    j["spec"] = {{"n_seen", spec.n_seen},
                 {"n_unseen", spec.n_unseen},
                 {"k_trn", spec.k_trn},
                 {"k_tst", spec.k_tst},
                 {"phase", gfsml::phase_name(spec.phase)}};
    j["episodes"] = std::move(arr);
    *json_out = dup_string(j.dump(2));
  });
}

gfsml_status gfsml_train(const gfsml_dataset* ds, const gfsml_partition* part,
                         const char* config_json, uint64_t seed, gfsml_model** out) {
  return wrap([&] {
    require(ds, "ds");
    require(part, "part");
    require(out, "out");
    const json cfg = parse_object(config_json, "train config");
    reject_unknown(cfg, {"method", "encoder", "train", "val_spec"}, "train config");
    const auto method = gfsml::method_from_name(cfg.value("method", "batchbased"));

    gfsml::EncoderConfig enc_cfg;
    if (cfg.contains("encoder")) {
      const json& e = cfg.at("encoder");
      reject_unknown(e, {"input_dim", "hidden", "output_dim"}, "encoder config");
      enc_cfg.input_dim = e.value("input_dim", enc_cfg.input_dim);
      enc_cfg.hidden = e.value("hidden", enc_cfg.hidden);
      enc_cfg.output_dim = e.value("output_dim", enc_cfg.output_dim);
    }

    const auto tc = train_config(cfg.contains("train") ? cfg.at("train") : json::object());

    gfsml::EpisodeSpec val_spec;
    val_spec.n_seen = 2;
    val_spec.n_unseen = 1;
    val_spec.phase = gfsml::Phase::meta_val;
    if (cfg.contains("val_spec"))
      val_spec = spec_overrides(cfg.at("val_spec"), val_spec, "val spec");
    if (val_spec.phase != gfsml::Phase::meta_val)
      throw gfsml::Error(gfsml::Errc::invalid, "val_spec phase must be meta-val");

    *out = new gfsml_model{
        gfsml::train_model(ds->ds, part->part, method, enc_cfg, tc, val_spec, seed)};
  });
}

gfsml_status gfsml_model_save(const gfsml_model* model, const char* path) {
  return wrap([&] {
    require(model, "model");
    require(path, "path");
    gfsml::save_checkpoint(model->m, path);
  });
}

gfsml_status gfsml_model_load(const char* path, gfsml_model** out) {
  return wrap([&] {
    require(path, "path");
    require(out, "out");
    *out = new gfsml_model{gfsml::load_checkpoint(path)};
  });
}

gfsml_status gfsml_model_describe(const gfsml_model* model, char** json_out) {
  return wrap([&] {
    require(model, "model");
    require(json_out, "json_out");
    json j = gfsml::checkpoint_to_json(model->m);
    std::size_t n_params = 0;
    for (const auto& layer : model->m.enc.layers) n_params += layer.w.a.size() + layer.b.size();
    n_params += model->m.head.w.a.size() + model->m.head.b.size();
    j["encoder"].erase("layers");
    j.erase("head");
    j["n_parameters"] = n_params;
    *json_out = dup_string(j.dump(2));
  });
}

void gfsml_model_free(gfsml_model* model) { delete model; }

gfsml_status gfsml_evaluate(const gfsml_dataset* ds, const gfsml_partition* part,
                            const gfsml_model* model, const char* options_json,
                            char** json_out) {
  return wrap([&] {
    require(ds, "ds");
    require(part, "part");
    require(model, "model");
    require(json_out, "json_out");
    const json opts = parse_object(options_json, "evaluate options");
    reject_unknown(opts, {"phase", "episodes", "seed", "workers", "spec", "grid",
                          "per_episode_csv"},
                   "evaluate options");
    if (opts.contains("spec") && opts.contains("grid"))
      throw gfsml::Error(gfsml::Errc::invalid, "pass either 'spec' or 'grid', not both");
    const auto phase = gfsml::phase_from_name(opts.value("phase", "meta-test"));
    const auto episodes = opts.value("episodes", model->m.cfg.episodes_tst);
    const auto seed = opts.value("seed", std::uint64_t{0});
    const int workers = opts.value("workers", 1);

    std::vector<gfsml::GridCell> cells;
    if (opts.contains("grid")) {
      if (opts.contains("per_episode_csv"))
        throw gfsml::Error(gfsml::Errc::invalid,
                           "per-episode CSV applies to single-spec evaluation only");
      const json& g = opts.at("grid");
      reject_unknown(g, {"n_way", "n_unseen", "k"}, "evaluation grid");
      cells = gfsml::evaluate_grid(ds->ds, part->part, model->m, phase,
                                   g.at("n_way").get<std::vector<int>>(),
                                   g.at("n_unseen").get<std::vector<int>>(),
                                   g.at("k").get<std::vector<int>>(), episodes, seed, workers);
    } else {
      gfsml::EpisodeSpec spec = model->m.val_spec;
      if (opts.contains("spec")) {
        reject_unknown(opts.at("spec"), {"n_seen", "n_unseen", "k_trn", "k_tst"},
                       "evaluation spec");
        spec = spec_overrides(opts.at("spec"), spec, "evaluation spec");
      }
      spec.phase = phase;
      const auto scores =
          gfsml::score_stream(ds->ds, part->part, model->m, spec, episodes, seed, workers);
      if (opts.contains("per_episode_csv")) {
        const auto path = opts.at("per_episode_csv").get<std::string>();
        const auto parent = std::filesystem::path(path).parent_path();
        if (!parent.empty()) {
          std::error_code ec;
          std::filesystem::create_directories(parent, ec);
        }
        std::ofstream csv(path);
        if (!csv) throw gfsml::Error(gfsml::Errc::io, "cannot write per-episode CSV: " + path);
        csv << "episode,seen_auc,unseen_auc,hm\n";
        char buf[32];
        auto cell = [&](const std::optional<double>& v) {
          if (!v) return std::string();
          std::snprintf(buf, sizeof(buf), "%.17g", *v);
          return std::string(buf);
        };
        for (std::size_t i = 0; i < scores.size(); ++i) {
          std::snprintf(buf, sizeof(buf), "%.17g", scores[i].hm);
          csv << i << ',' << cell(scores[i].seen_auc) << ',' << cell(scores[i].unseen_auc) << ','
              << buf << '\n';
        }
      }
      gfsml::Aggregator agg;
      for (const auto& s : scores) agg.add(s);
      cells.push_back({spec, agg.report()});
    }
    *json_out = dup_string(gfsml::grid_to_json(cells).dump(2));
  });
}

gfsml_status gfsml_report_render(const char* report_json, char** text_out) {
  return wrap([&] {
    require(report_json, "report_json");
    require(text_out, "text_out");
    json j;
    try {
      j = json::parse(report_json);
    } catch (const std::exception& e) {
      throw gfsml::Error(gfsml::Errc::parse, std::string("report: ") + e.what());
    }
    *text_out = dup_string(gfsml::render_report_text(gfsml::grid_from_json(j)));
  });
}

gfsml_status gfsml_file_hash(const char* path, char** hex_out) {
  return wrap([&] {
    require(path, "path");
    require(hex_out, "hex_out");
    *hex_out = dup_string(gfsml::hex64(gfsml::fnv1a_file(path)));
  });
}

}  // extern "C"
