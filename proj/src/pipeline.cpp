#include "gfsml/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <thread>

#include "gfsml/error.hpp"
#include "gfsml/rng.hpp"

namespace gfsml {

namespace {

// Stream ids for per-purpose seed derivation.
constexpr std::uint64_t kStreamInit = 0;
constexpr std::uint64_t kStreamShuffle = 1;
constexpr std::uint64_t kStreamTrnEpisodes = 2;
constexpr std::uint64_t kStreamValEpisodes = 3;
constexpr std::uint64_t kStreamValAdapt = 4;
constexpr std::uint64_t kStreamEvalAdapt = 5;

}  // namespace

const char* method_name(Method m) {
  switch (m) {
    case Method::protonet_ml: return "protonet-ml";
    case Method::batchbased: return "batchbased";
  }
  throw Error(Errc::internal, "unreachable method");
}

Method method_from_name(const std::string& name) {
  if (name == "protonet-ml") return Method::protonet_ml;
  if (name == "batchbased") return Method::batchbased;
  throw Error(Errc::invalid, "unknown method '" + name + "' (want protonet-ml|batchbased)");
}

BatchPool build_batch_pool(const MetaDataset& ds, const Partition& part) {
  if (ds.embedding_dim == 0)
    throw Error(Errc::invalid, "dataset carries no feature vectors; load them first");
  BatchPool pool;
  pool.classes = part.classes.meta_trn;
  const auto& idx = part.pools.d_meta_trn;
  if (idx.empty()) throw Error(Errc::invalid, "meta-train pool is empty");
  pool.x = Mat(idx.size(), static_cast<size_t>(ds.embedding_dim));
  pool.y = Mat(idx.size(), pool.classes.size());
  for (size_t r = 0; r < idx.size(); ++r) {
    const auto& ex = ds.examples.at(idx[r]);
    if (ex.embedding.size() != static_cast<size_t>(ds.embedding_dim))
      throw Error(Errc::invalid, "example '" + ex.id + "' has no feature vector");
    std::copy(ex.embedding.begin(), ex.embedding.end(), pool.x.row(r));
    for (size_t c = 0; c < pool.classes.size(); ++c)
      pool.y(r, c) = static_cast<double>(ex.labels[pool.classes[c]]);
  }
  return pool;
}

namespace {

// Score one materialized episode with the trained model. Adaptation draws
// from `adapt_seed`, ignored by ProtoNet-ML.
EpisodeScores score_one(const TrainOutcome& model, const EpisodeData& data,
                        std::uint64_t adapt_seed) {
  Mat probs;
  if (model.method == Method::protonet_ml) {
    const Mat emb_trn = encoder_forward(model.enc, data.x_trn);
    const Mat emb_tst = encoder_forward(model.enc, data.x_tst);
    const PrototypeSet protos = compute_prototypes(emb_trn, data.y_trn);
    probs = protonet_score_batch(protos, emb_tst);
  } else {
    Rng rng(adapt_seed);
    const HeadParams head = adapt_head(model.enc, data, model.cfg.t_steps, model.cfg.ptc_trn,
                                       model.cfg.lr_head, rng);
    const Mat emb_tst = encoder_forward(model.enc, data.x_tst);
    probs = Mat(emb_tst.rows, head.w.rows);
    for (size_t m = 0; m < emb_tst.rows; ++m)
      for (size_t c = 0; c < head.w.rows; ++c)
        probs(m, c) =
            sigmoid(dot(head.w.row(c), emb_tst.row(m), head.w.cols) + head.b[c]);
  }
  return score_episode(probs, data.y_tst, data.n_seen);
}

double mean_val_hm(const MetaDataset& ds, const std::vector<Episode>& val_eps,
                   const TrainOutcome& model, std::uint64_t adapt_master) {
  Aggregator agg;
  for (size_t i = 0; i < val_eps.size(); ++i) {
    const EpisodeData data = materialize(ds, val_eps[i]);
    agg.add(score_one(model, data, derive_seed(adapt_master, i)));
  }
  return agg.report().hm.mean;
}

}  // namespace

TrainOutcome train_model(const MetaDataset& ds, const Partition& part, Method method,
                         EncoderConfig enc_cfg, const TrainConfig& cfg,
                         const EpisodeSpec& val_spec, std::uint64_t seed) {
  check_train_config(cfg);
  if (val_spec.phase != Phase::meta_val)
    throw Error(Errc::invalid, "validation episodes must use the meta-val phase");
  check_spec(val_spec);
  if (enc_cfg.input_dim == 0) enc_cfg.input_dim = ds.embedding_dim;
  if (enc_cfg.input_dim != ds.embedding_dim)
    throw Error(Errc::invalid, "encoder input_dim does not match dataset features");

  TrainOutcome out;
  out.method = method;
  out.enc_cfg = enc_cfg;
  out.cfg = cfg;
  out.val_spec = val_spec;
  out.seed = seed;

  Rng init_rng(derive_seed(seed, kStreamInit));
  out.enc = init_encoder(enc_cfg, init_rng);

  BatchPool pool;
  if (method == Method::batchbased) {
    pool = build_batch_pool(ds, part);
    out.head_classes = pool.classes;
    out.head = zero_head(static_cast<int>(pool.classes.size()), enc_cfg.output_dim);
    const double a =
        std::sqrt(6.0 / static_cast<double>(pool.classes.size() + enc_cfg.output_dim));
    for (auto& w : out.head.w.a) w = (2.0 * init_rng.unit() - 1.0) * a;
  }

  // Fixed validation set: the same episodes score every epoch, so the
  // early-stop signal moves only when the model does.
  const std::uint64_t val_master = derive_seed(seed, kStreamValEpisodes);
  const std::uint64_t val_adapt_master = derive_seed(seed, kStreamValAdapt);
  const auto val_eps = episode_stream(ds, part, val_spec, val_master, cfg.episodes_val);

  EpisodeSpec trn_spec;
  trn_spec.n_seen = val_spec.n_seen + val_spec.n_unseen;
  trn_spec.n_unseen = 0;
  trn_spec.k_trn = val_spec.k_trn;
  trn_spec.k_tst = val_spec.k_tst;
  trn_spec.phase = Phase::meta_trn;

  OptimizerState opt;
  opt.cfg.kind = OptKind::adamw;
  opt.cfg.lr = cfg.lr;

  Rng shuffle_rng(derive_seed(seed, kStreamShuffle));
  const std::uint64_t trn_master = derive_seed(seed, kStreamTrnEpisodes);

  EncoderParams best_enc = out.enc;
  HeadParams best_head = out.head;
  double best_hm = -1.0;
  int best_epoch = 0;
  int bad_epochs = 0;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    double train_loss = 0.0;
    if (method == Method::batchbased) {
      train_loss =
          batch_train_epoch(out.enc, out.head, pool.x, pool.y, cfg.batch_size, opt, shuffle_rng);
    } else {
      double loss_sum = 0.0;
      for (std::int64_t i = 0; i < cfg.episodes_trn; ++i) {
        const std::int64_t global = (static_cast<std::int64_t>(epoch) - 1) * cfg.episodes_trn + i;
        const Episode ep = generate_episode(ds, part, trn_spec, episode_seed(trn_master, global));
        loss_sum += protonet_train_step(out.enc, materialize(ds, ep), opt);
      }
      train_loss = loss_sum / static_cast<double>(cfg.episodes_trn);
    }

    const double val_hm = mean_val_hm(ds, val_eps, out, val_adapt_master);
    out.history.push_back({epoch, train_loss, val_hm});
    out.epochs_run = epoch;

    if (val_hm > best_hm) {
      best_hm = val_hm;
      best_epoch = epoch;
      best_enc = out.enc;
      best_head = out.head;
      bad_epochs = 0;
    } else if (++bad_epochs >= cfg.patience) {
      break;
    }
  }

  out.enc = std::move(best_enc);
  out.head = std::move(best_head);
  out.best_epoch = best_epoch;
  out.best_val_hm = std::max(best_hm, 0.0);
  return out;
}

std::vector<EpisodeScores> score_stream(const MetaDataset& ds, const Partition& part,
                                        const TrainOutcome& model, const EpisodeSpec& spec,
                                        std::int64_t count, std::uint64_t seed, int workers) {
  if (count < 1) throw Error(Errc::invalid, "episode count must be >= 1");
  if (workers < 1) workers = 1;
  const std::uint64_t adapt_master = derive_seed(seed, kStreamEvalAdapt);

  std::vector<EpisodeScores> scores(static_cast<size_t>(count));
  std::atomic<std::int64_t> next{0};
  std::atomic<bool> failed{false};
  std::string error_message;
  Errc error_code = Errc::internal;
  std::mutex error_mu;

  auto run = [&]() {
    for (;;) {
      const std::int64_t i = next.fetch_add(1);
      if (i >= count || failed.load()) return;
      try {
        const Episode ep = generate_episode(ds, part, spec, episode_seed(seed, i));
        scores[static_cast<size_t>(i)] =
            score_one(model, materialize(ds, ep), derive_seed(adapt_master, i));
      } catch (const Error& e) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!failed.exchange(true)) {
          error_message = "episode " + std::to_string(i) + ": " + e.what();
          error_code = e.code();
        }
        return;
      }
    }
  };

  if (workers == 1) {
    run();
  } else {
    std::vector<std::thread> threads;
    for (int w = 0; w < workers; ++w) threads.emplace_back(run);
    for (auto& t : threads) t.join();
  }
  if (failed.load()) throw Error(error_code, error_message);
  return scores;
}

AggregateReport evaluate_model(const MetaDataset& ds, const Partition& part,
                               const TrainOutcome& model, const EpisodeSpec& spec,
                               std::int64_t count, std::uint64_t seed, int workers) {
  Aggregator agg;
  for (const auto& s : score_stream(ds, part, model, spec, count, seed, workers)) agg.add(s);
  return agg.report();
}

std::vector<GridCell> evaluate_grid(const MetaDataset& ds, const Partition& part,
                                    const TrainOutcome& model, Phase phase,
                                    const std::vector<int>& n_way,
                                    const std::vector<int>& n_unseen, const std::vector<int>& k,
                                    std::int64_t episodes, std::uint64_t seed, int workers) {
  std::vector<GridCell> cells;
  std::uint64_t cell_index = 0;
  for (int way : n_way)
    for (int unseen : n_unseen) {
      if (unseen > way) continue;
      for (int shots : k) {
        EpisodeSpec spec;
        spec.n_seen = way - unseen;
        spec.n_unseen = unseen;
        spec.k_trn = shots;
        spec.k_tst = shots;
        spec.phase = phase;
        GridCell cell;
        cell.spec = spec;
        cell.report = evaluate_model(ds, part, model, spec, episodes,
                                     derive_seed(seed, cell_index), workers);
        cells.push_back(std::move(cell));
        ++cell_index;
      }
    }
  if (cells.empty()) throw Error(Errc::invalid, "evaluation grid is empty");
  return cells;
}

namespace {

nlohmann::json mat_to_json(const Mat& m) {
  return {{"rows", m.rows}, {"cols", m.cols}, {"data", m.a}};
}

Mat mat_from_json(const nlohmann::json& j) {
  Mat m(j.at("rows").get<size_t>(), j.at("cols").get<size_t>());
  m.a = j.at("data").get<std::vector<double>>();
  if (m.a.size() != m.rows * m.cols)
    throw Error(Errc::parse, "checkpoint matrix size mismatch");
  return m;
}

nlohmann::json spec_to_json(const EpisodeSpec& s) {
  return {{"n_seen", s.n_seen}, {"n_unseen", s.n_unseen}, {"k_trn", s.k_trn},
          {"k_tst", s.k_tst},   {"phase", phase_name(s.phase)}};
}

EpisodeSpec spec_from_json(const nlohmann::json& j) {
  EpisodeSpec s;
  s.n_seen = j.at("n_seen").get<int>();
  s.n_unseen = j.at("n_unseen").get<int>();
  s.k_trn = j.at("k_trn").get<int>();
  s.k_tst = j.at("k_tst").get<int>();
  s.phase = phase_from_name(j.at("phase").get<std::string>());
  return s;
}

nlohmann::json train_cfg_to_json(const TrainConfig& c) {
  return {{"batch_size", c.batch_size},
          {"lr", c.lr},
          {"max_epochs", c.max_epochs},
          {"stop_metric", c.stop_metric},
          {"patience", c.patience},
          {"episodes_trn", c.episodes_trn},
          {"episodes_val", c.episodes_val},
          {"episodes_tst", c.episodes_tst},
          {"t_steps", c.t_steps},
          {"ptc_trn", c.ptc_trn},
          {"lr_head", c.lr_head}};
}

TrainConfig train_cfg_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.batch_size = j.at("batch_size").get<int>();
  c.lr = j.at("lr").get<double>();
  c.max_epochs = j.at("max_epochs").get<int>();
  c.stop_metric = j.at("stop_metric").get<std::string>();
  c.patience = j.at("patience").get<int>();
  c.episodes_trn = j.at("episodes_trn").get<std::int64_t>();
  c.episodes_val = j.at("episodes_val").get<std::int64_t>();
  c.episodes_tst = j.at("episodes_tst").get<std::int64_t>();
  c.t_steps = j.at("t_steps").get<int>();
  c.ptc_trn = j.at("ptc_trn").get<double>();
  c.lr_head = j.at("lr_head").get<double>();
  return c;
}

}  // namespace

nlohmann::json checkpoint_to_json(const TrainOutcome& model) {
  nlohmann::json j;
  j["format"] = "gfsml-checkpoint-v1";
  j["method"] = method_name(model.method);
  j["encoder"]["config"] = {{"input_dim", model.enc_cfg.input_dim},
                            {"hidden", model.enc_cfg.hidden},
                            {"output_dim", model.enc_cfg.output_dim}};
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& layer : model.enc.layers)
    layers.push_back({{"w", mat_to_json(layer.w)}, {"b", layer.b}});
  j["encoder"]["layers"] = layers;
  j["head"] = {{"w", mat_to_json(model.head.w)}, {"b", model.head.b}};
  j["head_classes"] = model.head_classes;
  j["train_config"] = train_cfg_to_json(model.cfg);
  j["val_spec"] = spec_to_json(model.val_spec);
  j["seed"] = model.seed;
  j["best_epoch"] = model.best_epoch;
  j["best_val_hm"] = model.best_val_hm;
  j["epochs_run"] = model.epochs_run;
  nlohmann::json history = nlohmann::json::array();
  for (const auto& h : model.history)
    history.push_back({{"epoch", h.epoch}, {"train_loss", h.train_loss}, {"val_hm", h.val_hm}});
  j["history"] = history;
  j["config_hash"] = hex64(fnv1a_str(j["train_config"].dump() + j["val_spec"].dump() +
                                     j["encoder"]["config"].dump()));
  return j;
}

TrainOutcome checkpoint_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "gfsml-checkpoint-v1")
    throw Error(Errc::parse, "unrecognized checkpoint format");
  TrainOutcome m;
  m.method = method_from_name(j.at("method").get<std::string>());
  const auto& ec = j.at("encoder").at("config");
  m.enc_cfg.input_dim = ec.at("input_dim").get<int>();
  m.enc_cfg.hidden = ec.at("hidden").get<std::vector<int>>();
  m.enc_cfg.output_dim = ec.at("output_dim").get<int>();
  m.enc.cfg = m.enc_cfg;
  for (const auto& lj : j.at("encoder").at("layers")) {
    Layer layer;
    layer.w = mat_from_json(lj.at("w"));
    layer.b = lj.at("b").get<Vec>();
    m.enc.layers.push_back(std::move(layer));
  }
  check_encoder(m.enc);
  m.head.w = mat_from_json(j.at("head").at("w"));
  m.head.b = j.at("head").at("b").get<Vec>();
  m.head_classes = j.at("head_classes").get<std::vector<int>>();
  m.cfg = train_cfg_from_json(j.at("train_config"));
  m.val_spec = spec_from_json(j.at("val_spec"));
  m.seed = j.at("seed").get<std::uint64_t>();
  m.best_epoch = j.at("best_epoch").get<int>();
  m.best_val_hm = j.at("best_val_hm").get<double>();
  m.epochs_run = j.at("epochs_run").get<int>();
  for (const auto& h : j.at("history"))
    m.history.push_back({h.at("epoch").get<int>(), h.at("train_loss").get<double>(),
                         h.at("val_hm").get<double>()});
  return m;
}

void save_checkpoint(const TrainOutcome& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io, "cannot write checkpoint: " + path);
  out << checkpoint_to_json(model).dump(2) << '\n';
}

TrainOutcome load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot read checkpoint: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw Error(Errc::parse, "checkpoint '" + path + "': " + e.what());
  }
  return checkpoint_from_json(j);
}

nlohmann::json grid_to_json(const std::vector<GridCell>& cells) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& cell : cells) {
    nlohmann::json j;
    j["spec"] = spec_to_json(cell.spec);
    j["metrics"] = report_to_json(cell.report);
    arr.push_back(std::move(j));
  }
  return {{"format", "gfsml-report-v1"}, {"cells", arr}};
}

std::vector<GridCell> grid_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "gfsml-report-v1")
    throw Error(Errc::parse, "unrecognized report format");
  auto summary = [](const nlohmann::json& m) {
    MetricSummary s;
    s.mean = m.at("mean").get<double>();
    s.ci95 = m.at("ci95").get<double>();
    s.n = m.at("n").get<std::int64_t>();
    return s;
  };
  std::vector<GridCell> cells;
  for (const auto& cj : j.at("cells")) {
    GridCell cell;
    cell.spec = spec_from_json(cj.at("spec"));
    const auto& metrics = cj.at("metrics");
    if (metrics.contains("seen")) cell.report.seen = summary(metrics.at("seen"));
    if (metrics.contains("unseen")) cell.report.unseen = summary(metrics.at("unseen"));
    cell.report.hm = summary(metrics.at("hm"));
    cells.push_back(std::move(cell));
  }
  return cells;
}

namespace {

std::string pct(const MetricSummary& m) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%6.2f%% ± %.2f", 100.0 * m.mean, 100.0 * m.ci95);
  return buf;
}

}  // namespace

std::string render_report_text(const std::vector<GridCell>& cells) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-10s %5s %8s %6s  %-18s %-18s %-18s %8s\n", "phase",
                "n-way", "n-unseen", "k", "Seen", "Unseen", "HM", "episodes");
  out += line;
  out.append(100, '-');
  out += '\n';
  for (const auto& cell : cells) {
    const int way = cell.spec.n_seen + cell.spec.n_unseen;
    std::snprintf(line, sizeof(line), "%-10s %5d %8d %6d  %-18s %-18s %-18s %8lld\n",
                  phase_name(cell.spec.phase), way, cell.spec.n_unseen, cell.spec.k_trn,
                  cell.report.seen ? pct(*cell.report.seen).c_str() : "-",
                  cell.report.unseen ? pct(*cell.report.unseen).c_str() : "-",
                  pct(cell.report.hm).c_str(),
                  static_cast<long long>(cell.report.hm.n));
    out += line;
  }
  return out;
}

std::uint64_t fnv1a(const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fnv1a_str(const std::string& s) { return fnv1a(s.data(), s.size()); }

std::uint64_t fnv1a_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot hash missing file: " + path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const auto got = static_cast<std::size_t>(in.gcount());
    for (std::size_t i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace gfsml
