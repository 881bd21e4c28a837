#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gfsml/dataset.hpp"
#include "gfsml/episodes.hpp"
#include "gfsml/eval.hpp"
#include "gfsml/models.hpp"
#include "gfsml/partition.hpp"

#include "json.hpp"

namespace gfsml {

enum class Method { protonet_ml, batchbased };

const char* method_name(Method m);
Method method_from_name(const std::string& name);

// Batch-pretraining pool: features and meta-train-class labels for every
// example in d_meta_trn. Label columns follow `classes` (ascending index).
struct BatchPool {
  Mat x;
  Mat y;
  std::vector<int> classes;
};

BatchPool build_batch_pool(const MetaDataset& ds, const Partition& part);

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double val_hm = 0.0;
};

struct TrainOutcome {
  Method method = Method::batchbased;
  EncoderConfig enc_cfg;
  EncoderParams enc;
  HeadParams head;                // batchbased pretraining head
  std::vector<int> head_classes;  // column order of `head`
  TrainConfig cfg;
  EpisodeSpec val_spec;
  std::uint64_t seed = 0;
  int best_epoch = 0;
  double best_val_hm = 0.0;
  int epochs_run = 0;
  std::vector<EpochLog> history;
};

// Pretrain with early stopping on mean HM over a fixed meta-val episode set
// (patience from cfg). A BatchBased epoch is one pool pass; a ProtoNet-ML
// epoch is cfg.episodes_trn training episodes. Returns the best-epoch model.
TrainOutcome train_model(const MetaDataset& ds, const Partition& part, Method method,
                         EncoderConfig enc_cfg, const TrainConfig& cfg,
                         const EpisodeSpec& val_spec, std::uint64_t seed);

// Scores episodes i = 0..count-1 of the stream seeded by `seed`. Results are
// indexed, so the outcome is identical for any worker count.
std::vector<EpisodeScores> score_stream(const MetaDataset& ds, const Partition& part,
                                        const TrainOutcome& model, const EpisodeSpec& spec,
                                        std::int64_t count, std::uint64_t seed, int workers = 1);

AggregateReport evaluate_model(const MetaDataset& ds, const Partition& part,
                               const TrainOutcome& model, const EpisodeSpec& spec,
                               std::int64_t count, std::uint64_t seed, int workers = 1);

struct GridCell {
  EpisodeSpec spec;
  AggregateReport report;
};

// Deterministic row-major sweep over n_way × n_unseen × k (n_seen = n_way −
// n_unseen); combinations with n_unseen > n_way are skipped.
std::vector<GridCell> evaluate_grid(const MetaDataset& ds, const Partition& part,
                                    const TrainOutcome& model, Phase phase,
                                    const std::vector<int>& n_way,
                                    const std::vector<int>& n_unseen, const std::vector<int>& k,
                                    std::int64_t episodes, std::uint64_t seed, int workers = 1);

// Checkpoints round-trip bit-exactly (JSON, shortest round-trip doubles).
nlohmann::json checkpoint_to_json(const TrainOutcome& model);
TrainOutcome checkpoint_from_json(const nlohmann::json& j);
void save_checkpoint(const TrainOutcome& model, const std::string& path);
TrainOutcome load_checkpoint(const std::string& path);

nlohmann::json grid_to_json(const std::vector<GridCell>& cells);
std::vector<GridCell> grid_from_json(const nlohmann::json& j);
// Percent with two decimals, "value ± half-width" per metric column.
std::string render_report_text(const std::vector<GridCell>& cells);

std::uint64_t fnv1a(const void* data, std::size_t n);
std::uint64_t fnv1a_str(const std::string& s);
std::uint64_t fnv1a_file(const std::string& path);
std::string hex64(std::uint64_t v);

}  // namespace gfsml
