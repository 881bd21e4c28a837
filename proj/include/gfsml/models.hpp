#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gfsml/dataset.hpp"
#include "gfsml/episodes.hpp"
#include "gfsml/linalg.hpp"
#include "gfsml/rng.hpp"

namespace gfsml {

// ---------------------------------------------------------------- encoder --

struct EncoderConfig {
  int input_dim = 0;
  std::vector<int> hidden{64, 64};
  int output_dim = 128;
};

struct Layer {
  Mat w;  // out × in
  Vec b;  // out
};

struct EncoderParams {
  EncoderConfig cfg;
  std::vector<Layer> layers;  // hidden.size() + 1 affine maps; tanh between, linear last
};

// Glorot-uniform weights, zero biases.
EncoderParams init_encoder(const EncoderConfig& cfg, Rng& rng);

void check_encoder(const EncoderParams& enc);

Vec encode(const EncoderParams& enc, const Vec& x);

struct EncoderCache {
  std::vector<Mat> acts;  // acts[0] = input batch, acts[i] = layer-i output
};

// Row-wise batch forward; pass cache to keep activations for backward.
Mat encoder_forward(const EncoderParams& enc, const Mat& x, EncoderCache* cache = nullptr);

struct EncoderGrads {
  std::vector<Layer> layers;  // same shapes as EncoderParams::layers
};

EncoderGrads zero_grads(const EncoderParams& enc);

// Accumulates dL/dparams into `grads` given dL/d(embedding batch).
void encoder_backward(const EncoderParams& enc, const EncoderCache& cache, const Mat& d_out,
                      EncoderGrads& grads);

// ------------------------------------------------------------------- head --

struct HeadParams {
  Mat w;  // n_classes × D
  Vec b;  // n_classes
};

HeadParams zero_head(int n_classes, int dim);

// σ(W f(x) + b) per class.
Vec head_predict(const EncoderParams& enc, const HeadParams& head, const Vec& x);

// ------------------------------------------------------------- prototypes --

struct PrototypeSet {
  Mat z;   // n_classes × D
  Vec mu;  // n_classes
};

// z_c = mean embedding of the class-c positives; μ_c = mean Euclidean
// distance from z_c to every training embedding (not-finding included).
PrototypeSet compute_prototypes(const Mat& emb_trn, const Mat& y_trn);
PrototypeSet compute_prototypes(const EncoderParams& enc, const Mat& x_trn, const Mat& y_trn);

// p_c = σ(μ_c − ‖f(x) − z_c‖)
Vec protonet_scores(const PrototypeSet& protos, const Vec& embedding);
Vec protonet_scores(const EncoderParams& enc, const PrototypeSet& protos, const Vec& x);
Mat protonet_score_batch(const PrototypeSet& protos, const Mat& emb);

// ------------------------------------------------------------------- loss --

struct BceResult {
  double loss = 0.0;
  Mat d_logits;  // (p − y) / count
};

// Mean binary cross-entropy over all (example, class) entries.
BceResult bce_loss(const Mat& probs, const Mat& labels);

// -------------------------------------------------------------- optimizer --

enum class OptKind { sgd, adamw };

struct OptimizerConfig {
  OptKind kind = OptKind::adamw;
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

struct OptimizerState {
  OptimizerConfig cfg;
  std::int64_t step_count = 0;
  std::vector<Vec> m, v;  // one buffer per tensor; sgd keeps none
};

struct TensorRef {
  double* param;
  const double* grad;
  std::size_t n;
};

std::vector<TensorRef> tensor_refs(EncoderParams& enc, const EncoderGrads& grads);

void optimizer_step(OptimizerState& opt, const std::vector<TensorRef>& tensors);

// ---------------------------------------------------------------- training --

struct TrainConfig {
  int batch_size = 64;
  double lr = 1e-4;
  int max_epochs = 150;
  std::string stop_metric = "hm";
  int patience = 10;
  std::int64_t episodes_trn = 1000;
  std::int64_t episodes_val = 100;
  std::int64_t episodes_tst = 10000;
  int t_steps = 100;
  double ptc_trn = 0.5;
  double lr_head = 0.05;
};

void check_train_config(const TrainConfig& cfg);

// Episode materialized as dense tensors; label columns follow ep.classes.
struct EpisodeData {
  Mat x_trn, y_trn;
  Mat x_tst, y_tst;
  int n_seen = 0;
};

EpisodeData materialize(const MetaDataset& ds, const Episode& ep);

// Episode loss and, when grads != nullptr, dL/d(encoder params) through
// scoring, prototypes, and μ_c.
double protonet_loss_grads(const EncoderParams& enc, const EpisodeData& ep,
                           EncoderGrads* grads);

// One episodic step: prototypes from d_trn, BCE on d_tst, gradients through
// scoring, prototypes, and μ_c into the encoder, one optimizer step.
double protonet_train_step(EncoderParams& enc, const EpisodeData& ep, OptimizerState& opt);

// One pass over the shuffled pool in batches; joint encoder+head update.
// Returns the epoch's per-(example,class) mean loss.
double batch_train_epoch(EncoderParams& enc, HeadParams& head, const Mat& x_pool,
                         const Mat& y_pool, int batch_size, OptimizerState& opt, Rng& rng);

// t_steps plain gradient steps on a fresh zero head over subsets of d_trn;
// the encoder is read-only here by construction.
HeadParams adapt_head(const EncoderParams& enc, const EpisodeData& ep, int t_steps,
                      double ptc_trn, double lr_head, Rng& rng);

}  // namespace gfsml
