#include "gfsml/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gfsml/error.hpp"

namespace gfsml {

namespace {

constexpr double kDistEps = 1e-12;
constexpr double kLogEps = 1e-12;

std::vector<int> layer_sizes(const EncoderConfig& cfg) {
  if (cfg.input_dim < 1) throw Error(Errc::invalid, "encoder input_dim must be >= 1");
  if (cfg.output_dim < 1) throw Error(Errc::invalid, "encoder output_dim must be >= 1");
  for (int h : cfg.hidden)
    if (h < 1) throw Error(Errc::invalid, "encoder hidden sizes must be >= 1");
  std::vector<int> sizes;
  sizes.push_back(cfg.input_dim);
  sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  sizes.push_back(cfg.output_dim);
  return sizes;
}

}  // namespace

EncoderParams init_encoder(const EncoderConfig& cfg, Rng& rng) {
  const auto sizes = layer_sizes(cfg);
  EncoderParams enc;
  enc.cfg = cfg;
  for (size_t l = 0; l + 1 < sizes.size(); ++l) {
    const auto in = static_cast<size_t>(sizes[l]);
    const auto out = static_cast<size_t>(sizes[l + 1]);
    Layer layer;
    layer.w = Mat(out, in);
    layer.b.assign(out, 0.0);
    const double a = std::sqrt(6.0 / static_cast<double>(in + out));
    for (auto& w : layer.w.a) w = (2.0 * rng.unit() - 1.0) * a;
    enc.layers.push_back(std::move(layer));
  }
  return enc;
}

void check_encoder(const EncoderParams& enc) {
  const auto sizes = layer_sizes(enc.cfg);
  if (enc.layers.size() + 1 != sizes.size())
    throw Error(Errc::invalid, "encoder layer count does not match config");
  for (size_t l = 0; l < enc.layers.size(); ++l) {
    const auto& layer = enc.layers[l];
    if (layer.w.rows != static_cast<size_t>(sizes[l + 1]) ||
        layer.w.cols != static_cast<size_t>(sizes[l]) || layer.b.size() != layer.w.rows)
      throw Error(Errc::invalid, "encoder layer " + std::to_string(l) + " shape mismatch");
    for (double w : layer.w.a)
      if (!std::isfinite(w)) throw Error(Errc::invalid, "non-finite encoder weight");
    for (double b : layer.b)
      if (!std::isfinite(b)) throw Error(Errc::invalid, "non-finite encoder bias");
  }
}

Vec encode(const EncoderParams& enc, const Vec& x) {
  if (x.size() != static_cast<size_t>(enc.cfg.input_dim))
    throw Error(Errc::invalid, "encoder input dimension mismatch: got " +
                                   std::to_string(x.size()) + ", expected " +
                                   std::to_string(enc.cfg.input_dim));
  Vec a = x, z;
  for (size_t l = 0; l < enc.layers.size(); ++l) {
    affine(enc.layers[l].w, enc.layers[l].b, a, z);
    if (l + 1 < enc.layers.size())
      for (auto& v : z) v = std::tanh(v);
    a.swap(z);
  }
  return a;
}

Mat encoder_forward(const EncoderParams& enc, const Mat& x, EncoderCache* cache) {
  if (x.cols != static_cast<size_t>(enc.cfg.input_dim))
    throw Error(Errc::invalid, "encoder batch dimension mismatch");
  if (cache) {
    cache->acts.clear();
    cache->acts.push_back(x);
  }
  Mat a = x;
  for (size_t l = 0; l < enc.layers.size(); ++l) {
    const auto& layer = enc.layers[l];
    Mat z(a.rows, layer.w.rows);
    for (size_t r = 0; r < a.rows; ++r)
      for (size_t o = 0; o < layer.w.rows; ++o)
        z(r, o) = dot(layer.w.row(o), a.row(r), layer.w.cols) + layer.b[o];
    if (l + 1 < enc.layers.size())
      for (auto& v : z.a) v = std::tanh(v);
    a = std::move(z);
    if (cache) cache->acts.push_back(a);
  }
  return a;
}

EncoderGrads zero_grads(const EncoderParams& enc) {
  EncoderGrads g;
  for (const auto& layer : enc.layers) {
    Layer zero;
    zero.w = Mat(layer.w.rows, layer.w.cols);
    zero.b.assign(layer.b.size(), 0.0);
    g.layers.push_back(std::move(zero));
  }
  return g;
}

void encoder_backward(const EncoderParams& enc, const EncoderCache& cache, const Mat& d_out,
                      EncoderGrads& grads) {
  if (cache.acts.size() != enc.layers.size() + 1)
    throw Error(Errc::internal, "encoder cache depth mismatch");
  Mat delta = d_out;
  for (size_t li = enc.layers.size(); li-- > 0;) {
    const auto& layer = enc.layers[li];
    const Mat& a_in = cache.acts[li];
    const Mat& a_out = cache.acts[li + 1];
    // Convert the post-activation delta to the pre-activation one.
    if (li + 1 < enc.layers.size())
      for (size_t i = 0; i < delta.a.size(); ++i) delta.a[i] *= 1.0 - a_out.a[i] * a_out.a[i];
    auto& gw = grads.layers[li].w;
    auto& gb = grads.layers[li].b;
    for (size_t r = 0; r < delta.rows; ++r) {
      const double* drow = delta.row(r);
      const double* arow = a_in.row(r);
      for (size_t o = 0; o < layer.w.rows; ++o) {
        gb[o] += drow[o];
        double* gwrow = gw.row(o);
        const double d = drow[o];
        for (size_t c = 0; c < layer.w.cols; ++c) gwrow[c] += d * arow[c];
      }
    }
    if (li == 0) break;
    Mat d_prev(delta.rows, layer.w.cols);
    for (size_t r = 0; r < delta.rows; ++r) {
      const double* drow = delta.row(r);
      double* prow = d_prev.row(r);
      for (size_t o = 0; o < layer.w.rows; ++o) {
        const double d = drow[o];
        const double* wrow = layer.w.row(o);
        for (size_t c = 0; c < layer.w.cols; ++c) prow[c] += d * wrow[c];
      }
    }
    delta = std::move(d_prev);
  }
}

HeadParams zero_head(int n_classes, int dim) {
  HeadParams h;
  h.w = Mat(static_cast<size_t>(n_classes), static_cast<size_t>(dim));
  h.b.assign(static_cast<size_t>(n_classes), 0.0);
  return h;
}

Vec head_predict(const EncoderParams& enc, const HeadParams& head, const Vec& x) {
  const Vec emb = encode(enc, x);
  if (head.w.cols != emb.size())
    throw Error(Errc::invalid, "head dimension mismatch");
  Vec p(head.w.rows);
  for (size_t c = 0; c < head.w.rows; ++c)
    p[c] = sigmoid(dot(head.w.row(c), emb.data(), head.w.cols) + head.b[c]);
  return p;
}

PrototypeSet compute_prototypes(const Mat& emb_trn, const Mat& y_trn) {
  if (emb_trn.rows != y_trn.rows)
    throw Error(Errc::invalid, "embedding/label row mismatch");
  const size_t n = emb_trn.rows, dim = emb_trn.cols, n_classes = y_trn.cols;
  PrototypeSet p;
  p.z = Mat(n_classes, dim);
  p.mu.assign(n_classes, 0.0);
  for (size_t c = 0; c < n_classes; ++c) {
    size_t count = 0;
    for (size_t i = 0; i < n; ++i) {
      if (y_trn(i, c) == 0.0) continue;
      ++count;
      const double* e = emb_trn.row(i);
      double* z = p.z.row(c);
      for (size_t d = 0; d < dim; ++d) z[d] += e[d];
    }
    if (count == 0)
      throw Error(Errc::invalid,
                  "episode class column " + std::to_string(c) + " has no positive examples");
    double* z = p.z.row(c);
    for (size_t d = 0; d < dim; ++d) z[d] /= static_cast<double>(count);
    double sum = 0.0;
    for (size_t i = 0; i < n; ++i) {
      const double* e = emb_trn.row(i);
      double s = 0.0;
      for (size_t d = 0; d < dim; ++d) {
        const double diff = e[d] - z[d];
        s += diff * diff;
      }
      sum += std::sqrt(s);
    }
    p.mu[c] = sum / static_cast<double>(n);
  }
  return p;
}

PrototypeSet compute_prototypes(const EncoderParams& enc, const Mat& x_trn, const Mat& y_trn) {
  return compute_prototypes(encoder_forward(enc, x_trn), y_trn);
}

Vec protonet_scores(const PrototypeSet& protos, const Vec& embedding) {
  if (protos.z.cols != embedding.size())
    throw Error(Errc::invalid, "prototype dimension mismatch");
  Vec p(protos.z.rows);
  for (size_t c = 0; c < protos.z.rows; ++c) {
    double s = 0.0;
    const double* z = protos.z.row(c);
    for (size_t d = 0; d < embedding.size(); ++d) {
      const double diff = embedding[d] - z[d];
      s += diff * diff;
    }
    p[c] = sigmoid(protos.mu[c] - std::sqrt(s));
  }
  return p;
}

Vec protonet_scores(const EncoderParams& enc, const PrototypeSet& protos, const Vec& x) {
  return protonet_scores(protos, encode(enc, x));
}

Mat protonet_score_batch(const PrototypeSet& protos, const Mat& emb) {
  Mat p(emb.rows, protos.z.rows);
  for (size_t m = 0; m < emb.rows; ++m) {
    Vec row(emb.row(m), emb.row(m) + emb.cols);
    const Vec probs = protonet_scores(protos, row);
    std::copy(probs.begin(), probs.end(), p.row(m));
  }
  return p;
}

BceResult bce_loss(const Mat& probs, const Mat& labels) {
  if (probs.rows != labels.rows || probs.cols != labels.cols)
    throw Error(Errc::invalid, "probability/label shape mismatch");
  if (probs.rows == 0 || probs.cols == 0)
    throw Error(Errc::invalid, "empty loss input");
  const double count = static_cast<double>(probs.rows * probs.cols);
  BceResult r;
  r.d_logits = Mat(probs.rows, probs.cols);
  double loss = 0.0;
  for (size_t i = 0; i < probs.a.size(); ++i) {
    const double p = std::clamp(probs.a[i], kLogEps, 1.0 - kLogEps);
    const double y = labels.a[i];
    loss -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
    r.d_logits.a[i] = (probs.a[i] - y) / count;
  }
  r.loss = loss / count;
  return r;
}

std::vector<TensorRef> tensor_refs(EncoderParams& enc, const EncoderGrads& grads) {
  std::vector<TensorRef> refs;
  for (size_t l = 0; l < enc.layers.size(); ++l) {
    refs.push_back({enc.layers[l].w.a.data(), grads.layers[l].w.a.data(),
                    enc.layers[l].w.a.size()});
    refs.push_back({enc.layers[l].b.data(), grads.layers[l].b.data(), enc.layers[l].b.size()});
  }
  return refs;
}

void optimizer_step(OptimizerState& opt, const std::vector<TensorRef>& tensors) {
  if (opt.cfg.kind == OptKind::sgd) {
    for (const auto& t : tensors)
      for (size_t i = 0; i < t.n; ++i) t.param[i] -= opt.cfg.lr * t.grad[i];
    ++opt.step_count;
    return;
  }
  if (opt.m.empty()) {
    for (const auto& t : tensors) {
      opt.m.emplace_back(t.n, 0.0);
      opt.v.emplace_back(t.n, 0.0);
    }
  }
  if (opt.m.size() != tensors.size())
    throw Error(Errc::internal, "optimizer tensor count changed between steps");
  ++opt.step_count;
  const double b1 = opt.cfg.beta1, b2 = opt.cfg.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(opt.step_count));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(opt.step_count));
  for (size_t ti = 0; ti < tensors.size(); ++ti) {
    const auto& t = tensors[ti];
    auto& m = opt.m[ti];
    auto& v = opt.v[ti];
    if (m.size() != t.n) throw Error(Errc::internal, "optimizer tensor shape changed");
    for (size_t i = 0; i < t.n; ++i) {
      const double g = t.grad[i];
      m[i] = b1 * m[i] + (1.0 - b1) * g;
      v[i] = b2 * v[i] + (1.0 - b2) * g * g;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      t.param[i] -= opt.cfg.lr * (mhat / (std::sqrt(vhat) + opt.cfg.eps) +
                                  opt.cfg.weight_decay * t.param[i]);
    }
  }
}

void check_train_config(const TrainConfig& cfg) {
  if (cfg.batch_size < 1) throw Error(Errc::invalid, "batch_size must be >= 1");
  if (!(cfg.lr > 0.0)) throw Error(Errc::invalid, "lr must be positive");
  if (cfg.max_epochs < 0) throw Error(Errc::invalid, "max_epochs must be >= 0");
  if (cfg.patience < 1) throw Error(Errc::invalid, "patience must be >= 1");
  if (cfg.stop_metric != "hm")
    throw Error(Errc::invalid, "unsupported stop metric '" + cfg.stop_metric + "'");
  if (cfg.episodes_trn < 1 || cfg.episodes_val < 1 || cfg.episodes_tst < 1)
    throw Error(Errc::invalid, "episode counts must be >= 1");
  if (cfg.t_steps < 1) throw Error(Errc::invalid, "t_steps must be >= 1");
  if (!(cfg.ptc_trn > 0.0 && cfg.ptc_trn <= 1.0))
    throw Error(Errc::invalid, "ptc_trn must lie in (0,1]");
  if (!(cfg.lr_head > 0.0)) throw Error(Errc::invalid, "lr_head must be positive");
}

EpisodeData materialize(const MetaDataset& ds, const Episode& ep) {
  if (ds.embedding_dim == 0)
    throw Error(Errc::invalid, "dataset carries no feature vectors; load them first");
  EpisodeData d;
  d.n_seen = ep.n_seen;
  const auto dim = static_cast<size_t>(ds.embedding_dim);
  auto fill = [&](const std::vector<std::uint32_t>& idx, Mat& x, Mat& y) {
    x = Mat(idx.size(), dim);
    y = Mat(idx.size(), ep.classes.size());
    for (size_t r = 0; r < idx.size(); ++r) {
      const auto& ex = ds.examples.at(idx[r]);
      if (ex.embedding.size() != dim)
        throw Error(Errc::invalid, "example '" + ex.id + "' has no feature vector");
      std::copy(ex.embedding.begin(), ex.embedding.end(), x.row(r));
      const auto labels = restricted_labels(ds, ep, idx[r]);
      for (size_t c = 0; c < labels.size(); ++c) y(r, c) = static_cast<double>(labels[c]);
    }
  };
  fill(ep.d_trn, d.x_trn, d.y_trn);
  fill(ep.d_tst, d.x_tst, d.y_tst);
  return d;
}

double protonet_loss_grads(const EncoderParams& enc, const EpisodeData& ep,
                           EncoderGrads* grads) {
  const size_t n = ep.x_trn.rows, m = ep.x_tst.rows, n_classes = ep.y_trn.cols;
  if (n == 0 || m == 0) throw Error(Errc::invalid, "empty episode");

  EncoderCache cache_trn, cache_tst;
  const Mat emb_trn = encoder_forward(enc, ep.x_trn, &cache_trn);
  const Mat emb_tst = encoder_forward(enc, ep.x_tst, &cache_tst);
  const size_t dim = emb_trn.cols;

  // Forward: prototypes, per-class mean distances, test-side distances.
  const PrototypeSet protos = compute_prototypes(emb_trn, ep.y_trn);
  Mat d_trn_dist(n_classes, n);  // ‖u_j − z_c‖
  for (size_t c = 0; c < n_classes; ++c)
    for (size_t j = 0; j < n; ++j)
      d_trn_dist(c, j) = euclidean_distance(
          Vec(emb_trn.row(j), emb_trn.row(j) + dim), Vec(protos.z.row(c), protos.z.row(c) + dim));
  Mat e_tst(m, n_classes);  // ‖t_i − z_c‖
  Mat probs(m, n_classes);
  for (size_t i = 0; i < m; ++i)
    for (size_t c = 0; c < n_classes; ++c) {
      double s = 0.0;
      for (size_t d = 0; d < dim; ++d) {
        const double diff = emb_tst(i, d) - protos.z(c, d);
        s += diff * diff;
      }
      e_tst(i, c) = std::sqrt(s);
      probs(i, c) = sigmoid(protos.mu[c] - e_tst(i, c));
    }

  const BceResult bce = bce_loss(probs, ep.y_tst);
  if (!std::isfinite(bce.loss))
    throw Error(Errc::internal, "non-finite episodic loss; step aborted");
  if (!grads) return bce.loss;

  // Backward. g = dL/d(score); scores are μ_c − e_ic.
  Mat d_emb_tst(m, dim), d_emb_trn(n, dim), d_z(n_classes, dim);
  Vec d_mu(n_classes, 0.0);
  for (size_t i = 0; i < m; ++i)
    for (size_t c = 0; c < n_classes; ++c) {
      const double g = bce.d_logits(i, c);
      d_mu[c] += g;
      const double e = e_tst(i, c);
      if (e < kDistEps) continue;
      const double scale = -g / e;  // dL/de · de/d(t_i) direction
      for (size_t d = 0; d < dim; ++d) {
        const double diff = emb_tst(i, d) - protos.z(c, d);
        d_emb_tst(i, d) += scale * diff;
        d_z(c, d) -= scale * diff;
      }
    }
  // μ_c = (1/n) Σ_j ‖u_j − z_c‖ fans out into every training embedding.
  for (size_t c = 0; c < n_classes; ++c) {
    const double gmu = d_mu[c] / static_cast<double>(n);
    if (gmu == 0.0) continue;
    for (size_t j = 0; j < n; ++j) {
      const double djc = d_trn_dist(c, j);
      if (djc < kDistEps) continue;
      const double scale = gmu / djc;
      for (size_t d = 0; d < dim; ++d) {
        const double diff = emb_trn(j, d) - protos.z(c, d);
        d_emb_trn(j, d) += scale * diff;
        d_z(c, d) -= scale * diff;
      }
    }
  }
  // Prototype mean fans into the class positives.
  for (size_t c = 0; c < n_classes; ++c) {
    size_t count = 0;
    for (size_t j = 0; j < n; ++j)
      if (ep.y_trn(j, c) != 0.0) ++count;
    const double inv = 1.0 / static_cast<double>(count);
    for (size_t j = 0; j < n; ++j) {
      if (ep.y_trn(j, c) == 0.0) continue;
      for (size_t d = 0; d < dim; ++d) d_emb_trn(j, d) += inv * d_z(c, d);
    }
  }

  encoder_backward(enc, cache_tst, d_emb_tst, *grads);
  encoder_backward(enc, cache_trn, d_emb_trn, *grads);
  return bce.loss;
}

double protonet_train_step(EncoderParams& enc, const EpisodeData& ep, OptimizerState& opt) {
  EncoderGrads grads = zero_grads(enc);
  const double loss = protonet_loss_grads(enc, ep, &grads);
  optimizer_step(opt, tensor_refs(enc, grads));
  return loss;
}

namespace {

struct HeadGrads {
  Mat w;
  Vec b;
};

// Shared by batch pretraining and adaptation: forward through the head on
// `rows` of `emb`, BCE against `labels`, gradients for head and embeddings.
double head_pass(const HeadParams& head, const Mat& emb, const Mat& labels,
                 const std::vector<size_t>& rows, HeadGrads& hg, Mat* d_emb) {
  const size_t n_classes = head.w.rows, dim = head.w.cols;
  Mat probs(rows.size(), n_classes), y(rows.size(), n_classes);
  for (size_t r = 0; r < rows.size(); ++r)
    for (size_t c = 0; c < n_classes; ++c) {
      probs(r, c) = sigmoid(dot(head.w.row(c), emb.row(rows[r]), dim) + head.b[c]);
      y(r, c) = labels(rows[r], c);
    }
  const BceResult bce = bce_loss(probs, y);
  hg.w = Mat(n_classes, dim);
  hg.b.assign(n_classes, 0.0);
  if (d_emb) *d_emb = Mat(rows.size(), dim);
  for (size_t r = 0; r < rows.size(); ++r)
    for (size_t c = 0; c < n_classes; ++c) {
      const double g = bce.d_logits(r, c);
      hg.b[c] += g;
      const double* erow = emb.row(rows[r]);
      double* gw = hg.w.row(c);
      for (size_t d = 0; d < dim; ++d) gw[d] += g * erow[d];
      if (d_emb) {
        const double* wrow = head.w.row(c);
        double* de = d_emb->row(r);
        for (size_t d = 0; d < dim; ++d) de[d] += g * wrow[d];
      }
    }
  return bce.loss;
}

}  // namespace

double batch_train_epoch(EncoderParams& enc, HeadParams& head, const Mat& x_pool,
                         const Mat& y_pool, int batch_size, OptimizerState& opt, Rng& rng) {
  if (x_pool.rows == 0) throw Error(Errc::invalid, "empty training pool");
  if (x_pool.rows != y_pool.rows) throw Error(Errc::invalid, "pool feature/label mismatch");
  if (head.w.rows != y_pool.cols) throw Error(Errc::invalid, "head width mismatch");
  if (batch_size < 1) throw Error(Errc::invalid, "batch_size must be >= 1");

  std::vector<size_t> order(x_pool.rows);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);

  double loss_sum = 0.0;
  for (size_t start = 0; start < order.size(); start += static_cast<size_t>(batch_size)) {
    const size_t end = std::min(order.size(), start + static_cast<size_t>(batch_size));
    std::vector<size_t> rows(order.begin() + static_cast<std::ptrdiff_t>(start),
                             order.begin() + static_cast<std::ptrdiff_t>(end));
    Mat x(rows.size(), x_pool.cols);
    for (size_t r = 0; r < rows.size(); ++r)
      std::copy(x_pool.row(rows[r]), x_pool.row(rows[r]) + x_pool.cols, x.row(r));

    EncoderCache cache;
    const Mat emb = encoder_forward(enc, x, &cache);
    HeadGrads hg;
    Mat d_emb;
    std::vector<size_t> all(rows.size());
    std::iota(all.begin(), all.end(), 0);
    Mat y(rows.size(), y_pool.cols);
    for (size_t r = 0; r < rows.size(); ++r)
      std::copy(y_pool.row(rows[r]), y_pool.row(rows[r]) + y_pool.cols, y.row(r));
    const double loss = head_pass(head, emb, y, all, hg, &d_emb);
    if (!std::isfinite(loss))
      throw Error(Errc::internal, "non-finite batch loss; epoch aborted");
    EncoderGrads grads = zero_grads(enc);
    encoder_backward(enc, cache, d_emb, grads);
    auto refs = tensor_refs(enc, grads);
    refs.push_back({head.w.a.data(), hg.w.a.data(), head.w.a.size()});
    refs.push_back({head.b.data(), hg.b.data(), head.b.size()});
    optimizer_step(opt, refs);
    loss_sum += loss * static_cast<double>(rows.size());
  }
  return loss_sum / static_cast<double>(x_pool.rows);
}

HeadParams adapt_head(const EncoderParams& enc, const EpisodeData& ep, int t_steps,
                      double ptc_trn, double lr_head, Rng& rng) {
  if (!(ptc_trn > 0.0 && ptc_trn <= 1.0))
    throw Error(Errc::invalid, "ptc_trn must lie in (0,1]");
  if (t_steps < 0) throw Error(Errc::invalid, "t_steps must be >= 0");
  if (!std::isfinite(lr_head) || lr_head < 0.0)
    throw Error(Errc::invalid, "lr_head must be a non-negative number");
  if (ep.x_trn.rows == 0) throw Error(Errc::invalid, "empty episode training subset");

  // Frozen encoder ⇒ embeddings are loop constants.
  const Mat emb = encoder_forward(enc, ep.x_trn);
  const size_t n = emb.rows;
  HeadParams head = zero_head(static_cast<int>(ep.y_trn.cols), static_cast<int>(emb.cols));
  const auto subset =
      std::max<std::int64_t>(1, std::llround(ptc_trn * static_cast<double>(n)));
  const auto subset_n = std::min<size_t>(static_cast<size_t>(subset), n);

  for (int step = 0; step < t_steps; ++step) {
    const auto rows = rng.sample_indices(n, subset_n);
    HeadGrads hg;
    const double loss = head_pass(head, emb, ep.y_trn, rows, hg, nullptr);
    if (!std::isfinite(loss))
      throw Error(Errc::internal, "non-finite adaptation loss; step aborted");
    for (size_t i = 0; i < head.w.a.size(); ++i) head.w.a[i] -= lr_head * hg.w.a[i];
    for (size_t i = 0; i < head.b.size(); ++i) head.b[i] -= lr_head * hg.b[i];
  }
  return head;
}

}  // namespace gfsml
