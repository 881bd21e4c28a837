#include <cmath>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "gfsml/episodes.hpp"
#include "gfsml/error.hpp"
#include "gfsml/models.hpp"
#include "oracles.hpp"

using namespace gfsml;

namespace {

// 2-in 2-out identity encoder with no hidden layers: encode(x) == x.
EncoderParams identity_encoder() {
  EncoderParams enc;
  enc.cfg.input_dim = 2;
  enc.cfg.hidden.clear();
  enc.cfg.output_dim = 2;
  Layer l;
  l.w = Mat(2, 2);
  l.w(0, 0) = 1.0;
  l.w(1, 1) = 1.0;
  l.b = {0.0, 0.0};
  enc.layers.push_back(std::move(l));
  return enc;
}

Mat rand_mat(std::size_t r, std::size_t c, Rng& rng) {
  Mat m(r, c);
  for (auto& v : m.a) v = rng.normal();
  return m;
}

// Small but structurally complete episode for gradient work: 2 classes,
// single/multi-label/not-finding rows on both sides.
EpisodeData grad_episode(std::uint64_t seed) {
  Rng rng(seed);
  EpisodeData ed;
  ed.n_seen = 1;
  ed.x_trn = rand_mat(6, 2, rng);
  ed.x_tst = rand_mat(4, 2, rng);
  ed.y_trn = Mat(6, 2);
  const double ytrn[6][2] = {{1, 0}, {1, 0}, {0, 1}, {0, 1}, {1, 1}, {0, 0}};
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t c = 0; c < 2; ++c) ed.y_trn(i, c) = ytrn[i][c];
  ed.y_tst = Mat(4, 2);
  const double ytst[4][2] = {{1, 0}, {0, 1}, {1, 1}, {0, 0}};
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t c = 0; c < 2; ++c) ed.y_tst(i, c) = ytst[i][c];
  return ed;
}

EncoderParams small_encoder(std::uint64_t seed) {
  EncoderConfig cfg;
  cfg.input_dim = 2;
  cfg.hidden = {3};
  cfg.output_dim = 2;
  Rng rng(seed);
  return init_encoder(cfg, rng);
}

double pool_loss(const EncoderParams& enc, const HeadParams& head, const Mat& x, const Mat& y) {
  const Mat emb = encoder_forward(enc, x);
  Mat probs(x.rows, y.cols);
  for (std::size_t r = 0; r < x.rows; ++r)
    for (std::size_t c = 0; c < y.cols; ++c)
      probs(r, c) = sigmoid(dot(head.w.row(c), emb.row(r), emb.cols) + head.b[c]);
  return bce_loss(probs, y).loss;
}

std::vector<double> flatten(const EncoderParams& enc, const HeadParams* head = nullptr) {
  std::vector<double> out;
  for (const auto& l : enc.layers) {
    out.insert(out.end(), l.w.a.begin(), l.w.a.end());
    out.insert(out.end(), l.b.begin(), l.b.end());
  }
  if (head) {
    out.insert(out.end(), head->w.a.begin(), head->w.a.end());
    out.insert(out.end(), head->b.begin(), head->b.end());
  }
  return out;
}

}  // namespace

TEST_CASE("encoder init respects shapes and Glorot bounds") {
  EncoderConfig cfg;
  cfg.input_dim = 5;
  cfg.hidden = {7, 3};
  cfg.output_dim = 4;
  Rng rng(11);
  const auto enc = init_encoder(cfg, rng);
  REQUIRE(enc.layers.size() == 3);
  CHECK(enc.layers[0].w.rows == 7);
  CHECK(enc.layers[0].w.cols == 5);
  CHECK(enc.layers[1].w.rows == 3);
  CHECK(enc.layers[1].w.cols == 7);
  CHECK(enc.layers[2].w.rows == 4);
  CHECK(enc.layers[2].w.cols == 3);
  for (const auto& l : enc.layers) {
    const double bound =
        std::sqrt(6.0 / static_cast<double>(l.w.rows + l.w.cols)) + 1e-12;
    for (double w : l.w.a) CHECK(std::fabs(w) <= bound);
    for (double b : l.b) CHECK(b == 0.0);
  }
  Rng rng2(11);
  const auto enc2 = init_encoder(cfg, rng2);
  CHECK(enc2.layers[0].w.a == enc.layers[0].w.a);
  CHECK_NOTHROW(check_encoder(enc));

  EncoderConfig bad = cfg;
  bad.input_dim = 0;
  Rng rng3(1);
  CHECK_THROWS_AS(init_encoder(bad, rng3), Error);
}

TEST_CASE("encode matches closed forms") {
  // No hidden layers, zero weights: output is the bias vector.
  EncoderParams enc;
  enc.cfg.input_dim = 3;
  enc.cfg.hidden.clear();
  enc.cfg.output_dim = 2;
  Layer l;
  l.w = Mat(2, 3);
  l.b = {0.25, -1.0};
  enc.layers.push_back(l);
  CHECK(encode(enc, {9.0, -4.0, 2.0}) == Vec{0.25, -1.0});

  // 1 -> tanh(1) -> 1 straight line.
  EncoderParams line;
  line.cfg.input_dim = 1;
  line.cfg.hidden = {1};
  line.cfg.output_dim = 1;
  Layer l0, l1;
  l0.w = Mat(1, 1);
  l0.w(0, 0) = 0.7;
  l0.b = {0.1};
  l1.w = Mat(1, 1);
  l1.w(0, 0) = 1.3;
  l1.b = {-0.2};
  line.layers = {l0, l1};
  const double want = 1.3 * std::tanh(0.7 * 0.5 + 0.1) - 0.2;
  CHECK(encode(line, {0.5})[0] == doctest::Approx(want).epsilon(1e-14));

  CHECK_THROWS_AS(encode(line, {0.5, 0.5}), Error);  // width mismatch
}

TEST_CASE("batch forward equals per-row encode") {
  EncoderConfig cfg;
  cfg.input_dim = 4;
  cfg.hidden = {5};
  cfg.output_dim = 3;
  Rng rng(21);
  const auto enc = init_encoder(cfg, rng);
  const Mat x = rand_mat(7, 4, rng);
  const Mat emb = encoder_forward(enc, x);
  REQUIRE(emb.rows == 7);
  REQUIRE(emb.cols == 3);
  for (std::size_t r = 0; r < 7; ++r) {
    const Vec one = encode(enc, Vec(x.row(r), x.row(r) + 4));
    for (std::size_t c = 0; c < 3; ++c)
      CHECK(emb(r, c) == doctest::Approx(one[c]).epsilon(1e-14));
  }
}

TEST_CASE("prototypes: singletons, means, and a brute-force oracle") {
  Rng rng(31);
  const Mat emb = rand_mat(8, 3, rng);
  Mat y(8, 2);
  y(0, 0) = 1;  // class 0: rows 0,2,5
  y(2, 0) = 1;
  y(5, 0) = 1;
  y(3, 1) = 1;  // class 1: row 3 only
  const auto p = compute_prototypes(emb, y);
  REQUIRE(p.z.rows == 2);
  REQUIRE(p.z.cols == 3);

  // Singleton prototype is the row itself.
  for (std::size_t d = 0; d < 3; ++d) CHECK(p.z(1, d) == emb(3, d));

  // Brute-force recomputation.
  for (std::size_t c = 0; c < 2; ++c) {
    Vec z(3, 0.0);
    double cnt = 0;
    for (std::size_t i = 0; i < 8; ++i) {
      if (y(i, c) == 0.0) continue;
      ++cnt;
      for (std::size_t d = 0; d < 3; ++d) z[d] += emb(i, d);
    }
    for (std::size_t d = 0; d < 3; ++d) {
      z[d] /= cnt;
      CHECK(p.z(c, d) == doctest::Approx(z[d]).epsilon(1e-12));
    }
    double mu = 0.0;
    for (std::size_t i = 0; i < 8; ++i)
      mu += euclidean_distance(Vec(emb.row(i), emb.row(i) + 3), z);
    mu /= 8.0;
    CHECK(p.mu[c] == doctest::Approx(mu).epsilon(1e-12));
  }

  // A class with no support positives is a hard error.
  Mat y_bad(8, 2);
  y_bad(0, 0) = 1;
  CHECK_THROWS_AS(compute_prototypes(emb, y_bad), Error);
}

TEST_CASE("distance scores hit their closed-form landmarks") {
  PrototypeSet p;
  p.z = Mat(1, 1);  // prototype at 0
  p.mu = {1.3};
  CHECK(protonet_scores(p, {0.0})[0] == doctest::Approx(sigmoid(1.3)).epsilon(1e-15));
  CHECK(protonet_scores(p, {1.3})[0] == 0.5);  // query exactly mu away
  CHECK(protonet_scores(p, {-1.3})[0] == 0.5);
  CHECK(protonet_scores(p, {10.0})[0] < 0.01);

  // Translation invariance: shifting every embedding shifts prototypes and
  // leaves every distance, hence every score, unchanged.
  Rng rng(41);
  Mat emb = rand_mat(6, 2, rng);
  Mat y(6, 2);
  y(0, 0) = y(1, 0) = y(2, 1) = y(3, 1) = 1;
  const Vec q0{0.3, -0.8};
  const auto base = protonet_scores(compute_prototypes(emb, y), q0);
  Mat shifted = emb;
  for (std::size_t r = 0; r < 6; ++r) {
    shifted(r, 0) += 17.0;
    shifted(r, 1) -= 4.0;
  }
  const auto moved = protonet_scores(compute_prototypes(shifted, y), {0.3 + 17.0, -0.8 - 4.0});
  for (std::size_t c = 0; c < 2; ++c)
    CHECK(moved[c] == doctest::Approx(base[c]).epsilon(1e-12));

  // Batch scoring is the per-row map.
  const auto protos = compute_prototypes(emb, y);
  const Mat batch = protonet_score_batch(protos, emb);
  for (std::size_t r = 0; r < 6; ++r) {
    const auto one = protonet_scores(protos, Vec(emb.row(r), emb.row(r) + 2));
    for (std::size_t c = 0; c < 2; ++c) CHECK(batch(r, c) == one[c]);
  }
}

TEST_CASE("bce loss and logit gradient") {
  Mat p(1, 2), y(1, 2);
  p(0, 0) = 0.5;
  p(0, 1) = 0.5;
  y(0, 0) = 1;
  const auto half = bce_loss(p, y);
  CHECK(half.loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(half.d_logits(0, 0) == doctest::Approx(-0.25).epsilon(1e-12));  // (0.5-1)/2
  CHECK(half.d_logits(0, 1) == doctest::Approx(0.25).epsilon(1e-12));

  Mat exact(1, 2);
  exact(0, 0) = 1.0;
  exact(0, 1) = 0.0;
  CHECK(bce_loss(exact, exact).loss < 1e-9);

  // Finite differences on the logits.
  Rng rng(51);
  Mat logits(3, 4), labels(3, 4);
  for (auto& v : logits.a) v = rng.normal();
  for (auto& v : labels.a) v = rng.bernoulli(0.5) ? 1.0 : 0.0;
  auto loss_of = [&]() {
    Mat probs(3, 4);
    for (std::size_t i = 0; i < logits.a.size(); ++i) probs.a[i] = sigmoid(logits.a[i]);
    return bce_loss(probs, labels).loss;
  };
  Mat probs(3, 4);
  for (std::size_t i = 0; i < logits.a.size(); ++i) probs.a[i] = sigmoid(logits.a[i]);
  const auto got = bce_loss(probs, labels);
  for (std::size_t i = 0; i < logits.a.size(); ++i) {
    const double fd = oracle::central_diff(loss_of, logits.a[i]);
    CHECK(oracle::rel_err(fd, got.d_logits.a[i]) < 1e-6);
  }

  CHECK_THROWS_AS(bce_loss(Mat(0, 0), Mat(0, 0)), Error);
  CHECK_THROWS_AS(bce_loss(Mat(2, 2), Mat(2, 3)), Error);
}

TEST_CASE("optimizer steps match hand arithmetic") {
  SUBCASE("sgd") {
    double p = 1.0;
    const double g = 0.5;
    OptimizerState opt;
    opt.cfg.kind = OptKind::sgd;
    opt.cfg.lr = 0.1;
    optimizer_step(opt, {{&p, &g, 1}});
    CHECK(p == doctest::Approx(0.95).epsilon(1e-15));
    CHECK(opt.step_count == 1);
  }
  SUBCASE("adamw first step") {
    double p = 1.0;
    const double g = 0.5;
    OptimizerState opt;  // adamw defaults
    opt.cfg.lr = 0.1;
    optimizer_step(opt, {{&p, &g, 1}});
    const double want = 1.0 - 0.1 * (0.5 / (0.5 + 1e-8) + 0.01 * 1.0);
    CHECK(p == doctest::Approx(want).epsilon(1e-12));
  }
  SUBCASE("adamw multi-step recurrence") {
    double p = 0.7;
    double g = 0.0;
    OptimizerState opt;
    opt.cfg.lr = 0.05;
    // Hand-rolled replica.
    double hp = 0.7, m = 0.0, v = 0.0;
    for (int t = 1; t <= 5; ++t) {
      g = 0.3 * t - 0.4;  // varying pseudo-gradient
      optimizer_step(opt, {{&p, &g, 1}});
      m = 0.9 * m + 0.1 * g;
      v = 0.999 * v + 0.001 * g * g;
      const double mhat = m / (1.0 - std::pow(0.9, t));
      const double vhat = v / (1.0 - std::pow(0.999, t));
      hp -= 0.05 * (mhat / (std::sqrt(vhat) + 1e-8) + 0.01 * hp);
      CHECK(p == doctest::Approx(hp).epsilon(1e-12));
    }
  }
  SUBCASE("zero lr is the identity") {
    double p1 = 2.0, p2 = -3.0;
    const double g = 5.0;
    for (auto kind : {OptKind::sgd, OptKind::adamw}) {
      OptimizerState opt;
      opt.cfg.kind = kind;
      opt.cfg.lr = 0.0;
      optimizer_step(opt, {{&p1, &g, 1}, {&p2, &g, 1}});
      CHECK(p1 == 2.0);
      CHECK(p2 == -3.0);
    }
  }
}

TEST_CASE("episodic loss gradient passes dense finite-difference sweeps") {
  for (std::uint64_t draw = 0; draw < 5; ++draw) {
    auto enc = small_encoder(100 + draw);
    const auto ed = grad_episode(200 + draw);
    auto grads = zero_grads(enc);
    const double loss = protonet_loss_grads(enc, ed, &grads);
    CHECK(std::isfinite(loss));
    CHECK(loss > 0.0);
    CHECK(protonet_loss_grads(enc, ed, nullptr) == loss);  // pure function

    auto f = [&]() { return protonet_loss_grads(enc, ed, nullptr); };
    for (std::size_t l = 0; l < enc.layers.size(); ++l) {
      for (std::size_t i = 0; i < enc.layers[l].w.a.size(); ++i) {
        const double fd = oracle::central_diff(f, enc.layers[l].w.a[i]);
        CHECK(oracle::rel_err(fd, grads.layers[l].w.a[i]) < 1e-4);
      }
      for (std::size_t i = 0; i < enc.layers[l].b.size(); ++i) {
        const double fd = oracle::central_diff(f, enc.layers[l].b[i]);
        CHECK(oracle::rel_err(fd, grads.layers[l].b[i]) < 1e-4);
      }
    }
  }
}

TEST_CASE("episodic training steps move the loss the right way") {
  auto enc = small_encoder(7);
  const auto ed = grad_episode(8);

  SUBCASE("zero lr leaves parameters bitwise intact") {
    const auto before = flatten(enc);
    OptimizerState opt;
    opt.cfg.kind = OptKind::sgd;
    opt.cfg.lr = 0.0;
    protonet_train_step(enc, ed, opt);
    CHECK(flatten(enc) == before);
  }
  SUBCASE("small sgd steps reduce the loss") {
    OptimizerState opt;
    opt.cfg.kind = OptKind::sgd;
    opt.cfg.lr = 0.05;
    const double first = protonet_train_step(enc, ed, opt);
    double last = first;
    for (int i = 0; i < 30; ++i) last = protonet_train_step(enc, ed, opt);
    CHECK(last < first);
  }
}

TEST_CASE("batch epoch: weighting, descent, and gradient extraction") {
  SUBCASE("zero-lr epoch loss equals the full-pool mean despite uneven batches") {
    Rng rng(61);
    EncoderConfig cfg;
    cfg.input_dim = 3;
    cfg.hidden = {4};
    cfg.output_dim = 3;
    auto enc = init_encoder(cfg, rng);
    const Mat x = rand_mat(130, 3, rng);  // 130 = 64 + 64 + 2
    Mat y(130, 2);
    for (auto& v : y.a) v = rng.bernoulli(0.4) ? 1.0 : 0.0;
    HeadParams head = zero_head(2, 3);
    for (auto& v : head.w.a) v = rng.normal() * 0.3;  // nonzero so rows differ
    OptimizerState opt;
    opt.cfg.kind = OptKind::sgd;
    opt.cfg.lr = 0.0;
    Rng order_rng(62);
    const double epoch = batch_train_epoch(enc, head, x, y, 64, opt, order_rng);
    const double direct = pool_loss(enc, head, x, y);
    CHECK(oracle::rel_err(epoch, direct) < 1e-12);
  }
  SUBCASE("loss falls on separable data") {
    Rng rng(63);
    EncoderConfig cfg;
    cfg.input_dim = 2;
    cfg.hidden = {8};
    cfg.output_dim = 4;
    auto enc = init_encoder(cfg, rng);
    Mat x(80, 2);
    Mat y(80, 2);
    for (std::size_t i = 0; i < 80; ++i) {
      const bool cls = i % 2 == 0;
      x(i, 0) = (cls ? 2.0 : -2.0) + 0.1 * rng.normal();
      x(i, 1) = (cls ? -2.0 : 2.0) + 0.1 * rng.normal();
      y(i, cls ? 0 : 1) = 1.0;
    }
    HeadParams head = zero_head(2, 4);
    OptimizerState opt;  // adamw
    opt.cfg.lr = 0.01;
    Rng order_rng(64);
    const double first = batch_train_epoch(enc, head, x, y, 16, opt, order_rng);
    double last = first;
    for (int e = 0; e < 10; ++e) last = batch_train_epoch(enc, head, x, y, 16, opt, order_rng);
    CHECK(last < 0.5 * first);
  }
  SUBCASE("single full batch at sgd lr 1 exposes the exact joint gradient") {
    Rng rng(65);
    EncoderConfig cfg;
    cfg.input_dim = 3;
    cfg.hidden = {4};
    cfg.output_dim = 3;
    auto enc = init_encoder(cfg, rng);
    const Mat x = rand_mat(8, 3, rng);
    Mat y(8, 2);
    for (auto& v : y.a) v = rng.bernoulli(0.5) ? 1.0 : 0.0;
    HeadParams head = zero_head(2, 3);
    for (auto& v : head.w.a) v = rng.normal() * 0.4;
    for (auto& v : head.b) v = rng.normal() * 0.2;

    auto enc_ref = enc;  // frozen copies for the finite differences
    auto head_ref = head;
    const auto before = flatten(enc, &head);

    OptimizerState opt;
    opt.cfg.kind = OptKind::sgd;
    opt.cfg.lr = 1.0;
    Rng order_rng(66);
    batch_train_epoch(enc, head, x, y, 8, opt, order_rng);
    const auto after = flatten(enc, &head);

    auto f = [&]() { return pool_loss(enc_ref, head_ref, x, y); };
    std::vector<double*> slots;
    for (auto& l : enc_ref.layers) {
      for (auto& w : l.w.a) slots.push_back(&w);
      for (auto& b : l.b) slots.push_back(&b);
    }
    for (auto& w : head_ref.w.a) slots.push_back(&w);
    for (auto& b : head_ref.b) slots.push_back(&b);
    REQUIRE(slots.size() == before.size());
    for (std::size_t i = 0; i < slots.size(); ++i) {
      const double extracted = before[i] - after[i];  // == lr * grad, lr = 1
      const double fd = oracle::central_diff(f, *slots[i]);
      CHECK(oracle::rel_err(fd, extracted) < 1e-4);
    }
  }
}

TEST_CASE("head adaptation: frozen encoder, zero start, learnable episodes") {
  const auto enc = identity_encoder();
  // Separable 2-class episode in the plane.
  Rng rng(71);
  const int n = 40;
  EpisodeData ed;
  ed.n_seen = 1;
  ed.x_trn = Mat(n, 2);
  ed.y_trn = Mat(n, 2);
  for (int i = 0; i < n; ++i) {
    const int kind = i % 4;  // cls0, cls1, both, none
    const double cx = kind == 0 || kind == 2 ? 2.0 : 0.0;
    const double cy = kind == 1 || kind == 2 ? 2.0 : 0.0;
    ed.x_trn(i, 0) = cx + 0.15 * rng.normal();
    ed.x_trn(i, 1) = cy + 0.15 * rng.normal();
    if (kind == 0 || kind == 2) ed.y_trn(i, 0) = 1.0;
    if (kind == 1 || kind == 2) ed.y_trn(i, 1) = 1.0;
  }
  ed.x_tst = ed.x_trn;
  ed.y_tst = ed.y_trn;

  SUBCASE("zero steps return the zero head") {
    Rng r(1);
    const auto head = adapt_head(enc, ed, 0, 0.5, 0.05, r);
    for (double w : head.w.a) CHECK(w == 0.0);
    for (double b : head.b) CHECK(b == 0.0);
  }
  SUBCASE("adaptation separates the classes") {
    Rng r(2);
    const auto head = adapt_head(enc, ed, 200, 0.5, 0.5, r);
    for (std::size_t c = 0; c < 2; ++c) {
      std::vector<double> scores;
      std::vector<int> truth;
      for (int i = 0; i < n; ++i) {
        scores.push_back(head_predict(enc, head, Vec(ed.x_trn.row(i), ed.x_trn.row(i) + 2))[c]);
        truth.push_back(static_cast<int>(ed.y_trn(i, c)));
      }
      CHECK(oracle::auc_pairs(scores, truth) > 0.99);
    }
  }
  SUBCASE("same draw stream, same head") {
    Rng r1(9), r2(9);
    const auto h1 = adapt_head(enc, ed, 25, 0.5, 0.1, r1);
    const auto h2 = adapt_head(enc, ed, 25, 0.5, 0.1, r2);
    CHECK(h1.w.a == h2.w.a);
    CHECK(h1.b == h2.b);
  }
  SUBCASE("tiny subset fraction still trains on one example") {
    Rng r(3);
    const auto head = adapt_head(enc, ed, 3, 1e-9, 0.1, r);
    bool moved = false;
    for (double w : head.w.a) moved = moved || w != 0.0;
    CHECK(moved);
  }
  SUBCASE("parameter validation") {
    Rng r(4);
    CHECK_THROWS_AS(adapt_head(enc, ed, 1, 0.0, 0.1, r), Error);
    CHECK_THROWS_AS(adapt_head(enc, ed, 1, 1.5, 0.1, r), Error);
    CHECK_THROWS_AS(adapt_head(enc, ed, -1, 0.5, 0.1, r), Error);
    CHECK_THROWS_AS(adapt_head(enc, ed, 1, 0.5, -0.1, r), Error);
  }
  SUBCASE("single adapt step from zero equals the analytic first step") {
    // ptc 1 covers the whole subset; from a zero head every probability is
    // 0.5, so dW = lr * mean-scaled (0.5 - y) x outer products.
    Rng r(5);
    const auto head = adapt_head(enc, ed, 1, 1.0, 0.7, r);
    const double count = static_cast<double>(n) * 2.0;
    Mat want_w(2, 2);
    Vec want_b(2, 0.0);
    for (int i = 0; i < n; ++i)
      for (std::size_t c = 0; c < 2; ++c) {
        const double g = (0.5 - ed.y_trn(i, c)) / count;
        want_b[c] += g;
        want_w(c, 0) += g * ed.x_trn(i, 0);
        want_w(c, 1) += g * ed.x_trn(i, 1);
      }
    for (std::size_t i = 0; i < 4; ++i)
      CHECK(head.w.a[i] == doctest::Approx(-0.7 * want_w.a[i]).epsilon(1e-12));
    for (std::size_t c = 0; c < 2; ++c)
      CHECK(head.b[c] == doctest::Approx(-0.7 * want_b[c]).epsilon(1e-12));
  }
}

TEST_CASE("head prediction") {
  const auto enc = identity_encoder();
  const auto zero = zero_head(3, 2);
  const auto p = head_predict(enc, zero, {0.4, -0.9});
  REQUIRE(p.size() == 3);
  for (double v : p) CHECK(v == 0.5);

  HeadParams head = zero_head(2, 2);
  head.w(0, 0) = 1.0;
  head.w(1, 1) = -1.0;
  head.b = {0.0, 0.5};
  const auto q = head_predict(enc, head, {0.3, -0.2});
  CHECK(q[0] == doctest::Approx(sigmoid(0.3)).epsilon(1e-15));
  CHECK(q[1] == doctest::Approx(sigmoid(0.2 + 0.5)).epsilon(1e-15));
}

TEST_CASE("train config validation") {
  TrainConfig ok;
  CHECK_NOTHROW(check_train_config(ok));
  ok.max_epochs = 0;  // explicitly legal: evaluate-the-initialization runs
  CHECK_NOTHROW(check_train_config(ok));

  auto expect_bad = [](auto&& mutate) {
    TrainConfig cfg;
    mutate(cfg);
    CHECK_THROWS_AS(check_train_config(cfg), Error);
  };
  expect_bad([](TrainConfig& c) { c.batch_size = 0; });
  expect_bad([](TrainConfig& c) { c.lr = 0.0; });
  expect_bad([](TrainConfig& c) { c.max_epochs = -1; });
  expect_bad([](TrainConfig& c) { c.patience = 0; });
  expect_bad([](TrainConfig& c) { c.stop_metric = "accuracy"; });
  expect_bad([](TrainConfig& c) { c.episodes_val = 0; });
  expect_bad([](TrainConfig& c) { c.t_steps = 0; });
  expect_bad([](TrainConfig& c) { c.ptc_trn = 0.0; });
  expect_bad([](TrainConfig& c) { c.ptc_trn = 1.0001; });
  expect_bad([](TrainConfig& c) { c.lr_head = 0.0; });
}

TEST_CASE("materialize lays labels out in episode class order") {
  const auto ds = fixtures::micro_pool();
  const auto part = fixtures::micro_partition();
  EpisodeSpec spec;
  spec.n_seen = 1;
  spec.n_unseen = 1;
  spec.k_trn = 1;
  spec.k_tst = 1;
  spec.phase = Phase::meta_val;
  const auto ep = generate_episode(ds, part, spec, 17);
  const auto ed = materialize(ds, ep);
  CHECK(ed.n_seen == 1);
  REQUIRE(ed.x_trn.rows == 3);
  REQUIRE(ed.x_trn.cols == 1);
  REQUIRE(ed.y_trn.rows == 3);
  REQUIRE(ed.y_trn.cols == 2);
  CHECK(ed.x_tst.rows == 3);
  for (std::size_t r = 0; r < 3; ++r) {
    CHECK(ed.x_trn(r, 0) == ds.examples[ep.d_trn[r]].embedding[0]);
    const auto want = restricted_labels(ds, ep, ep.d_trn[r]);
    for (std::size_t c = 0; c < 2; ++c)
      CHECK(ed.y_trn(r, c) == static_cast<double>(want[c]));
  }

  MetaDataset bare = ds;
  bare.embedding_dim = 0;
  CHECK_THROWS_AS(materialize(bare, ep), Error);
  MetaDataset hole = ds;
  hole.examples[ep.d_trn[0]].embedding.clear();
  CHECK_THROWS_AS(materialize(hole, ep), Error);
}
