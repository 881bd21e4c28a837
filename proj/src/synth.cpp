#include "gfsml/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "gfsml/error.hpp"
#include "gfsml/linalg.hpp"
#include "gfsml/partition.hpp"
#include "gfsml/rng.hpp"

namespace gfsml {

void check_synth_config(const SynthConfig& cfg) {
  const int n_classes = cfg.n_trn_classes + cfg.n_val_classes + cfg.n_tst_classes;
  if (cfg.n_trn_classes < 0 || cfg.n_val_classes < 0 || cfg.n_tst_classes < 0)
    throw Error(Errc::invalid, "class tier sizes must be non-negative");
  if (n_classes < 1) throw Error(Errc::invalid, "need at least one synthetic class");
  if (cfg.count_trn < 1 || cfg.count_val < 1 || cfg.count_tst < 1)
    throw Error(Errc::invalid, "per-class counts must be >= 1");
  if (!(cfg.count_tst < cfg.count_val && cfg.count_val < cfg.count_trn))
    throw Error(Errc::invalid,
                "tier counts must be strictly increasing: tst < val < trn, so the "
                "frequency rule reproduces the intended split");
  if (cfg.n_not_finding < 0) throw Error(Errc::invalid, "n_not_finding must be >= 0");
  if (cfg.n_sources < 1) throw Error(Errc::invalid, "n_sources must be >= 1");
  if (std::min({cfg.count_trn, cfg.count_val, cfg.count_tst}) < cfg.n_sources)
    throw Error(Errc::invalid, "per-class counts must be >= n_sources");
  if (cfg.dim < 1) throw Error(Errc::invalid, "dim must be >= 1");
  if (!(cfg.separation >= 0.0)) throw Error(Errc::invalid, "separation must be >= 0");
  if (!(cfg.noise >= 0.0)) throw Error(Errc::invalid, "noise must be >= 0");
  if (!(cfg.co_label >= 0.0 && cfg.co_label < 1.0))
    throw Error(Errc::invalid, "co_label must lie in [0,1)");
}

namespace {

std::string class_name(int c) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "class_%02d", c);
  return buf;
}

std::string example_id(int i) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "synth-%06d", i);
  return buf;
}

}  // namespace

MetaDataset synth_dataset(const SynthConfig& cfg, std::uint64_t seed) {
  check_synth_config(cfg);
  const int n_classes = cfg.n_trn_classes + cfg.n_val_classes + cfg.n_tst_classes;

  std::vector<std::string> names;
  for (int c = 0; c < n_classes; ++c) names.push_back(class_name(c));
  MetaDataset ds;
  ds.vocab = PathologyVocab::from_names(names);
  ds.embedding_dim = cfg.dim;

  // Class centers: random directions scaled to `separation`.
  Rng center_rng(derive_seed(seed, 0));
  std::vector<Vec> centers(n_classes, Vec(cfg.dim, 0.0));
  for (auto& center : centers) {
    double norm2 = 0.0;
    do {
      norm2 = 0.0;
      for (auto& v : center) {
        v = center_rng.normal();
        norm2 += v * v;
      }
    } while (norm2 < 1e-12);
    const double scale = cfg.separation / std::sqrt(norm2);
    for (auto& v : center) v *= scale;
  }

  std::vector<std::int64_t> quota(n_classes);
  for (int c = 0; c < n_classes; ++c) {
    if (c < cfg.n_trn_classes)
      quota[c] = cfg.count_trn;
    else if (c < cfg.n_trn_classes + cfg.n_val_classes)
      quota[c] = cfg.count_val;
    else
      quota[c] = cfg.count_tst;
  }
  const std::vector<std::int64_t> intended = quota;

  Rng rng(derive_seed(seed, 1));
  int next_id = 0;
  std::vector<std::int64_t> primary_count(n_classes, 0);
  auto emit = [&](const std::vector<int>& label_set, int source_of) {
    ExampleRecord ex;
    ex.id = example_id(next_id++);
    ex.source = "s" + std::to_string(source_of % cfg.n_sources);
    ex.age = static_cast<int>(rng.below(71)) + 10;
    ex.labels.assign(static_cast<size_t>(n_classes), 0);
    Vec mean(cfg.dim, 0.0);
    for (int c : label_set) {
      ex.labels[static_cast<size_t>(c)] = 1;
      for (int d = 0; d < cfg.dim; ++d) mean[d] += centers[c][d];
    }
    if (!label_set.empty())
      for (auto& v : mean) v /= static_cast<double>(label_set.size());
    ex.embedding.resize(static_cast<size_t>(cfg.dim));
    for (int d = 0; d < cfg.dim; ++d) ex.embedding[d] = mean[d] + cfg.noise * rng.normal();
    ds.examples.push_back(std::move(ex));
  };

  for (int c = 0; c < n_classes; ++c) {
    while (quota[c] > 0) {
      std::vector<int> labels{c};
      --quota[c];
      if (rng.bernoulli(cfg.co_label)) {
        std::vector<int> partners;
        for (int c2 = 0; c2 < n_classes; ++c2)
          if (c2 != c && quota[c2] > 0) partners.push_back(c2);
        if (!partners.empty()) {
          const int c2 = partners[rng.below(partners.size())];
          labels.push_back(c2);
          --quota[c2];
        }
      }
      // Source balanced over the primary class so every class shows up in
      // every source — the partition rule depends on it.
      emit(labels, static_cast<int>(primary_count[c]++));
    }
  }
  for (int i = 0; i < cfg.n_not_finding; ++i) emit({}, i);

  ds.rebuild_counts();

  for (int c = 0; c < n_classes; ++c)
    if (ds.freq[c] != intended[c])
      throw Error(Errc::internal, "synthetic count mismatch for " + names[c]);
  if (cfg.n_tst_classes > 0 || cfg.n_val_classes > 0) {
    const auto cp = build_class_partition(ds, cfg.n_tst_classes, cfg.n_val_classes);
    for (int c = 0; c < n_classes; ++c) {
      const bool in_trn = c < cfg.n_trn_classes;
      const bool in_val = !in_trn && c < cfg.n_trn_classes + cfg.n_val_classes;
      const auto& want = in_trn ? cp.meta_trn : in_val ? cp.meta_val : cp.meta_tst;
      if (!std::binary_search(want.begin(), want.end(), c))
        throw Error(Errc::internal,
                    "synthetic tiers do not reproduce the intended class split; "
                    "check tier counts and co_label");
    }
  }
  return ds;
}

}  // namespace gfsml
