#pragma once

#include <cstdint>

#include "gfsml/dataset.hpp"

namespace gfsml {

// Synthetic multi-label corpus for desk-scale experiments. Classes are
// Gaussian clusters whose centers sit `separation` away from the origin;
// multi-label examples sit at the mean of their member centers; not-finding
// examples cluster at the origin. Per-class positive counts are met exactly
// via quotas, tiered so the frequency-based class partition lands the first
// n_trn_classes in meta-train, the next n_val_classes in meta-val, and the
// last n_tst_classes in meta-test.
struct SynthConfig {
  int n_trn_classes = 7;
  int n_val_classes = 3;
  int n_tst_classes = 5;
  // Counts are sized so the default partition fractions leave every phase
  // pool enough eligible examples for 30-shot episodes (the training
  // default) with headroom: the val pool keeps val_reserve * count_trn
  // examples per seen class, and co-labeled pairs only count toward
  // episodes containing both classes.
  int count_trn = 1500;  // positives per meta-train-tier class
  int count_val = 600;
  int count_tst = 400;
  int n_not_finding = 400;
  int n_sources = 2;
  int dim = 16;
  double separation = 6.0;
  double noise = 1.0;
  double co_label = 0.1;  // chance an example carries a second label
};

void check_synth_config(const SynthConfig& cfg);

MetaDataset synth_dataset(const SynthConfig& cfg, std::uint64_t seed);

}  // namespace gfsml
