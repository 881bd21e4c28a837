#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>
#include <vector>

#include "gfsml/dataset.hpp"
#include "gfsml/partition.hpp"
#include "gfsml/rng.hpp"

namespace fixtures {

// Published per-class, per-source positive counts for the 15-pathology
// vocabulary across the four contributing sources. Totals sum to 596,494.
inline const std::vector<std::string>& published_classes() {
  static const std::vector<std::string> names = {
      "Effusion",      "Lung opacity",       "Atelectasis", "Infiltration", "Nodule",
      "Mass",          "Pleural thickening", "Emphysema",   "Fibrosis",     "Hernia",
      "Cardiomegaly",  "Edema",              "Pneumothorax", "Consolidation", "Pneumonia"};
  return names;
}

inline gfsml::FrequencyTable published_counts() {
  gfsml::FrequencyTable t;
  t.classes = published_classes();
  t.sources = {"chexpert", "mimic", "chestxray14", "padchest"};
  // {chexpert, mimic, chestxray14, padchest} per class, published row order.
  const std::vector<std::vector<std::int64_t>> by_class = {
      {66484, 43544, 13086, 5075},  // Effusion           128,189
      {77194, 42779, 0, 0},         // Lung opacity       119,973
      {25980, 38297, 11335, 4808},  // Atelectasis         80,420
      {0, 0, 19362, 10455},         // Infiltration        29,817
      {0, 0, 6238, 3429},           // Nodule               9,667
      {0, 0, 5682, 738},            // Mass                 6,420
      {0, 0, 3326, 2691},           // Pleural thickening   6,017
      {0, 0, 2484, 939},            // Emphysema            3,423
      {0, 0, 1650, 489},            // Fibrosis             2,139
      {0, 0, 197, 1034},            // Hernia               1,231
      {20391, 36512, 2701, 6782},   // Cardiomegaly        66,386
      {41247, 21894, 2269, 865},    // Edema               66,275
      {14977, 9215, 5220, 306},     // Pneumothorax        29,718
      {10340, 9183, 4505, 1197},    // Consolidation       25,225
      {2986, 13679, 1381, 3548},    // Pneumonia           21,594
  };
  t.per_source.assign(t.sources.size(), std::vector<std::int64_t>(t.classes.size(), 0));
  t.total.assign(t.classes.size(), 0);
  for (std::size_t c = 0; c < t.classes.size(); ++c)
    for (std::size_t s = 0; s < t.sources.size(); ++s) {
      t.per_source[s][c] = by_class[c][s];
      t.total[c] += by_class[c][s];
    }
  return t;
}

// 8-example micro corpus: three positives each for two classes plus two
// not-finding examples, 1-D features.
inline gfsml::MetaDataset micro_pool() {
  gfsml::MetaDataset ds;
  ds.vocab = gfsml::PathologyVocab::from_names({"alpha", "beta"});
  ds.embedding_dim = 1;
  auto add = [&](const std::string& id, std::vector<std::uint8_t> labels, double feat) {
    gfsml::ExampleRecord ex;
    ex.id = id;
    ex.source = "s0";
    ex.age = 40;
    ex.labels = std::move(labels);
    ex.embedding = {feat};
    ds.examples.push_back(std::move(ex));
  };
  add("a1", {1, 0}, 1.0);
  add("a2", {1, 0}, 1.1);
  add("a3", {1, 0}, 0.9);
  add("b1", {0, 1}, -1.0);
  add("b2", {0, 1}, -1.1);
  add("b3", {0, 1}, -0.9);
  add("n1", {0, 0}, 0.0);
  add("n2", {0, 0}, 0.05);
  ds.rebuild_counts();
  return ds;
}

// Hand partition over the micro pool: alpha is the seen class, beta the
// unseen one, and every example sits in the meta-val pool.
inline gfsml::Partition micro_partition() {
  gfsml::Partition p;
  p.classes.meta_trn = {0};
  p.classes.meta_val = {1};
  for (std::uint32_t i = 0; i < 8; ++i) p.pools.d_meta_val.push_back(i);
  return p;
}

struct RandomDatasetOpts {
  int n_classes = 6;
  int n_examples = 300;
  double p_label = 0.25;  // per-class Bernoulli
  int dim = 0;            // 0 = no features
  int n_sources = 2;
};

inline gfsml::MetaDataset random_dataset(std::uint64_t seed, const RandomDatasetOpts& opts) {
  gfsml::Rng rng(seed);
  std::vector<std::string> names;
  for (int c = 0; c < opts.n_classes; ++c) names.push_back("cls" + std::to_string(c));
  gfsml::MetaDataset ds;
  ds.vocab = gfsml::PathologyVocab::from_names(names);
  ds.embedding_dim = opts.dim;
  for (int i = 0; i < opts.n_examples; ++i) {
    gfsml::ExampleRecord ex;
    ex.id = "ex" + std::to_string(i);
    ex.source = "s" + std::to_string(i % opts.n_sources);
    ex.age = static_cast<int>(rng.below(71)) + 10;
    ex.labels.assign(static_cast<std::size_t>(opts.n_classes), 0);
    for (int c = 0; c < opts.n_classes; ++c)
      if (rng.bernoulli(opts.p_label)) ex.labels[static_cast<std::size_t>(c)] = 1;
    for (int d = 0; d < opts.dim; ++d) ex.embedding.push_back(rng.normal());
    ds.examples.push_back(std::move(ex));
  }
  ds.rebuild_counts();
  return ds;
}

inline std::string temp_dir() {
  char templ[] = "/tmp/gfsml-test-XXXXXX";
  const char* dir = mkdtemp(templ);
  if (!dir) throw std::runtime_error("mkdtemp failed");
  return dir;
}

inline std::string write_file(const std::string& dir, const std::string& name,
                              const std::string& content) {
  const std::string path = dir + "/" + name;
  std::ofstream out(path);
  out << content;
  out.close();
  return path;
}

}  // namespace fixtures
