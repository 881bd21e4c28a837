#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "gfsml/error.hpp"

namespace gfsml {

// Fixed class vocabulary. Order defines label indices and is the tie-breaker
// for every frequency sort in the project.
struct PathologyVocab {
  std::vector<std::string> names;
  std::unordered_map<std::string, int> index;

  static PathologyVocab from_names(std::vector<std::string> names);
  static PathologyVocab load(const std::string& path);  // one name per line

  int size() const { return static_cast<int>(names.size()); }

  std::optional<int> find(const std::string& name) const {
    auto it = index.find(name);
    if (it == index.end()) return std::nullopt;
    return it->second;
  }

  // Throws Errc::invalid for names outside the vocabulary.
  int require(const std::string& name) const;
};

// One image's metadata. `labels` is a multi-hot vector over the vocabulary;
// all zeros means "not finding". `embedding` is the model input representation
// (empty until an embedding table is attached).
struct ExampleRecord {
  std::string id;
  std::string source;
  int age = 0;
  std::vector<std::uint8_t> labels;
  std::vector<double> embedding;

  bool not_finding() const {
    for (auto b : labels)
      if (b) return false;
    return true;
  }

  int label_count() const {
    int n = 0;
    for (auto b : labels) n += b ? 1 : 0;
    return n;
  }
};

struct AgeFilter {
  int min_age = 10;
  int max_age = 80;
};

struct MetaDataset {
  PathologyVocab vocab;
  std::vector<ExampleRecord> examples;
  std::vector<std::string> sources;  // distinct source tags, first-seen order

  // freq[c] = number of examples with labels[c] = 1.
  std::vector<std::int64_t> freq;
  // per_source_freq[s][c], rows follow `sources`.
  std::vector<std::vector<std::int64_t>> per_source_freq;

  int embedding_dim = 0;  // 0 while no embeddings are attached

  std::int64_t size() const { return static_cast<std::int64_t>(examples.size()); }

  // Recomputes sources/freq/per_source_freq from `examples`.
  void rebuild_counts();
};

struct DatasetStats {
  std::int64_t n_examples = 0;
  std::int64_t n_multilabeled = 0;  // examples with at least one label
  std::int64_t n_normal = 0;        // not-finding examples
  double label_cardinality = 0.0;
  double label_density = 0.0;
  // cooccurrence[i][j] = examples carrying both labels; diagonal = freq.
  std::vector<std::vector<std::int64_t>> cooccurrence;
};

enum class CardinalityDenom {
  labeled_only,  // average over examples with >= 1 label
  all_examples,
};

// Reads `id,source,age,labels` CSV (labels '|'-separated vocabulary names,
// empty = not finding). Records outside [min_age, max_age] are dropped.
// Malformed rows and unknown label names are hard errors with line numbers;
// duplicate ids are ingestion errors.
MetaDataset ingest_metadata(const std::string& csv_path, const PathologyVocab& vocab,
                            const AgeFilter& filter);

// Attaches per-example input vectors from a CSV `id,v0,...,v{D-1}`.
// Ids must join 1:1 against the dataset.
void load_embeddings(MetaDataset& ds, const std::string& csv_path);

DatasetStats compute_stats(const MetaDataset& ds,
                           CardinalityDenom denom = CardinalityDenom::labeled_only);

std::int64_t class_frequency(const MetaDataset& ds, int class_index);
std::int64_t class_frequency(const MetaDataset& ds, const std::string& class_name);

// Writers for the same file formats (used by the synthetic generator and
// round-trip tests).
void write_metadata_csv(const MetaDataset& ds, const std::string& path);
void write_vocab(const PathologyVocab& vocab, const std::string& path);
void write_embeddings_csv(const MetaDataset& ds, const std::string& path);

}  // namespace gfsml
