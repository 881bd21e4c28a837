#include "gfsml/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace gfsml {

namespace {

void strip_cr(std::string& s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

int parse_int(const std::string& s, const char* what, std::size_t line_no) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(Errc::parse, "line " + std::to_string(line_no) + ": bad " +
                                 std::string(what) + " '" + s + "'");
  }
  return v;
}

}  // namespace

PathologyVocab PathologyVocab::from_names(std::vector<std::string> names) {
  PathologyVocab v;
  v.names = std::move(names);
  for (int i = 0; i < static_cast<int>(v.names.size()); ++i) {
    if (v.names[i].empty())
      throw Error(Errc::invalid, "vocabulary entry " + std::to_string(i) + " is empty");
    if (!v.index.emplace(v.names[i], i).second)
      throw Error(Errc::invalid, "duplicate vocabulary name '" + v.names[i] + "'");
  }
  return v;
}

PathologyVocab PathologyVocab::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open vocabulary file '" + path + "'");
  std::vector<std::string> names;
  std::string line;
  while (std::getline(in, line)) {
    strip_cr(line);
    if (!line.empty()) names.push_back(line);
  }
  if (names.empty()) throw Error(Errc::invalid, "vocabulary file '" + path + "' is empty");
  return from_names(std::move(names));
}

int PathologyVocab::require(const std::string& name) const {
  auto it = index.find(name);
  if (it == index.end()) throw Error(Errc::invalid, "unknown class '" + name + "'");
  return it->second;
}

void MetaDataset::rebuild_counts() {
  const int n_classes = vocab.size();
  sources.clear();
  freq.assign(n_classes, 0);
  per_source_freq.clear();

  std::unordered_map<std::string, int> source_index;
  for (const auto& ex : examples) {
    auto it = source_index.find(ex.source);
    int s;
    if (it == source_index.end()) {
      s = static_cast<int>(sources.size());
      source_index.emplace(ex.source, s);
      sources.push_back(ex.source);
      per_source_freq.emplace_back(n_classes, 0);
    } else {
      s = it->second;
    }
    for (int c = 0; c < n_classes; ++c) {
      if (ex.labels[c]) {
        ++freq[c];
        ++per_source_freq[s][c];
      }
    }
  }
}

MetaDataset ingest_metadata(const std::string& csv_path, const PathologyVocab& vocab,
                            const AgeFilter& filter) {
  std::ifstream in(csv_path);
  if (!in) throw Error(Errc::io, "cannot open metadata file '" + csv_path + "'");

  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::parse, "metadata file '" + csv_path + "' is empty");
  strip_cr(line);
  if (line != "id,source,age,labels") {
    throw Error(Errc::parse, "line 1: expected header 'id,source,age,labels', got '" + line + "'");
  }

  MetaDataset ds;
  ds.vocab = vocab;

  std::unordered_set<std::string> seen_ids;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != 4) {
      throw Error(Errc::parse, "line " + std::to_string(line_no) + ": expected 4 fields, got " +
                                   std::to_string(fields.size()));
    }
    ExampleRecord rec;
    rec.id = fields[0];
    rec.source = fields[1];
    if (rec.id.empty())
      throw Error(Errc::parse, "line " + std::to_string(line_no) + ": empty id");
    rec.age = parse_int(fields[2], "age", line_no);
    rec.labels.assign(vocab.size(), 0);
    if (!fields[3].empty()) {
      for (const auto& name : split(fields[3], '|')) {
        const auto idx = vocab.find(name);
        if (!idx) {
          throw Error(Errc::parse,
                      "line " + std::to_string(line_no) + ": unknown label '" + name + "'");
        }
        rec.labels[*idx] = 1;
      }
    }
    if (rec.age < filter.min_age || rec.age > filter.max_age) continue;
    if (!seen_ids.insert(rec.id).second) {
      throw Error(Errc::invalid,
                  "line " + std::to_string(line_no) + ": duplicate id '" + rec.id + "'");
    }
    ds.examples.push_back(std::move(rec));
  }
  ds.rebuild_counts();
  return ds;
}

void load_embeddings(MetaDataset& ds, const std::string& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw Error(Errc::io, "cannot open embedding file '" + csv_path + "'");

  std::unordered_map<std::string, std::size_t> by_id;
  by_id.reserve(ds.examples.size());
  for (std::size_t i = 0; i < ds.examples.size(); ++i) by_id.emplace(ds.examples[i].id, i);

  std::string line;
  std::size_t line_no = 0;
  int dim = -1;
  std::vector<bool> filled(ds.examples.size(), false);
  std::size_t n_filled = 0;

  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() < 2) {
      throw Error(Errc::parse, "line " + std::to_string(line_no) + ": expected id,v0,...");
    }
    const int d = static_cast<int>(fields.size()) - 1;
    if (dim < 0)
      dim = d;
    else if (d != dim)
      throw Error(Errc::parse, "line " + std::to_string(line_no) + ": dimension " +
                                   std::to_string(d) + " != " + std::to_string(dim));
    auto it = by_id.find(fields[0]);
    if (it == by_id.end()) {
      throw Error(Errc::invalid, "line " + std::to_string(line_no) + ": embedding id '" +
                                     fields[0] + "' not in dataset");
    }
    if (filled[it->second]) {
      throw Error(Errc::invalid, "line " + std::to_string(line_no) + ": duplicate embedding id '" +
                                     fields[0] + "'");
    }
    std::vector<double> v(d);
    for (int k = 0; k < d; ++k) {
      try {
        std::size_t used = 0;
        v[k] = std::stod(fields[k + 1], &used);
        if (used != fields[k + 1].size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw Error(Errc::parse, "line " + std::to_string(line_no) + ": bad value '" +
                                     fields[k + 1] + "'");
      }
    }
    ds.examples[it->second].embedding = std::move(v);
    filled[it->second] = true;
    ++n_filled;
  }
  if (n_filled != ds.examples.size()) {
    throw Error(Errc::invalid, "embedding file covers " + std::to_string(n_filled) + " of " +
                                   std::to_string(ds.examples.size()) + " dataset ids");
  }
  ds.embedding_dim = dim < 0 ? 0 : dim;
}

DatasetStats compute_stats(const MetaDataset& ds, CardinalityDenom denom) {
  if (ds.examples.empty()) throw Error(Errc::invalid, "compute_stats: dataset is empty");

  const int n = ds.vocab.size();
  DatasetStats st;
  st.n_examples = ds.size();
  st.cooccurrence.assign(n, std::vector<std::int64_t>(n, 0));

  std::int64_t positives = 0;
  std::vector<int> present;
  for (const auto& ex : ds.examples) {
    present.clear();
    for (int c = 0; c < n; ++c)
      if (ex.labels[c]) present.push_back(c);
    if (present.empty()) {
      ++st.n_normal;
      continue;
    }
    ++st.n_multilabeled;
    positives += static_cast<std::int64_t>(present.size());
    for (std::size_t i = 0; i < present.size(); ++i)
      for (std::size_t j = 0; j < present.size(); ++j) ++st.cooccurrence[present[i]][present[j]];
  }

  const std::int64_t denominator =
      denom == CardinalityDenom::labeled_only ? st.n_multilabeled : st.n_examples;
  st.label_cardinality =
      denominator > 0 ? static_cast<double>(positives) / static_cast<double>(denominator) : 0.0;
  st.label_density = n > 0 ? st.label_cardinality / static_cast<double>(n) : 0.0;
  return st;
}

std::int64_t class_frequency(const MetaDataset& ds, int class_index) {
  if (class_index < 0 || class_index >= ds.vocab.size())
    throw Error(Errc::invalid, "class index " + std::to_string(class_index) + " out of range");
  return ds.freq[class_index];
}

std::int64_t class_frequency(const MetaDataset& ds, const std::string& class_name) {
  return class_frequency(ds, ds.vocab.require(class_name));
}

void write_metadata_csv(const MetaDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io, "cannot write metadata file '" + path + "'");
  out << "id,source,age,labels\n";
  std::string labels;
  for (const auto& ex : ds.examples) {
    labels.clear();
    for (int c = 0; c < ds.vocab.size(); ++c) {
      if (!ex.labels[c]) continue;
      if (!labels.empty()) labels += '|';
      labels += ds.vocab.names[c];
    }
    out << ex.id << ',' << ex.source << ',' << ex.age << ',' << labels << '\n';
  }
  if (!out) throw Error(Errc::io, "failed writing metadata file '" + path + "'");
}

void write_vocab(const PathologyVocab& vocab, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io, "cannot write vocabulary file '" + path + "'");
  for (const auto& name : vocab.names) out << name << '\n';
  if (!out) throw Error(Errc::io, "failed writing vocabulary file '" + path + "'");
}

void write_embeddings_csv(const MetaDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io, "cannot write embedding file '" + path + "'");
  char buf[64];
  for (const auto& ex : ds.examples) {
    if (ex.embedding.empty())
      throw Error(Errc::invalid, "example '" + ex.id + "' has no embedding to write");
    out << ex.id;
    for (double v : ex.embedding) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out << ',' << buf;
    }
    out << '\n';
  }
  if (!out) throw Error(Errc::io, "failed writing embedding file '" + path + "'");
}

}  // namespace gfsml
