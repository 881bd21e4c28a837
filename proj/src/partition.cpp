#include "gfsml/partition.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_set>

#include "gfsml/error.hpp"
#include "gfsml/rng.hpp"

namespace gfsml {

FrequencyTable frequency_table(const MetaDataset& ds) {
  FrequencyTable t;
  t.classes = ds.vocab.names;
  t.sources = ds.sources;
  t.total = ds.freq;
  t.per_source = ds.per_source_freq;
  return t;
}

ClassPartition build_class_partition(const FrequencyTable& table, int n_tst, int n_val) {
  const int n_classes = static_cast<int>(table.classes.size());
  if (n_tst < 0 || n_val < 0)
    throw Error(Errc::invalid, "partition sizes must be non-negative");
  if (n_tst + n_val > n_classes)
    throw Error(Errc::invalid, "partition sizes exceed vocabulary: " + std::to_string(n_tst) +
                                   " + " + std::to_string(n_val) + " > " +
                                   std::to_string(n_classes));
  if (table.total.size() != static_cast<size_t>(n_classes))
    throw Error(Errc::invalid, "frequency table total size mismatch");
  for (const auto& row : table.per_source)
    if (row.size() != static_cast<size_t>(n_classes))
      throw Error(Errc::invalid, "frequency table per-source size mismatch");

  // Ascending frequency, ties by vocabulary order (stable on index).
  std::vector<int> by_freq(n_classes);
  std::iota(by_freq.begin(), by_freq.end(), 0);
  std::stable_sort(by_freq.begin(), by_freq.end(),
                   [&](int a, int b) { return table.total[a] < table.total[b]; });

  auto in_every_source = [&](int c) {
    if (table.per_source.empty()) return false;
    for (const auto& row : table.per_source)
      if (row[c] <= 0) return false;
    return true;
  };

  std::vector<int> candidates;
  for (int c : by_freq)
    if (in_every_source(c)) candidates.push_back(c);
  if (static_cast<int>(candidates.size()) < n_tst)
    throw Error(Errc::infeasible,
                "only " + std::to_string(candidates.size()) +
                    " classes present in every source, need " + std::to_string(n_tst));

  ClassPartition cp;
  std::unordered_set<int> taken;
  for (int i = 0; i < n_tst; ++i) {
    cp.meta_tst.push_back(candidates[i]);
    taken.insert(candidates[i]);
  }

  std::vector<int> rest;
  for (int c : by_freq)
    if (!taken.count(c)) rest.push_back(c);
  for (int i = 0; i < n_val; ++i) cp.meta_val.push_back(rest[i]);
  for (int i = n_val; i < static_cast<int>(rest.size()); ++i) cp.meta_trn.push_back(rest[i]);

  std::sort(cp.meta_trn.begin(), cp.meta_trn.end());
  std::sort(cp.meta_val.begin(), cp.meta_val.end());
  std::sort(cp.meta_tst.begin(), cp.meta_tst.end());
  return cp;
}

ClassPartition build_class_partition(const MetaDataset& ds, int n_tst, int n_val) {
  return build_class_partition(frequency_table(ds), n_tst, n_val);
}

namespace {

void check_fraction(double f, const char* name) {
  if (!(f >= 0.0 && f <= 1.0))
    throw Error(Errc::invalid, std::string(name) + " must lie in [0,1]");
}

// Split `group` into (tst, val, trn) slices after a seeded shuffle.
void split_group(std::vector<std::uint32_t>& group, double frac_val, double frac_tst,
                 std::uint64_t seed, ExamplePools& out) {
  Rng rng(seed);
  rng.shuffle(group);
  const auto n = static_cast<std::int64_t>(group.size());
  auto n_tst = static_cast<std::int64_t>(std::llround(frac_tst * static_cast<double>(n)));
  auto n_val = static_cast<std::int64_t>(std::llround(frac_val * static_cast<double>(n)));
  n_tst = std::min(n_tst, n);
  n_val = std::min(n_val, n - n_tst);
  std::int64_t i = 0;
  for (; i < n_tst; ++i) out.d_meta_tst.push_back(group[i]);
  for (; i < n_tst + n_val; ++i) out.d_meta_val.push_back(group[i]);
  for (; i < n; ++i) out.d_meta_trn.push_back(group[i]);
}

}  // namespace

ExamplePools build_example_pools(const MetaDataset& ds, const ClassPartition& cp,
                                 const PoolFractions& fractions, std::uint64_t seed) {
  check_fraction(fractions.val_reserve, "val_reserve");
  check_fraction(fractions.tst_reserve, "tst_reserve");
  check_fraction(fractions.notfinding_val, "notfinding_val");
  check_fraction(fractions.notfinding_tst, "notfinding_tst");
  if (fractions.val_reserve + fractions.tst_reserve > 1.0)
    throw Error(Errc::invalid, "val_reserve + tst_reserve exceeds 1");
  if (fractions.notfinding_val + fractions.notfinding_tst > 1.0)
    throw Error(Errc::invalid, "notfinding_val + notfinding_tst exceeds 1");

  const int n_classes = static_cast<int>(ds.vocab.size());
  std::vector<uint8_t> is_val(n_classes, 0), is_tst(n_classes, 0);
  for (int c : cp.meta_val) is_val.at(c) = 1;
  for (int c : cp.meta_tst) is_tst.at(c) = 1;

  ExamplePools pools;
  pools.fractions = fractions;
  pools.seed = seed;

  std::vector<std::uint32_t> trn_only;      // labeled, meta_trn labels only
  std::vector<std::uint32_t> not_finding;
  for (std::uint32_t i = 0; i < ds.size(); ++i) {
    const auto& ex = ds.examples[i];
    bool any_tst = false, any_val = false, any_label = false;
    for (int c = 0; c < n_classes; ++c) {
      if (!ex.labels[c]) continue;
      any_label = true;
      if (is_tst[c]) any_tst = true;
      if (is_val[c]) any_val = true;
    }
    if (any_tst)
      pools.d_meta_tst.push_back(i);
    else if (any_val)
      pools.d_meta_val.push_back(i);
    else if (any_label)
      trn_only.push_back(i);
    else
      not_finding.push_back(i);
  }

  split_group(trn_only, fractions.val_reserve, fractions.tst_reserve,
              derive_seed(seed, 0), pools);
  split_group(not_finding, fractions.notfinding_val, fractions.notfinding_tst,
              derive_seed(seed, 1), pools);

  std::sort(pools.d_meta_trn.begin(), pools.d_meta_trn.end());
  std::sort(pools.d_meta_val.begin(), pools.d_meta_val.end());
  std::sort(pools.d_meta_tst.begin(), pools.d_meta_tst.end());

  // Episode feasibility depends on positives and not-finding examples being
  // reachable in each phase pool; report gaps but leave enforcement to the
  // episode generator, which knows the requested shot counts.
  auto warn_pool = [&](const char* name, const std::vector<std::uint32_t>& pool,
                       const std::vector<int>& classes) {
    std::vector<std::int64_t> pos(n_classes, 0);
    std::int64_t nf = 0;
    for (auto i : pool) {
      const auto& ex = ds.examples[i];
      if (ex.not_finding()) ++nf;
      for (int c = 0; c < n_classes; ++c)
        if (ex.labels[c]) ++pos[c];
    }
    for (int c : classes)
      if (pos[c] == 0)
        pools.warnings.push_back(
            {name, "no positive examples for class '" + ds.vocab.names[c] + "'"});
    if (nf == 0) pools.warnings.push_back({name, "no not-finding examples"});
  };
  warn_pool("meta_trn", pools.d_meta_trn, cp.meta_trn);
  warn_pool("meta_val", pools.d_meta_val, cp.meta_val);
  warn_pool("meta_tst", pools.d_meta_tst, cp.meta_tst);

  return pools;
}

Partition build_partition(const MetaDataset& ds, int n_tst, int n_val,
                          const PoolFractions& fractions, std::uint64_t seed) {
  Partition p;
  p.classes = build_class_partition(ds, n_tst, n_val);
  p.pools = build_example_pools(ds, p.classes, fractions, seed);
  return p;
}

namespace {

nlohmann::json class_names(const MetaDataset& ds, const std::vector<int>& idx) {
  nlohmann::json arr = nlohmann::json::array();
  for (int c : idx) arr.push_back(ds.vocab.names.at(c));
  return arr;
}

std::vector<int> class_indices(const MetaDataset& ds, const nlohmann::json& arr) {
  std::vector<int> out;
  for (const auto& name : arr) out.push_back(ds.vocab.require(name.get<std::string>()));
  std::sort(out.begin(), out.end());
  return out;
}

nlohmann::json example_ids(const MetaDataset& ds, const std::vector<std::uint32_t>& idx) {
  nlohmann::json arr = nlohmann::json::array();
  for (auto i : idx) arr.push_back(ds.examples.at(i).id);
  return arr;
}

std::vector<std::uint32_t> example_indices(const MetaDataset& ds, const nlohmann::json& arr) {
  std::unordered_map<std::string, std::uint32_t> by_id;
  by_id.reserve(ds.size());
  for (std::uint32_t i = 0; i < ds.size(); ++i) by_id.emplace(ds.examples[i].id, i);
  std::vector<std::uint32_t> out;
  out.reserve(arr.size());
  for (const auto& id : arr) {
    auto it = by_id.find(id.get<std::string>());
    if (it == by_id.end())
      throw Error(Errc::invalid,
                  "partition references unknown example id '" + id.get<std::string>() + "'");
    out.push_back(it->second);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

nlohmann::json partition_to_json(const MetaDataset& ds, const Partition& p) {
  nlohmann::json j;
  j["classes"]["meta_trn"] = class_names(ds, p.classes.meta_trn);
  j["classes"]["meta_val"] = class_names(ds, p.classes.meta_val);
  j["classes"]["meta_tst"] = class_names(ds, p.classes.meta_tst);
  j["pools"]["d_meta_trn"] = example_ids(ds, p.pools.d_meta_trn);
  j["pools"]["d_meta_val"] = example_ids(ds, p.pools.d_meta_val);
  j["pools"]["d_meta_tst"] = example_ids(ds, p.pools.d_meta_tst);
  j["fractions"]["val_reserve"] = p.pools.fractions.val_reserve;
  j["fractions"]["tst_reserve"] = p.pools.fractions.tst_reserve;
  j["fractions"]["notfinding_val"] = p.pools.fractions.notfinding_val;
  j["fractions"]["notfinding_tst"] = p.pools.fractions.notfinding_tst;
  j["seed"] = p.pools.seed;
  nlohmann::json warnings = nlohmann::json::array();
  for (const auto& w : p.pools.warnings)
    warnings.push_back({{"pool", w.pool}, {"message", w.message}});
  j["warnings"] = warnings;
  return j;
}

Partition partition_from_json(const MetaDataset& ds, const nlohmann::json& j) {
  Partition p;
  p.classes.meta_trn = class_indices(ds, j.at("classes").at("meta_trn"));
  p.classes.meta_val = class_indices(ds, j.at("classes").at("meta_val"));
  p.classes.meta_tst = class_indices(ds, j.at("classes").at("meta_tst"));
  p.pools.d_meta_trn = example_indices(ds, j.at("pools").at("d_meta_trn"));
  p.pools.d_meta_val = example_indices(ds, j.at("pools").at("d_meta_val"));
  p.pools.d_meta_tst = example_indices(ds, j.at("pools").at("d_meta_tst"));
  p.pools.fractions.val_reserve = j.at("fractions").at("val_reserve").get<double>();
  p.pools.fractions.tst_reserve = j.at("fractions").at("tst_reserve").get<double>();
  p.pools.fractions.notfinding_val = j.at("fractions").at("notfinding_val").get<double>();
  p.pools.fractions.notfinding_tst = j.at("fractions").at("notfinding_tst").get<double>();
  p.pools.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("warnings"))
    for (const auto& w : j.at("warnings"))
      p.pools.warnings.push_back(
          {w.at("pool").get<std::string>(), w.at("message").get<std::string>()});
  return p;
}

void save_partition(const MetaDataset& ds, const Partition& p, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io, "cannot write partition file: " + path);
  out << partition_to_json(ds, p).dump(2) << '\n';
}

Partition load_partition(const MetaDataset& ds, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot read partition file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw Error(Errc::parse, "partition file '" + path + "': " + e.what());
  }
  return partition_from_json(ds, j);
}

}  // namespace gfsml
