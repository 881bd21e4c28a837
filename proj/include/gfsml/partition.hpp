#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gfsml/dataset.hpp"

#include "json.hpp"

namespace gfsml {

// Class-level split. Members are class indices in ascending vocabulary order.
struct ClassPartition {
  std::vector<int> meta_trn;
  std::vector<int> meta_val;
  std::vector<int> meta_tst;
};

// The counts the class rule actually consumes, decoupled from record storage
// so the rule can run on a published count table directly.
struct FrequencyTable {
  std::vector<std::string> classes;
  std::vector<std::string> sources;
  std::vector<std::int64_t> total;                      // per class
  std::vector<std::vector<std::int64_t>> per_source;    // [source][class]
};

FrequencyTable frequency_table(const MetaDataset& ds);

// meta_tst = the n_tst lowest-frequency classes among those with a nonzero
// count in every source; of the rest, the n_val lowest-frequency go to
// meta_val and the remainder to meta_trn. Ties break by vocabulary order.
ClassPartition build_class_partition(const FrequencyTable& table, int n_tst = 5, int n_val = 3);
ClassPartition build_class_partition(const MetaDataset& ds, int n_tst = 5, int n_val = 3);

struct PoolFractions {
  double val_reserve = 0.1;      // meta_trn-only examples routed to the val pool
  double tst_reserve = 0.2;      // meta_trn-only examples routed to the test pool
  double notfinding_val = 0.1;   // not-finding examples routed to the val pool
  double notfinding_tst = 0.3;   // not-finding examples routed to the test pool
};

struct PoolWarning {
  std::string pool;     // "meta_trn" | "meta_val" | "meta_tst"
  std::string message;
};

// Disjoint example pools, one per phase. Entries are indices into ds.examples.
struct ExamplePools {
  std::vector<std::uint32_t> d_meta_trn;
  std::vector<std::uint32_t> d_meta_val;
  std::vector<std::uint32_t> d_meta_tst;
  PoolFractions fractions;
  std::uint64_t seed = 0;
  std::vector<PoolWarning> warnings;
};

// Assignment rule: any example bearing a meta_tst label goes to d_meta_tst;
// else any meta_val label goes to d_meta_val; remaining labeled examples
// (meta_trn-only) are split by the reserve fractions and not-finding examples
// by the notfinding fractions, both via a seeded shuffle (test slice first,
// then val, remainder to trn). Pool counts use llround(fraction * n).
ExamplePools build_example_pools(const MetaDataset& ds, const ClassPartition& cp,
                                 const PoolFractions& fractions, std::uint64_t seed);

struct Partition {
  ClassPartition classes;
  ExamplePools pools;
};

Partition build_partition(const MetaDataset& ds, int n_tst, int n_val,
                          const PoolFractions& fractions, std::uint64_t seed);

// Manifest: the single source of truth consumed by episode generation.
nlohmann::json partition_to_json(const MetaDataset& ds, const Partition& p);
Partition partition_from_json(const MetaDataset& ds, const nlohmann::json& j);
void save_partition(const MetaDataset& ds, const Partition& p, const std::string& path);
Partition load_partition(const MetaDataset& ds, const std::string& path);

}  // namespace gfsml
