#include <algorithm>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "gfsml/error.hpp"
#include "gfsml/partition.hpp"
#include "oracles.hpp"

using namespace gfsml;

namespace {

std::vector<std::string> names_of(const MetaDataset& ds, const std::vector<int>& idx) {
  std::vector<std::string> out;
  for (int c : idx) out.push_back(ds.vocab.names[static_cast<std::size_t>(c)]);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("published count fixture reproduces the published class split") {
  const auto table = fixtures::published_counts();
  std::int64_t total = 0;
  for (auto v : table.total) total += v;
  REQUIRE(total == 596494);

  const auto cp = build_class_partition(table, 5, 3);
  MetaDataset ds;
  ds.vocab = PathologyVocab::from_names(table.classes);

  CHECK(names_of(ds, cp.meta_tst) ==
        std::vector<std::string>{"Cardiomegaly", "Consolidation", "Edema", "Pneumonia",
                                 "Pneumothorax"});
  CHECK(names_of(ds, cp.meta_val) ==
        std::vector<std::string>{"Emphysema", "Fibrosis", "Hernia"});
  CHECK(names_of(ds, cp.meta_trn) ==
        std::vector<std::string>{"Atelectasis", "Effusion", "Infiltration", "Lung opacity",
                                 "Mass", "Nodule", "Pleural thickening"});
}

TEST_CASE("minimal three-class rule") {
  FrequencyTable t;
  t.classes = {"a", "b", "c"};
  t.sources = {"s0"};
  t.total = {50, 5, 20};
  t.per_source = {{50, 5, 20}};
  const auto cp = build_class_partition(t, 1, 1);
  CHECK(cp.meta_tst == std::vector<int>{1});  // rarest
  CHECK(cp.meta_val == std::vector<int>{2});  // next rarest
  CHECK(cp.meta_trn == std::vector<int>{0});
}

TEST_CASE("class rule matches the independent oracle on random tables") {
  Rng rng(404);
  for (int trial = 0; trial < 200; ++trial) {
    FrequencyTable t;
    const int n_classes = 6 + static_cast<int>(rng.below(10));
    const int n_sources = 1 + static_cast<int>(rng.below(4));
    for (int c = 0; c < n_classes; ++c) t.classes.push_back("c" + std::to_string(c));
    for (int s = 0; s < n_sources; ++s) t.sources.push_back("s" + std::to_string(s));
    t.per_source.assign(static_cast<std::size_t>(n_sources),
                        std::vector<std::int64_t>(static_cast<std::size_t>(n_classes), 0));
    t.total.assign(static_cast<std::size_t>(n_classes), 0);
    for (int c = 0; c < n_classes; ++c)
      for (int s = 0; s < n_sources; ++s) {
        // Low-cardinality counts make ties and zero entries common.
        const auto v = static_cast<std::int64_t>(rng.below(4));
        t.per_source[static_cast<std::size_t>(s)][static_cast<std::size_t>(c)] = v;
        t.total[static_cast<std::size_t>(c)] += v;
      }
    const int n_tst = 1 + static_cast<int>(rng.below(3));
    const int n_val = static_cast<int>(rng.below(3));

    bool oracle_ok = true;
    oracle::PartitionOracle expect;
    try {
      expect = oracle::partition_rule(t.total, t.per_source, n_tst, n_val);
    } catch (const std::exception&) {
      oracle_ok = false;
    }
    if (!oracle_ok) {
      CHECK_THROWS_AS(build_class_partition(t, n_tst, n_val), Error);
      continue;
    }
    const auto cp = build_class_partition(t, n_tst, n_val);
    CHECK(cp.meta_tst == expect.tst);
    CHECK(cp.meta_val == expect.val);
    CHECK(cp.meta_trn == expect.trn);
  }
}

TEST_CASE("partition failure modes") {
  auto t = fixtures::published_counts();
  CHECK_THROWS_AS(build_class_partition(t, 8, 3), Error);  // only 7 all-source classes
  try {
    build_class_partition(t, 8, 3);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::infeasible);
  }
  CHECK_THROWS_AS(build_class_partition(t, 10, 6), Error);  // 16 > 15
  CHECK_THROWS_AS(build_class_partition(t, -1, 3), Error);
}

namespace {

MetaDataset pool_fixture(std::uint64_t seed, int n_examples) {
  fixtures::RandomDatasetOpts opts;
  opts.n_classes = 9;
  opts.n_examples = n_examples;
  opts.p_label = 0.18;
  opts.n_sources = 1;
  return fixtures::random_dataset(seed, opts);
}

}  // namespace

TEST_CASE("example pools follow precedence, purity, and exact sizing") {
  const auto ds = pool_fixture(71, 200);
  const auto cp = build_class_partition(ds, 2, 2);
  PoolFractions fr;
  fr.val_reserve = 0.1;
  fr.tst_reserve = 0.2;
  fr.notfinding_val = 0.1;
  fr.notfinding_tst = 0.3;
  const auto pools = build_example_pools(ds, cp, fr, 99);

  std::vector<std::uint8_t> is_val(9, 0), is_tst(9, 0);
  for (int c : cp.meta_val) is_val[static_cast<std::size_t>(c)] = 1;
  for (int c : cp.meta_tst) is_tst[static_cast<std::size_t>(c)] = 1;

  // Category counts, recomputed directly off the examples.
  std::int64_t labeled_tst = 0, labeled_val = 0, trn_only = 0, nf = 0;
  for (const auto& ex : ds.examples) {
    bool any = false, v = false, t = false;
    for (std::size_t c = 0; c < 9; ++c) {
      if (!ex.labels[c]) continue;
      any = true;
      if (is_val[c]) v = true;
      if (is_tst[c]) t = true;
    }
    if (t)
      ++labeled_tst;
    else if (v)
      ++labeled_val;
    else if (any)
      ++trn_only;
    else
      ++nf;
  }
  const auto sizes = oracle::pool_sizes(labeled_tst, labeled_val, trn_only, nf, fr.val_reserve,
                                        fr.tst_reserve, fr.notfinding_val, fr.notfinding_tst);
  CHECK(static_cast<std::int64_t>(pools.d_meta_trn.size()) == sizes.trn);
  CHECK(static_cast<std::int64_t>(pools.d_meta_val.size()) == sizes.val);
  CHECK(static_cast<std::int64_t>(pools.d_meta_tst.size()) == sizes.tst);

  // Disjoint and exhaustive.
  std::set<std::uint32_t> all;
  for (auto i : pools.d_meta_trn) all.insert(i);
  for (auto i : pools.d_meta_val) all.insert(i);
  for (auto i : pools.d_meta_tst) all.insert(i);
  CHECK(all.size() == ds.examples.size());
  CHECK(pools.d_meta_trn.size() + pools.d_meta_val.size() + pools.d_meta_tst.size() ==
        ds.examples.size());

  // Precedence: any example with a tst label must be in the tst pool.
  for (auto i : pools.d_meta_trn) {
    const auto& ex = ds.examples[i];
    for (std::size_t c = 0; c < 9; ++c)
      if (ex.labels[c]) {
        CHECK(!is_tst[c]);
        CHECK(!is_val[c]);
      }
  }
  for (auto i : pools.d_meta_val) {
    const auto& ex = ds.examples[i];
    for (std::size_t c = 0; c < 9; ++c)
      if (ex.labels[c]) CHECK(!is_tst[c]);
  }

  // Determinism.
  const auto again = build_example_pools(ds, cp, fr, 99);
  CHECK(again.d_meta_trn == pools.d_meta_trn);
  CHECK(again.d_meta_val == pools.d_meta_val);
  CHECK(again.d_meta_tst == pools.d_meta_tst);
  const auto other = build_example_pools(ds, cp, fr, 100);
  CHECK(other.d_meta_trn != pools.d_meta_trn);
}

TEST_CASE("zero reserves keep meta-train-only examples out of val/test pools") {
  const auto ds = pool_fixture(72, 150);
  const auto cp = build_class_partition(ds, 2, 2);
  PoolFractions fr;
  fr.val_reserve = 0.0;
  fr.tst_reserve = 0.0;
  fr.notfinding_val = 0.0;
  fr.notfinding_tst = 0.0;
  const auto pools = build_example_pools(ds, cp, fr, 5);
  std::vector<std::uint8_t> group(9, 0);  // 1 = val, 2 = tst
  for (int c : cp.meta_val) group[static_cast<std::size_t>(c)] = 1;
  for (int c : cp.meta_tst) group[static_cast<std::size_t>(c)] = 2;
  auto check_pool = [&](const std::vector<std::uint32_t>& pool, std::uint8_t want) {
    for (auto i : pool) {
      const auto& ex = ds.examples[i];
      CHECK(!ex.not_finding());
      bool hit = false;
      for (std::size_t c = 0; c < 9; ++c)
        if (ex.labels[c] && group[c] == want) hit = true;
      CHECK(hit);
    }
  };
  check_pool(pools.d_meta_val, 1);
  check_pool(pools.d_meta_tst, 2);
}

TEST_CASE("pool gaps are warnings, not failures") {
  // Tiny dataset where the val pool cannot contain every val-class positive.
  MetaDataset ds;
  ds.vocab = PathologyVocab::from_names({"a", "b", "c"});
  auto add = [&](const std::string& id, std::vector<std::uint8_t> labels) {
    ExampleRecord ex;
    ex.id = id;
    ex.source = "s0";
    ex.age = 30;
    ex.labels = std::move(labels);
    ds.examples.push_back(std::move(ex));
  };
  add("x1", {1, 0, 0});
  add("x2", {1, 0, 0});
  add("x3", {1, 0, 0});
  add("x4", {0, 0, 1});
  ds.rebuild_counts();
  ClassPartition cp;
  cp.meta_trn = {0};
  cp.meta_val = {1};  // class b has zero examples anywhere
  cp.meta_tst = {2};
  const auto pools = build_example_pools(ds, cp, PoolFractions{}, 1);
  bool warned = false;
  for (const auto& w : pools.warnings)
    if (w.pool == "meta_val" && w.message.find("'b'") != std::string::npos) warned = true;
  CHECK(warned);
}

TEST_CASE("fraction validation") {
  const auto ds = pool_fixture(73, 60);
  const auto cp = build_class_partition(ds, 2, 2);
  PoolFractions fr;
  fr.val_reserve = 0.6;
  fr.tst_reserve = 0.6;
  CHECK_THROWS_AS(build_example_pools(ds, cp, fr, 1), Error);
  fr = PoolFractions{};
  fr.notfinding_tst = 1.5;
  CHECK_THROWS_AS(build_example_pools(ds, cp, fr, 1), Error);
}

TEST_CASE("partition manifest round-trips") {
  const auto ds = pool_fixture(74, 120);
  const auto part = build_partition(ds, 2, 2, PoolFractions{}, 31);
  const auto dir = fixtures::temp_dir();
  const auto path = dir + "/partition.json";
  save_partition(ds, part, path);
  const auto back = load_partition(ds, path);
  CHECK(back.classes.meta_trn == part.classes.meta_trn);
  CHECK(back.classes.meta_val == part.classes.meta_val);
  CHECK(back.classes.meta_tst == part.classes.meta_tst);
  CHECK(back.pools.d_meta_trn == part.pools.d_meta_trn);
  CHECK(back.pools.d_meta_val == part.pools.d_meta_val);
  CHECK(back.pools.d_meta_tst == part.pools.d_meta_tst);
  CHECK(back.pools.seed == part.pools.seed);
  CHECK(back.pools.fractions.val_reserve == part.pools.fractions.val_reserve);

  // Foreign ids fail the load.
  auto j = partition_to_json(ds, part);
  j["pools"]["d_meta_trn"].push_back("not-an-id");
  CHECK_THROWS_AS(partition_from_json(ds, j), Error);
}
