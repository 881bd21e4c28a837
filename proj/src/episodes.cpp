#include "gfsml/episodes.hpp"

#include <algorithm>
#include <unordered_set>

#include "gfsml/error.hpp"
#include "gfsml/rng.hpp"

namespace gfsml {

const char* phase_name(Phase p) {
  switch (p) {
    case Phase::meta_trn: return "meta-train";
    case Phase::meta_val: return "meta-val";
    case Phase::meta_tst: return "meta-test";
  }
  throw Error(Errc::internal, "unreachable phase");
}

Phase phase_from_name(const std::string& name) {
  if (name == "meta-train") return Phase::meta_trn;
  if (name == "meta-val") return Phase::meta_val;
  if (name == "meta-test") return Phase::meta_tst;
  throw Error(Errc::invalid, "unknown phase '" + name + "'");
}

void check_spec(const EpisodeSpec& spec) {
  if (spec.n_seen < 0 || spec.n_unseen < 0)
    throw Error(Errc::invalid, "class counts must be non-negative");
  if (spec.n_seen + spec.n_unseen < 1)
    throw Error(Errc::invalid, "episode needs at least one class");
  if (spec.k_trn < 1) throw Error(Errc::invalid, "k_trn must be >= 1");
  if (spec.k_tst < 1) throw Error(Errc::invalid, "k_tst must be >= 1");
  if (spec.phase == Phase::meta_trn && spec.n_unseen != 0)
    throw Error(Errc::invalid, "meta-train episodes cannot contain unseen classes");
}

std::vector<std::uint8_t> restricted_labels(const MetaDataset& ds, const Episode& ep,
                                            std::uint32_t example_index) {
  const auto& full = ds.examples.at(example_index).labels;
  std::vector<std::uint8_t> out(ep.classes.size(), 0);
  for (size_t i = 0; i < ep.classes.size(); ++i) out[i] = full.at(ep.classes[i]);
  return out;
}

namespace {

struct PhaseView {
  const std::vector<std::uint32_t>* pool;
  const std::vector<int>* seen_set;
  const std::vector<int>* unseen_set;
};

PhaseView phase_view(const Partition& part, Phase phase) {
  static const std::vector<int> kNone;
  switch (phase) {
    case Phase::meta_trn:
      return {&part.pools.d_meta_trn, &part.classes.meta_trn, &kNone};
    case Phase::meta_val:
      return {&part.pools.d_meta_val, &part.classes.meta_trn, &part.classes.meta_val};
    case Phase::meta_tst:
      return {&part.pools.d_meta_tst, &part.classes.meta_trn, &part.classes.meta_tst};
  }
  throw Error(Errc::internal, "unreachable phase");
}

// Ascending global frequency, ties by vocabulary order.
void sort_by_frequency(std::vector<int>& classes, const MetaDataset& ds) {
  std::sort(classes.begin(), classes.end(), [&](int a, int b) {
    if (ds.freq[a] != ds.freq[b]) return ds.freq[a] < ds.freq[b];
    return a < b;
  });
}

std::vector<int> sample_classes(const std::vector<int>& from, int n, Rng& rng) {
  auto picks = rng.sample_indices(from.size(), static_cast<size_t>(n));
  std::vector<int> out;
  out.reserve(picks.size());
  for (auto i : picks) out.push_back(from[i]);
  return out;
}

}  // namespace

Episode generate_episode(const MetaDataset& ds, const Partition& part, const EpisodeSpec& spec,
                         std::uint64_t seed) {
  check_spec(spec);
  const auto view = phase_view(part, spec.phase);
  if (static_cast<int>(view.seen_set->size()) < spec.n_seen)
    throw Error(Errc::invalid, "requested " + std::to_string(spec.n_seen) +
                                   " seen classes, partition holds " +
                                   std::to_string(view.seen_set->size()));
  if (static_cast<int>(view.unseen_set->size()) < spec.n_unseen)
    throw Error(Errc::invalid, "requested " + std::to_string(spec.n_unseen) +
                                   " unseen classes, partition holds " +
                                   std::to_string(view.unseen_set->size()));

  Rng rng(seed);
  Episode ep;
  ep.seed = seed;
  ep.spec = spec;
  ep.n_seen = spec.n_seen;

  auto c_seen = sample_classes(*view.seen_set, spec.n_seen, rng);
  sort_by_frequency(c_seen, ds);
  auto c_unseen = sample_classes(*view.unseen_set, spec.n_unseen, rng);
  sort_by_frequency(c_unseen, ds);
  ep.classes = c_seen;
  ep.classes.insert(ep.classes.end(), c_unseen.begin(), c_unseen.end());

  const int n_classes = static_cast<int>(ds.vocab.size());
  std::vector<std::uint8_t> allowed(n_classes, 0);
  for (int c : ep.classes) allowed[c] = 1;

  // D': phase-pool examples carrying no excluded label. `alive` tracks
  // consumption so one pass over candidates serves both subsets.
  std::vector<std::uint32_t> candidates;
  for (auto i : *view.pool) {
    const auto& labels = ds.examples[i].labels;
    bool ok = true;
    for (int c = 0; c < n_classes && ok; ++c)
      if (labels[c] && !allowed[c]) ok = false;
    if (ok) candidates.push_back(i);
  }
  std::vector<std::uint8_t> alive(candidates.size(), 1);

  auto build_subset = [&](std::vector<std::uint32_t>& subset, int k) {
    std::vector<int> present(ep.classes.size(), 0);
    auto add = [&](size_t pos) {
      subset.push_back(candidates[pos]);
      alive[pos] = 0;
      const auto& labels = ds.examples[candidates[pos]].labels;
      for (size_t ci = 0; ci < ep.classes.size(); ++ci)
        if (labels[ep.classes[ci]]) ++present[ci];
    };
    for (size_t ci = 0; ci < ep.classes.size(); ++ci) {
      const int cls = ep.classes[ci];
      const int k_missing = std::max(0, k - present[ci]);
      if (k_missing == 0) continue;
      std::vector<size_t> eligible;
      for (size_t pos = 0; pos < candidates.size(); ++pos)
        if (alive[pos] && ds.examples[candidates[pos]].labels[cls]) eligible.push_back(pos);
      if (static_cast<int>(eligible.size()) < k_missing)
        throw EpisodeInfeasible(ds.vocab.names[cls], k_missing,
                                static_cast<std::int64_t>(eligible.size()));
      for (auto pick : rng.sample_indices(eligible.size(), static_cast<size_t>(k_missing)))
        add(eligible[pick]);
    }
    std::vector<size_t> normals;
    for (size_t pos = 0; pos < candidates.size(); ++pos)
      if (alive[pos] && ds.examples[candidates[pos]].not_finding()) normals.push_back(pos);
    if (normals.empty()) throw EpisodeInfeasible("(not finding)", 1, 0);
    add(normals[rng.below(normals.size())]);
  };

  build_subset(ep.d_trn, spec.k_trn);
  build_subset(ep.d_tst, spec.k_tst);
  return ep;
}

std::uint64_t episode_seed(std::uint64_t master_seed, std::int64_t index) {
  return derive_seed(master_seed, static_cast<std::uint64_t>(index));
}

std::vector<Episode> episode_stream(const MetaDataset& ds, const Partition& part,
                                    const EpisodeSpec& spec, std::uint64_t master_seed,
                                    std::int64_t count) {
  if (count < 1) throw Error(Errc::invalid, "episode count must be >= 1");
  std::vector<Episode> out;
  out.reserve(static_cast<size_t>(count));
  for (std::int64_t i = 0; i < count; ++i) {
    try {
      out.push_back(generate_episode(ds, part, spec, episode_seed(master_seed, i)));
    } catch (const EpisodeInfeasible& e) {
      throw EpisodeInfeasible(e.cls(), e.needed(), e.available(),
                              "episode " + std::to_string(i) + ": ");
    } catch (const Error& e) {
      throw Error(e.code(), "episode " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

std::vector<std::string> validate_episode(const MetaDataset& ds, const Episode& ep,
                                          const EpisodeSpec& spec) {
  std::vector<std::string> bad;
  const int n_total = spec.n_seen + spec.n_unseen;
  if (static_cast<int>(ep.classes.size()) != n_total)
    bad.push_back("class count " + std::to_string(ep.classes.size()) + " != spec " +
                  std::to_string(n_total));
  if (ep.n_seen != spec.n_seen)
    bad.push_back("seen block size " + std::to_string(ep.n_seen) + " != spec " +
                  std::to_string(spec.n_seen));

  auto check_block_sorted = [&](size_t lo, size_t hi, const char* name) {
    for (size_t i = lo + 1; i < hi && i < ep.classes.size(); ++i) {
      const int a = ep.classes[i - 1], b = ep.classes[i];
      if (ds.freq[a] > ds.freq[b] || (ds.freq[a] == ds.freq[b] && a > b))
        bad.push_back(std::string(name) + " block not sorted by increasing frequency");
    }
  };
  const size_t seen_end = std::min(ep.classes.size(), static_cast<size_t>(std::max(ep.n_seen, 0)));
  check_block_sorted(0, seen_end, "seen");
  check_block_sorted(seen_end, ep.classes.size(), "unseen");

  std::unordered_set<int> class_set(ep.classes.begin(), ep.classes.end());
  if (class_set.size() != ep.classes.size()) bad.push_back("duplicate episode classes");

  std::unordered_set<std::uint32_t> trn_set(ep.d_trn.begin(), ep.d_trn.end());
  std::unordered_set<std::uint32_t> tst_set(ep.d_tst.begin(), ep.d_tst.end());
  if (trn_set.size() != ep.d_trn.size()) bad.push_back("duplicate examples in d_trn");
  if (tst_set.size() != ep.d_tst.size()) bad.push_back("duplicate examples in d_tst");
  for (auto i : ep.d_trn)
    if (tst_set.count(i))
      bad.push_back("example '" + ds.examples.at(i).id + "' in both d_trn and d_tst");

  auto check_subset = [&](const std::vector<std::uint32_t>& subset, int k, const char* name) {
    std::vector<int> positives(ep.classes.size(), 0);
    std::int64_t nf = 0;
    for (auto i : subset) {
      const auto& ex = ds.examples.at(i);
      if (ex.not_finding()) ++nf;
      for (int c = 0; c < static_cast<int>(ds.vocab.size()); ++c) {
        if (!ex.labels[c]) continue;
        if (!class_set.count(c))
          bad.push_back(std::string(name) + " example '" + ex.id + "' carries excluded label '" +
                        ds.vocab.names[c] + "'");
      }
      for (size_t ci = 0; ci < ep.classes.size(); ++ci)
        if (ex.labels[ep.classes[ci]]) ++positives[ci];
    }
    for (size_t ci = 0; ci < ep.classes.size(); ++ci)
      if (positives[ci] < k)
        bad.push_back(std::string(name) + " holds " + std::to_string(positives[ci]) +
                      " positives for class '" + ds.vocab.names[ep.classes[ci]] + "', needs " +
                      std::to_string(k));
    if (nf < 1) bad.push_back(std::string(name) + " holds no not-finding example");
  };
  check_subset(ep.d_trn, spec.k_trn, "d_trn");
  check_subset(ep.d_tst, spec.k_tst, "d_tst");
  return bad;
}

nlohmann::json episode_to_json(const MetaDataset& ds, const Episode& ep) {
  nlohmann::json j;
  nlohmann::json classes = nlohmann::json::array();
  for (size_t i = 0; i < ep.classes.size(); ++i)
    classes.push_back({{"name", ds.vocab.names.at(ep.classes[i])},
                       {"seen", i < static_cast<size_t>(ep.n_seen)}});
  j["classes"] = classes;
  auto subset = [&](const std::vector<std::uint32_t>& idx) {
    nlohmann::json arr = nlohmann::json::array();
    for (auto i : idx) {
      nlohmann::json labels = nlohmann::json::array();
      for (auto v : restricted_labels(ds, ep, i)) labels.push_back(static_cast<int>(v));
      arr.push_back({{"id", ds.examples.at(i).id}, {"labels", labels}});
    }
    return arr;
  };
  j["trn"] = subset(ep.d_trn);
  j["tst"] = subset(ep.d_tst);
  j["seed"] = ep.seed;
  j["spec"] = {{"n_seen", ep.spec.n_seen}, {"n_unseen", ep.spec.n_unseen},
               {"k_trn", ep.spec.k_trn},   {"k_tst", ep.spec.k_tst},
               {"phase", phase_name(ep.spec.phase)}};
  return j;
}

}  // namespace gfsml
