#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gfsml/dataset.hpp"
#include "gfsml/partition.hpp"

#include "json.hpp"

namespace gfsml {

enum class Phase { meta_trn, meta_val, meta_tst };

const char* phase_name(Phase p);
Phase phase_from_name(const std::string& name);

struct EpisodeSpec {
  int n_seen = 3;
  int n_unseen = 0;
  int k_trn = 30;
  int k_tst = 30;
  Phase phase = Phase::meta_tst;
};

// Invariant checks shared by generation and validation; throws Errc::invalid.
void check_spec(const EpisodeSpec& spec);

struct Episode {
  // Seen block then unseen block, each sorted by increasing global frequency
  // (ties by vocabulary order). First n_seen entries are the seen block.
  std::vector<int> classes;
  int n_seen = 0;
  std::vector<std::uint32_t> d_trn;  // indices into MetaDataset::examples
  std::vector<std::uint32_t> d_tst;
  std::uint64_t seed = 0;
  EpisodeSpec spec;
};

// Multi-hot label vector of one example restricted to the episode's classes.
std::vector<std::uint8_t> restricted_labels(const MetaDataset& ds, const Episode& ep,
                                            std::uint32_t example_index);

// One episode per Algorithm: sample and frequency-sort the class blocks,
// drop pool examples bearing excluded labels, then top each class up to its
// shot count (training subset first, then test) while consuming the shared
// candidate set, and finish each subset with one not-finding example.
Episode generate_episode(const MetaDataset& ds, const Partition& part, const EpisodeSpec& spec,
                         std::uint64_t seed);

// Episode i is generated from derive_seed(master_seed, i): order-deterministic
// and safe to fan out across workers.
std::vector<Episode> episode_stream(const MetaDataset& ds, const Partition& part,
                                    const EpisodeSpec& spec, std::uint64_t master_seed,
                                    std::int64_t count);
std::uint64_t episode_seed(std::uint64_t master_seed, std::int64_t index);

// Every invariant violation as a human-readable diagnostic; empty iff valid.
std::vector<std::string> validate_episode(const MetaDataset& ds, const Episode& ep,
                                          const EpisodeSpec& spec);

nlohmann::json episode_to_json(const MetaDataset& ds, const Episode& ep);

}  // namespace gfsml
