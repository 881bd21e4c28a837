#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gfsml/error.hpp"
#include "gfsml/linalg.hpp"

#include "json.hpp"

namespace gfsml {

// Degenerate label set: AUC needs at least one positive and one negative.
class UndefinedAUC : public Error {
 public:
  explicit UndefinedAUC(const std::string& what)
      : Error(Errc::invalid, "undefined AUC: " + what) {}
};

// Mann–Whitney AUC with 0.5 credit per tied pair.
double auc_roc(const std::vector<double>& scores, const std::vector<int>& labels);

struct EpisodeScores {
  std::optional<double> seen_auc;
  std::optional<double> unseen_auc;
  double hm = 0.0;
};

double harmonic_mean(double a, double b);

// Pools the (example, class) entries of each block into one binary task.
// `probs` is test-example × episode-class; `y_tst` the matching labels;
// the first n_seen classes are the seen block.
EpisodeScores score_episode(const Mat& probs, const Mat& y_tst, int n_seen);

struct MetricSummary {
  double mean = 0.0;
  double ci95 = 0.0;  // half-width, 1.96 · sample stddev / √n
  std::int64_t n = 0;
};

struct AggregateReport {
  std::optional<MetricSummary> seen;
  std::optional<MetricSummary> unseen;
  MetricSummary hm;
};

// Streaming order-invariant aggregation (Welford); HM averaged per episode.
class Aggregator {
 public:
  void add(const EpisodeScores& s);
  AggregateReport report() const;
  std::int64_t count() const { return hm_.n; }

 private:
  struct Welford {
    std::int64_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;
    void add(double x);
    MetricSummary summary() const;
  };
  Welford seen_, unseen_, hm_;
};

nlohmann::json report_to_json(const AggregateReport& r);

}  // namespace gfsml
