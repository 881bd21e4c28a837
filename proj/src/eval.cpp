#include "gfsml/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gfsml {

double auc_roc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size())
    throw Error(Errc::invalid, "score/label length mismatch");
  std::int64_t n_pos = 0, n_neg = 0;
  for (int y : labels) {
    if (y == 1)
      ++n_pos;
    else if (y == 0)
      ++n_neg;
    else
      throw Error(Errc::invalid, "labels must be 0 or 1");
  }
  if (n_pos == 0) throw UndefinedAUC("no positive labels");
  if (n_neg == 0) throw UndefinedAUC("no negative labels");

  // Rank-sum form: average ranks over ties, U = Σ ranks(pos) − n_pos(n_pos+1)/2.
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + j) + 1.0;  // 1-based
    for (std::size_t k = i; k <= j; ++k)
      if (labels[order[k]] == 1) rank_sum_pos += avg_rank;
    i = j + 1;
  }
  const double u = rank_sum_pos - 0.5 * static_cast<double>(n_pos) *
                                      (static_cast<double>(n_pos) + 1.0);
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double harmonic_mean(double a, double b) {
  if (a + b <= 0.0) return 0.0;  // degenerate pair, by continuity
  return 2.0 * a * b / (a + b);
}

EpisodeScores score_episode(const Mat& probs, const Mat& y_tst, int n_seen) {
  if (probs.rows != y_tst.rows || probs.cols != y_tst.cols)
    throw Error(Errc::invalid, "probability/label shape mismatch");
  if (n_seen < 0 || static_cast<std::size_t>(n_seen) > probs.cols)
    throw Error(Errc::invalid, "seen block exceeds class count");

  auto pooled = [&](std::size_t c_lo, std::size_t c_hi) {
    std::vector<double> s;
    std::vector<int> y;
    s.reserve((c_hi - c_lo) * probs.rows);
    y.reserve(s.capacity());
    for (std::size_t m = 0; m < probs.rows; ++m)
      for (std::size_t c = c_lo; c < c_hi; ++c) {
        s.push_back(probs(m, c));
        y.push_back(y_tst(m, c) != 0.0 ? 1 : 0);
      }
    return auc_roc(s, y);
  };

  EpisodeScores out;
  const auto seen_end = static_cast<std::size_t>(n_seen);
  if (seen_end > 0) out.seen_auc = pooled(0, seen_end);
  if (seen_end < probs.cols) out.unseen_auc = pooled(seen_end, probs.cols);
  if (out.seen_auc && out.unseen_auc)
    out.hm = harmonic_mean(*out.seen_auc, *out.unseen_auc);
  else if (out.seen_auc)
    out.hm = *out.seen_auc;
  else if (out.unseen_auc)
    out.hm = *out.unseen_auc;
  else
    throw Error(Errc::invalid, "episode has no classes to score");
  return out;
}

void Aggregator::Welford::add(double x) {
  ++n;
  const double d = x - mean;
  mean += d / static_cast<double>(n);
  m2 += d * (x - mean);
}

MetricSummary Aggregator::Welford::summary() const {
  MetricSummary s;
  s.n = n;
  s.mean = mean;
  if (n > 1) {
    const double var = m2 / static_cast<double>(n - 1);
    s.ci95 = 1.96 * std::sqrt(var) / std::sqrt(static_cast<double>(n));
  }
  return s;
}

void Aggregator::add(const EpisodeScores& s) {
  if (s.seen_auc) seen_.add(*s.seen_auc);
  if (s.unseen_auc) unseen_.add(*s.unseen_auc);
  hm_.add(s.hm);
}

AggregateReport Aggregator::report() const {
  if (hm_.n == 0) throw Error(Errc::invalid, "aggregate over empty stream");
  AggregateReport r;
  if (seen_.n > 0) r.seen = seen_.summary();
  if (unseen_.n > 0) r.unseen = unseen_.summary();
  r.hm = hm_.summary();
  return r;
}

nlohmann::json report_to_json(const AggregateReport& r) {
  nlohmann::json j;
  auto put = [&](const char* name, const MetricSummary& m) {
    j[name] = {{"mean", m.mean}, {"ci95", m.ci95}, {"n", m.n}};
  };
  if (r.seen) put("seen", *r.seen);
  if (r.unseen) put("unseen", *r.unseen);
  put("hm", r.hm);
  return j;
}

}  // namespace gfsml
