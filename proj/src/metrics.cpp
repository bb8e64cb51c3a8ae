#include "clml/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <string>

#include "clml/errors.hpp"

namespace clml {

namespace {

double harmonic_mean(double a, double b) { return a + b > 0.0 ? 2.0 * a * b / (a + b) : 0.0; }

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

std::optional<double> average_precision(std::span<const double> scores, std::span<const std::int8_t> truth) {
  if (scores.size() != truth.size()) throw DimensionError("average_precision: length mismatch");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::ranges::stable_sort(order, [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  std::size_t hits = 0;
  double sum = 0.0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (truth[order[rank]] > 0) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(rank + 1);
    }
  }
  if (hits == 0) return std::nullopt;
  return sum / static_cast<double>(hits);
}

MetricsReport report(const Matrix& probs, const LabelMatrix& truth, double threshold) {
  if (probs.rows() != truth.n_samples() || probs.cols() != truth.n_classes()) {
    throw DimensionError("report: probabilities and labels differ in shape");
  }
  for (double p : probs.data())
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidInputError("report: probability outside [0,1]");

  const std::size_t n = truth.n_samples();
  const std::size_t c = truth.n_classes();
  MetricsReport r;
  r.per_class_ap.resize(c);

  std::size_t tp_all = 0;
  std::size_t pred_all = 0;
  std::size_t pos_all = 0;
  double ap_sum = 0.0;
  double p_sum = 0.0;
  double r_sum = 0.0;
  std::size_t evaluated = 0;

  std::vector<double> scores(n);
  std::vector<std::int8_t> column(n);
  for (std::size_t j = 0; j < c; ++j) {
    std::size_t tp = 0;
    std::size_t predicted = 0;
    std::size_t positives = 0;
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = probs(i, j);
      column[i] = static_cast<std::int8_t>(truth(i, j));
      const bool pred = probs(i, j) >= threshold;
      const bool pos = truth.positive(i, j);
      predicted += pred;
      positives += pos;
      tp += pred && pos;
    }
    tp_all += tp;
    pred_all += predicted;
    pos_all += positives;

    r.per_class_ap[j] = average_precision(scores, column);
    if (positives == 0) continue;
    ++evaluated;
    ap_sum += *r.per_class_ap[j];
    p_sum += ratio(tp, predicted);
    r_sum += ratio(tp, positives);
  }

  if (evaluated > 0) {
    const double k = static_cast<double>(evaluated);
    r.map = ap_sum / k;
    r.cp = p_sum / k;
    r.cr = r_sum / k;
  }
  r.cf1 = harmonic_mean(r.cp, r.cr);
  r.op = ratio(tp_all, pred_all);
  r.or_ = ratio(tp_all, pos_all);
  r.of1 = harmonic_mean(r.op, r.or_);
  return r;
}

std::string format_report(const MetricsReport& r) {
  std::string out;
  const std::pair<const char*, double> fields[] = {{"map", r.map}, {"cp", r.cp},   {"cr", r.cr},
                                                   {"cf1", r.cf1}, {"op", r.op},   {"or", r.or_},
                                                   {"of1", r.of1}};
  char buf[64];
  for (const auto& [name, value] : fields) {
    std::snprintf(buf, sizeof buf, "%s %.4f\n", name, value);
    out += buf;
  }
  return out;
}

}  // namespace clml
