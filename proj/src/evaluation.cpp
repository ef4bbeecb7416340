#include "autoscore/evaluation.hpp"

#include <cmath>
#include <numeric>

#include "autoscore/error.hpp"

namespace autoscore {

ConfusionMatrix::ConfusionMatrix(Scale scale) : scale_(scale), cells_(scale.size() * scale.size(), 0) {}

ConfusionMatrix ConfusionMatrix::from_counts(Scale scale, const std::vector<std::vector<std::uint64_t>>& counts) {
  ConfusionMatrix cm(scale);
  if (counts.size() != cm.k()) throw Error(ErrorCode::InvalidArgument, "confusion matrix row count mismatch");
  for (std::size_t i = 0; i < cm.k(); ++i) {
    if (counts[i].size() != cm.k()) throw Error(ErrorCode::InvalidArgument, "confusion matrix column count mismatch");
    for (std::size_t j = 0; j < cm.k(); ++j) cm.cells_[i * cm.k() + j] = counts[i][j];
  }
  return cm;
}

void ConfusionMatrix::add(ProficiencyLabel gold, ProficiencyLabel predicted, std::uint64_t n) {
  const auto g = scale_.index_of(gold);
  const auto p = scale_.index_of(predicted);
  if (!g || !p) throw Error(ErrorCode::OffScaleLabel, "label outside the confusion matrix scale");
  cells_[*g * k() + *p] += n;
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t gold) const {
  std::uint64_t s = 0;
  for (std::size_t j = 0; j < k(); ++j) s += count(gold, j);
  return s;
}

std::uint64_t ConfusionMatrix::col_sum(std::size_t predicted) const {
  std::uint64_t s = 0;
  for (std::size_t i = 0; i < k(); ++i) s += count(i, predicted);
  return s;
}

std::uint64_t ConfusionMatrix::total() const { return std::accumulate(cells_.begin(), cells_.end(), std::uint64_t{0}); }

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t s = 0;
  for (std::size_t i = 0; i < k(); ++i) s += count(i, i);
  return s;
}

double accuracy(const ConfusionMatrix& cm) {
  const auto total = cm.total();
  if (total == 0) throw Error(ErrorCode::EmptyMatrix, "accuracy of an empty confusion matrix");
  return static_cast<double>(cm.trace()) / static_cast<double>(total);
}

std::optional<double> per_category_accuracy(const ConfusionMatrix& cm, ProficiencyLabel label) {
  const auto i = cm.scale().index_of(label);
  if (!i) return std::nullopt;
  const auto row = cm.row_sum(*i);
  if (row == 0) return std::nullopt;
  return static_cast<double>(cm.count(*i, *i)) / static_cast<double>(row);
}

PrfResult prf(const ConfusionMatrix& cm) {
  const auto total = cm.total();
  if (total == 0) throw Error(ErrorCode::EmptyMatrix, "precision/recall of an empty confusion matrix");
  PrfResult out;
  const auto labels = cm.scale().labels();
  for (std::size_t c = 0; c < cm.k(); ++c) {
    ClassMetrics m;
    m.label = labels[c];
    m.support = cm.row_sum(c);
    const auto tp = static_cast<double>(cm.count(c, c));
    const auto predicted = cm.col_sum(c);
    if (predicted == 0) {
      ++out.zero_denominator_substitutions;
    } else {
      m.precision = tp / static_cast<double>(predicted);
    }
    if (m.support == 0) {
      ++out.zero_denominator_substitutions;
    } else {
      m.recall = tp / static_cast<double>(m.support);
    }
    if (m.precision + m.recall > 0.0) {
      m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    } else {
      ++out.zero_denominator_substitutions;
    }
    out.classes.push_back(m);
  }
  const auto k = static_cast<double>(cm.k());
  for (const auto& m : out.classes) {
    const double w = static_cast<double>(m.support) / static_cast<double>(total);
    out.macro_precision += m.precision / k;
    out.macro_recall += m.recall / k;
    out.macro_f1 += m.f1 / k;
    out.weighted_precision += w * m.precision;
    out.weighted_recall += w * m.recall;
    out.weighted_f1 += w * m.f1;
  }
  return out;
}

double qwk(const ConfusionMatrix& cm) {
  const auto total = static_cast<double>(cm.total());
  if (total == 0.0) throw Error(ErrorCode::EmptyMatrix, "kappa of an empty confusion matrix");
  const auto k = cm.k();
  const double scale = static_cast<double>((k - 1) * (k - 1));
  std::vector<double> rows(k), cols(k);
  for (std::size_t i = 0; i < k; ++i) {
    rows[i] = static_cast<double>(cm.row_sum(i)) / total;
    cols[i] = static_cast<double>(cm.col_sum(i)) / total;
  }
  double observed = 0.0;
  double expected = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const double d = static_cast<double>(i) - static_cast<double>(j);
      const double w = d * d / scale;
      observed += w * static_cast<double>(cm.count(i, j)) / total;
      expected += w * rows[i] * cols[j];
    }
  }
  if (expected == 0.0) return 0.0;
  return 1.0 - observed / expected;
}

Aggregate aggregate(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::InvalidArgument, "aggregate of no values");
  const auto n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / n)};
}

Aggregate aggregate(const std::map<std::string, double>& per_task) {
  std::vector<double> values;
  values.reserve(per_task.size());
  for (const auto& [_, v] : per_task) values.push_back(v);
  return aggregate(values);
}

Delta delta(double a, double b) {
  if (b == 0.0) throw Error(ErrorCode::DivideByZero, "relative change against a zero baseline");
  return {(a - b) * 100.0, (a - b) / b * 100.0};
}

MetricsReport evaluate(const std::string& task_id, const ConfusionMatrix& cm, std::size_t sampled,
                       std::size_t failed) {
  MetricsReport r;
  r.task_id = task_id;
  r.scale = cm.scale();
  r.sampled = sampled;
  r.failed = failed;
  r.scored = static_cast<std::size_t>(cm.total());
  r.qwk_reported_na = cm.scale().kind() == ScaleKind::Binomial;
  for (auto label : kAllLabels) {
    r.category_accuracy[static_cast<std::size_t>(label_rank(label))] = per_category_accuracy(cm, label);
  }
  if (cm.total() > 0) {
    r.accuracy = accuracy(cm);
    r.prf = prf(cm);
    r.qwk = qwk(cm);
  }
  return r;
}

}  // namespace autoscore
