#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "autoscore/domain.hpp"

namespace autoscore {

// Rows are gold labels, columns predictions, both in scale (rank) order.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(Scale scale);
  // counts[gold][pred]; must be k x k for the scale.
  static ConfusionMatrix from_counts(Scale scale, const std::vector<std::vector<std::uint64_t>>& counts);

  // Throws OffScaleLabel when either label is not on the scale.
  void add(ProficiencyLabel gold, ProficiencyLabel predicted, std::uint64_t n = 1);

  const Scale& scale() const noexcept { return scale_; }
  std::size_t k() const noexcept { return scale_.size(); }
  std::uint64_t count(std::size_t gold, std::size_t predicted) const { return cells_.at(gold * k() + predicted); }
  std::uint64_t row_sum(std::size_t gold) const;
  std::uint64_t col_sum(std::size_t predicted) const;
  std::uint64_t total() const;
  std::uint64_t trace() const;

 private:
  Scale scale_;
  std::vector<std::uint64_t> cells_;
};

// trace / total. Throws EmptyMatrix.
double accuracy(const ConfusionMatrix& cm);

// Recall of one gold label; nullopt when the label is off-scale or its row
// is empty.
std::optional<double> per_category_accuracy(const ConfusionMatrix& cm, ProficiencyLabel label);

struct ClassMetrics {
  ProficiencyLabel label = ProficiencyLabel::Beginning;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::uint64_t support = 0;  // gold count
};

struct PrfResult {
  std::vector<ClassMetrics> classes;  // scale order
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  double weighted_precision = 0.0;
  double weighted_recall = 0.0;
  double weighted_f1 = 0.0;
  // Ratios with a zero denominator that were reported as 0.
  int zero_denominator_substitutions = 0;
};

PrfResult prf(const ConfusionMatrix& cm);

// Quadratic weighted kappa, weights (i-j)^2/(k-1)^2. Returns 0 when the
// expected disagreement is 0. Throws EmptyMatrix.
double qwk(const ConfusionMatrix& cm);

struct Aggregate {
  double mean = 0.0;
  double sd = 0.0;  // population (divides by N)
};

Aggregate aggregate(std::span<const double> values);
Aggregate aggregate(const std::map<std::string, double>& per_task);

struct Delta {
  double points = 0.0;   // (a - b) * 100
  double percent = 0.0;  // (a - b) / b * 100
};

// Throws DivideByZero when b == 0.
Delta delta(double a, double b);

struct MetricsReport {
  std::string task_id;
  Scale scale = Scale::trinomial();
  std::size_t sampled = 0;
  std::size_t scored = 0;
  std::size_t failed = 0;
  std::optional<double> accuracy;  // empty when nothing was scored
  // Indexed by label rank; empty for labels off the task scale.
  std::array<std::optional<double>, 3> category_accuracy{};
  std::optional<PrfResult> prf;
  std::optional<double> qwk;
  // The reference tables leave kappa blank on binomial items.
  bool qwk_reported_na = false;
};

MetricsReport evaluate(const std::string& task_id, const ConfusionMatrix& cm, std::size_t sampled,
                       std::size_t failed);

}  // namespace autoscore
