#include "autoscore/report.hpp"

#include <algorithm>
#include <optional>

#include "autoscore/common.hpp"

namespace autoscore {

namespace {

using Table = std::vector<std::vector<std::string>>;

std::string na_or(const std::optional<double>& v) { return v ? format_fixed(*v, 4) : "NA"; }

std::string mean_sd(const Aggregate& a) { return format_fixed(a.mean, 4) + " (" + format_fixed(a.sd, 4) + ")"; }

std::string signed_fixed(double v, int decimals) { return (v >= 0.0 ? "+" : "") + format_fixed(v, decimals); }

std::string render(const Table& table) {
  std::vector<std::size_t> widths;
  for (const auto& row : table) {
    widths.resize(std::max(widths.size(), row.size()), 0);
    for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], row[c].size());
  }
  std::string out;
  for (const auto& row : table) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) line += "  ";
      line += row[c];
      if (c + 1 < row.size()) line.append(widths[c] - row[c].size(), ' ');
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line;
    out += '\n';
  }
  return out;
}

const CellResult* find_cell(std::span<const CellResult> cells, const std::string& task, const std::string& strategy,
                            const std::string& policy) {
  for (const auto& c : cells) {
    if (c.task_id == task && c.strategy == strategy && c.policy == policy) return &c;
  }
  return nullptr;
}

std::string scale_title(const Scale& s) { return s.kind() == ScaleKind::Binomial ? "Binomial" : "Trinomial"; }

std::optional<Aggregate> aggregate_of(const std::vector<double>& values) {
  if (values.empty()) return std::nullopt;
  return aggregate(values);
}

std::string failure_note(std::span<const CellResult> cells) {
  std::size_t failed = 0;
  std::size_t sampled = 0;
  for (const auto& c : cells) {
    failed += c.metrics.failed;
    sampled += c.metrics.sampled;
  }
  return "Scoring failures: " + std::to_string(failed) + " of " + std::to_string(sampled) +
         " responses (excluded from metrics)\n";
}

}  // namespace

std::string render_accuracy_table(std::span<const CellResult> cells, const GridLayout& layout,
                                  const std::string& policy) {
  Table table;
  std::vector<std::string> header = {"Item", "Type"};
  header.insert(header.end(), layout.strategies.begin(), layout.strategies.end());
  table.push_back(header);

  std::vector<std::vector<double>> columns(layout.strategies.size());
  std::vector<const CellResult*> policy_cells;
  for (const auto& task : layout.tasks) {
    std::vector<std::string> row = {task, ""};
    for (std::size_t s = 0; s < layout.strategies.size(); ++s) {
      const auto* cell = find_cell(cells, task, layout.strategies[s], policy);
      if (cell == nullptr) {
        row.push_back("-");
        continue;
      }
      policy_cells.push_back(cell);
      row[1] = scale_title(cell->metrics.scale);
      row.push_back(na_or(cell->metrics.accuracy));
      if (cell->metrics.accuracy) columns[s].push_back(*cell->metrics.accuracy);
    }
    table.push_back(row);
  }

  std::vector<std::string> average = {"Average", ""};
  std::vector<std::optional<Aggregate>> column_stats;
  for (const auto& col : columns) {
    column_stats.push_back(aggregate_of(col));
    average.push_back(column_stats.back() ? mean_sd(*column_stats.back()) : "NA");
  }
  table.push_back(average);

  // Zero-/few-shot families: the three CoT variants of each shot setting.
  std::optional<Aggregate> families[2];
  const char* prefixes[2] = {"ZS_", "FS_"};
  std::vector<std::string> family_row = {"Family", ""};
  for (int f = 0; f < 2; ++f) {
    std::vector<double> pooled;
    std::size_t first_column = layout.strategies.size();
    for (std::size_t s = 0; s < layout.strategies.size(); ++s) {
      if (!layout.strategies[s].starts_with(prefixes[f])) continue;
      first_column = std::min(first_column, s);
      pooled.insert(pooled.end(), columns[s].begin(), columns[s].end());
    }
    families[f] = aggregate_of(pooled);
    if (families[f] && first_column < layout.strategies.size()) {
      family_row.resize(std::max(family_row.size(), first_column + 3), "");
      family_row[first_column + 2] = std::string(prefixes[f], 2) + " " + mean_sd(*families[f]);
    }
  }
  if (families[0] || families[1]) table.push_back(family_row);

  std::string out = "Test accuracy by strategy (policy " + policy + ")\n\n" + render(table);

  std::vector<std::string> deltas;
  auto add_delta = [&](const std::string& label, double a, double b) {
    if (b == 0.0) return;
    const auto d = delta(a, b);
    deltas.push_back(label + ": " + signed_fixed(d.points, 2) + " points, " + signed_fixed(d.percent, 2) + "%");
  };
  if (families[0] && families[1]) add_delta("FS vs ZS family", families[1]->mean, families[0]->mean);
  auto column_mean = [&](std::string_view name) -> std::optional<double> {
    for (std::size_t s = 0; s < layout.strategies.size(); ++s) {
      if (layout.strategies[s] == name && column_stats[s]) return column_stats[s]->mean;
    }
    return std::nullopt;
  };
  for (const char* shots : {"ZS", "FS"}) {
    const std::string base = std::string(shots) + "_noCoT";
    for (const char* variant : {"_CoT", "_CoT_CR"}) {
      const std::string other = std::string(shots) + variant;
      const auto a = column_mean(other);
      const auto b = column_mean(base);
      if (a && b) add_delta(other + " vs " + base, *a, *b);
    }
  }
  if (!deltas.empty()) {
    out += "\nDifferences of means (absolute points, relative percent):\n";
    for (const auto& d : deltas) out += "  " + d + "\n";
  }
  out += "\n";
  std::vector<CellResult> owned;
  for (const auto* c : policy_cells) owned.push_back(*c);
  out += failure_note(owned);
  return out;
}

std::string render_category_table(std::span<const CellResult> cells, const GridLayout& layout,
                                  const std::string& policy) {
  Table table;
  std::vector<std::string> header = {"Task", "Parameter"};
  header.insert(header.end(), layout.strategies.begin(), layout.strategies.end());
  table.push_back(header);

  struct RowSpec {
    const char* name;
    std::optional<ProficiencyLabel> label;
  };
  const RowSpec rows[] = {{"Acc Prof", ProficiencyLabel::Proficient},
                          {"Acc Dev", ProficiencyLabel::Developing},
                          {"Acc Beg", ProficiencyLabel::Beginning},
                          {"Kappa", std::nullopt}};
  for (const auto& task : layout.tasks) {
    bool first = true;
    for (const auto& spec : rows) {
      std::vector<std::string> row = {first ? task : "", spec.name};
      first = false;
      for (const auto& strategy : layout.strategies) {
        const auto* cell = find_cell(cells, task, strategy, policy);
        if (cell == nullptr) {
          row.push_back("-");
        } else if (spec.label) {
          row.push_back(na_or(cell->metrics.category_accuracy[static_cast<std::size_t>(label_rank(*spec.label))]));
        } else {
          row.push_back(cell->metrics.qwk_reported_na ? "NA" : na_or(cell->metrics.qwk));
        }
      }
      table.push_back(row);
    }
  }
  return "Category-wise test accuracy (policy " + policy + ")\n\n" + render(table) +
         "\nKappa is quadratic weighted; binomial items show NA (values are in metrics.csv).\n";
}

std::string render_policy_table(std::span<const CellResult> cells, const GridLayout& layout,
                                const std::string& strategy) {
  Table table;
  std::vector<std::string> header = {"Item", "Type"};
  for (const auto& p : layout.policies) header.push_back(strategy + " " + p);
  table.push_back(header);
  std::vector<std::vector<double>> columns(layout.policies.size());
  for (const auto& task : layout.tasks) {
    std::vector<std::string> row = {task, ""};
    for (std::size_t p = 0; p < layout.policies.size(); ++p) {
      const auto* cell = find_cell(cells, task, strategy, layout.policies[p]);
      if (cell == nullptr) {
        row.push_back("-");
        continue;
      }
      row[1] = scale_title(cell->metrics.scale);
      row.push_back(na_or(cell->metrics.accuracy));
      if (cell->metrics.accuracy) columns[p].push_back(*cell->metrics.accuracy);
    }
    table.push_back(row);
  }
  std::vector<std::string> average = {"Average", ""};
  for (const auto& col : columns) {
    const auto a = aggregate_of(col);
    average.push_back(a ? mean_sd(*a) : "NA");
  }
  table.push_back(average);
  return "Test accuracy by model/policy (strategy " + strategy + ")\n\n" + render(table);
}

std::string render_full_metrics(std::span<const CellResult> cells, const GridLayout& layout) {
  Table table;
  table.push_back({"Task", "Method", "Policy", "Accuracy", "Precision", "Recall", "F1", "wPrecision", "wRecall", "wF1",
                   "KappaQW", "Acc_Prof", "Acc_Dev", "Acc_Beg", "Scored", "Failed"});
  int substitutions = 0;
  bool binomial_kappa = false;
  for (const auto& policy : layout.policies) {
    for (const auto& task : layout.tasks) {
      for (const auto& strategy : layout.strategies) {
        const auto* cell = find_cell(cells, task, strategy, policy);
        if (cell == nullptr) continue;
        const auto& m = cell->metrics;
        const auto& p = m.prf;
        auto metric = [&](double PrfResult::*field) { return p ? format_fixed((*p).*field, 4) : "NA"; };
        std::string kappa = na_or(m.qwk);
        if (m.qwk && m.qwk_reported_na) {
          kappa += "*";
          binomial_kappa = true;
        }
        if (p) substitutions += p->zero_denominator_substitutions;
        table.push_back({task, strategy, policy, na_or(m.accuracy), metric(&PrfResult::macro_precision),
                         metric(&PrfResult::macro_recall), metric(&PrfResult::macro_f1),
                         metric(&PrfResult::weighted_precision), metric(&PrfResult::weighted_recall),
                         metric(&PrfResult::weighted_f1), kappa, na_or(m.category_accuracy[2]),
                         na_or(m.category_accuracy[1]), na_or(m.category_accuracy[0]), std::to_string(m.scored),
                         std::to_string(m.failed)});
      }
    }
  }
  std::string out = "Overall metrics (Precision/Recall/F1 macro-averaged; w* gold-count weighted)\n\n" + render(table);
  out += "\n";
  if (binomial_kappa) out += "* kappa on a binomial item; the reference tables report NA there.\n";
  out += "Zero-denominator substitutions (reported as 0): " + std::to_string(substitutions) + "\n";
  out += failure_note(cells);
  return out;
}

std::string metrics_csv(std::span<const CellResult> cells, const GridLayout& layout) {
  std::string out =
      "task,strategy,policy,scale,sampled,scored,failed,accuracy,acc_proficient,acc_developing,acc_beginning,"
      "macro_precision,macro_recall,macro_f1,weighted_precision,weighted_recall,weighted_f1,qwk,qwk_reported_na,"
      "zero_denominator_substitutions\n";
  auto num = [](const std::optional<double>& v) { return v ? format_fixed(*v, 6) : std::string("NA"); };
  for (const auto& policy : layout.policies) {
    for (const auto& task : layout.tasks) {
      for (const auto& strategy : layout.strategies) {
        const auto* cell = find_cell(cells, task, strategy, policy);
        if (cell == nullptr) continue;
        const auto& m = cell->metrics;
        std::vector<std::string> f = {task, strategy, policy, std::string(m.scale.name()), std::to_string(m.sampled),
                                      std::to_string(m.scored), std::to_string(m.failed), num(m.accuracy),
                                      num(m.category_accuracy[2]), num(m.category_accuracy[1]),
                                      num(m.category_accuracy[0])};
        if (m.prf) {
          for (double v : {m.prf->macro_precision, m.prf->macro_recall, m.prf->macro_f1, m.prf->weighted_precision,
                           m.prf->weighted_recall, m.prf->weighted_f1}) {
            f.push_back(format_fixed(v, 6));
          }
        } else {
          f.insert(f.end(), 6, "NA");
        }
        f.push_back(num(m.qwk));
        f.push_back(m.qwk_reported_na ? "true" : "false");
        f.push_back(std::to_string(m.prf ? m.prf->zero_denominator_substitutions : 0));
        for (std::size_t i = 0; i < f.size(); ++i) {
          if (i > 0) out += ',';
          out += f[i];
        }
        out += '\n';
      }
    }
  }
  return out;
}

}  // namespace autoscore
