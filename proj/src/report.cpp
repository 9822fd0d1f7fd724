#include <algorithm>
#include <cmath>
#include <cstdio>

#include "heurist/analysis.hpp"
#include "heurist/error.hpp"

namespace heurist {

const FitResult &FitCache::fit(const LabelMatrix &matrix, const FitConfig &config) {
  std::string key = matrix_hash(matrix);
  char buf[96];
  std::snprintf(buf, sizeof buf, "|%.17g|%d|%.17g", config.tolerance,
                config.max_iterations, config.class_balance.value_or(-1.0));
  key += buf;
  if (auto it = fits_.find(key); it != fits_.end()) {
    ++hits_;
    return it->second;
  }
  return fits_.emplace(key, heurist::fit(matrix, config)).first->second;
}

EvalReport evaluate_model(const LabelMatrix &train, const TestSet &test,
                          const FitConfig &config, Vote fallback,
                          FitCache &cache) {
  const auto test_matrix = test.matrix.select_columns(train.column_names());
  std::vector<ProbLabel> labels;
  try {
    const auto &fitted = cache.fit(train, config);
    labels = predict(fitted.params, test_matrix);
  } catch (const UnfitModelError &) {
    for (const auto &id : test_matrix.row_ids()) {
      labels.push_back({id, 0.5, true});
    }
  }
  return evaluate(labels, test.gold, fallback);
}

std::vector<Contribution> leave_one_out(const LabelMatrix &train,
                                        std::span<const TestSet> tests,
                                        std::span<const std::string> heuristics,
                                        const FitConfig &config, Vote fallback,
                                        FitCache &cache) {
  std::vector<double> full;
  for (const auto &t : tests) {
    full.push_back(evaluate_model(train, t, config, fallback, cache).accuracy);
  }
  std::vector<Contribution> out;
  for (const auto &h : heuristics) {
    train.column_index(h); // throws on unknown names
    std::vector<std::string> keep;
    for (const auto &name : train.column_names()) {
      if (name != h) {
        keep.push_back(name);
      }
    }
    Contribution c{h, {}};
    if (keep.empty()) {
      // Without any heuristic every row falls back.
      for (std::size_t k = 0; k < tests.size(); ++k) {
        std::vector<ProbLabel> labels;
        for (const auto &id : tests[k].matrix.row_ids()) {
          labels.push_back({id, 0.5, true});
        }
        c.accuracy_delta.push_back(full[k] -
                                   evaluate(labels, tests[k].gold, fallback).accuracy);
      }
    } else {
      const auto reduced = train.select_columns(keep);
      for (std::size_t k = 0; k < tests.size(); ++k) {
        c.accuracy_delta.push_back(
            full[k] - evaluate_model(reduced, tests[k], config, fallback, cache).accuracy);
      }
    }
    out.push_back(std::move(c));
  }
  return out;
}

namespace {

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

struct MetricRow {
  const char *name;
  double EvalReport::*field;
};

constexpr MetricRow kMetrics[] = {
    {"accuracy", &EvalReport::accuracy},
    {"macro_f1", &EvalReport::macro_f1},
    {"precision_positive", &EvalReport::precision_positive},
    {"recall_positive", &EvalReport::recall_positive},
    {"precision_negative", &EvalReport::precision_negative},
    {"recall_negative", &EvalReport::recall_negative},
    {"abstain_rate", &EvalReport::abstain_rate},
};

} // namespace

std::string format_delta(double delta) {
  const double rounded = std::round(delta * 1000.0) / 1000.0;
  if (rounded == 0.0) {
    return "0.000";
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%+.3f", rounded);
  return buf;
}

std::string render_report(const ReportInputs &in) {
  std::string out = "## Label model report";
  if (!in.title.empty()) {
    out += ": " + in.title;
  }
  out += "\n\n";

  for (const auto &ts : in.test_sets) {
    out += "### Test set `" + ts.name + "` (n=" + std::to_string(ts.head.n) + ")\n\n";
    out += "| Metric | Base | Head | Delta |\n|---|---:|---:|---:|\n";
    for (const auto &m : kMetrics) {
      const double head = ts.head.*m.field;
      out += "| ";
      out += m.name;
      out += " | ";
      out += ts.base ? fixed3((*ts.base).*m.field) : "n/a";
      out += " | " + fixed3(head) + " | ";
      out += ts.base ? format_delta(head - (*ts.base).*m.field) : "n/a";
      out += " |\n";
    }
    out += "\n";
  }

  out += "### Heuristics\n\n";
  out += "| Heuristic | Coverage | Overlap | Conflict | +1 | -1 | Accuracy |\n";
  out += "|---|---:|---:|---:|---:|---:|---:|\n";
  for (const auto &d : in.diagnostics) {
    bool is_new = std::find(in.new_heuristics.begin(), in.new_heuristics.end(),
                            d.name) != in.new_heuristics.end();
    out += "| " + d.name + (is_new ? " (new)" : "") + " | " + fixed3(d.coverage) +
           " | " + fixed3(d.overlap) + " | " + fixed3(d.conflict) + " | " +
           std::to_string(d.positives) + " | " + std::to_string(d.negatives) +
           " | " + (d.empirical_accuracy ? fixed3(*d.empirical_accuracy) : "n/a") +
           " |\n";
  }
  out += "\n";

  if (!in.contributions.empty()) {
    out += "### Individual contribution to accuracy (leave-one-out)\n\n";
    out += "| Heuristic |";
    std::string rule = "|---|";
    for (const auto &ts : in.test_sets) {
      out += " " + ts.name + " |";
      rule += "---:|";
    }
    out += "\n" + rule + "\n";
    for (const auto &c : in.contributions) {
      out += "| " + c.heuristic + " |";
      for (double d : c.accuracy_delta) {
        out += " " + format_delta(d) + " |";
      }
      out += "\n";
    }
    out += "\n";
  }
  return out;
}

nlohmann::json report_to_json(const ReportInputs &in) {
  nlohmann::json sets = nlohmann::json::array();
  for (const auto &ts : in.test_sets) {
    nlohmann::json delta = nlohmann::json::object();
    if (ts.base) {
      for (const auto &m : kMetrics) {
        delta[m.name] = ts.head.*m.field - (*ts.base).*m.field;
      }
    }
    sets.push_back({{"name", ts.name},
                    {"head", to_json(ts.head)},
                    {"base", ts.base ? to_json(*ts.base) : nlohmann::json(nullptr)},
                    {"delta", ts.base ? delta : nlohmann::json(nullptr)}});
  }
  nlohmann::json heuristics = nlohmann::json::array();
  for (const auto &d : in.diagnostics) {
    heuristics.push_back(to_json(d));
  }
  nlohmann::json contributions = nlohmann::json::array();
  for (const auto &c : in.contributions) {
    nlohmann::json per = nlohmann::json::object();
    for (std::size_t k = 0; k < c.accuracy_delta.size() && k < in.test_sets.size(); ++k) {
      per[in.test_sets[k].name] = c.accuracy_delta[k];
    }
    contributions.push_back({{"heuristic", c.heuristic}, {"accuracy_delta", per}});
  }
  return {{"title", in.title},
          {"test_sets", sets},
          {"heuristics", heuristics},
          {"new_heuristics", in.new_heuristics},
          {"contributions", contributions}};
}

} // namespace heurist
