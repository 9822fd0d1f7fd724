#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "heurist/artifact.hpp"
#include "heurist/heuristic.hpp"
#include "heurist/label_matrix.hpp"
#include "heurist/label_model.hpp"

namespace heurist {

// Gold labels by artifact id; values are Vote::positive or Vote::negative.
using GoldLabels = std::map<std::string, Vote, std::less<>>;

GoldLabels parse_gold(std::string_view text, const std::string &source);
GoldLabels load_gold(const std::filesystem::path &path);
std::string gold_to_jsonl(const GoldLabels &gold);

// Gold values in matrix row order; throws when a row id has no gold label.
std::vector<Vote> align_gold(std::span<const std::string> row_ids,
                             const GoldLabels &gold);

struct HeuristicDiagnostics {
  std::string name;
  double coverage = 0.0;
  double overlap = 0.0;
  double conflict = 0.0;
  std::size_t positives = 0;
  std::size_t negatives = 0;
  std::optional<double> empirical_accuracy; // only with gold and >=1 vote

  bool operator==(const HeuristicDiagnostics &) const = default;
};

std::vector<HeuristicDiagnostics> diagnostics(const LabelMatrix &matrix,
                                              const GoldLabels *gold = nullptr,
                                              bool parallel = true);

struct Confusion {
  std::size_t tp = 0; // predicted +, gold +
  std::size_t fp = 0; // predicted +, gold -
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const noexcept { return tp + fp + tn + fn; }
  bool operator==(const Confusion &) const = default;
};

struct EvalReport {
  std::size_t n = 0;
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  double precision_positive = 0.0;
  double recall_positive = 0.0;
  double f1_positive = 0.0;
  double precision_negative = 0.0;
  double recall_negative = 0.0;
  double f1_negative = 0.0;
  double abstain_rate = 0.0;
  Confusion confusion;
};

// Precision/recall/F1 with the zero-denominator convention: a ratio whose
// denominator is empty is 1.0 when the class is absent from both predictions
// and gold, else 0.0.
EvalReport report_from_confusion(const Confusion &c, std::size_t abstained);

// Threshold 0.5; abstained rows and exact ties take the fallback class.
Vote hard_label(const ProbLabel &label, Vote fallback);

EvalReport evaluate(std::span<const ProbLabel> predicted, const GoldLabels &gold,
                    Vote fallback);
// Hard predictions; Vote::abstain takes the fallback class.
EvalReport evaluate(std::span<const std::string> ids,
                    std::span<const Vote> predicted, const GoldLabels &gold,
                    Vote fallback);

nlohmann::json to_json(const EvalReport &r);
nlohmann::json to_json(const HeuristicDiagnostics &d);

enum class Baseline { gitcproc, tufano };

Baseline parse_baseline(std::string_view name);
std::string to_string(Baseline b);

// Keyword heuristic backed by `<baselines_dir>/<name>.txt`.
HeuristicSpec baseline_heuristic(Baseline which,
                                 const std::filesystem::path &baselines_dir);

// Keyword hit -> positive, otherwise negative. Never abstains.
std::vector<Vote> baseline_classify(Baseline which, const Dataset &dataset,
                                    const std::filesystem::path &baselines_dir);

// -- pull-request report -----------------------------------------------------

struct TestSet {
  std::string name;
  LabelMatrix matrix;
  GoldLabels gold;
};

struct TestSetResult {
  std::string name;
  std::optional<EvalReport> base;
  EvalReport head;
};

struct Contribution {
  std::string heuristic;
  std::vector<double> accuracy_delta; // one per test set, full minus without
};

// Memoizes fits by matrix content and config.
class FitCache {
public:
  const FitResult &fit(const LabelMatrix &matrix, const FitConfig &config);
  std::size_t hits() const noexcept { return hits_; }
  std::size_t size() const noexcept { return fits_.size(); }

private:
  std::map<std::string, FitResult> fits_;
  std::size_t hits_ = 0;
};

// Evaluates a model trained on `train` against a test set. A train matrix
// with no votes yields an all-fallback labeling instead of an error.
EvalReport evaluate_model(const LabelMatrix &train, const TestSet &test,
                          const FitConfig &config, Vote fallback,
                          FitCache &cache);

// Accuracy change on each test set attributable to each listed heuristic:
// model with all columns minus model refit without that column.
std::vector<Contribution> leave_one_out(const LabelMatrix &train,
                                        std::span<const TestSet> tests,
                                        std::span<const std::string> heuristics,
                                        const FitConfig &config, Vote fallback,
                                        FitCache &cache);

struct ReportInputs {
  std::string title;
  std::vector<HeuristicDiagnostics> diagnostics;
  std::vector<TestSetResult> test_sets;
  std::vector<std::string> new_heuristics;
  std::vector<Contribution> contributions;
};

// Signed, three decimals; values that round to zero print as "0.000".
std::string format_delta(double delta);

std::string render_report(const ReportInputs &inputs);
nlohmann::json report_to_json(const ReportInputs &inputs);

} // namespace heurist
