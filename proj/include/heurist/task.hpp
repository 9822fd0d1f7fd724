#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "heurist/artifact.hpp"
#include "heurist/heuristic.hpp"
#include "heurist/label_model.hpp"

namespace heurist {

// A binary task over a heuristic registry. Empty `include` selects every
// heuristic; `exclude` is applied after it.
struct TaskDefinition {
  std::string name;
  std::string positive_label = "positive";
  std::string negative_label = "negative";
  std::vector<std::string> include;
  std::vector<std::string> exclude;
  std::vector<std::string> polarity_overrides; // heuristics whose sign flips
  Vote fallback = Vote::negative;
  std::optional<double> class_balance;
  std::string source;

  std::string label_name(Vote v) const {
    return v == Vote::positive ? positive_label : negative_label;
  }
};

std::vector<TaskDefinition> parse_tasks(std::string_view text,
                                        const std::string &source);
// Task files are `*.task.yaml` / `*.task.yml` next to the heuristic specs.
std::vector<TaskDefinition> load_tasks(const std::filesystem::path &dir);
TaskDefinition find_task(const std::filesystem::path &dir, std::string_view name);

// Every heuristic, fallback negative.
TaskDefinition default_task(const Registry &registry);

struct TaskView {
  TaskDefinition task;
  Registry registry; // selected heuristics in registry order, overrides applied
};

TaskView resolve_task(const TaskDefinition &task, const Registry &registry);

enum class ExportMode { soft, hard, model_labeled_only };

ExportMode parse_export_mode(std::string_view name);

enum class LabelSource { model, fallback };

struct ExportOptions {
  ExportMode mode = ExportMode::hard;
  // Extra commit attributes to copy: author, timestamp, file_count,
  // issue_ids.
  std::vector<std::string> metadata_fields;
};

struct ExportSummary {
  std::size_t rows = 0;     // input rows
  std::size_t written = 0;
  std::size_t dropped = 0;  // abstained rows skipped in model-labeled-only mode
  std::size_t fallback = 0; // written rows whose hard label came from fallback
};

// Streams one JSON record per exported row. Labels are matched to commits
// by id and must cover the dataset exactly.
ExportSummary export_labels(const TaskDefinition &task,
                            std::span<const ProbLabel> labels,
                            const Dataset &dataset, const ExportOptions &options,
                            std::ostream &out);

} // namespace heurist
