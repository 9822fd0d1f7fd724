#pragma once

// File-to-file pipeline stages behind the CLI. Each mutating stage writes
// its outputs plus a `.manifest.json` sidecar and refuses stale inputs.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "heurist/analysis.hpp"
#include "heurist/artifact.hpp"
#include "heurist/label_model.hpp"
#include "heurist/task.hpp"

namespace heurist::pipeline {

namespace fs = std::filesystem;

struct Context {
  std::uint64_t seed = 0;
  bool quiet = false;
  std::ostream *log = nullptr; // progress messages; nullptr = silent
};

struct DatasetInput {
  fs::path commits;
  std::optional<fs::path> issues;
  LinkPolicy link_policy = LinkPolicy::keep;
};

Dataset load_dataset(const DatasetInput &in);

struct TaskInput {
  fs::path heuristics_dir;
  std::optional<std::string> task; // default task when unset
};

TaskView load_task_view(const TaskInput &in);

struct ApplyArgs {
  DatasetInput data;
  TaskInput task;
  fs::path out;
};

struct ApplyOutcome {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t plugin_errors = 0;
};

ApplyOutcome run_apply(const ApplyArgs &args, const Context &ctx);

struct TrainArgs {
  fs::path matrix;
  fs::path out;
  FitConfig config;
  // A task's frozen class balance applies unless config already sets one.
  std::optional<TaskInput> task;
};

FitResult run_train(const TrainArgs &args, const Context &ctx);

struct LabelArgs {
  fs::path matrix;
  fs::path model;
  fs::path out;
};

std::vector<ProbLabel> run_label(const LabelArgs &args, const Context &ctx);

struct EvalArgs {
  fs::path gold;
  std::optional<fs::path> labels;     // model labels, or
  std::optional<Baseline> baseline;   // a keyword baseline over `commits`
  std::optional<fs::path> commits;
  fs::path baselines_dir = "data/baselines";
  Vote fallback = Vote::negative;
  std::optional<fs::path> out;        // JSON report
};

EvalReport run_eval(const EvalArgs &args, const Context &ctx);

struct DiagnosticsArgs {
  fs::path matrix;
  std::optional<fs::path> gold;
  std::optional<fs::path> out;
};

std::vector<HeuristicDiagnostics> run_diagnostics(const DiagnosticsArgs &args,
                                                  const Context &ctx);

struct TestSetInput {
  std::string name;
  fs::path commits;
  fs::path gold;
  std::optional<fs::path> issues;
};

// Parses `name=commits.jsonl,gold.jsonl[,issues.jsonl]`.
TestSetInput parse_test_set(const std::string &spec);

struct ReportArgs {
  fs::path head_dir;
  std::optional<fs::path> base_dir;
  std::optional<std::string> task;
  DatasetInput train;
  std::vector<TestSetInput> tests;
  FitConfig config;
  fs::path out;                    // markdown; JSON twin at <out>.json
};

ReportInputs run_report(const ReportArgs &args, const Context &ctx);

struct ExportArgs {
  TaskInput task;
  fs::path labels;
  fs::path commits;
  ExportOptions options;
  fs::path out;
};

ExportSummary run_export(const ExportArgs &args, const Context &ctx);

struct ValidateArgs {
  DatasetInput data;
  std::optional<fs::path> out;
};

ValidationReport run_validate(const ValidateArgs &args, const Context &ctx);

} // namespace heurist::pipeline
