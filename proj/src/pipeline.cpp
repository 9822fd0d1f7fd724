#include "heurist/pipeline.hpp"

#include <chrono>
#include <ostream>
#include <sstream>

#include "heurist/error.hpp"
#include "heurist/hash.hpp"
#include "heurist/manifest.hpp"

namespace heurist::pipeline {

namespace {

class Stopwatch {
public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
        .count();
  }

private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void say(const Context &ctx, const std::string &msg) {
  if (!ctx.quiet && ctx.log != nullptr) {
    *ctx.log << msg << '\n';
  }
}

void require_file(const fs::path &p, const char *what) {
  if (!fs::is_regular_file(p)) {
    throw ParseError(std::string(what) + " not found: " + p.string());
  }
}

void add_input(std::map<std::string, std::string> &inputs, const fs::path &p) {
  inputs[manifest_key(p)] = file_sha256(p);
}

void check_all_fresh(const std::map<std::string, std::string> &inputs) {
  for (const auto &[path, hash] : inputs) {
    check_fresh(path, inputs);
  }
}

void finish(const fs::path &out, RunManifest m, const Stopwatch &clock) {
  m.outputs[manifest_key(out)] = file_sha256(out);
  m.duration_seconds = clock.seconds();
  write_manifest(out, m);
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(4);
  ss << std::fixed << v;
  return ss.str();
}

nlohmann::json fit_config_json(const FitConfig &c) {
  nlohmann::json j = {{"tolerance", c.tolerance}, {"max_iterations", c.max_iterations}};
  j["class_balance"] =
      c.class_balance ? nlohmann::json(*c.class_balance) : nlohmann::json(nullptr);
  return j;
}

} // namespace

Dataset load_dataset(const DatasetInput &in) {
  require_file(in.commits, "commit dataset");
  auto ds = load_commits(in.commits);
  if (in.issues) {
    require_file(*in.issues, "issue dataset");
    ds.issues = load_issues(*in.issues);
    ds.provenance["issues.source"] = in.issues->string();
  }
  return link(std::move(ds), in.link_policy);
}

TaskView load_task_view(const TaskInput &in) {
  auto registry = load_heuristics(in.heuristics_dir);
  const auto task = in.task ? find_task(in.heuristics_dir, *in.task)
                            : default_task(registry);
  return resolve_task(task, registry);
}

ApplyOutcome run_apply(const ApplyArgs &args, const Context &ctx) {
  Stopwatch clock;
  require_file(args.data.commits, "commit dataset");
  std::map<std::string, std::string> inputs;
  add_input(inputs, args.data.commits);
  if (args.data.issues) {
    require_file(*args.data.issues, "issue dataset");
    add_input(inputs, *args.data.issues);
  }
  check_all_fresh(inputs);

  const auto view = load_task_view(args.task);
  const auto dataset = load_dataset(args.data);
  const auto result = apply_all(view.registry, dataset);
  write_matrix(args.out, result.matrix);
  write_metadata(args.out, {view.registry.hash(), dataset.name, utc_timestamp(),
                            view.task.name, result.matrix.rows(),
                            result.matrix.cols()});

  for (std::size_t j = 0; j < result.error_counts.size(); ++j) {
    if (result.error_counts[j] > 0) {
      say(ctx, "warning: heuristic '" + result.matrix.column_names()[j] + "' raised on " +
                   std::to_string(result.error_counts[j]) + " artifacts (recorded as abstain)");
    }
  }
  say(ctx, "applied " + std::to_string(result.matrix.cols()) + " heuristics to " +
               std::to_string(result.matrix.rows()) + " artifacts (link fraction " +
               dataset.provenance.at("link.fraction") + ")");

  RunManifest m;
  m.command = "apply";
  m.config = {{"task", view.task.name},
              {"heuristics_dir", args.task.heuristics_dir.string()},
              {"link_policy", args.data.link_policy == LinkPolicy::strict ? "strict"
                              : args.data.link_policy == LinkPolicy::drop ? "drop"
                                                                          : "keep"}};
  m.inputs = inputs;
  m.registry_hash = view.registry.hash();
  m.seed = ctx.seed;
  finish(args.out, m, clock);
  return {result.matrix.rows(), result.matrix.cols(), result.total_errors()};
}

FitResult run_train(const TrainArgs &args, const Context &ctx) {
  Stopwatch clock;
  require_file(args.matrix, "label matrix");
  std::map<std::string, std::string> inputs;
  add_input(inputs, args.matrix);
  check_all_fresh(inputs);

  const auto matrix = read_matrix(args.matrix);
  auto config = args.config;
  config.seed = ctx.seed;
  std::string task_name;
  if (args.task && args.task->task) {
    const auto task = find_task(args.task->heuristics_dir, *args.task->task);
    task_name = task.name;
    if (!config.class_balance) {
      config.class_balance = task.class_balance;
    }
  }
  const auto result = fit(matrix, config);
  say(ctx, "fit " + std::to_string(matrix.cols()) + " heuristics on " +
               std::to_string(matrix.rows()) + " rows: " +
               std::to_string(result.iterations) + " iterations, log-likelihood " +
               fmt(result.log_likelihood) +
               ", class balance " + fmt(result.params.class_balance));
  if (!result.converged) {
    say(ctx, "warning: EM did not converge within " +
                 std::to_string(config.max_iterations) + " iterations");
  }
  write_model(args.out, result, config, inputs.begin()->second);

  RunManifest m;
  m.command = "train";
  m.config = fit_config_json(config);
  m.config["task"] = task_name;
  m.inputs = inputs;
  m.seed = ctx.seed;
  finish(args.out, m, clock);
  return result;
}

std::vector<ProbLabel> run_label(const LabelArgs &args, const Context &ctx) {
  Stopwatch clock;
  require_file(args.matrix, "label matrix");
  require_file(args.model, "model");
  std::map<std::string, std::string> inputs;
  add_input(inputs, args.matrix);
  add_input(inputs, args.model);
  check_all_fresh(inputs);

  const auto matrix = read_matrix(args.matrix);
  const auto params = read_model(args.model);
  if (params.heuristics != matrix.column_names()) {
    throw DimensionError("model heuristics do not match the matrix columns of " +
                         args.matrix.string());
  }
  const auto labels = predict(params, matrix);
  write_file(args.out, labels_to_jsonl(labels));
  say(ctx, "labeled " + std::to_string(labels.size()) + " artifacts, abstain rate " +
               fmt(abstain_rate(labels)));

  RunManifest m;
  m.command = "label";
  m.inputs = inputs;
  m.seed = ctx.seed;
  finish(args.out, m, clock);
  return labels;
}

EvalReport run_eval(const EvalArgs &args, const Context &ctx) {
  Stopwatch clock;
  require_file(args.gold, "gold labels");
  std::map<std::string, std::string> inputs;
  add_input(inputs, args.gold);
  EvalReport report;
  nlohmann::json config = {{"fallback", args.fallback == Vote::positive ? "positive"
                                                                        : "negative"}};
  const auto gold = load_gold(args.gold);
  if (args.labels) {
    require_file(*args.labels, "labels");
    add_input(inputs, *args.labels);
    check_all_fresh(inputs);
    const auto labels =
        labels_from_jsonl(read_file(*args.labels), args.labels->string());
    report = evaluate(labels, gold, args.fallback);
  } else if (args.baseline) {
    if (!args.commits) {
      throw ValidationError("baseline evaluation needs a commit dataset");
    }
    require_file(*args.commits, "commit dataset");
    add_input(inputs, *args.commits);
    check_all_fresh(inputs);
    const auto ds = load_commits(*args.commits);
    const auto preds = baseline_classify(*args.baseline, ds, args.baselines_dir);
    std::vector<std::string> ids;
    for (const auto &c : ds.commits) {
      ids.push_back(c.id);
    }
    report = evaluate(ids, preds, gold, args.fallback);
    config["baseline"] = to_string(*args.baseline);
  } else {
    throw ValidationError("eval needs --labels or --baseline");
  }
  say(ctx, "accuracy " + fmt(report.accuracy) + ", macro F1 " + fmt(report.macro_f1));
  if (args.out) {
    write_file(*args.out, to_json(report).dump(2) + "\n");
    RunManifest m;
    m.command = "eval";
    m.config = config;
    m.inputs = inputs;
    m.seed = ctx.seed;
    finish(*args.out, m, clock);
  }
  return report;
}

std::vector<HeuristicDiagnostics> run_diagnostics(const DiagnosticsArgs &args,
                                                  const Context &ctx) {
  Stopwatch clock;
  require_file(args.matrix, "label matrix");
  std::map<std::string, std::string> inputs;
  add_input(inputs, args.matrix);
  std::optional<GoldLabels> gold;
  if (args.gold) {
    require_file(*args.gold, "gold labels");
    add_input(inputs, *args.gold);
  }
  check_all_fresh(inputs);
  if (args.gold) {
    gold = load_gold(*args.gold);
  }
  const auto matrix = read_matrix(args.matrix);
  auto diag = diagnostics(matrix, gold ? &*gold : nullptr);
  if (args.out) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto &d : diag) {
      j.push_back(to_json(d));
    }
    write_file(*args.out, j.dump(2) + "\n");
    RunManifest m;
    m.command = "diagnostics";
    m.inputs = inputs;
    m.seed = ctx.seed;
    finish(*args.out, m, clock);
  }
  return diag;
}

TestSetInput parse_test_set(const std::string &spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ParseError("test set must look like name=commits.jsonl,gold.jsonl[,issues.jsonl]");
  }
  TestSetInput t;
  t.name = spec.substr(0, eq);
  std::vector<std::string> parts;
  std::stringstream rest(spec.substr(eq + 1));
  for (std::string item; std::getline(rest, item, ',');) {
    parts.push_back(item);
  }
  if (parts.size() < 2 || parts.size() > 3) {
    throw ParseError("test set '" + t.name + "' needs commits and gold paths");
  }
  t.commits = parts[0];
  t.gold = parts[1];
  if (parts.size() == 3) {
    t.issues = parts[2];
  }
  return t;
}

namespace {

struct Side {
  TaskView view;
  LabelMatrix train;
  std::vector<TestSet> tests;
};

Side build_side(const fs::path &dir, const std::optional<std::string> &task,
                const Dataset &train, const std::vector<Dataset> &test_data,
                const std::vector<TestSetInput> &tests) {
  auto registry = load_heuristics(dir);
  TaskDefinition def = default_task(registry);
  if (task) {
    bool found = false;
    for (auto &t : load_tasks(dir)) {
      if (t.name == *task) {
        def = t;
        found = true;
      }
    }
    if (!found) {
      throw ValidationError("no task named '" + *task + "' in " + dir.string());
    }
  }
  Side side{resolve_task(def, registry), {}, {}};
  side.train = apply_all(side.view.registry, train).matrix;
  for (std::size_t k = 0; k < tests.size(); ++k) {
    side.tests.push_back({tests[k].name, apply_all(side.view.registry, test_data[k]).matrix,
                          load_gold(tests[k].gold)});
  }
  return side;
}

} // namespace

ReportInputs run_report(const ReportArgs &args, const Context &ctx) {
  Stopwatch clock;
  if (args.tests.empty()) {
    throw ValidationError("report needs at least one --test set");
  }
  std::map<std::string, std::string> inputs;
  add_input(inputs, args.train.commits);
  if (args.train.issues) {
    add_input(inputs, *args.train.issues);
  }
  std::vector<Dataset> test_data;
  for (const auto &t : args.tests) {
    require_file(t.commits, "test commit dataset");
    require_file(t.gold, "test gold labels");
    add_input(inputs, t.commits);
    add_input(inputs, t.gold);
    DatasetInput in{t.commits, t.issues ? t.issues : args.train.issues,
                    args.train.link_policy};
    if (in.issues) {
      add_input(inputs, *in.issues);
    }
    test_data.push_back(load_dataset(in));
  }
  check_all_fresh(inputs);
  const auto train = load_dataset(args.train);

  FitCache cache;
  const auto head = build_side(args.head_dir, args.task, train, test_data, args.tests);
  std::optional<Side> base;
  if (args.base_dir) {
    base = build_side(*args.base_dir, args.task, train, test_data, args.tests);
  }
  const Vote fallback = head.view.task.fallback;
  FitConfig config = args.config;
  if (!config.class_balance && head.view.task.class_balance) {
    config.class_balance = head.view.task.class_balance;
  }

  ReportInputs report;
  report.title = head.view.task.name;
  report.diagnostics = diagnostics(head.train);
  // Accuracy column comes from the first test set, where gold exists.
  const auto scored = diagnostics(head.tests.front().matrix, &head.tests.front().gold);
  for (std::size_t j = 0; j < report.diagnostics.size(); ++j) {
    report.diagnostics[j].empirical_accuracy = scored[j].empirical_accuracy;
  }
  for (std::size_t k = 0; k < args.tests.size(); ++k) {
    TestSetResult r{args.tests[k].name, std::nullopt,
                    evaluate_model(head.train, head.tests[k], config, fallback, cache)};
    if (base) {
      r.base = evaluate_model(base->train, base->tests[k], config, fallback, cache);
    }
    report.test_sets.push_back(std::move(r));
  }
  for (const auto &name : head.view.registry.names()) {
    if (!base || !base->view.registry.contains(name)) {
      report.new_heuristics.push_back(name);
    }
  }
  report.contributions = leave_one_out(head.train, head.tests, report.new_heuristics,
                                       config, fallback, cache);

  write_file(args.out, render_report(report));
  auto json_out = args.out;
  json_out += ".json";
  write_file(json_out, report_to_json(report).dump(2) + "\n");
  say(ctx, "report written to " + args.out.string() + " (" +
               std::to_string(cache.size()) + " fits, " + std::to_string(cache.hits()) +
               " cache hits)");

  RunManifest m;
  m.command = "report";
  m.config = fit_config_json(config);
  m.config["task"] = head.view.task.name;
  m.inputs = inputs;
  m.registry_hash = head.view.registry.hash();
  m.seed = ctx.seed;
  m.outputs[manifest_key(json_out)] = file_sha256(json_out);
  finish(args.out, m, clock);
  return report;
}

ExportSummary run_export(const ExportArgs &args, const Context &ctx) {
  Stopwatch clock;
  require_file(args.labels, "labels");
  require_file(args.commits, "commit dataset");
  std::map<std::string, std::string> inputs;
  add_input(inputs, args.labels);
  add_input(inputs, args.commits);
  check_all_fresh(inputs);

  TaskDefinition task;
  if (args.task.task) {
    task = find_task(args.task.heuristics_dir, *args.task.task);
  } else {
    task.name = "default";
  }
  const auto labels = labels_from_jsonl(read_file(args.labels), args.labels.string());
  const auto ds = load_commits(args.commits);
  std::ostringstream out;
  const auto summary = export_labels(task, labels, ds, args.options, out);
  write_file(args.out, out.str());
  say(ctx, "exported " + std::to_string(summary.written) + " of " +
               std::to_string(summary.rows) + " rows (" + std::to_string(summary.dropped) +
               " dropped, " + std::to_string(summary.fallback) + " fallback)");

  RunManifest m;
  m.command = "export";
  m.config = {{"task", task.name},
              {"mode", args.options.mode == ExportMode::soft   ? "soft"
                       : args.options.mode == ExportMode::hard ? "hard"
                                                               : "model-labeled-only"},
              {"fields", args.options.metadata_fields},
              {"written", summary.written},
              {"dropped", summary.dropped},
              {"fallback", summary.fallback}};
  m.inputs = inputs;
  m.seed = ctx.seed;
  finish(args.out, m, clock);
  return summary;
}

ValidationReport run_validate(const ValidateArgs &args, const Context &ctx) {
  const auto ds = load_dataset(args.data);
  const auto r = validate(ds);
  say(ctx, std::to_string(r.commits) + " commits: " + std::to_string(r.empty_messages) +
               " empty messages, " + std::to_string(r.non_ascii_dominant) +
               " non-ASCII-dominant, " + std::to_string(r.zero_file_commits) +
               " without files, " + std::to_string(r.dangling_issue_refs) +
               " dangling issue references");
  if (args.out) {
    nlohmann::json j = {{"commits", r.commits},
                        {"empty_messages", r.empty_messages},
                        {"empty_message_fraction", r.empty_message_fraction()},
                        {"non_ascii_dominant", r.non_ascii_dominant},
                        {"non_ascii_fraction", r.non_ascii_fraction()},
                        {"zero_file_commits", r.zero_file_commits},
                        {"zero_file_fraction", r.zero_file_fraction()},
                        {"dangling_issue_refs", r.dangling_issue_refs},
                        {"link_fraction", link_stats(ds).link_fraction}};
    write_file(*args.out, j.dump(2) + "\n");
  }
  return r;
}

} // namespace heurist::pipeline
