// Command-line front end: apply, train, label, eval, diagnostics, report,
// export, validate.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "heurist/error.hpp"
#include "heurist/manifest.hpp"
#include "heurist/pipeline.hpp"

namespace pl = heurist::pipeline;

namespace {

struct Common {
  std::string task;
  std::string out;
  std::uint64_t seed = 0;
  bool quiet = false;

  std::optional<std::string> task_opt() const {
    return task.empty() ? std::nullopt : std::optional(task);
  }
};

void add_common(CLI::App *cmd, Common &c, bool needs_out) {
  cmd->add_option("--task", c.task, "Task name (from *.task.yaml)");
  auto *out = cmd->add_option("--out", c.out, "Output file");
  if (needs_out) {
    out->required();
  }
  cmd->add_option("--seed", c.seed, "Seed recorded in the run manifest");
  cmd->add_flag("--quiet", c.quiet, "Suppress progress messages");
}

heurist::Vote parse_fallback(const std::string &s) {
  if (s == "negative") return heurist::Vote::negative;
  if (s == "positive") return heurist::Vote::positive;
  throw heurist::ParseError("fallback must be 'positive' or 'negative'");
}

void print_eval(const heurist::EvalReport &r) {
  std::cout << "n                   " << r.n << '\n'
            << "accuracy            " << r.accuracy << '\n'
            << "macro_f1            " << r.macro_f1 << '\n'
            << "precision_positive  " << r.precision_positive << '\n'
            << "recall_positive     " << r.recall_positive << '\n'
            << "precision_negative  " << r.precision_negative << '\n'
            << "recall_negative     " << r.recall_negative << '\n'
            << "abstain_rate        " << r.abstain_rate << '\n'
            << "confusion tp=" << r.confusion.tp << " fp=" << r.confusion.fp
            << " tn=" << r.confusion.tn << " fn=" << r.confusion.fn << '\n';
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Programmatic labeling of software-repository artifacts"};
  app.set_version_flag("--version", heurist::kToolVersion);
  app.require_subcommand(1);

  std::string heuristics_dir = "data/heuristics";
  std::string baselines_dir = "data/baselines";
  std::string commits, issues, link_policy = "keep";
  std::string matrix, model, labels, gold, fallback = "negative";
  std::string base_dir, mode = "hard", baseline;
  std::vector<std::string> tests, fields;
  double tol = 1e-6;
  int max_iter = 1000;
  std::optional<double> class_balance;
  Common c;

  auto heuristics_opt = [&](CLI::App *cmd) {
    cmd->add_option("--heuristics", heuristics_dir, "Heuristic spec directory")
        ->envname("HEURIST_HEURISTICS_DIR");
  };
  auto dataset_opts = [&](CLI::App *cmd) {
    cmd->add_option("--commits", commits, "Commit dataset (JSONL)")->required();
    cmd->add_option("--issues", issues, "Issue dataset (JSONL)");
    cmd->add_option("--link-policy", link_policy, "strict|drop|keep");
  };

  auto *apply = app.add_subcommand("apply", "Apply heuristics and write a label matrix");
  dataset_opts(apply);
  heuristics_opt(apply);
  add_common(apply, c, true);

  auto *train = app.add_subcommand("train", "Fit the label model on a matrix");
  train->add_option("--matrix", matrix)->required();
  train->add_option("--tol", tol, "Convergence tolerance");
  train->add_option("--max-iter", max_iter, "Maximum EM iterations");
  train->add_option("--class-balance", class_balance, "Freeze P(positive)");
  heuristics_opt(train);
  add_common(train, c, true);

  auto *label = app.add_subcommand("label", "Write probabilistic labels");
  label->add_option("--matrix", matrix)->required();
  label->add_option("--model", model)->required();
  add_common(label, c, true);

  auto *eval = app.add_subcommand("eval", "Score labels or a keyword baseline");
  eval->add_option("--gold", gold)->required();
  eval->add_option("--labels", labels);
  eval->add_option("--baseline", baseline, "gitcproc|tufano");
  eval->add_option("--commits", commits);
  eval->add_option("--baselines", baselines_dir)->envname("HEURIST_BASELINES_DIR");
  eval->add_option("--fallback", fallback, "Class for abstained rows");
  heuristics_opt(eval);
  add_common(eval, c, false);

  auto *diag = app.add_subcommand("diagnostics", "Coverage/overlap/conflict per heuristic");
  diag->add_option("--matrix", matrix)->required();
  diag->add_option("--gold", gold);
  add_common(diag, c, false);

  auto *report = app.add_subcommand("report", "Render the pull-request metrics report");
  report->add_option("--head", heuristics_dir, "Heuristic directory under review")
      ->envname("HEURIST_HEURISTICS_DIR");
  report->add_option("--base", base_dir, "Heuristic directory to compare against");
  report->add_option("--test", tests, "name=commits.jsonl,gold.jsonl[,issues.jsonl]")
      ->required();
  report->add_option("--tol", tol);
  report->add_option("--max-iter", max_iter);
  report->add_option("--class-balance", class_balance);
  dataset_opts(report);
  add_common(report, c, true);

  auto *exp = app.add_subcommand("export", "Export a labeled training dataset");
  exp->add_option("--labels", labels)->required();
  exp->add_option("--commits", commits)->required();
  exp->add_option("--mode", mode, "soft|hard|model-labeled-only");
  exp->add_option("--field", fields, "Extra commit field to include (repeatable)");
  heuristics_opt(exp);
  add_common(exp, c, true);

  auto *val = app.add_subcommand("validate", "Report data-quality issues in a dataset");
  dataset_opts(val);
  add_common(val, c, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return static_cast<int>(heurist::ErrorCategory::parse);
  }

  pl::Context ctx{c.seed, c.quiet, &std::cerr};
  auto dataset_input = [&] {
    pl::DatasetInput in{commits, std::nullopt, heurist::parse_link_policy(link_policy)};
    if (!issues.empty()) {
      in.issues = issues;
    }
    return in;
  };
  auto fit_config = [&] {
    heurist::FitConfig cfg;
    cfg.tolerance = tol;
    cfg.max_iterations = max_iter;
    cfg.class_balance = class_balance;
    cfg.seed = c.seed;
    return cfg;
  };
  auto out_opt = [&]() -> std::optional<std::filesystem::path> {
    if (c.out.empty()) return std::nullopt;
    return c.out;
  };

  try {
    if (*apply) {
      pl::run_apply({dataset_input(), {heuristics_dir, c.task_opt()}, c.out}, ctx);
    } else if (*train) {
      pl::TrainArgs args{matrix, c.out, fit_config(), std::nullopt};
      if (c.task_opt()) {
        args.task = pl::TaskInput{heuristics_dir, c.task_opt()};
      }
      pl::run_train(args, ctx);
    } else if (*label) {
      pl::run_label({matrix, model, c.out}, ctx);
    } else if (*eval) {
      pl::EvalArgs args;
      args.gold = gold;
      if (!labels.empty()) args.labels = labels;
      if (!baseline.empty()) args.baseline = heurist::parse_baseline(baseline);
      if (!commits.empty()) args.commits = commits;
      args.baselines_dir = baselines_dir;
      args.fallback = parse_fallback(fallback);
      if (c.task_opt()) {
        args.fallback = heurist::find_task(heuristics_dir, c.task).fallback;
      }
      args.out = out_opt();
      print_eval(pl::run_eval(args, ctx));
    } else if (*diag) {
      pl::DiagnosticsArgs args{matrix, std::nullopt, out_opt()};
      if (!gold.empty()) args.gold = gold;
      for (const auto &d : pl::run_diagnostics(args, ctx)) {
        std::cout << d.name << "\tcoverage=" << d.coverage << "\toverlap=" << d.overlap
                  << "\tconflict=" << d.conflict << "\t+" << d.positives << "\t-"
                  << d.negatives;
        if (d.empirical_accuracy) std::cout << "\taccuracy=" << *d.empirical_accuracy;
        std::cout << '\n';
      }
    } else if (*report) {
      pl::ReportArgs args;
      args.head_dir = heuristics_dir;
      if (!base_dir.empty()) args.base_dir = base_dir;
      args.task = c.task_opt();
      args.train = dataset_input();
      for (const auto &t : tests) args.tests.push_back(pl::parse_test_set(t));
      args.config = fit_config();
      args.out = c.out;
      pl::run_report(args, ctx);
    } else if (*exp) {
      pl::ExportArgs args{{heuristics_dir, c.task_opt()}, labels, commits,
                          {heurist::parse_export_mode(mode), fields}, c.out};
      pl::run_export(args, ctx);
    } else if (*val) {
      const auto r = pl::run_validate({dataset_input(), out_opt()}, ctx);
      std::cout << "commits               " << r.commits << '\n'
                << "empty_messages        " << r.empty_messages << '\n'
                << "non_ascii_dominant    " << r.non_ascii_dominant << '\n'
                << "zero_file_commits     " << r.zero_file_commits << '\n'
                << "dangling_issue_refs   " << r.dangling_issue_refs << '\n';
    }
  } catch (const heurist::Error &e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception &e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return static_cast<int>(heurist::ErrorCategory::internal);
  }
  return 0;
}
