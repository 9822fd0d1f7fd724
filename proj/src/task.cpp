#include "heurist/task.hpp"

#include <algorithm>
#include <map>
#include <set>

#include <nlohmann/json.hpp>
#include <yaml-cpp/yaml.h>

#include "heurist/analysis.hpp"
#include "heurist/error.hpp"
#include "heurist/hash.hpp"

namespace heurist {

namespace {

std::vector<std::string> string_list(const YAML::Node &node, const char *key,
                                     const std::string &loc) {
  std::vector<std::string> out;
  auto n = node[key];
  if (!n || n.IsNull()) {
    return out;
  }
  if (!n.IsSequence()) {
    throw ParseError(loc + "'" + key + "' must be a list");
  }
  for (const auto &item : n) {
    out.push_back(item.as<std::string>());
  }
  return out;
}

TaskDefinition parse_task(const YAML::Node &doc, const std::string &source) {
  if (!doc.IsMap()) {
    throw ParseError(source + ": task must be a mapping");
  }
  TaskDefinition t;
  t.source = source;
  if (!doc["name"]) {
    throw ParseError(source + ": task missing field 'name'");
  }
  t.name = doc["name"].as<std::string>();
  const auto loc = source + ": task '" + t.name + "': ";
  if (doc["positive_label"]) {
    t.positive_label = doc["positive_label"].as<std::string>();
  }
  if (doc["negative_label"]) {
    t.negative_label = doc["negative_label"].as<std::string>();
  }
  t.include = string_list(doc, "include", loc);
  t.exclude = string_list(doc, "exclude", loc);
  t.polarity_overrides = string_list(doc, "polarity_overrides", loc);
  if (auto fb = doc["fallback_class"]) {
    const auto v = fb.as<std::string>();
    if (v == "positive" || v == t.positive_label) {
      t.fallback = Vote::positive;
    } else if (v == "negative" || v == t.negative_label) {
      t.fallback = Vote::negative;
    } else {
      throw ParseError(loc + "bad fallback_class '" + v + "'");
    }
  }
  if (auto cb = doc["class_balance"]; cb && !cb.IsNull()) {
    const double p = cb.as<double>();
    if (!(p > 0.0 && p < 1.0)) {
      throw ParseError(loc + "class_balance must lie in (0, 1)");
    }
    t.class_balance = p;
  }
  return t;
}

} // namespace

std::vector<TaskDefinition> parse_tasks(std::string_view text,
                                        const std::string &source) {
  std::vector<TaskDefinition> out;
  try {
    for (const auto &doc : YAML::LoadAll(std::string(text))) {
      if (doc.IsNull()) {
        continue;
      }
      if (doc.IsSequence()) {
        for (const auto &item : doc) {
          out.push_back(parse_task(item, source));
        }
      } else {
        out.push_back(parse_task(doc, source));
      }
    }
  } catch (const YAML::Exception &e) {
    throw ParseError(source + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  return out;
}

std::vector<TaskDefinition> load_tasks(const std::filesystem::path &dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw ParseError("heuristics directory not found: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto &entry : std::filesystem::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (entry.is_regular_file() &&
        (name.ends_with(".task.yaml") || name.ends_with(".task.yml"))) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<TaskDefinition> out;
  std::map<std::string, std::string> seen;
  for (const auto &f : files) {
    for (auto &t : parse_tasks(read_file(f), f.string())) {
      if (auto [it, fresh] = seen.emplace(t.name, f.string()); !fresh) {
        throw DuplicateIdError("duplicate task '" + t.name + "' in " + it->second +
                               " and " + f.string());
      }
      out.push_back(std::move(t));
    }
  }
  return out;
}

TaskDefinition find_task(const std::filesystem::path &dir, std::string_view name) {
  for (auto &t : load_tasks(dir)) {
    if (t.name == name) {
      return t;
    }
  }
  throw ValidationError("no task named '" + std::string(name) + "' in " + dir.string());
}

TaskDefinition default_task(const Registry &registry) {
  (void)registry;
  TaskDefinition t;
  t.name = "default";
  return t;
}

TaskView resolve_task(const TaskDefinition &task, const Registry &registry) {
  for (const auto *list : {&task.include, &task.exclude}) {
    for (const auto &name : *list) {
      if (!registry.contains(name)) {
        throw ValidationError("task '" + task.name + "' references unknown heuristic '" +
                              name + "'");
      }
    }
  }
  const std::set<std::string> include(task.include.begin(), task.include.end());
  const std::set<std::string> exclude(task.exclude.begin(), task.exclude.end());
  TaskView view{task, {}};
  for (const auto &spec : registry.specs()) {
    const bool selected =
        (include.empty() || include.contains(spec.name)) && !exclude.contains(spec.name);
    if (selected) {
      view.registry.add(spec);
    }
  }
  if (view.registry.empty()) {
    throw ValidationError("task '" + task.name + "' selects no heuristics");
  }
  // Overrides are applied on a rebuilt registry so the view stays ordered.
  Registry flipped;
  const std::set<std::string> overrides(task.polarity_overrides.begin(),
                                        task.polarity_overrides.end());
  for (const auto &name : overrides) {
    if (!view.registry.contains(name)) {
      throw ValidationError("task '" + task.name + "' overrides heuristic '" + name +
                            "' which it does not select");
    }
  }
  for (auto spec : view.registry.specs()) {
    if (overrides.contains(spec.name)) {
      spec.flipped = !spec.flipped;
    }
    flipped.add(std::move(spec));
  }
  view.registry = std::move(flipped);
  return view;
}

ExportMode parse_export_mode(std::string_view name) {
  if (name == "soft") return ExportMode::soft;
  if (name == "hard") return ExportMode::hard;
  if (name == "model-labeled-only" || name == "model_labeled_only") {
    return ExportMode::model_labeled_only;
  }
  throw ParseError("unknown export mode '" + std::string(name) + "'");
}

ExportSummary export_labels(const TaskDefinition &task,
                            std::span<const ProbLabel> labels,
                            const Dataset &dataset, const ExportOptions &options,
                            std::ostream &out) {
  static const std::set<std::string> kFields = {"author", "timestamp", "file_count",
                                                "issue_ids"};
  for (const auto &f : options.metadata_fields) {
    if (!kFields.contains(f)) {
      throw ValidationError("unknown export metadata field '" + f + "'");
    }
  }
  if (labels.size() != dataset.commits.size()) {
    throw ValidationError("label count " + std::to_string(labels.size()) +
                          " does not match commit count " +
                          std::to_string(dataset.commits.size()));
  }
  std::map<std::string_view, const CommitArtifact *> by_id;
  for (const auto &c : dataset.commits) {
    by_id.emplace(c.id, &c);
  }

  ExportSummary summary;
  summary.rows = labels.size();
  std::set<std::string_view> seen;
  for (const auto &label : labels) {
    auto it = by_id.find(label.artifact_id);
    if (it == by_id.end()) {
      throw ValidationError("label for unknown artifact '" + label.artifact_id + "'");
    }
    if (!seen.insert(label.artifact_id).second) {
      throw ValidationError("artifact '" + label.artifact_id + "' labeled twice");
    }
    if (options.mode == ExportMode::model_labeled_only && label.abstained) {
      ++summary.dropped;
      continue;
    }
    const auto &commit = *it->second;
    const Vote hard = hard_label(label, task.fallback);
    const bool from_fallback = label.abstained || label.p_positive == 0.5;

    nlohmann::json rec = {{"artifact_id", commit.id},
                          {"message", commit.message},
                          {"p_positive", label.p_positive},
                          {"source", from_fallback ? "fallback" : "model"}};
    if (options.mode != ExportMode::soft) {
      rec["label"] = task.label_name(hard);
    }
    for (const auto &f : options.metadata_fields) {
      if (f == "author") rec["author"] = commit.author;
      else if (f == "timestamp") rec["timestamp"] = commit.timestamp;
      else if (f == "file_count") rec["file_count"] = commit.files.size();
      else if (f == "issue_ids") rec["issue_ids"] = commit.issue_ids;
    }
    out << rec.dump() << '\n';
    ++summary.written;
    summary.fallback += from_fallback;
  }
  return summary;
}

} // namespace heurist
