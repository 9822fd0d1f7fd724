#include <algorithm>
#include <array>
#include <string_view>

#include "heurist/heuristic.hpp"

namespace heurist {

namespace {

bool is_test_path(std::string_view path) {
  constexpr std::array<std::string_view, 5> markers = {"test", "tests", "testing",
                                                       "spec", "specs"};
  for (const auto &tok : tokenize(path)) {
    if (tok.starts_with("test") || tok.ends_with("test") ||
        std::find(markers.begin(), markers.end(), tok) != markers.end()) {
      return true;
    }
  }
  return false;
}

// Mirrors the "many files changed means not a bug fix" rule: more than six
// touched files votes negative.
Vote bugless_if_many_files_changed(const ArtifactRef &a) {
  if (a.commit == nullptr) {
    return Vote::abstain;
  }
  return a.commit->files.size() > 6 ? Vote::negative : Vote::abstain;
}

// A fix whose changes are confined to test code.
Vote test_file_fix(const ArtifactRef &a) {
  if (a.commit == nullptr || a.commit->files.empty()) {
    return Vote::abstain;
  }
  const auto &files = a.commit->files;
  bool only_tests = std::all_of(files.begin(), files.end(), [](const FileChange &f) {
    return is_test_path(f.path);
  });
  if (!only_tests) {
    return Vote::abstain;
  }
  for (const auto &tok : tokenize(a.commit->message)) {
    if (tok == "fix" || tok == "fixes" || tok == "fixed" || tok == "fixing") {
      return Vote::positive;
    }
  }
  return Vote::abstain;
}

// Commits whose every linked issue is labelled as a bug.
Vote linked_bug_report(const ArtifactRef &a) {
  auto issues = a.linked_issues();
  if (issues.empty()) {
    return Vote::abstain;
  }
  for (const auto *issue : issues) {
    bool bug = false;
    for (const auto &label : issue->labels) {
      auto toks = tokenize(label);
      bug = bug || std::find(toks.begin(), toks.end(), "bug") != toks.end();
    }
    if (!bug) {
      return Vote::abstain;
    }
  }
  return Vote::positive;
}

} // namespace

const PluginCatalog &builtin_plugins() {
  static const PluginCatalog catalog = {
      {"bugless_if_many_files_changed", bugless_if_many_files_changed},
      {"test_file_fix", test_file_fix},
      {"linked_bug_report", linked_bug_report},
  };
  return catalog;
}

} // namespace heurist
