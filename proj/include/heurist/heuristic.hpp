#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "heurist/artifact.hpp"
#include "heurist/label_matrix.hpp"

namespace heurist {

enum class ArtifactKind { commit, issue };
enum class Polarity { positive, negative };
enum class HeuristicKind { keyword, threshold, plugin };
enum class MatchField { message, issue_title, issue_body, issue_labels };
enum class MatchMode { token, substring };
enum class NumericField {
  file_count,
  additions,
  deletions,
  churn,
  issue_count,
  message_length,
  title_length,
  body_length,
  label_count,
};
enum class Comparator { gt, ge, lt, le, eq, ne };

constexpr Vote polarity_vote(Polarity p) noexcept {
  return p == Polarity::positive ? Vote::positive : Vote::negative;
}

// What a heuristic sees: either a commit (with its dataset for link
// resolution) or a standalone issue.
struct ArtifactRef {
  const CommitArtifact *commit = nullptr;
  const IssueArtifact *issue = nullptr;
  const Dataset *dataset = nullptr;

  std::vector<const IssueArtifact *> linked_issues() const;
};

using PluginFn = std::function<Vote(const ArtifactRef &)>;

struct KeywordParams {
  std::vector<std::string> keywords; // lowercased
  MatchField field = MatchField::message;
  MatchMode mode = MatchMode::token;
  // Token mode: each keyword tokenized. A multi-word keyword fires only when
  // all of its tokens occur.
  std::vector<std::vector<std::string>> terms;
};

KeywordParams make_keyword_params(std::vector<std::string> keywords,
                                  MatchField field = MatchField::message,
                                  MatchMode mode = MatchMode::token);

struct ThresholdParams {
  NumericField field = NumericField::file_count;
  Comparator op = Comparator::gt;
  double bound = 0.0;
};

struct PluginParams {
  std::string function;
  PluginFn fn;
};

struct HeuristicSpec {
  std::string name;
  ArtifactKind artifact_kind = ArtifactKind::commit;
  Polarity polarity = Polarity::positive;
  HeuristicKind kind = HeuristicKind::keyword;
  std::variant<KeywordParams, ThresholdParams, PluginParams> params;
  // Sign remapping applied by a task; negates every emitted vote.
  bool flipped = false;
  std::string source; // file the spec was loaded from, or "<plugin>"

  const KeywordParams &keyword() const { return std::get<KeywordParams>(params); }
  const ThresholdParams &threshold() const {
    return std::get<ThresholdParams>(params);
  }
  const PluginParams &plugin() const { return std::get<PluginParams>(params); }
};

// Ordered, name-unique collection of heuristics.
class Registry {
public:
  void add(HeuristicSpec spec);
  bool contains(std::string_view name) const;
  const HeuristicSpec &get(std::string_view name) const;

  std::span<const HeuristicSpec> specs() const noexcept { return specs_; }
  std::size_t size() const noexcept { return specs_.size(); }
  bool empty() const noexcept { return specs_.empty(); }
  std::vector<std::string> names() const;

  // Stable digest over the canonical form of every spec, in order.
  std::string hash() const;

private:
  std::vector<HeuristicSpec> specs_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

using PluginCatalog = std::map<std::string, PluginFn, std::less<>>;

// Plugins shipped with the library, addressable from spec files via
// `kind: plugin` + `function: <name>`.
const PluginCatalog &builtin_plugins();

std::string to_string(ArtifactKind v);
std::string to_string(Polarity v);
std::string to_string(HeuristicKind v);
std::string to_string(MatchField v);
std::string to_string(MatchMode v);
std::string to_string(NumericField v);
std::string to_string(Comparator v);

// Parses every YAML document in `text`. A document is a single spec mapping
// or a sequence of them. Relative keyword_file paths resolve against
// `base_dir`.
std::vector<HeuristicSpec>
parse_heuristic_specs(std::string_view text, const std::string &source,
                      const std::filesystem::path &base_dir,
                      const PluginCatalog &plugins = builtin_plugins());

// Loads `*.yaml`/`*.yml` files in file-name order, skipping task files
// (`*.task.yaml`). Duplicate names are rejected naming both files.
Registry load_heuristics(const std::filesystem::path &dir,
                         const PluginCatalog &plugins = builtin_plugins());

// Keyword list file: one keyword per line, `#` comments, blanks ignored.
std::vector<std::string> load_keyword_file(const std::filesystem::path &path);

const HeuristicSpec &register_plugin(Registry &registry, std::string name,
                                     ArtifactKind kind, PluginFn fn,
                                     Polarity polarity = Polarity::positive);

// Lowercase ASCII, split on every non-alphanumeric ASCII character, drop
// empty tokens. Bytes >= 0x80 are kept inside tokens.
std::vector<std::string> tokenize(std::string_view text);

Vote apply_keyword(const HeuristicSpec &spec, const ArtifactRef &artifact);
Vote apply_threshold(const HeuristicSpec &spec, const ArtifactRef &artifact);
// Dispatch on kind, then apply `flipped`. Plugin exceptions propagate.
Vote apply_heuristic(const HeuristicSpec &spec, const ArtifactRef &artifact);

double numeric_value(NumericField field, const ArtifactRef &artifact);

struct ApplyResult {
  LabelMatrix matrix;
  // Per column: plugin invocations that threw and were recorded as abstain.
  std::vector<std::size_t> error_counts;

  std::size_t total_errors() const;
};

struct ApplyOptions {
  ArtifactKind target = ArtifactKind::commit;
  bool parallel = true;
};

// Rows follow dataset order (commits in file order, issues by id).
ApplyResult apply_all(const Registry &registry, const Dataset &dataset,
                      const ApplyOptions &options = {});

} // namespace heurist
