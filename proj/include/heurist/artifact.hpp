#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace heurist {

struct FileChange {
  std::string path;
  std::int64_t additions = 0;
  std::int64_t deletions = 0;

  bool operator==(const FileChange &) const = default;
};

struct CommitArtifact {
  std::string id;
  std::string message;
  std::string author;
  std::int64_t timestamp = 0;
  std::vector<FileChange> files;
  std::vector<std::string> issue_ids;
  // Fields present in the input record that the schema does not know about.
  nlohmann::json extra = nlohmann::json::object();

  bool operator==(const CommitArtifact &) const = default;
};

struct IssueArtifact {
  std::string id;
  std::string title;
  std::string body;
  std::vector<std::string> labels;
  nlohmann::json extra = nlohmann::json::object();

  bool operator==(const IssueArtifact &) const = default;
};

using IssueMap = std::map<std::string, IssueArtifact>;

struct Dataset {
  std::string name;
  std::vector<CommitArtifact> commits;
  IssueMap issues;
  std::map<std::string, std::string> provenance;

  bool operator==(const Dataset &) const = default;

  // Issues referenced by `commit` that exist in this dataset, in issue_ids
  // order. Dangling references are skipped.
  std::vector<const IssueArtifact *>
  linked_issues(const CommitArtifact &commit) const;
};

enum class DatasetFormat { jsonl };

DatasetFormat parse_dataset_format(std::string_view id);

// Commits in file order. Blank lines are ignored; an empty file yields an
// empty dataset.
Dataset load_commits(const std::filesystem::path &path,
                     DatasetFormat format = DatasetFormat::jsonl);
Dataset parse_commits(std::string_view text, const std::string &source_name);

IssueMap load_issues(const std::filesystem::path &path);
IssueMap parse_issues(std::string_view text, const std::string &source_name);

// Inverse of the loaders; unknown fields are written back verbatim.
std::string serialize_commits(const Dataset &dataset);
std::string serialize_issues(const IssueMap &issues);

enum class LinkPolicy { strict, drop, keep };

LinkPolicy parse_link_policy(std::string_view name);

struct LinkStats {
  std::size_t commits_with_links = 0; // at least one resolved reference
  std::size_t resolved = 0;
  std::size_t dangling = 0;
  double link_fraction = 0.0;
};

// Resolves commit.issue_ids against dataset.issues and records the
// statistics in provenance under "link.*".
Dataset link(Dataset dataset, LinkPolicy policy);
LinkStats link_stats(const Dataset &dataset);

struct ValidationReport {
  std::size_t commits = 0;
  std::size_t empty_messages = 0;
  std::size_t non_ascii_dominant = 0;
  std::size_t zero_file_commits = 0;
  std::size_t dangling_issue_refs = 0;

  double empty_message_fraction() const;
  double non_ascii_fraction() const;
  double zero_file_fraction() const;
};

ValidationReport validate(const Dataset &dataset);

// True when more than half of the non-whitespace code points in `text`
// fall outside ASCII.
bool is_non_ascii_dominant(std::string_view text);

// SHA-256 of the canonical serialization of commits, issues and metadata.
std::string dataset_hash(const Dataset &dataset);

} // namespace heurist
