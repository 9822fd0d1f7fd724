#include "heurist/artifact.hpp"

#include <set>
#include <sstream>

#include "heurist/error.hpp"
#include "heurist/hash.hpp"

namespace heurist {

using nlohmann::json;

namespace {

std::string where(const std::string &source, std::size_t line) {
  return source + ":" + std::to_string(line) + ": ";
}

const json &required(const json &record, const char *field,
                     const std::string &loc) {
  auto it = record.find(field);
  if (it == record.end()) {
    throw ParseError(loc + "missing required field '" + field + "'");
  }
  return *it;
}

std::string as_string(const json &value, const char *field,
                      const std::string &loc) {
  if (!value.is_string()) {
    throw ParseError(loc + "field '" + field + "' must be a string");
  }
  return value.get<std::string>();
}

std::int64_t as_count(const json &value, const char *field,
                      const std::string &loc) {
  if (!value.is_number_integer()) {
    throw ParseError(loc + "field '" + field + "' must be an integer");
  }
  auto n = value.get<std::int64_t>();
  if (n < 0) {
    throw ParseError(loc + "field '" + field + "' must be non-negative");
  }
  return n;
}

std::vector<std::string> as_string_list(const json &value, const char *field,
                                        const std::string &loc) {
  if (!value.is_array()) {
    throw ParseError(loc + "field '" + field + "' must be an array");
  }
  std::vector<std::string> out;
  out.reserve(value.size());
  for (const auto &item : value) {
    out.push_back(as_string(item, field, loc));
  }
  return out;
}

// Calls fn(record, location) for every non-blank line.
template <typename Fn>
void for_each_record(std::string_view text, const std::string &source, Fn fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) {
      end = text.size();
    }
    ++line_no;
    auto line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') {
      line.remove_suffix(1);
    }
    if (line.find_first_not_of(" \t") != std::string_view::npos) {
      auto loc = where(source, line_no);
      json record;
      try {
        record = json::parse(line);
      } catch (const json::parse_error &e) {
        throw ParseError(loc + "malformed record: " + e.what());
      }
      if (!record.is_object()) {
        throw ParseError(loc + "record must be an object");
      }
      fn(record, loc);
    }
    if (end == text.size()) {
      break;
    }
    pos = end + 1;
  }
}

std::string join(const std::set<std::string> &names) {
  std::string out;
  for (const auto &n : names) {
    if (!out.empty()) {
      out += ',';
    }
    out += n;
  }
  return out;
}

const std::set<std::string> kCommitFields = {"id",     "message",  "author",
                                             "timestamp", "files", "issue_ids"};
const std::set<std::string> kIssueFields = {"id", "title", "body", "labels"};

} // namespace

std::vector<const IssueArtifact *>
Dataset::linked_issues(const CommitArtifact &commit) const {
  std::vector<const IssueArtifact *> out;
  for (const auto &id : commit.issue_ids) {
    if (auto it = issues.find(id); it != issues.end()) {
      out.push_back(&it->second);
    }
  }
  return out;
}

DatasetFormat parse_dataset_format(std::string_view id) {
  if (id == "jsonl" || id == "ndjson") {
    return DatasetFormat::jsonl;
  }
  throw ParseError("unknown dataset format '" + std::string(id) + "'");
}

Dataset parse_commits(std::string_view text, const std::string &source_name) {
  Dataset ds;
  ds.name = std::filesystem::path(source_name).stem().string();
  std::set<std::string> seen;
  std::set<std::string> unknown;
  for_each_record(text, source_name, [&](const json &rec, const std::string &loc) {
    CommitArtifact c;
    c.id = as_string(required(rec, "id", loc), "id", loc);
    if (c.id.empty()) {
      throw ParseError(loc + "commit id must be non-empty");
    }
    c.message = as_string(required(rec, "message", loc), "message", loc);
    if (auto it = rec.find("author"); it != rec.end() && !it->is_null()) {
      c.author = as_string(*it, "author", loc);
    }
    if (auto it = rec.find("timestamp"); it != rec.end() && !it->is_null()) {
      if (!it->is_number_integer()) {
        throw ParseError(loc + "field 'timestamp' must be an integer");
      }
      c.timestamp = it->get<std::int64_t>();
    }
    if (auto it = rec.find("files"); it != rec.end() && !it->is_null()) {
      if (!it->is_array()) {
        throw ParseError(loc + "field 'files' must be an array");
      }
      for (const auto &f : *it) {
        if (!f.is_object()) {
          throw ParseError(loc + "file change must be an object");
        }
        FileChange fc;
        fc.path = as_string(required(f, "path", loc), "path", loc);
        if (fc.path.empty()) {
          throw ParseError(loc + "file path must be non-empty");
        }
        if (auto a = f.find("additions"); a != f.end()) {
          fc.additions = as_count(*a, "additions", loc);
        }
        if (auto d = f.find("deletions"); d != f.end()) {
          fc.deletions = as_count(*d, "deletions", loc);
        }
        c.files.push_back(std::move(fc));
      }
    }
    if (auto it = rec.find("issue_ids"); it != rec.end() && !it->is_null()) {
      c.issue_ids = as_string_list(*it, "issue_ids", loc);
    }
    for (const auto &[key, value] : rec.items()) {
      if (!kCommitFields.contains(key)) {
        c.extra[key] = value;
        unknown.insert(key);
      }
    }
    if (!seen.insert(c.id).second) {
      throw DuplicateIdError(loc + "duplicate commit id '" + c.id + "'");
    }
    ds.commits.push_back(std::move(c));
  });
  ds.provenance["commits.source"] = source_name;
  ds.provenance["commits.count"] = std::to_string(ds.commits.size());
  if (!unknown.empty()) {
    ds.provenance["commits.unknown_fields"] = join(unknown);
  }
  return ds;
}

Dataset load_commits(const std::filesystem::path &path, DatasetFormat format) {
  (void)format; // jsonl is the only format
  return parse_commits(read_file(path), path.string());
}

IssueMap parse_issues(std::string_view text, const std::string &source_name) {
  IssueMap issues;
  for_each_record(text, source_name, [&](const json &rec, const std::string &loc) {
    IssueArtifact issue;
    issue.id = as_string(required(rec, "id", loc), "id", loc);
    if (issue.id.empty()) {
      throw ParseError(loc + "issue id must be non-empty");
    }
    if (auto it = rec.find("title"); it != rec.end() && !it->is_null()) {
      issue.title = as_string(*it, "title", loc);
    }
    if (auto it = rec.find("body"); it != rec.end() && !it->is_null()) {
      issue.body = as_string(*it, "body", loc);
    }
    if (auto it = rec.find("labels"); it != rec.end() && !it->is_null()) {
      issue.labels = as_string_list(*it, "labels", loc);
    }
    for (const auto &[key, value] : rec.items()) {
      if (!kIssueFields.contains(key)) {
        issue.extra[key] = value;
      }
    }
    auto id = issue.id;
    if (!issues.emplace(id, std::move(issue)).second) {
      throw DuplicateIdError(loc + "duplicate issue id '" + id + "'");
    }
  });
  return issues;
}

IssueMap load_issues(const std::filesystem::path &path) {
  return parse_issues(read_file(path), path.string());
}

std::string serialize_commits(const Dataset &dataset) {
  std::string out;
  for (const auto &c : dataset.commits) {
    json rec = c.extra;
    rec["id"] = c.id;
    rec["message"] = c.message;
    rec["author"] = c.author;
    rec["timestamp"] = c.timestamp;
    rec["issue_ids"] = c.issue_ids;
    json files = json::array();
    for (const auto &f : c.files) {
      files.push_back({{"path", f.path},
                       {"additions", f.additions},
                       {"deletions", f.deletions}});
    }
    rec["files"] = std::move(files);
    out += rec.dump();
    out += '\n';
  }
  return out;
}

std::string serialize_issues(const IssueMap &issues) {
  std::string out;
  for (const auto &[id, issue] : issues) {
    json rec = issue.extra;
    rec["id"] = issue.id;
    rec["title"] = issue.title;
    rec["body"] = issue.body;
    rec["labels"] = issue.labels;
    out += rec.dump();
    out += '\n';
  }
  return out;
}

LinkPolicy parse_link_policy(std::string_view name) {
  if (name == "strict") return LinkPolicy::strict;
  if (name == "drop") return LinkPolicy::drop;
  if (name == "keep") return LinkPolicy::keep;
  throw ParseError("unknown link policy '" + std::string(name) + "'");
}

LinkStats link_stats(const Dataset &dataset) {
  LinkStats stats;
  for (const auto &c : dataset.commits) {
    bool any = false;
    for (const auto &id : c.issue_ids) {
      if (dataset.issues.contains(id)) {
        ++stats.resolved;
        any = true;
      } else {
        ++stats.dangling;
      }
    }
    stats.commits_with_links += any ? 1 : 0;
  }
  if (!dataset.commits.empty()) {
    stats.link_fraction = static_cast<double>(stats.commits_with_links) /
                          static_cast<double>(dataset.commits.size());
  }
  return stats;
}

Dataset link(Dataset dataset, LinkPolicy policy) {
  auto stats = link_stats(dataset);
  if (policy == LinkPolicy::strict) {
    for (const auto &c : dataset.commits) {
      for (const auto &id : c.issue_ids) {
        if (!dataset.issues.contains(id)) {
          throw ValidationError("commit '" + c.id +
                                "' references unknown issue '" + id + "'");
        }
      }
    }
  } else if (policy == LinkPolicy::drop) {
    for (auto &c : dataset.commits) {
      std::erase_if(c.issue_ids, [&](const std::string &id) {
        return !dataset.issues.contains(id);
      });
    }
  }
  std::ostringstream frac;
  frac.precision(17);
  frac << stats.link_fraction;
  dataset.provenance["link.commits_with_links"] =
      std::to_string(stats.commits_with_links);
  dataset.provenance["link.resolved"] = std::to_string(stats.resolved);
  dataset.provenance["link.dangling"] = std::to_string(stats.dangling);
  dataset.provenance["link.fraction"] = frac.str();
  return dataset;
}

bool is_non_ascii_dominant(std::string_view text) {
  std::size_t ascii = 0;
  std::size_t other = 0;
  for (unsigned char ch : text) {
    if (ch < 0x80) {
      if (ch != ' ' && ch != '\t' && ch != '\n' && ch != '\r') {
        ++ascii;
      }
    } else if ((ch & 0xC0) != 0x80) {
      ++other; // lead byte of a multi-byte code point
    }
  }
  return other > ascii;
}

double ValidationReport::empty_message_fraction() const {
  return commits ? static_cast<double>(empty_messages) / commits : 0.0;
}
double ValidationReport::non_ascii_fraction() const {
  return commits ? static_cast<double>(non_ascii_dominant) / commits : 0.0;
}
double ValidationReport::zero_file_fraction() const {
  return commits ? static_cast<double>(zero_file_commits) / commits : 0.0;
}

ValidationReport validate(const Dataset &dataset) {
  ValidationReport r;
  r.commits = dataset.commits.size();
  for (const auto &c : dataset.commits) {
    if (c.message.find_first_not_of(" \t\r\n") == std::string::npos) {
      ++r.empty_messages;
    } else if (is_non_ascii_dominant(c.message)) {
      ++r.non_ascii_dominant;
    }
    if (c.files.empty()) {
      ++r.zero_file_commits;
    }
  }
  r.dangling_issue_refs = link_stats(dataset).dangling;
  return r;
}

std::string dataset_hash(const Dataset &dataset) {
  std::string canon = dataset.name;
  canon += '\n';
  for (const auto &[k, v] : dataset.provenance) {
    canon += k + '=' + v + '\n';
  }
  canon += serialize_commits(dataset);
  canon += '\n';
  canon += serialize_issues(dataset.issues);
  return sha256_hex(canon);
}

} // namespace heurist
