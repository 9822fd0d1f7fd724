#include "heurist/heuristic.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include <nlohmann/json.hpp>
#include <yaml-cpp/yaml.h>

#include "heurist/error.hpp"
#include "heurist/hash.hpp"
#include "heurist/kernels.hpp"

namespace heurist {

namespace {

char lower(char c) {
  return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
}

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), lower);
  return out;
}

bool is_token_char(unsigned char c) { return c >= 0x80 || std::isalnum(c); }

} // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    if (is_token_char(static_cast<unsigned char>(ch))) {
      current.push_back(lower(ch));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) {
    tokens.push_back(std::move(current));
  }
  return tokens;
}

KeywordParams make_keyword_params(std::vector<std::string> keywords,
                                  MatchField field, MatchMode mode) {
  KeywordParams p;
  p.field = field;
  p.mode = mode;
  for (auto &k : keywords) {
    auto lowered = lowercase(k);
    auto terms = tokenize(lowered);
    if (mode == MatchMode::token && terms.empty()) {
      throw ValidationError("keyword '" + k + "' has no alphanumeric tokens");
    }
    p.keywords.push_back(std::move(lowered));
    p.terms.push_back(std::move(terms));
  }
  return p;
}

std::vector<const IssueArtifact *> ArtifactRef::linked_issues() const {
  if (commit != nullptr && dataset != nullptr) {
    return dataset->linked_issues(*commit);
  }
  return {};
}

// -- enum names --------------------------------------------------------------

std::string to_string(ArtifactKind v) {
  return v == ArtifactKind::commit ? "commit" : "issue";
}
std::string to_string(Polarity v) {
  return v == Polarity::positive ? "positive" : "negative";
}
std::string to_string(HeuristicKind v) {
  switch (v) {
  case HeuristicKind::keyword: return "keyword";
  case HeuristicKind::threshold: return "threshold";
  case HeuristicKind::plugin: return "plugin";
  }
  return "?";
}
std::string to_string(MatchField v) {
  switch (v) {
  case MatchField::message: return "message";
  case MatchField::issue_title: return "issue_title";
  case MatchField::issue_body: return "issue_body";
  case MatchField::issue_labels: return "issue_labels";
  }
  return "?";
}
std::string to_string(MatchMode v) {
  return v == MatchMode::token ? "token" : "substring";
}
std::string to_string(NumericField v) {
  switch (v) {
  case NumericField::file_count: return "file_count";
  case NumericField::additions: return "additions";
  case NumericField::deletions: return "deletions";
  case NumericField::churn: return "churn";
  case NumericField::issue_count: return "issue_count";
  case NumericField::message_length: return "message_length";
  case NumericField::title_length: return "title_length";
  case NumericField::body_length: return "body_length";
  case NumericField::label_count: return "label_count";
  }
  return "?";
}
std::string to_string(Comparator v) {
  switch (v) {
  case Comparator::gt: return ">";
  case Comparator::ge: return ">=";
  case Comparator::lt: return "<";
  case Comparator::le: return "<=";
  case Comparator::eq: return "==";
  case Comparator::ne: return "!=";
  }
  return "?";
}

// -- registry ----------------------------------------------------------------

void Registry::add(HeuristicSpec spec) {
  if (spec.name.empty()) {
    throw ValidationError("heuristic name must be non-empty");
  }
  if (auto it = index_.find(spec.name); it != index_.end()) {
    throw DuplicateIdError("duplicate heuristic '" + spec.name + "' in " +
                           specs_[it->second].source + " and " + spec.source);
  }
  index_.emplace(spec.name, specs_.size());
  specs_.push_back(std::move(spec));
}

bool Registry::contains(std::string_view name) const {
  return index_.find(name) != index_.end();
}

const HeuristicSpec &Registry::get(std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end()) {
    throw ValidationError("unknown heuristic '" + std::string(name) + "'");
  }
  return specs_[it->second];
}

std::vector<std::string> Registry::names() const {
  std::vector<std::string> out;
  out.reserve(specs_.size());
  for (const auto &s : specs_) {
    out.push_back(s.name);
  }
  return out;
}

std::string Registry::hash() const {
  nlohmann::json all = nlohmann::json::array();
  for (const auto &s : specs_) {
    nlohmann::json j = {{"name", s.name},
                        {"artifact_kind", to_string(s.artifact_kind)},
                        {"polarity", to_string(s.polarity)},
                        {"kind", to_string(s.kind)},
                        {"flipped", s.flipped}};
    switch (s.kind) {
    case HeuristicKind::keyword:
      j["keywords"] = s.keyword().keywords;
      j["field"] = to_string(s.keyword().field);
      j["mode"] = to_string(s.keyword().mode);
      break;
    case HeuristicKind::threshold:
      j["field"] = to_string(s.threshold().field);
      j["op"] = to_string(s.threshold().op);
      j["bound"] = s.threshold().bound;
      break;
    case HeuristicKind::plugin:
      j["function"] = s.plugin().function;
      break;
    }
    all.push_back(std::move(j));
  }
  return sha256_hex(all.dump());
}

const HeuristicSpec &register_plugin(Registry &registry, std::string name,
                                     ArtifactKind kind, PluginFn fn,
                                     Polarity polarity) {
  if (!fn) {
    throw ValidationError("plugin '" + name + "' has no callable");
  }
  HeuristicSpec spec;
  spec.name = name;
  spec.artifact_kind = kind;
  spec.polarity = polarity;
  spec.kind = HeuristicKind::plugin;
  spec.params = PluginParams{name, std::move(fn)};
  spec.source = "<plugin>";
  registry.add(std::move(spec));
  return registry.get(name);
}

// -- spec parsing ------------------------------------------------------------

namespace {

std::string scalar(const YAML::Node &doc, const char *key,
                   const std::string &loc) {
  auto node = doc[key];
  if (!node) {
    throw ParseError(loc + "missing field '" + key + "'");
  }
  if (!node.IsScalar()) {
    throw ParseError(loc + "field '" + key + "' must be a scalar");
  }
  return node.as<std::string>();
}

std::string scalar_or(const YAML::Node &doc, const char *key,
                      const std::string &fallback, const std::string &loc) {
  return doc[key] ? scalar(doc, key, loc) : fallback;
}

template <typename E>
E pick(const std::string &value, std::initializer_list<std::pair<const char *, E>> options,
       const char *what, const std::string &loc) {
  for (const auto &[name, e] : options) {
    if (value == name) {
      return e;
    }
  }
  throw ParseError(loc + "bad " + what + " '" + value + "'");
}

bool numeric_field_fits(NumericField f, ArtifactKind kind) {
  switch (f) {
  case NumericField::title_length:
  case NumericField::body_length:
  case NumericField::label_count:
    return kind == ArtifactKind::issue;
  default:
    return kind == ArtifactKind::commit;
  }
}

HeuristicSpec parse_one(const YAML::Node &doc, const std::string &source,
                        const std::filesystem::path &base_dir,
                        const PluginCatalog &plugins) {
  if (!doc.IsMap()) {
    throw ParseError(source + ": heuristic spec must be a mapping");
  }
  HeuristicSpec spec;
  spec.source = source;
  std::string loc = source + ": ";
  spec.name = scalar(doc, "name", loc);
  if (spec.name.empty()) {
    throw ParseError(loc + "heuristic name must be non-empty");
  }
  loc = source + ": heuristic '" + spec.name + "': ";
  auto kind_key = doc["artifact_kind"] ? "artifact_kind" : "artifact";
  spec.artifact_kind = pick<ArtifactKind>(
      scalar_or(doc, kind_key, "commit", loc),
      {{"commit", ArtifactKind::commit}, {"issue", ArtifactKind::issue}},
      "artifact kind", loc);
  spec.polarity = pick<Polarity>(
      scalar(doc, "polarity", loc),
      {{"positive", Polarity::positive}, {"negative", Polarity::negative}},
      "polarity", loc);
  spec.kind = pick<HeuristicKind>(scalar(doc, "kind", loc),
                                  {{"keyword", HeuristicKind::keyword},
                                   {"threshold", HeuristicKind::threshold},
                                   {"plugin", HeuristicKind::plugin}},
                                  "kind", loc);
  switch (spec.kind) {
  case HeuristicKind::keyword: {
    std::vector<std::string> keywords;
    if (auto kw = doc["keywords"]) {
      if (!kw.IsSequence()) {
        throw ParseError(loc + "'keywords' must be a list");
      }
      for (const auto &k : kw) {
        keywords.push_back(k.as<std::string>());
      }
    }
    if (doc["keywords_file"]) {
      auto file = base_dir / scalar(doc, "keywords_file", loc);
      auto more = load_keyword_file(file);
      keywords.insert(keywords.end(), more.begin(), more.end());
    }
    if (keywords.empty()) {
      throw ParseError(loc + "keyword heuristic needs a non-empty keyword list");
    }
    auto field = pick<MatchField>(scalar_or(doc, "field", "message", loc),
                                  {{"message", MatchField::message},
                                   {"issue_title", MatchField::issue_title},
                                   {"issue_body", MatchField::issue_body},
                                   {"issue_labels", MatchField::issue_labels}},
                                  "match field", loc);
    if (field == MatchField::message && spec.artifact_kind == ArtifactKind::issue) {
      throw ParseError(loc + "field 'message' does not apply to issues");
    }
    auto mode = pick<MatchMode>(
        scalar_or(doc, "mode", "token", loc),
        {{"token", MatchMode::token}, {"substring", MatchMode::substring}},
        "match mode", loc);
    try {
      spec.params = make_keyword_params(std::move(keywords), field, mode);
    } catch (const ValidationError &e) {
      throw ParseError(loc + e.what());
    }
    break;
  }
  case HeuristicKind::threshold: {
    ThresholdParams p;
    p.field = pick<NumericField>(
        scalar(doc, "field", loc),
        {{"file_count", NumericField::file_count},
         {"additions", NumericField::additions},
         {"deletions", NumericField::deletions},
         {"churn", NumericField::churn},
         {"issue_count", NumericField::issue_count},
         {"message_length", NumericField::message_length},
         {"title_length", NumericField::title_length},
         {"body_length", NumericField::body_length},
         {"label_count", NumericField::label_count}},
        "numeric field", loc);
    if (!numeric_field_fits(p.field, spec.artifact_kind)) {
      throw ParseError(loc + "field '" + to_string(p.field) +
                       "' does not apply to " + to_string(spec.artifact_kind));
    }
    p.op = pick<Comparator>(scalar(doc, "op", loc),
                            {{">", Comparator::gt},
                             {">=", Comparator::ge},
                             {"<", Comparator::lt},
                             {"<=", Comparator::le},
                             {"==", Comparator::eq},
                             {"!=", Comparator::ne}},
                            "comparator", loc);
    try {
      p.bound = doc["bound"].as<double>();
    } catch (const YAML::Exception &) {
      throw ParseError(loc + "threshold needs a numeric 'bound'");
    }
    spec.params = p;
    break;
  }
  case HeuristicKind::plugin: {
    auto fn_name = scalar(doc, "function", loc);
    auto it = plugins.find(fn_name);
    if (it == plugins.end()) {
      throw ParseError(loc + "unknown plugin function '" + fn_name + "'");
    }
    spec.params = PluginParams{fn_name, it->second};
    break;
  }
  }
  return spec;
}

} // namespace

std::vector<std::string> load_keyword_file(const std::filesystem::path &path) {
  auto text = read_file(path);
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string::npos) {
      end = text.size();
    }
    std::string line = text.substr(pos, end - pos);
    if (auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    auto first = line.find_first_not_of(" \t\r");
    if (first != std::string::npos) {
      auto last = line.find_last_not_of(" \t\r");
      out.push_back(line.substr(first, last - first + 1));
    }
    pos = end + 1;
  }
  return out;
}

std::vector<HeuristicSpec>
parse_heuristic_specs(std::string_view text, const std::string &source,
                      const std::filesystem::path &base_dir,
                      const PluginCatalog &plugins) {
  std::vector<YAML::Node> docs;
  try {
    docs = YAML::LoadAll(std::string(text));
  } catch (const YAML::Exception &e) {
    throw ParseError(source + ":" + std::to_string(e.mark.line + 1) + ": " +
                     e.msg);
  }
  std::vector<HeuristicSpec> specs;
  for (const auto &doc : docs) {
    if (doc.IsNull()) {
      continue;
    }
    try {
      if (doc.IsSequence()) {
        for (const auto &item : doc) {
          specs.push_back(parse_one(item, source, base_dir, plugins));
        }
      } else {
        specs.push_back(parse_one(doc, source, base_dir, plugins));
      }
    } catch (const YAML::Exception &e) {
      throw ParseError(source + ":" + std::to_string(e.mark.line + 1) + ": " +
                       e.msg);
    }
  }
  return specs;
}

namespace {

bool is_task_file(const std::filesystem::path &p) {
  auto name = p.filename().string();
  return name.ends_with(".task.yaml") || name.ends_with(".task.yml");
}

} // namespace

Registry load_heuristics(const std::filesystem::path &dir,
                         const PluginCatalog &plugins) {
  if (!std::filesystem::is_directory(dir)) {
    throw ParseError("heuristics directory not found: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto &entry : std::filesystem::directory_iterator(dir)) {
    const auto &p = entry.path();
    auto ext = p.extension().string();
    if (entry.is_regular_file() && (ext == ".yaml" || ext == ".yml") &&
        !is_task_file(p)) {
      files.push_back(p);
    }
  }
  std::sort(files.begin(), files.end(),
            [](const auto &a, const auto &b) { return a.filename() < b.filename(); });
  Registry registry;
  for (const auto &file : files) {
    for (auto &spec : parse_heuristic_specs(read_file(file), file.string(),
                                            file.parent_path(), plugins)) {
      registry.add(std::move(spec));
    }
  }
  return registry;
}

// -- application -------------------------------------------------------------

namespace {

template <typename Fn> void for_each_text(const HeuristicSpec &spec,
                                          const ArtifactRef &a, Fn fn) {
  const auto field = spec.keyword().field;
  if (field == MatchField::message) {
    if (a.commit != nullptr) {
      fn(std::string_view(a.commit->message));
    }
    return;
  }
  auto visit_issue = [&](const IssueArtifact &issue) {
    switch (field) {
    case MatchField::issue_title:
      fn(std::string_view(issue.title));
      break;
    case MatchField::issue_body:
      fn(std::string_view(issue.body));
      break;
    case MatchField::issue_labels:
      for (const auto &l : issue.labels) {
        fn(std::string_view(l));
      }
      break;
    case MatchField::message:
      break;
    }
  };
  if (a.issue != nullptr) {
    visit_issue(*a.issue);
  } else {
    for (const auto *issue : a.linked_issues()) {
      visit_issue(*issue);
    }
  }
}

bool keyword_fires(const KeywordParams &p, std::string_view text) {
  if (p.mode == MatchMode::substring) {
    auto lowered = lowercase(text);
    return std::any_of(p.keywords.begin(), p.keywords.end(),
                       [&](const std::string &k) {
                         return lowered.find(k) != std::string::npos;
                       });
  }
  auto tokens = tokenize(text);
  std::sort(tokens.begin(), tokens.end());
  auto has = [&](const std::string &t) {
    return std::binary_search(tokens.begin(), tokens.end(), t);
  };
  return std::any_of(p.terms.begin(), p.terms.end(),
                     [&](const std::vector<std::string> &term) {
                       return std::all_of(term.begin(), term.end(), has);
                     });
}

} // namespace

Vote apply_keyword(const HeuristicSpec &spec, const ArtifactRef &artifact) {
  bool fired = false;
  for_each_text(spec, artifact, [&](std::string_view text) {
    fired = fired || keyword_fires(spec.keyword(), text);
  });
  return fired ? polarity_vote(spec.polarity) : Vote::abstain;
}

double numeric_value(NumericField field, const ArtifactRef &a) {
  if (a.commit != nullptr) {
    const auto &c = *a.commit;
    std::int64_t adds = 0;
    std::int64_t dels = 0;
    for (const auto &f : c.files) {
      adds += f.additions;
      dels += f.deletions;
    }
    switch (field) {
    case NumericField::file_count:
      return static_cast<double>(c.files.size());
    case NumericField::additions:
      return static_cast<double>(adds);
    case NumericField::deletions:
      return static_cast<double>(dels);
    case NumericField::churn:
      return static_cast<double>(adds + dels);
    case NumericField::issue_count:
      return static_cast<double>(a.linked_issues().size());
    case NumericField::message_length:
      return static_cast<double>(tokenize(c.message).size());
    default:
      break;
    }
  } else if (a.issue != nullptr) {
    const auto &i = *a.issue;
    switch (field) {
    case NumericField::title_length:
      return static_cast<double>(tokenize(i.title).size());
    case NumericField::body_length:
      return static_cast<double>(tokenize(i.body).size());
    case NumericField::label_count:
      return static_cast<double>(i.labels.size());
    default:
      break;
    }
  }
  throw ValidationError("numeric field '" + to_string(field) +
                        "' not available for this artifact");
}

Vote apply_threshold(const HeuristicSpec &spec, const ArtifactRef &artifact) {
  const auto &p = spec.threshold();
  const double x = numeric_value(p.field, artifact);
  bool fired = false;
  switch (p.op) {
  case Comparator::gt: fired = x > p.bound; break;
  case Comparator::ge: fired = x >= p.bound; break;
  case Comparator::lt: fired = x < p.bound; break;
  case Comparator::le: fired = x <= p.bound; break;
  case Comparator::eq: fired = x == p.bound; break;
  case Comparator::ne: fired = x != p.bound; break;
  }
  return fired ? polarity_vote(spec.polarity) : Vote::abstain;
}

Vote apply_heuristic(const HeuristicSpec &spec, const ArtifactRef &artifact) {
  Vote v = Vote::abstain;
  switch (spec.kind) {
  case HeuristicKind::keyword:
    v = apply_keyword(spec, artifact);
    break;
  case HeuristicKind::threshold:
    v = apply_threshold(spec, artifact);
    break;
  case HeuristicKind::plugin:
    v = spec.plugin().fn(artifact);
    break;
  }
  return spec.flipped ? negate(v) : v;
}

std::size_t ApplyResult::total_errors() const {
  std::size_t total = 0;
  for (auto e : error_counts) {
    total += e;
  }
  return total;
}

ApplyResult apply_all(const Registry &registry, const Dataset &dataset,
                      const ApplyOptions &options) {
  for (const auto &spec : registry.specs()) {
    if (spec.artifact_kind != options.target) {
      throw ValidationError("heuristic '" + spec.name + "' targets " +
                            to_string(spec.artifact_kind) +
                            " artifacts but rows are " +
                            to_string(options.target) + "s");
    }
  }
  auto rows = kernels::artifact_rows(dataset, options.target);
  std::vector<std::string> ids;
  ids.reserve(rows.size());
  for (const auto &r : rows) {
    ids.push_back(r.commit != nullptr ? r.commit->id : r.issue->id);
  }
  ApplyResult result{LabelMatrix(std::move(ids), registry.names()),
                     std::vector<std::size_t>(registry.size(), 0)};
  if (options.parallel) {
    kernels::apply_rows_parallel(registry.specs(), rows,
                                 result.matrix.mutable_cells(),
                                 result.error_counts);
  } else {
    kernels::apply_rows_serial(registry.specs(), rows,
                               result.matrix.mutable_cells(),
                               result.error_counts);
  }
  return result;
}

} // namespace heurist
