#include "heurist/analysis.hpp"

#include <algorithm>
#include <set>

#include "heurist/error.hpp"
#include "heurist/hash.hpp"
#include "heurist/kernels.hpp"

namespace heurist {

GoldLabels parse_gold(std::string_view text, const std::string &source) {
  GoldLabels gold;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) {
      end = text.size();
    }
    ++line_no;
    auto line = text.substr(pos, end - pos);
    pos = end + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
      continue;
    }
    const auto loc = source + ":" + std::to_string(line_no) + ": ";
    std::string id;
    std::string label;
    try {
      auto j = nlohmann::json::parse(line);
      id = j.at("artifact_id").get<std::string>();
      label = j.at("label").get<std::string>();
    } catch (const nlohmann::json::exception &e) {
      throw ParseError(loc + e.what());
    }
    Vote v = Vote::abstain;
    if (label == "positive") {
      v = Vote::positive;
    } else if (label == "negative") {
      v = Vote::negative;
    } else {
      throw ParseError(loc + "gold label must be 'positive' or 'negative', got '" +
                       label + "'");
    }
    if (!gold.emplace(id, v).second) {
      throw DuplicateIdError(loc + "duplicate gold id '" + id + "'");
    }
  }
  return gold;
}

GoldLabels load_gold(const std::filesystem::path &path) {
  return parse_gold(read_file(path), path.string());
}

std::string gold_to_jsonl(const GoldLabels &gold) {
  std::string out;
  for (const auto &[id, v] : gold) {
    nlohmann::json rec = {{"artifact_id", id},
                          {"label", v == Vote::positive ? "positive" : "negative"}};
    out += rec.dump();
    out += '\n';
  }
  return out;
}

std::vector<Vote> align_gold(std::span<const std::string> row_ids,
                             const GoldLabels &gold) {
  std::vector<Vote> out;
  out.reserve(row_ids.size());
  for (const auto &id : row_ids) {
    auto it = gold.find(id);
    if (it == gold.end()) {
      throw ValidationError("no gold label for artifact '" + id + "'");
    }
    out.push_back(it->second);
  }
  return out;
}

std::vector<HeuristicDiagnostics> diagnostics(const LabelMatrix &matrix,
                                              const GoldLabels *gold,
                                              bool parallel) {
  std::vector<Vote> aligned;
  if (gold != nullptr) {
    aligned = align_gold(matrix.row_ids(), *gold);
  }
  const auto counts = parallel ? kernels::column_counts_parallel(matrix, aligned)
                               : kernels::column_counts_serial(matrix, aligned);
  const double n = static_cast<double>(matrix.rows());
  std::vector<HeuristicDiagnostics> out(matrix.cols());
  for (std::size_t j = 0; j < matrix.cols(); ++j) {
    const auto &c = counts[j];
    auto &d = out[j];
    d.name = matrix.column_names()[j];
    if (matrix.rows() > 0) {
      d.coverage = static_cast<double>(c.votes) / n;
      d.overlap = static_cast<double>(c.overlaps) / n;
      d.conflict = static_cast<double>(c.conflicts) / n;
    }
    d.positives = c.positives;
    d.negatives = c.negatives;
    if (gold != nullptr && c.votes > 0) {
      d.empirical_accuracy =
          static_cast<double>(c.gold_agree) / static_cast<double>(c.votes);
    }
  }
  return out;
}

namespace {

double ratio_or_convention(std::size_t num, std::size_t den, std::size_t other_den) {
  if (den == 0) {
    return other_den == 0 ? 1.0 : 0.0;
  }
  return static_cast<double>(num) / static_cast<double>(den);
}

double f1(std::size_t tp, std::size_t fp, std::size_t fn) {
  if (tp + fp == 0 && tp + fn == 0) {
    return 1.0;
  }
  const double p = ratio_or_convention(tp, tp + fp, tp + fn);
  const double r = ratio_or_convention(tp, tp + fn, tp + fp);
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

} // namespace

EvalReport report_from_confusion(const Confusion &c, std::size_t abstained) {
  EvalReport r;
  r.confusion = c;
  r.n = c.total();
  if (r.n == 0) {
    throw ValidationError("cannot evaluate an empty prediction set");
  }
  const double n = static_cast<double>(r.n);
  r.accuracy = static_cast<double>(c.tp + c.tn) / n;
  r.precision_positive = ratio_or_convention(c.tp, c.tp + c.fp, c.tp + c.fn);
  r.recall_positive = ratio_or_convention(c.tp, c.tp + c.fn, c.tp + c.fp);
  r.f1_positive = f1(c.tp, c.fp, c.fn);
  r.precision_negative = ratio_or_convention(c.tn, c.tn + c.fn, c.tn + c.fp);
  r.recall_negative = ratio_or_convention(c.tn, c.tn + c.fp, c.tn + c.fn);
  r.f1_negative = f1(c.tn, c.fn, c.fp);
  r.macro_f1 = 0.5 * (r.f1_positive + r.f1_negative);
  r.abstain_rate = static_cast<double>(abstained) / n;
  return r;
}

Vote hard_label(const ProbLabel &label, Vote fallback) {
  if (label.abstained || label.p_positive == 0.5) {
    return fallback;
  }
  return label.p_positive > 0.5 ? Vote::positive : Vote::negative;
}

namespace {

void check_fallback(Vote fallback) {
  if (fallback == Vote::abstain) {
    throw ValidationError("fallback class must be positive or negative");
  }
}

void tally(Confusion &c, Vote predicted, Vote gold) {
  if (predicted == Vote::positive) {
    (gold == Vote::positive ? c.tp : c.fp) += 1;
  } else {
    (gold == Vote::negative ? c.tn : c.fn) += 1;
  }
}

template <typename IdAt, typename PredAt>
EvalReport score(std::size_t n, IdAt id_at, PredAt pred_at, const GoldLabels &gold) {
  if (gold.empty()) {
    throw ValidationError("gold label set is empty");
  }
  if (n != gold.size()) {
    throw ValidationError("prediction count " + std::to_string(n) +
                          " does not match gold count " + std::to_string(gold.size()));
  }
  Confusion c;
  std::size_t abstained = 0;
  std::set<std::string_view> seen;
  for (std::size_t i = 0; i < n; ++i) {
    const std::string &id = id_at(i);
    auto it = gold.find(id);
    if (it == gold.end()) {
      throw ValidationError("predicted artifact '" + id + "' has no gold label");
    }
    if (!seen.insert(id).second) {
      throw ValidationError("artifact '" + id + "' predicted twice");
    }
    auto [vote, abst] = pred_at(i);
    abstained += abst;
    tally(c, vote, it->second);
  }
  return report_from_confusion(c, abstained);
}

} // namespace

EvalReport evaluate(std::span<const ProbLabel> predicted, const GoldLabels &gold,
                    Vote fallback) {
  check_fallback(fallback);
  return score(
      predicted.size(),
      [&](std::size_t i) -> const std::string & { return predicted[i].artifact_id; },
      [&](std::size_t i) {
        return std::pair{hard_label(predicted[i], fallback), predicted[i].abstained};
      },
      gold);
}

EvalReport evaluate(std::span<const std::string> ids,
                    std::span<const Vote> predicted, const GoldLabels &gold,
                    Vote fallback) {
  check_fallback(fallback);
  if (ids.size() != predicted.size()) {
    throw DimensionError("ids and predictions differ in length");
  }
  return score(
      ids.size(), [&](std::size_t i) -> const std::string & { return ids[i]; },
      [&](std::size_t i) {
        const bool abst = predicted[i] == Vote::abstain;
        return std::pair{abst ? fallback : predicted[i], abst};
      },
      gold);
}

nlohmann::json to_json(const EvalReport &r) {
  return {{"n", r.n},
          {"accuracy", r.accuracy},
          {"macro_f1", r.macro_f1},
          {"precision_positive", r.precision_positive},
          {"recall_positive", r.recall_positive},
          {"f1_positive", r.f1_positive},
          {"precision_negative", r.precision_negative},
          {"recall_negative", r.recall_negative},
          {"f1_negative", r.f1_negative},
          {"abstain_rate", r.abstain_rate},
          {"confusion",
           {{"tp", r.confusion.tp},
            {"fp", r.confusion.fp},
            {"tn", r.confusion.tn},
            {"fn", r.confusion.fn}}}};
}

nlohmann::json to_json(const HeuristicDiagnostics &d) {
  nlohmann::json j = {{"name", d.name},
                      {"coverage", d.coverage},
                      {"overlap", d.overlap},
                      {"conflict", d.conflict},
                      {"positives", d.positives},
                      {"negatives", d.negatives}};
  j["empirical_accuracy"] = d.empirical_accuracy
                                ? nlohmann::json(*d.empirical_accuracy)
                                : nlohmann::json(nullptr);
  return j;
}

// -- baselines ---------------------------------------------------------------

Baseline parse_baseline(std::string_view name) {
  if (name == "gitcproc") return Baseline::gitcproc;
  if (name == "tufano") return Baseline::tufano;
  throw ParseError("unknown baseline '" + std::string(name) + "'");
}

std::string to_string(Baseline b) {
  return b == Baseline::gitcproc ? "gitcproc" : "tufano";
}

HeuristicSpec baseline_heuristic(Baseline which,
                                 const std::filesystem::path &baselines_dir) {
  const auto file = baselines_dir / (to_string(which) + ".txt");
  if (!std::filesystem::is_regular_file(file)) {
    throw ParseError("missing baseline keyword file " + file.string());
  }
  HeuristicSpec spec;
  spec.name = "baseline_" + to_string(which);
  spec.polarity = Polarity::positive;
  spec.kind = HeuristicKind::keyword;
  spec.params = make_keyword_params(load_keyword_file(file));
  spec.source = file.string();
  return spec;
}

std::vector<Vote> baseline_classify(Baseline which, const Dataset &dataset,
                                    const std::filesystem::path &baselines_dir) {
  const auto spec = baseline_heuristic(which, baselines_dir);
  std::vector<Vote> out;
  out.reserve(dataset.commits.size());
  for (const auto &c : dataset.commits) {
    const Vote v = apply_keyword(spec, ArtifactRef{&c, nullptr, &dataset});
    out.push_back(v == Vote::abstain ? Vote::negative : v);
  }
  return out;
}

} // namespace heurist
