#include "heurist/label_model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "heurist/error.hpp"
#include "heurist/hash.hpp"
#include "heurist/kernels.hpp"

namespace heurist {

Vote majority_vote(std::span<const Vote> row) {
  int sum = 0;
  for (Vote v : row) {
    sum += to_int(v);
  }
  return sum > 0 ? Vote::positive : sum < 0 ? Vote::negative : Vote::abstain;
}

std::vector<Vote> majority_vote(const LabelMatrix &matrix) {
  std::vector<Vote> out(matrix.rows());
  for (std::size_t i = 0; i < matrix.rows(); ++i) {
    out[i] = majority_vote(matrix.row(i));
  }
  return out;
}

double clamp_accuracy(double a) noexcept {
  return std::clamp(a, kMinAccuracy, kMaxAccuracy);
}

double logit(double p) noexcept { return std::log(p / (1.0 - p)); }

namespace {

void check_dims(const LabelModelParams &params, std::size_t cols) {
  if (params.accuracies.size() != cols) {
    throw DimensionError("model has " + std::to_string(params.accuracies.size()) +
                         " heuristics but input has " + std::to_string(cols) +
                         " columns");
  }
}

std::vector<double> vote_weights(std::span<const double> accuracies) {
  std::vector<double> w(accuracies.size());
  for (std::size_t j = 0; j < w.size(); ++j) {
    w[j] = logit(accuracies[j]);
  }
  return w;
}

} // namespace

double posterior(const LabelModelParams &params, std::span<const Vote> row) {
  check_dims(params, row.size());
  double z = logit(params.class_balance);
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (row[j] != Vote::abstain) {
      z += to_int(row[j]) * logit(params.accuracies[j]);
    }
  }
  return kernels::sigmoid(z);
}

double log_likelihood(const LabelModelParams &params, const LabelMatrix &matrix) {
  check_dims(params, matrix.cols());
  const double lp = std::log(params.class_balance);
  const double ln = std::log1p(-params.class_balance);
  double ll = 0.0;
  for (std::size_t i = 0; i < matrix.rows(); ++i) {
    double a = lp; // log P(y=+1, votes)
    double b = ln; // log P(y=-1, votes)
    auto row = matrix.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) {
      const double acc = params.accuracies[j];
      const double beta = params.propensities[j];
      if (row[j] == Vote::abstain) {
        if (beta < 1.0) {
          a += std::log1p(-beta);
          b += std::log1p(-beta);
        }
        continue;
      }
      const double lb = beta > 0.0 ? std::log(beta) : 0.0;
      const bool pos = row[j] == Vote::positive;
      a += lb + std::log(pos ? acc : 1.0 - acc);
      b += lb + std::log(pos ? 1.0 - acc : acc);
    }
    const double hi = std::max(a, b);
    ll += hi + std::log(std::exp(a - hi) + std::exp(b - hi));
  }
  return ll;
}

FitResult fit(const LabelMatrix &matrix, const FitConfig &config) {
  const std::size_t n = matrix.rows();
  const std::size_t m = matrix.cols();
  if (m == 0) {
    throw ValidationError("cannot fit a label model on a matrix with no columns");
  }
  if (config.class_balance &&
      !(*config.class_balance > 0.0 && *config.class_balance < 1.0)) {
    throw ValidationError("class balance must lie in (0, 1)");
  }

  std::vector<std::size_t> coverage(m, 0);
  std::size_t voting_rows = 0;
  for (std::size_t i = 0; i < n; ++i) {
    bool any = false;
    auto row = matrix.row(i);
    for (std::size_t j = 0; j < m; ++j) {
      if (row[j] != Vote::abstain) {
        ++coverage[j];
        any = true;
      }
    }
    voting_rows += any;
  }
  if (voting_rows == 0) {
    throw UnfitModelError("label matrix has no votes; the model cannot be fit");
  }

  FitResult result;
  result.fitted.resize(m);
  auto &params = result.params;
  params.heuristics = matrix.column_names();
  params.accuracies.assign(m, 0.5);
  params.propensities.resize(m);
  for (std::size_t j = 0; j < m; ++j) {
    result.fitted[j] = coverage[j] > 0;
    params.propensities[j] = static_cast<double>(coverage[j]) / static_cast<double>(n);
  }

  // Orient toward the majority vote: agreement rate with it, floored.
  const auto mv = majority_vote(matrix);
  {
    std::vector<std::size_t> agree(m, 0), decided(m, 0);
    for (std::size_t i = 0; i < n; ++i) {
      if (mv[i] == Vote::abstain) {
        continue;
      }
      auto row = matrix.row(i);
      for (std::size_t j = 0; j < m; ++j) {
        if (row[j] != Vote::abstain) {
          ++decided[j];
          agree[j] += row[j] == mv[i];
        }
      }
    }
    for (std::size_t j = 0; j < m; ++j) {
      if (!result.fitted[j]) {
        continue;
      }
      double rate = decided[j] ? static_cast<double>(agree[j]) / decided[j]
                               : kInitAccuracyFloor;
      params.accuracies[j] = clamp_accuracy(std::max(rate, kInitAccuracyFloor));
    }
  }
  params.class_balance = config.class_balance.value_or(0.5);

  std::vector<double> q(n);
  std::vector<double> sums(m);
  for (int iter = 1; iter <= config.max_iterations; ++iter) {
    const auto weights = vote_weights(params.accuracies);
    if (config.parallel) {
      kernels::posterior_rows_parallel(matrix, weights, logit(params.class_balance), q);
    } else {
      kernels::posterior_rows_serial(matrix, weights, logit(params.class_balance), q);
    }

    // Reduction in fixed row order keeps the fit bit-reproducible.
    std::fill(sums.begin(), sums.end(), 0.0);
    double q_total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      q_total += q[i];
      auto row = matrix.row(i);
      for (std::size_t j = 0; j < m; ++j) {
        if (row[j] == Vote::positive) {
          sums[j] += q[i];
        } else if (row[j] == Vote::negative) {
          sums[j] += 1.0 - q[i];
        }
      }
    }

    double delta = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      if (!result.fitted[j]) {
        continue;
      }
      const double next = clamp_accuracy(sums[j] / static_cast<double>(coverage[j]));
      delta = std::max(delta, std::abs(next - params.accuracies[j]));
      params.accuracies[j] = next;
    }
    if (!config.class_balance) {
      const double next = clamp_accuracy(q_total / static_cast<double>(n));
      delta = std::max(delta, std::abs(next - params.class_balance));
      params.class_balance = next;
    }
    result.iterations = iter;
    if (delta < config.tolerance) {
      result.converged = true;
      break;
    }
  }

  // EM cannot tell y from -y; prefer the orientation where heuristics are
  // better than chance on average.
  double mean_acc = 0.0;
  std::size_t active = 0;
  for (std::size_t j = 0; j < m; ++j) {
    if (result.fitted[j]) {
      mean_acc += params.accuracies[j];
      ++active;
    }
  }
  mean_acc /= static_cast<double>(active);
  if (mean_acc < 0.5) {
    result.flipped = true;
    for (std::size_t j = 0; j < m; ++j) {
      if (result.fitted[j]) {
        params.accuracies[j] = 1.0 - params.accuracies[j];
      }
    }
    if (!config.class_balance) {
      params.class_balance = 1.0 - params.class_balance;
    }
  }
  result.log_likelihood = log_likelihood(params, matrix);
  return result;
}

std::vector<ProbLabel> predict(const LabelModelParams &params,
                               const LabelMatrix &matrix, bool parallel) {
  check_dims(params, matrix.cols());
  std::vector<double> q(matrix.rows());
  const auto weights = vote_weights(params.accuracies);
  if (parallel) {
    kernels::posterior_rows_parallel(matrix, weights, logit(params.class_balance), q);
  } else {
    kernels::posterior_rows_serial(matrix, weights, logit(params.class_balance), q);
  }
  std::vector<ProbLabel> out(matrix.rows());
  for (std::size_t i = 0; i < matrix.rows(); ++i) {
    const bool abstained = matrix.row_abstains(i);
    out[i] = {matrix.row_ids()[i], abstained ? params.class_balance : q[i],
              abstained};
  }
  return out;
}

double abstain_rate(std::span<const ProbLabel> labels) {
  if (labels.empty()) {
    return 0.0;
  }
  auto k = std::count_if(labels.begin(), labels.end(),
                         [](const ProbLabel &l) { return l.abstained; });
  return static_cast<double>(k) / static_cast<double>(labels.size());
}

double unit_uniform(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

SyntheticSample sample_synthetic(const LabelModelParams &planted, std::size_t n,
                                 std::uint64_t seed) {
  if (n == 0) {
    throw ValidationError("synthetic sample size must be at least 1");
  }
  const std::size_t m = planted.accuracies.size();
  if (planted.propensities.size() != m) {
    throw DimensionError("planted accuracies and propensities differ in length");
  }
  std::vector<std::string> names = planted.heuristics;
  if (names.size() != m) {
    names.clear();
    for (std::size_t j = 0; j < m; ++j) {
      names.push_back("lf" + std::to_string(j));
    }
  }
  std::vector<std::string> ids(n);
  for (std::size_t i = 0; i < n; ++i) {
    ids[i] = "row" + std::to_string(i);
  }
  SyntheticSample s{LabelMatrix(std::move(ids), std::move(names)),
                    std::vector<Vote>(n)};
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const Vote y =
        unit_uniform(rng()) < planted.class_balance ? Vote::positive : Vote::negative;
    s.labels[i] = y;
    for (std::size_t j = 0; j < m; ++j) {
      const double fires = unit_uniform(rng());
      const double correct = unit_uniform(rng());
      if (fires < planted.propensities[j]) {
        s.matrix.set(i, j, correct < planted.accuracies[j] ? y : negate(y));
      }
    }
  }
  return s;
}

// -- serialization -----------------------------------------------------------

nlohmann::json model_to_json(const FitResult &fit, const FitConfig &config,
                             const std::string &matrix_hash) {
  nlohmann::json cfg = {{"tolerance", config.tolerance},
                        {"max_iterations", config.max_iterations},
                        {"seed", config.seed}};
  cfg["class_balance"] = config.class_balance ? nlohmann::json(*config.class_balance)
                                              : nlohmann::json(nullptr);
  return {{"format", "heurist-label-model/1"},
          {"heuristics", fit.params.heuristics},
          {"accuracies", fit.params.accuracies},
          {"propensities", fit.params.propensities},
          {"class_balance", fit.params.class_balance},
          {"config", cfg},
          {"iterations", fit.iterations},
          {"converged", fit.converged},
          {"flipped", fit.flipped},
          {"log_likelihood", fit.log_likelihood},
          {"matrix_hash", matrix_hash}};
}

LabelModelParams model_from_json(const nlohmann::json &j) {
  try {
    LabelModelParams p;
    p.heuristics = j.at("heuristics").get<std::vector<std::string>>();
    p.accuracies = j.at("accuracies").get<std::vector<double>>();
    p.propensities = j.at("propensities").get<std::vector<double>>();
    p.class_balance = j.at("class_balance").get<double>();
    if (p.accuracies.size() != p.heuristics.size() ||
        p.propensities.size() != p.heuristics.size()) {
      throw ParseError("model vectors differ in length");
    }
    return p;
  } catch (const nlohmann::json::exception &e) {
    throw ParseError(std::string("malformed model: ") + e.what());
  }
}

void write_model(const std::filesystem::path &path, const FitResult &fit,
                 const FitConfig &config, const std::string &matrix_hash) {
  write_file(path, model_to_json(fit, config, matrix_hash).dump(2) + "\n");
}

LabelModelParams read_model(const std::filesystem::path &path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error &e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return model_from_json(j);
}

std::string labels_to_jsonl(std::span<const ProbLabel> labels) {
  std::string out;
  for (const auto &l : labels) {
    nlohmann::json rec = {{"artifact_id", l.artifact_id},
                          {"p_positive", l.p_positive},
                          {"abstained", l.abstained}};
    out += rec.dump();
    out += '\n';
  }
  return out;
}

std::vector<ProbLabel> labels_from_jsonl(std::string_view text,
                                         const std::string &source) {
  std::vector<ProbLabel> out;
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
    try {
      auto j = nlohmann::json::parse(line);
      out.push_back({j.at("artifact_id").get<std::string>(),
                     j.at("p_positive").get<double>(),
                     j.at("abstained").get<bool>()});
    } catch (const nlohmann::json::exception &e) {
      throw ParseError(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

} // namespace heurist
