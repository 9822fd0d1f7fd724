#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "heurist/label_matrix.hpp"

namespace heurist {

inline constexpr double kMinAccuracy = 0.01;
inline constexpr double kMaxAccuracy = 0.99;
inline constexpr double kInitAccuracyFloor = 0.55;

// Conditionally independent heuristics given the true label; abstention is
// label-independent. accuracies[j] = P(vote_j == y | vote_j != 0),
// propensities[j] = P(vote_j != 0), class_balance = P(y == +1).
struct LabelModelParams {
  std::vector<std::string> heuristics;
  std::vector<double> accuracies;
  std::vector<double> propensities;
  double class_balance = 0.5;

  std::size_t size() const noexcept { return accuracies.size(); }
  bool operator==(const LabelModelParams &) const = default;
};

struct FitConfig {
  double tolerance = 1e-6;
  int max_iterations = 1000;
  // When set, the class balance is frozen at this value.
  std::optional<double> class_balance;
  std::uint64_t seed = 0;
  bool parallel = true;
};

struct FitResult {
  LabelModelParams params;
  int iterations = 0;
  bool converged = false;
  bool flipped = false; // global label-flip correction applied
  double log_likelihood = 0.0;
  std::vector<bool> fitted; // false for zero-coverage columns
};

struct ProbLabel {
  std::string artifact_id;
  double p_positive = 0.5;
  bool abstained = false;

  bool operator==(const ProbLabel &) const = default;
};

// Sign of the row sum; ties and all-abstain rows give abstain.
Vote majority_vote(std::span<const Vote> row);
std::vector<Vote> majority_vote(const LabelMatrix &matrix);

double clamp_accuracy(double a) noexcept;
double logit(double p) noexcept;

// P(y = +1 | row). All-abstain rows return class_balance.
double posterior(const LabelModelParams &params, std::span<const Vote> row);

// EM over the independent-heuristic model. Throws UnfitModelError when no
// row carries a vote.
FitResult fit(const LabelMatrix &matrix, const FitConfig &config = {});

double log_likelihood(const LabelModelParams &params, const LabelMatrix &matrix);

std::vector<ProbLabel> predict(const LabelModelParams &params,
                               const LabelMatrix &matrix, bool parallel = true);

double abstain_rate(std::span<const ProbLabel> labels);

struct SyntheticSample {
  LabelMatrix matrix;
  std::vector<Vote> labels;
};

// Draws n rows from the planted model using a 64-bit Mersenne Twister.
SyntheticSample sample_synthetic(const LabelModelParams &planted, std::size_t n,
                                 std::uint64_t seed);

// Uniform double in [0, 1) from the top 53 bits of a 64-bit draw.
double unit_uniform(std::uint64_t bits) noexcept;

nlohmann::json model_to_json(const FitResult &fit, const FitConfig &config,
                             const std::string &matrix_hash);
LabelModelParams model_from_json(const nlohmann::json &j);
void write_model(const std::filesystem::path &path, const FitResult &fit,
                 const FitConfig &config, const std::string &matrix_hash);
LabelModelParams read_model(const std::filesystem::path &path);

std::string labels_to_jsonl(std::span<const ProbLabel> labels);
std::vector<ProbLabel> labels_from_jsonl(std::string_view text,
                                         const std::string &source);

} // namespace heurist
