#pragma once

// Data-parallel inner loops. Every kernel has a serial reference that the
// OpenMP variant must match bit-for-bit; tests compare the two and the
// benchmark target times them.

#include <cstddef>
#include <span>
#include <vector>

#include "heurist/heuristic.hpp"
#include "heurist/label_matrix.hpp"

namespace heurist::kernels {

// Builds the row views apply_rows iterates over, in dataset row order.
std::vector<ArtifactRef> artifact_rows(const Dataset &dataset,
                                       ArtifactKind target);

// cells is row-major rows.size() x specs.size(); errors has specs.size()
// entries and is incremented for each plugin call that threw.
void apply_rows_serial(std::span<const HeuristicSpec> specs,
                       std::span<const ArtifactRef> rows, std::span<Vote> cells,
                       std::span<std::size_t> errors);
void apply_rows_parallel(std::span<const HeuristicSpec> specs,
                         std::span<const ArtifactRef> rows,
                         std::span<Vote> cells, std::span<std::size_t> errors);

double sigmoid(double z) noexcept;

// out[i] = sigmoid(prior_logit + sum_j cell(i,j) * weights[j]).
void posterior_rows_serial(const LabelMatrix &matrix,
                           std::span<const double> weights, double prior_logit,
                           std::span<double> out);
void posterior_rows_parallel(const LabelMatrix &matrix,
                             std::span<const double> weights,
                             double prior_logit, std::span<double> out);

struct ColumnCounts {
  std::size_t votes = 0;
  std::size_t positives = 0;
  std::size_t negatives = 0;
  std::size_t overlaps = 0;  // rows where this and another column vote
  std::size_t conflicts = 0; // rows where another column votes the other sign
  std::size_t gold_agree = 0;

  bool operator==(const ColumnCounts &) const = default;
};

// gold, when non-empty, is aligned with matrix rows.
std::vector<ColumnCounts> column_counts_serial(const LabelMatrix &matrix,
                                               std::span<const Vote> gold = {});
std::vector<ColumnCounts>
column_counts_parallel(const LabelMatrix &matrix,
                       std::span<const Vote> gold = {});

} // namespace heurist::kernels
