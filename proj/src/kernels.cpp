#include "heurist/kernels.hpp"

#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace heurist::kernels {

std::vector<ArtifactRef> artifact_rows(const Dataset &dataset,
                                       ArtifactKind target) {
  std::vector<ArtifactRef> rows;
  if (target == ArtifactKind::commit) {
    rows.reserve(dataset.commits.size());
    for (const auto &c : dataset.commits) {
      rows.push_back({&c, nullptr, &dataset});
    }
  } else {
    rows.reserve(dataset.issues.size());
    for (const auto &[id, issue] : dataset.issues) {
      rows.push_back({nullptr, &issue, &dataset});
    }
  }
  return rows;
}

namespace {

inline Vote apply_guarded(const HeuristicSpec &spec, const ArtifactRef &row,
                          std::size_t &errors) {
  try {
    return apply_heuristic(spec, row);
  } catch (...) {
    ++errors;
    return Vote::abstain;
  }
}

} // namespace

void apply_rows_serial(std::span<const HeuristicSpec> specs,
                       std::span<const ArtifactRef> rows, std::span<Vote> cells,
                       std::span<std::size_t> errors) {
  const std::size_t m = specs.size();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      cells[i * m + j] = apply_guarded(specs[j], rows[i], errors[j]);
    }
  }
}

void apply_rows_parallel(std::span<const HeuristicSpec> specs,
                         std::span<const ArtifactRef> rows,
                         std::span<Vote> cells, std::span<std::size_t> errors) {
  const std::size_t m = specs.size();
  const auto n = static_cast<std::ptrdiff_t>(rows.size());
#pragma omp parallel
  {
    std::vector<std::size_t> local(m, 0);
#pragma omp for schedule(dynamic, 256)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const auto row = static_cast<std::size_t>(i);
      for (std::size_t j = 0; j < m; ++j) {
        cells[row * m + j] = apply_guarded(specs[j], rows[row], local[j]);
      }
    }
#pragma omp critical
    for (std::size_t j = 0; j < m; ++j) {
      errors[j] += local[j];
    }
  }
}

double sigmoid(double z) noexcept {
  if (z >= 0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

namespace {

inline double row_posterior(const LabelMatrix &matrix, std::size_t i,
                            std::span<const double> weights,
                            double prior_logit) {
  double z = prior_logit;
  auto row = matrix.row(i);
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (row[j] != Vote::abstain) {
      z += to_int(row[j]) * weights[j];
    }
  }
  return sigmoid(z);
}

} // namespace

void posterior_rows_serial(const LabelMatrix &matrix,
                           std::span<const double> weights, double prior_logit,
                           std::span<double> out) {
  for (std::size_t i = 0; i < matrix.rows(); ++i) {
    out[i] = row_posterior(matrix, i, weights, prior_logit);
  }
}

void posterior_rows_parallel(const LabelMatrix &matrix,
                             std::span<const double> weights,
                             double prior_logit, std::span<double> out) {
  const auto n = static_cast<std::ptrdiff_t>(matrix.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] =
        row_posterior(matrix, static_cast<std::size_t>(i), weights, prior_logit);
  }
}

namespace {

inline void count_row(std::span<const Vote> row, Vote gold,
                      std::vector<ColumnCounts> &acc) {
  std::size_t pos = 0;
  std::size_t neg = 0;
  for (Vote v : row) {
    pos += v == Vote::positive;
    neg += v == Vote::negative;
  }
  for (std::size_t j = 0; j < row.size(); ++j) {
    const Vote v = row[j];
    if (v == Vote::abstain) {
      continue;
    }
    auto &c = acc[j];
    ++c.votes;
    if (v == Vote::positive) {
      ++c.positives;
      c.conflicts += neg > 0;
    } else {
      ++c.negatives;
      c.conflicts += pos > 0;
    }
    c.overlaps += pos + neg > 1;
    c.gold_agree += v == gold;
  }
}

void merge(std::vector<ColumnCounts> &into, const std::vector<ColumnCounts> &from) {
  for (std::size_t j = 0; j < into.size(); ++j) {
    into[j].votes += from[j].votes;
    into[j].positives += from[j].positives;
    into[j].negatives += from[j].negatives;
    into[j].overlaps += from[j].overlaps;
    into[j].conflicts += from[j].conflicts;
    into[j].gold_agree += from[j].gold_agree;
  }
}

} // namespace

std::vector<ColumnCounts> column_counts_serial(const LabelMatrix &matrix,
                                               std::span<const Vote> gold) {
  std::vector<ColumnCounts> acc(matrix.cols());
  for (std::size_t i = 0; i < matrix.rows(); ++i) {
    count_row(matrix.row(i), gold.empty() ? Vote::abstain : gold[i], acc);
  }
  return acc;
}

std::vector<ColumnCounts> column_counts_parallel(const LabelMatrix &matrix,
                                                 std::span<const Vote> gold) {
  std::vector<ColumnCounts> acc(matrix.cols());
  const auto n = static_cast<std::ptrdiff_t>(matrix.rows());
#pragma omp parallel
  {
    std::vector<ColumnCounts> local(matrix.cols());
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const auto row = static_cast<std::size_t>(i);
      count_row(matrix.row(row), gold.empty() ? Vote::abstain : gold[row],
                local);
    }
#pragma omp critical
    merge(acc, local);
  }
  return acc;
}

} // namespace heurist::kernels
