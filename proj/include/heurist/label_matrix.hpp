#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace heurist {

// Ternary heuristic output. Labels (gold or predicted) reuse the two
// non-abstain values.
enum class Vote : std::int8_t { negative = -1, abstain = 0, positive = 1 };

constexpr int to_int(Vote v) noexcept { return static_cast<int>(v); }
constexpr Vote negate(Vote v) noexcept {
  return static_cast<Vote>(-static_cast<std::int8_t>(v));
}
Vote vote_from_int(long value); // throws ParseError outside {-1,0,1}

// n x m row-major table of votes with stable row and column names.
class LabelMatrix {
public:
  LabelMatrix() = default;
  LabelMatrix(std::vector<std::string> row_ids,
              std::vector<std::string> column_names);
  LabelMatrix(std::vector<std::string> row_ids,
              std::vector<std::string> column_names, std::vector<Vote> cells);

  std::size_t rows() const noexcept { return row_ids_.size(); }
  std::size_t cols() const noexcept { return column_names_.size(); }

  const std::vector<std::string> &row_ids() const noexcept { return row_ids_; }
  const std::vector<std::string> &column_names() const noexcept {
    return column_names_;
  }

  Vote at(std::size_t row, std::size_t col) const {
    return cells_[row * cols() + col];
  }
  void set(std::size_t row, std::size_t col, Vote v) {
    cells_[row * cols() + col] = v;
  }

  std::span<const Vote> row(std::size_t i) const {
    return {cells_.data() + i * cols(), cols()};
  }
  std::vector<Vote> column(std::size_t j) const;

  std::span<const Vote> cells() const noexcept { return cells_; }
  std::span<Vote> mutable_cells() noexcept { return cells_; }

  bool row_abstains(std::size_t i) const;

  // Columns in the given order; throws on unknown names.
  LabelMatrix select_columns(std::span<const std::string> names) const;
  std::size_t column_index(std::string_view name) const;

  bool operator==(const LabelMatrix &) const = default;

private:
  std::vector<std::string> row_ids_;
  std::vector<std::string> column_names_;
  std::vector<Vote> cells_;
};

// CSV with header `artifact_id,<heuristic names...>` and cells in {-1,0,1}.
std::string matrix_to_csv(const LabelMatrix &matrix);
LabelMatrix matrix_from_csv(std::string_view text, const std::string &source);

void write_matrix(const std::filesystem::path &path, const LabelMatrix &matrix);
LabelMatrix read_matrix(const std::filesystem::path &path);

// Content hash of the CSV form.
std::string matrix_hash(const LabelMatrix &matrix);

struct MatrixMetadata {
  std::string registry_hash;
  std::string dataset_name;
  std::string created_at; // ISO-8601 UTC
  std::string task;
  std::size_t rows = 0;
  std::size_t cols = 0;
};

std::filesystem::path metadata_path(const std::filesystem::path &matrix_path);
void write_metadata(const std::filesystem::path &matrix_path,
                    const MatrixMetadata &meta);
MatrixMetadata read_metadata(const std::filesystem::path &matrix_path);

} // namespace heurist
