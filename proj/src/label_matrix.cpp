#include "heurist/label_matrix.hpp"

#include <algorithm>
#include <charconv>

#include <nlohmann/json.hpp>

#include "heurist/error.hpp"
#include "heurist/hash.hpp"

namespace heurist {

Vote vote_from_int(long value) {
  if (value < -1 || value > 1) {
    throw ParseError("vote out of range: " + std::to_string(value));
  }
  return static_cast<Vote>(value);
}

LabelMatrix::LabelMatrix(std::vector<std::string> row_ids,
                         std::vector<std::string> column_names)
    : row_ids_(std::move(row_ids)), column_names_(std::move(column_names)),
      cells_(row_ids_.size() * column_names_.size(), Vote::abstain) {}

LabelMatrix::LabelMatrix(std::vector<std::string> row_ids,
                         std::vector<std::string> column_names,
                         std::vector<Vote> cells)
    : row_ids_(std::move(row_ids)), column_names_(std::move(column_names)),
      cells_(std::move(cells)) {
  if (cells_.size() != row_ids_.size() * column_names_.size()) {
    throw DimensionError("label matrix cell count does not match shape");
  }
}

std::vector<Vote> LabelMatrix::column(std::size_t j) const {
  std::vector<Vote> out(rows());
  for (std::size_t i = 0; i < rows(); ++i) {
    out[i] = at(i, j);
  }
  return out;
}

bool LabelMatrix::row_abstains(std::size_t i) const {
  auto r = row(i);
  return std::all_of(r.begin(), r.end(),
                     [](Vote v) { return v == Vote::abstain; });
}

std::size_t LabelMatrix::column_index(std::string_view name) const {
  auto it = std::find(column_names_.begin(), column_names_.end(), name);
  if (it == column_names_.end()) {
    throw ValidationError("label matrix has no column '" + std::string(name) +
                          "'");
  }
  return static_cast<std::size_t>(it - column_names_.begin());
}

LabelMatrix LabelMatrix::select_columns(std::span<const std::string> names) const {
  std::vector<std::size_t> idx;
  idx.reserve(names.size());
  for (const auto &n : names) {
    idx.push_back(column_index(n));
  }
  LabelMatrix out(row_ids_, {names.begin(), names.end()});
  for (std::size_t i = 0; i < rows(); ++i) {
    for (std::size_t k = 0; k < idx.size(); ++k) {
      out.set(i, k, at(i, idx[k]));
    }
  }
  return out;
}

namespace {

bool needs_quoting(std::string_view s) {
  return s.find_first_of(",\"\r\n") != std::string_view::npos;
}

void append_field(std::string &out, std::string_view s) {
  if (!needs_quoting(s)) {
    out += s;
    return;
  }
  out += '"';
  for (char c : s) {
    if (c == '"') {
      out += '"';
    }
    out += c;
  }
  out += '"';
}

// Minimal RFC 4180 reader: quoted fields may contain commas, quotes and
// newlines.
std::vector<std::vector<std::string>> parse_csv(std::string_view text,
                                                const std::string &source) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') {
          ++line;
        }
        field += c;
      }
      continue;
    }
    switch (c) {
    case '"':
      if (!field.empty()) {
        throw ParseError(source + ":" + std::to_string(line) +
                         ": stray quote in field");
      }
      in_quotes = true;
      field_started = true;
      break;
    case ',':
      row.push_back(std::move(field));
      field.clear();
      field_started = true;
      break;
    case '\r':
      break;
    case '\n':
      if (field_started || !field.empty() || !row.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      field.clear();
      row.clear();
      field_started = false;
      ++line;
      break;
    default:
      field += c;
      field_started = true;
    }
  }
  if (in_quotes) {
    throw ParseError(source + ": unterminated quoted field");
  }
  if (field_started || !field.empty() || !row.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

} // namespace

std::string matrix_to_csv(const LabelMatrix &matrix) {
  std::string out = "artifact_id";
  for (const auto &name : matrix.column_names()) {
    out += ',';
    append_field(out, name);
  }
  out += '\n';
  for (std::size_t i = 0; i < matrix.rows(); ++i) {
    append_field(out, matrix.row_ids()[i]);
    for (Vote v : matrix.row(i)) {
      out += ',';
      out += std::to_string(to_int(v));
    }
    out += '\n';
  }
  return out;
}

LabelMatrix matrix_from_csv(std::string_view text, const std::string &source) {
  auto table = parse_csv(text, source);
  if (table.empty() || table.front().empty() ||
      table.front().front() != "artifact_id") {
    throw ParseError(source + ": missing 'artifact_id' header");
  }
  std::vector<std::string> columns(table.front().begin() + 1,
                                   table.front().end());
  const std::size_t m = columns.size();
  std::vector<std::string> ids;
  std::vector<Vote> cells;
  ids.reserve(table.size() - 1);
  cells.reserve((table.size() - 1) * m);
  for (std::size_t r = 1; r < table.size(); ++r) {
    const auto &row = table[r];
    if (row.size() != m + 1) {
      throw ParseError(source + ": row " + std::to_string(r + 1) + " has " +
                       std::to_string(row.size()) + " fields, expected " +
                       std::to_string(m + 1));
    }
    ids.push_back(row[0]);
    for (std::size_t j = 1; j <= m; ++j) {
      long v = 0;
      const auto &f = row[j];
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || ptr != f.data() + f.size()) {
        throw ParseError(source + ": row " + std::to_string(r + 1) +
                         ": bad cell '" + f + "'");
      }
      try {
        cells.push_back(vote_from_int(v));
      } catch (const ParseError &) {
        throw ParseError(source + ": row " + std::to_string(r + 1) +
                         ": cell out of {-1,0,1}: '" + f + "'");
      }
    }
  }
  return LabelMatrix(std::move(ids), std::move(columns), std::move(cells));
}

void write_matrix(const std::filesystem::path &path, const LabelMatrix &matrix) {
  write_file(path, matrix_to_csv(matrix));
}

LabelMatrix read_matrix(const std::filesystem::path &path) {
  return matrix_from_csv(read_file(path), path.string());
}

std::string matrix_hash(const LabelMatrix &matrix) {
  return sha256_hex(matrix_to_csv(matrix));
}

std::filesystem::path metadata_path(const std::filesystem::path &matrix_path) {
  auto p = matrix_path;
  p += ".meta.json";
  return p;
}

void write_metadata(const std::filesystem::path &matrix_path,
                    const MatrixMetadata &meta) {
  nlohmann::json j = {{"registry_hash", meta.registry_hash},
                      {"dataset", meta.dataset_name},
                      {"created_at", meta.created_at},
                      {"task", meta.task},
                      {"rows", meta.rows},
                      {"cols", meta.cols}};
  write_file(metadata_path(matrix_path), j.dump(2) + "\n");
}

MatrixMetadata read_metadata(const std::filesystem::path &matrix_path) {
  auto path = metadata_path(matrix_path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
    MatrixMetadata meta;
    meta.registry_hash = j.at("registry_hash").get<std::string>();
    meta.dataset_name = j.at("dataset").get<std::string>();
    meta.created_at = j.at("created_at").get<std::string>();
    meta.task = j.value("task", "");
    meta.rows = j.at("rows").get<std::size_t>();
    meta.cols = j.at("cols").get<std::size_t>();
    return meta;
  } catch (const nlohmann::json::exception &e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

} // namespace heurist
