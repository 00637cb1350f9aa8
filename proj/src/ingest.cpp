#include "floodrisknet/ingest.hpp"

#include <cmath>
#include <stdexcept>

#include "floodrisknet/csv.hpp"
#include "floodrisknet/errors.hpp"
#include "floodrisknet/fsio.hpp"

namespace frn {

GridSpec build_grid(const BoundingBox& bbox, double cell_size) {
  if (!(cell_size > 0.0)) {
    throw std::invalid_argument("build_grid: cell_size must be positive");
  }
  if (!(bbox.max_x > bbox.min_x) || !(bbox.max_y > bbox.min_y)) {
    throw std::invalid_argument("build_grid: degenerate bounding box");
  }
  GridSpec grid;
  grid.cell_size = cell_size;
  grid.bbox = bbox;
  grid.cols = static_cast<int>(std::ceil((bbox.max_x - bbox.min_x) / cell_size));
  grid.rows = static_cast<int>(std::ceil((bbox.max_y - bbox.min_y) / cell_size));
  grid.cells.reserve(static_cast<std::size_t>(grid.rows) * static_cast<std::size_t>(grid.cols));
  for (int r = 0; r < grid.rows; ++r) {
    for (int c = 0; c < grid.cols; ++c) {
      CellRecord cell;
      cell.cell_id = static_cast<std::int64_t>(r) * grid.cols + c;
      cell.row = r;
      cell.col = c;
      cell.min_x = bbox.min_x + c * cell_size;
      cell.min_y = bbox.min_y + r * cell_size;
      cell.max_x = cell.min_x + cell_size;
      cell.max_y = cell.min_y + cell_size;
      grid.cells.push_back(cell);
    }
  }
  return grid;
}

FloodOccurrenceMatrix assemble_bf(const std::vector<FloodEvent>& events, std::size_t m,
                                  std::size_t d_bf) {
  if (d_bf < 1) throw std::invalid_argument("assemble_bf: d_bf must be >= 1");
  FloodOccurrenceMatrix out{Matrix(m, d_bf)};
  for (const FloodEvent& e : events) {
    if (e.cell_id < 0 || static_cast<std::size_t>(e.cell_id) >= m) {
      throw SchemaError("assemble_bf: cell_id " + std::to_string(e.cell_id) +
                        " out of range [0, " + std::to_string(m) + ")");
    }
    if (e.week_index < 0 || static_cast<std::size_t>(e.week_index) >= d_bf) {
      throw SchemaError("assemble_bf: week_index " + std::to_string(e.week_index) +
                        " out of range [0, " + std::to_string(d_bf) + ")");
    }
    out.bf(static_cast<std::size_t>(e.cell_id), static_cast<std::size_t>(e.week_index)) = 1.0;
  }
  return out;
}

FeatureMatrix assemble_fr(const std::vector<FeatureRow>& rows, std::size_t m) {
  FeatureMatrix out{Matrix(m, kFeatureCount)};
  std::vector<bool> seen(m, false);
  for (const FeatureRow& row : rows) {
    if (row.cell_id < 0 || static_cast<std::size_t>(row.cell_id) >= m) {
      throw SchemaError("assemble_fr: cell_id " + std::to_string(row.cell_id) +
                        " out of range [0, " + std::to_string(m) + ")");
    }
    const std::size_t i = static_cast<std::size_t>(row.cell_id);
    if (seen[i]) {
      throw SchemaError("assemble_fr: duplicate cell_id " + std::to_string(row.cell_id));
    }
    seen[i] = true;
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
      const double v = row.values[j];
      const bool is_rate = j == kColPovertyRate || j == kColDisabilityRate ||
                           j == kColLimitedEnglishRate;
      if (!std::isfinite(v)) {
        throw SchemaError(std::string("assemble_fr: non-finite ") + kFeatureColumns[j] +
                          " for cell " + std::to_string(row.cell_id));
      }
      if (is_rate && (v < 0.0 || v > 1.0)) {
        throw SchemaError(std::string("assemble_fr: ") + kFeatureColumns[j] + " for cell " +
                          std::to_string(row.cell_id) + " is " + csv::format_double(v) +
                          ", must be in [0,1]");
      }
      if (!is_rate && v < 0.0) {
        throw SchemaError(std::string("assemble_fr: ") + kFeatureColumns[j] + " for cell " +
                          std::to_string(row.cell_id) + " is negative");
      }
      out.fr(i, j) = v;
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (!seen[i]) {
      throw SchemaError("assemble_fr: missing cell " + std::to_string(i));
    }
  }
  return out;
}

Matrix zscore_columns(const Matrix& m, std::vector<std::string>* warnings) {
  if (m.rows() < 2) throw SchemaError("zscore_columns: need at least 2 rows");
  Matrix out(m.rows(), m.cols());
  const double n = static_cast<double>(m.rows());
  for (std::size_t j = 0; j < m.cols(); ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) mean += m(i, j);
    mean /= n;
    double var = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) {
      const double d = m(i, j) - mean;
      var += d * d;
    }
    var /= n;  // population variance
    if (var == 0.0) {
      if (warnings) {
        warnings->push_back("zscore: column " + std::to_string(j) +
                            " is constant, mapped to zeros");
      }
      continue;  // column stays all-zero
    }
    const double inv_std = 1.0 / std::sqrt(var);
    for (std::size_t i = 0; i < m.rows(); ++i) out(i, j) = (m(i, j) - mean) * inv_std;
  }
  check_finite(out, "zscore_columns");
  return out;
}

void write_cells_csv(const std::filesystem::path& path, const GridSpec& grid) {
  std::string out(kCellsCsvHeader);
  out.push_back('\n');
  for (const CellRecord& c : grid.cells) {
    out += std::to_string(c.cell_id);
    out.push_back(',');
    out += std::to_string(c.row);
    out.push_back(',');
    out += std::to_string(c.col);
    out.push_back(',');
    out += csv::format_double(c.min_x);
    out.push_back(',');
    out += csv::format_double(c.min_y);
    out.push_back(',');
    out += csv::format_double(c.max_x);
    out.push_back(',');
    out += csv::format_double(c.max_y);
    out.push_back(',');
    if (c.city_id) out += std::to_string(*c.city_id);
    out.push_back(',');
    if (c.city_population) out += std::to_string(*c.city_population);
    out.push_back('\n');
  }
  atomic_write_file(path, out);
}

GridSpec read_cells_csv(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  const auto lines = csv::split_lines(text);
  csv::require_header(lines, kCellsCsvHeader, path.string());
  GridSpec grid;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const std::string ctx = path.string() + " line " + std::to_string(li + 1);
    const auto f = csv::split_line(lines[li]);
    if (f.size() != 9) {
      throw SchemaError(ctx + ": expected 9 fields, got " + std::to_string(f.size()));
    }
    CellRecord c;
    c.cell_id = csv::parse_int(f[0], ctx);
    c.row = static_cast<int>(csv::parse_int(f[1], ctx));
    c.col = static_cast<int>(csv::parse_int(f[2], ctx));
    c.min_x = csv::parse_double(f[3], ctx);
    c.min_y = csv::parse_double(f[4], ctx);
    c.max_x = csv::parse_double(f[5], ctx);
    c.max_y = csv::parse_double(f[6], ctx);
    if (!f[7].empty()) c.city_id = csv::parse_int(f[7], ctx);
    if (!f[8].empty()) c.city_population = csv::parse_int(f[8], ctx);
    if (c.cell_id != static_cast<std::int64_t>(grid.cells.size())) {
      throw SchemaError(ctx + ": cell ids must be dense and ascending from 0");
    }
    grid.cells.push_back(c);
  }
  if (grid.cells.empty()) throw SchemaError(path.string() + ": no cells");
  grid.cell_size = grid.cells[0].max_x - grid.cells[0].min_x;
  grid.bbox.min_x = grid.cells[0].min_x;
  grid.bbox.min_y = grid.cells[0].min_y;
  grid.bbox.max_x = grid.cells[0].max_x;
  grid.bbox.max_y = grid.cells[0].max_y;
  for (const CellRecord& c : grid.cells) {
    grid.rows = std::max(grid.rows, c.row + 1);
    grid.cols = std::max(grid.cols, c.col + 1);
    grid.bbox.min_x = std::min(grid.bbox.min_x, c.min_x);
    grid.bbox.min_y = std::min(grid.bbox.min_y, c.min_y);
    grid.bbox.max_x = std::max(grid.bbox.max_x, c.max_x);
    grid.bbox.max_y = std::max(grid.bbox.max_y, c.max_y);
  }
  return grid;
}

void write_occurrences_csv(const std::filesystem::path& path,
                           const std::vector<FloodEvent>& events) {
  std::string out(kOccurrencesCsvHeader);
  out.push_back('\n');
  for (const FloodEvent& e : events) {
    out += std::to_string(e.cell_id);
    out.push_back(',');
    out += std::to_string(e.week_index);
    out.push_back('\n');
  }
  atomic_write_file(path, out);
}

std::vector<FloodEvent> read_occurrences_csv(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  const auto lines = csv::split_lines(text);
  csv::require_header(lines, kOccurrencesCsvHeader, path.string());
  std::vector<FloodEvent> events;
  events.reserve(lines.size() - 1);
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const std::string ctx = path.string() + " line " + std::to_string(li + 1);
    const auto f = csv::split_line(lines[li]);
    if (f.size() != 2) {
      throw SchemaError(ctx + ": expected 2 fields, got " + std::to_string(f.size()));
    }
    events.push_back({csv::parse_int(f[0], ctx), csv::parse_int(f[1], ctx)});
  }
  return events;
}

void write_features_csv(const std::filesystem::path& path, const FeatureMatrix& fr) {
  std::string out(kFeaturesCsvHeader);
  out.push_back('\n');
  for (std::size_t i = 0; i < fr.fr.rows(); ++i) {
    out += std::to_string(i);
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
      out.push_back(',');
      out += csv::format_double(fr.fr(i, j));
    }
    out.push_back('\n');
  }
  atomic_write_file(path, out);
}

FeatureMatrix read_features_csv(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  const auto lines = csv::split_lines(text);
  csv::require_header(lines, kFeaturesCsvHeader, path.string());
  std::vector<FeatureRow> rows;
  rows.reserve(lines.size() - 1);
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const std::string ctx = path.string() + " line " + std::to_string(li + 1);
    const auto f = csv::split_line(lines[li]);
    if (f.size() != 1 + kFeatureCount) {
      throw SchemaError(ctx + ": expected " + std::to_string(1 + kFeatureCount) +
                        " fields, got " + std::to_string(f.size()));
    }
    FeatureRow row;
    row.cell_id = csv::parse_int(f[0], ctx);
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
      row.values[j] = csv::parse_double(f[1 + j], ctx);
    }
    rows.push_back(row);
  }
  return assemble_fr(rows, rows.size());
}

}  // namespace frn
