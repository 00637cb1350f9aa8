// Grid construction and assembly of the two model inputs: the binary
// flood-occurrence matrix BF (cells x weeks) and the 10-column flood-risk
// feature matrix FR, plus their CSV schemas.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "floodrisknet/matrix.hpp"

namespace frn {

struct BoundingBox {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 0.0;
  double max_y = 0.0;
};

struct CellRecord {
  std::int64_t cell_id = 0;
  int row = 0;
  int col = 0;
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 0.0;
  double max_y = 0.0;
  std::optional<std::int64_t> city_id;
  std::optional<std::int64_t> city_population;
};

struct GridSpec {
  double cell_size = 2000.0;  // meters
  BoundingBox bbox;
  int rows = 0;
  int cols = 0;
  std::vector<CellRecord> cells;

  std::size_t cell_count() const { return cells.size(); }
};

struct FloodOccurrenceMatrix {
  Matrix bf;  // entries in {0, 1}
};

struct FeatureMatrix {
  Matrix fr;  // m x 10, fixed column order (kFeatureColumns)
};

inline constexpr std::size_t kFeatureCount = 10;
inline constexpr std::array<const char*, kFeatureCount> kFeatureColumns = {
    "flood_frequency",  "flood_intensity",     "population",
    "building_area",    "poverty_rate",        "disability_rate",
    "limited_english_rate", "poi_count",       "building_age",
    "recip_foundation_height"};

// Column indices by role. Rates are validated against [0,1]; every other
// column must be nonnegative.
inline constexpr std::size_t kColFloodFrequency = 0;
inline constexpr std::size_t kColFloodIntensity = 1;
inline constexpr std::size_t kColPopulation = 2;
inline constexpr std::size_t kColBuildingArea = 3;
inline constexpr std::size_t kColPovertyRate = 4;
inline constexpr std::size_t kColDisabilityRate = 5;
inline constexpr std::size_t kColLimitedEnglishRate = 6;
inline constexpr std::size_t kColPoiCount = 7;
inline constexpr std::size_t kColBuildingAge = 8;
inline constexpr std::size_t kColRecipFoundationHeight = 9;

// Tiles the bbox row-major with ceiling division, so partial edge cells are
// kept. Cell ids run dense from 0; each polygon is the full square implied by
// (row, col, cell_size) even when the bbox edge cuts through it.
GridSpec build_grid(const BoundingBox& bbox, double cell_size);

struct FloodEvent {
  std::int64_t cell_id = 0;
  std::int64_t week_index = 0;
};

// BF[i][j] = 1 iff at least one event hit cell i in week j.
FloodOccurrenceMatrix assemble_bf(const std::vector<FloodEvent>& events, std::size_t m,
                                  std::size_t d_bf);

struct FeatureRow {
  std::int64_t cell_id = 0;
  std::array<double, kFeatureCount> values{};
};

// Every cell id in [0, m) must appear exactly once. recip_foundation_height
// is expected already reciprocated.
FeatureMatrix assemble_fr(const std::vector<FeatureRow>& rows, std::size_t m);

// Column-wise z-score with the population standard deviation. Constant
// columns map to all-zeros and append a warning. Requires >= 2 rows.
Matrix zscore_columns(const Matrix& m, std::vector<std::string>* warnings = nullptr);

// CSV schemas (External Interfaces). Headers must match byte-for-byte.
inline constexpr const char* kCellsCsvHeader =
    "cell_id,row,col,min_x,min_y,max_x,max_y,city_id,city_population";
inline constexpr const char* kOccurrencesCsvHeader = "cell_id,week_index";
inline constexpr const char* kFeaturesCsvHeader =
    "cell_id,flood_frequency,flood_intensity,population,building_area,poverty_rate,"
    "disability_rate,limited_english_rate,poi_count,building_age,recip_foundation_height";

void write_cells_csv(const std::filesystem::path& path, const GridSpec& grid);
GridSpec read_cells_csv(const std::filesystem::path& path);

void write_occurrences_csv(const std::filesystem::path& path,
                           const std::vector<FloodEvent>& events);
std::vector<FloodEvent> read_occurrences_csv(const std::filesystem::path& path);

void write_features_csv(const std::filesystem::path& path, const FeatureMatrix& fr);
FeatureMatrix read_features_csv(const std::filesystem::path& path);

}  // namespace frn
