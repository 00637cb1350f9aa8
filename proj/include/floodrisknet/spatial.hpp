// Validation statistics: embedding-similarity structure across risk levels,
// Global Moran's I with the learned network as spatial weights (permutation
// significance), per-city average risk vs spatial inequality (Gini), and
// Pearson correlation with a t-based two-sided p-value.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "floodrisknet/ingest.hpp"
#include "floodrisknet/matrix.hpp"

namespace frn {

struct SimilarityReport {
  Matrix similarity;              // m x m cosine similarities, rows in `ordering`
  std::vector<std::int64_t> ordering;  // cell ids sorted by (level, id)
  std::vector<int> levels_present;     // ascending distinct levels
  Matrix level_pair_mean;         // L x L mean similarity per level pair
  double inner_mean = 0.0;        // same-level pairs (i != j)
  double between_mean = 0.0;      // different-level pairs
  double adjacent_mean = 0.0;     // pairs with level distance 1
  double most_distant_mean = 0.0; // pairs at the maximum level distance
};

// One embedding row per cell; `levels[i]` is the cell's risk level.
SimilarityReport embedding_similarity_report(const Matrix& embeddings,
                                             const std::vector<int>& levels);

// I = (n/S0) * sum_ij w_ij (x_i - xbar)(x_j - xbar) / sum_i (x_i - xbar)^2,
// diagonal ignored. Errors on zero variance or all-zero weights.
double global_morans_i(std::span<const double> values, const Matrix& weights,
                       bool row_standardize = false);

// One-sided p = (1 + #{I_perm >= I_obs}) / (R + 1) over R seeded permutations.
double permutation_pvalue(std::span<const double> values, const Matrix& weights,
                          std::size_t permutations, std::uint64_t seed,
                          bool row_standardize = false);

// Gini = sum_ij |x_i - x_j| / (2 n^2 xbar); 0 when all values are equal.
double gini(std::span<const double> values);

struct CityRiskSummary {
  std::int64_t city_id = 0;
  std::int64_t population = 0;
  double mean_level = 0.0;
  double inequality = 0.0;  // Gini of member-cell levels
  std::size_t member_count = 0;
};

// Cells without a city id are skipped; cities with population <= threshold
// are excluded. Returned sorted by city id.
std::vector<CityRiskSummary> city_risk_summary(const GridSpec& grid,
                                               const std::vector<int>& cell_levels,
                                               std::int64_t population_threshold);

struct Correlation {
  double r = 0.0;
  double p = 1.0;  // two-sided, from the t statistic with n-2 dof
};

Correlation pearson_correlation(std::span<const double> x, std::span<const double> y);

// Rook (edge) adjacency of the grid cells as a 0/1 weight matrix.
Matrix rook_adjacency(const GridSpec& grid);

}  // namespace frn
