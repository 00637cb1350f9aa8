// Converts cluster assignments plus the raw feature matrix into per-cluster
// hazard/exposure/vulnerability components, an aggregated risk value, and
// ascending risk levels (1 = lowest).

#pragma once

#include <string>
#include <vector>

#include "floodrisknet/ingest.hpp"
#include "floodrisknet/matrix.hpp"

namespace frn {

// Per-column (x - min)/(max - min); constant columns map to zeros + warning.
// Scaling is computed over all cells so cluster means share one scale.
Matrix minmax_scale_columns(const Matrix& m, std::vector<std::string>* warnings = nullptr);

struct ClusterFeatureSummary {
  Matrix means;                     // K' x 10, means of min-max scaled features
  std::vector<std::size_t> counts;  // members per cluster, all >= 1
};

// `labels` must be dense 0..K'-1 with every cluster nonempty.
ClusterFeatureSummary cluster_feature_means(const Matrix& scaled,
                                            const std::vector<int>& labels);

struct RiskComponents {
  std::vector<double> hazard;         // FH = mean flood_frequency + mean flood_intensity
  std::vector<double> exposure;       // FE = mean population + mean building_area
  std::vector<double> vulnerability;  // FV = sum of the six social+physical means
};

RiskComponents aggregate_risk_components(const ClusterFeatureSummary& summary);

// FR value per cluster: FH * FE * FV.
std::vector<double> compute_risk_values(const RiskComponents& components);

// Ascending rank (1 = lowest risk); ties give the smaller cluster index the
// smaller level.
std::vector<int> assign_risk_levels(const std::vector<double>& risk_values);

struct RiskLevelTable {
  RiskComponents components;
  std::vector<double> risk_values;  // per cluster
  std::vector<int> levels;          // per cluster, permutation of 1..K'
  std::vector<int> cell_cluster;    // per cell
  std::vector<int> cell_level;      // per cell
};

RiskLevelTable rate_clusters(const FeatureMatrix& fr, const std::vector<int>& labels,
                             std::vector<std::string>* warnings = nullptr);

}  // namespace frn
