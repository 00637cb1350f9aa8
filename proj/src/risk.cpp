#include "floodrisknet/risk.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "floodrisknet/errors.hpp"

namespace frn {

Matrix minmax_scale_columns(const Matrix& m, std::vector<std::string>* warnings) {
  if (m.rows() < 1) throw std::invalid_argument("minmax_scale_columns: empty matrix");
  Matrix out(m.rows(), m.cols());
  for (std::size_t j = 0; j < m.cols(); ++j) {
    double lo = m(0, j), hi = m(0, j);
    for (std::size_t i = 1; i < m.rows(); ++i) {
      lo = std::min(lo, m(i, j));
      hi = std::max(hi, m(i, j));
    }
    if (hi == lo) {
      if (warnings) {
        warnings->push_back("minmax: column " + std::to_string(j) +
                            " is constant, mapped to zeros");
      }
      continue;
    }
    const double range = hi - lo;
    for (std::size_t i = 0; i < m.rows(); ++i) out(i, j) = (m(i, j) - lo) / range;
  }
  check_finite(out, "minmax_scale_columns");
  return out;
}

ClusterFeatureSummary cluster_feature_means(const Matrix& scaled,
                                            const std::vector<int>& labels) {
  if (labels.size() != scaled.rows()) {
    throw std::invalid_argument("cluster_feature_means: label count mismatch");
  }
  int k = 0;
  for (int label : labels) {
    if (label < 0) throw std::invalid_argument("cluster_feature_means: negative label");
    k = std::max(k, label + 1);
  }
  if (k == 0) throw std::invalid_argument("cluster_feature_means: no labels");
  ClusterFeatureSummary summary;
  summary.means = Matrix(static_cast<std::size_t>(k), scaled.cols());
  summary.counts.assign(static_cast<std::size_t>(k), 0);
  for (std::size_t i = 0; i < scaled.rows(); ++i) {
    const std::size_t c = static_cast<std::size_t>(labels[i]);
    summary.counts[c] += 1;
    for (std::size_t j = 0; j < scaled.cols(); ++j) summary.means(c, j) += scaled(i, j);
  }
  for (std::size_t c = 0; c < static_cast<std::size_t>(k); ++c) {
    if (summary.counts[c] == 0) {
      throw SchemaError("cluster_feature_means: cluster " + std::to_string(c) + " is empty");
    }
    for (std::size_t j = 0; j < scaled.cols(); ++j) {
      summary.means(c, j) /= static_cast<double>(summary.counts[c]);
    }
  }
  return summary;
}

RiskComponents aggregate_risk_components(const ClusterFeatureSummary& summary) {
  if (summary.means.cols() != kFeatureCount) {
    throw std::invalid_argument("aggregate_risk_components: expected 10 feature columns");
  }
  const std::size_t k = summary.means.rows();
  RiskComponents out;
  out.hazard.resize(k);
  out.exposure.resize(k);
  out.vulnerability.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    out.hazard[c] = summary.means(c, kColFloodFrequency) + summary.means(c, kColFloodIntensity);
    out.exposure[c] = summary.means(c, kColPopulation) + summary.means(c, kColBuildingArea);
    out.vulnerability[c] = summary.means(c, kColPovertyRate) +
                           summary.means(c, kColDisabilityRate) +
                           summary.means(c, kColLimitedEnglishRate) +
                           summary.means(c, kColPoiCount) +
                           summary.means(c, kColRecipFoundationHeight) +
                           summary.means(c, kColBuildingAge);
  }
  return out;
}

std::vector<double> compute_risk_values(const RiskComponents& components) {
  const std::size_t k = components.hazard.size();
  std::vector<double> out(k);
  for (std::size_t c = 0; c < k; ++c) {
    out[c] = components.hazard[c] * components.exposure[c] * components.vulnerability[c];
  }
  return out;
}

std::vector<int> assign_risk_levels(const std::vector<double>& risk_values) {
  if (risk_values.empty()) throw std::invalid_argument("assign_risk_levels: no clusters");
  std::vector<std::size_t> order(risk_values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return risk_values[a] < risk_values[b];  // ties keep the smaller cluster index
  });
  std::vector<int> levels(risk_values.size());
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    levels[order[rank]] = static_cast<int>(rank) + 1;
  }
  return levels;
}

RiskLevelTable rate_clusters(const FeatureMatrix& fr, const std::vector<int>& labels,
                             std::vector<std::string>* warnings) {
  RiskLevelTable table;
  const Matrix scaled = minmax_scale_columns(fr.fr, warnings);
  const ClusterFeatureSummary summary = cluster_feature_means(scaled, labels);
  table.components = aggregate_risk_components(summary);
  table.risk_values = compute_risk_values(table.components);
  table.levels = assign_risk_levels(table.risk_values);
  table.cell_cluster = labels;
  table.cell_level.resize(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    table.cell_level[i] = table.levels[static_cast<std::size_t>(labels[i])];
  }
  return table;
}

}  // namespace frn
