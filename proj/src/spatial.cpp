#include "floodrisknet/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include "floodrisknet/errors.hpp"
#include "floodrisknet/rng.hpp"

namespace frn {

SimilarityReport embedding_similarity_report(const Matrix& embeddings,
                                             const std::vector<int>& levels) {
  const std::size_t m = embeddings.rows();
  if (levels.size() != m) {
    throw SchemaError("embedding_similarity_report: " + std::to_string(levels.size()) +
                      " levels for " + std::to_string(m) + " cells");
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (levels[i] < 1) {
      throw SchemaError("embedding_similarity_report: missing level for cell " +
                        std::to_string(i));
    }
  }

  SimilarityReport report;
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return levels[a] < levels[b]; });
  report.ordering.reserve(m);
  Matrix sorted(m, embeddings.cols());
  std::vector<int> sorted_levels(m);
  for (std::size_t i = 0; i < m; ++i) {
    report.ordering.push_back(static_cast<std::int64_t>(order[i]));
    sorted_levels[i] = levels[order[i]];
    for (std::size_t j = 0; j < embeddings.cols(); ++j) sorted(i, j) = embeddings(order[i], j);
  }
  report.similarity = cosine_similarity_matrix(sorted);

  report.levels_present = levels;
  std::sort(report.levels_present.begin(), report.levels_present.end());
  report.levels_present.erase(
      std::unique(report.levels_present.begin(), report.levels_present.end()),
      report.levels_present.end());
  const std::size_t n_levels = report.levels_present.size();
  std::map<int, std::size_t> level_index;
  for (std::size_t i = 0; i < n_levels; ++i) level_index[report.levels_present[i]] = i;

  Matrix pair_sum(n_levels, n_levels);
  Matrix pair_count(n_levels, n_levels);
  double inner_sum = 0.0, between_sum = 0.0, adjacent_sum = 0.0, distant_sum = 0.0;
  std::size_t inner_n = 0, between_n = 0, adjacent_n = 0, distant_n = 0;
  const int max_gap = report.levels_present.back() - report.levels_present.front();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (i == j) continue;
      const double s = report.similarity(i, j);
      const std::size_t a = level_index[sorted_levels[i]];
      const std::size_t b = level_index[sorted_levels[j]];
      pair_sum(a, b) += s;
      pair_count(a, b) += 1.0;
      const int gap = std::abs(sorted_levels[i] - sorted_levels[j]);
      if (gap == 0) {
        inner_sum += s;
        ++inner_n;
      } else {
        between_sum += s;
        ++between_n;
        if (gap == 1) {
          adjacent_sum += s;
          ++adjacent_n;
        }
        if (gap == max_gap) {
          distant_sum += s;
          ++distant_n;
        }
      }
    }
  }
  report.level_pair_mean = Matrix(n_levels, n_levels);
  for (std::size_t a = 0; a < n_levels; ++a) {
    for (std::size_t b = 0; b < n_levels; ++b) {
      if (pair_count(a, b) > 0.0) {
        report.level_pair_mean(a, b) = pair_sum(a, b) / pair_count(a, b);
      }
    }
  }
  report.inner_mean = inner_n ? inner_sum / static_cast<double>(inner_n) : 0.0;
  report.between_mean = between_n ? between_sum / static_cast<double>(between_n) : 0.0;
  report.adjacent_mean = adjacent_n ? adjacent_sum / static_cast<double>(adjacent_n) : 0.0;
  report.most_distant_mean = distant_n ? distant_sum / static_cast<double>(distant_n) : 0.0;
  return report;
}

namespace {

double morans_i_prepared(const std::vector<double>& dev, double dev_sq_sum, const Matrix& w,
                         double s0) {
  const std::size_t n = dev.size();
  double num = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double wij = w(i, j);
      if (wij != 0.0) num += wij * dev[i] * dev[j];
    }
  }
  return static_cast<double>(n) / s0 * num / dev_sq_sum;
}

}  // namespace

double global_morans_i(std::span<const double> values, const Matrix& weights,
                       bool row_standardize) {
  const std::size_t n = values.size();
  if (n < 2) throw std::invalid_argument("global_morans_i: need at least 2 cells");
  if (weights.rows() != n || weights.cols() != n) {
    throw std::invalid_argument("global_morans_i: weights must be n x n");
  }
  Matrix w = weights;
  for (std::size_t i = 0; i < n; ++i) w(i, i) = 0.0;
  if (row_standardize) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += w(i, j);
      if (s != 0.0) {
        for (std::size_t j = 0; j < n; ++j) w(i, j) /= s;
      }
    }
  }
  double s0 = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s0 += w.data()[i];
  if (s0 == 0.0) throw NumericError("global_morans_i: all weights are zero");

  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n);
  std::vector<double> dev(n);
  double dev_sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    dev[i] = values[i] - mean;
    dev_sq += dev[i] * dev[i];
  }
  if (dev_sq == 0.0) throw NumericError("global_morans_i: values have zero variance");
  return morans_i_prepared(dev, dev_sq, w, s0);
}

double permutation_pvalue(std::span<const double> values, const Matrix& weights,
                          std::size_t permutations, std::uint64_t seed,
                          bool row_standardize) {
  if (permutations < 1) throw std::invalid_argument("permutation_pvalue: need R >= 1");
  const double observed = global_morans_i(values, weights, row_standardize);
  std::vector<double> shuffled(values.begin(), values.end());
  Rng rng(seed);
  std::size_t at_least = 0;
  for (std::size_t r = 0; r < permutations; ++r) {
    rng.shuffle(shuffled);
    if (global_morans_i(shuffled, weights, row_standardize) >= observed) ++at_least;
  }
  return static_cast<double>(1 + at_least) / static_cast<double>(permutations + 1);
}

double gini(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n == 0) throw std::invalid_argument("gini: empty input");
  double mean = 0.0;
  for (double v : values) {
    if (v < 0.0) throw std::invalid_argument("gini: negative value");
    mean += v;
  }
  mean /= static_cast<double>(n);
  if (mean == 0.0) return 0.0;  // all zeros
  double abs_diff_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) abs_diff_sum += std::abs(values[i] - values[j]);
  }
  return abs_diff_sum / (2.0 * static_cast<double>(n) * static_cast<double>(n) * mean);
}

std::vector<CityRiskSummary> city_risk_summary(const GridSpec& grid,
                                               const std::vector<int>& cell_levels,
                                               std::int64_t population_threshold) {
  if (cell_levels.size() != grid.cells.size()) {
    throw SchemaError("city_risk_summary: level count does not match cell count");
  }
  std::map<std::int64_t, std::vector<double>> members;
  std::map<std::int64_t, std::int64_t> populations;
  for (std::size_t i = 0; i < grid.cells.size(); ++i) {
    const CellRecord& c = grid.cells[i];
    if (!c.city_id) continue;
    members[*c.city_id].push_back(static_cast<double>(cell_levels[i]));
    if (c.city_population) populations.emplace(*c.city_id, *c.city_population);
  }
  std::vector<CityRiskSummary> out;
  for (const auto& [city, levels] : members) {
    const auto pop = populations.find(city);
    const std::int64_t population = pop == populations.end() ? 0 : pop->second;
    if (population <= population_threshold) continue;
    CityRiskSummary s;
    s.city_id = city;
    s.population = population;
    s.member_count = levels.size();
    double mean = 0.0;
    for (double v : levels) mean += v;
    s.mean_level = mean / static_cast<double>(levels.size());
    s.inequality = gini(levels);
    out.push_back(s);
  }
  return out;
}

namespace {

// Regularized incomplete beta via the Lentz continued fraction.
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

double regularized_incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                       a * std::log(x) + b * std::log(1.0 - x);
  const double bt = std::exp(ln_bt);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return bt * beta_continued_fraction(a, b, x) / a;
  }
  return 1.0 - bt * beta_continued_fraction(b, a, 1.0 - x) / b;
}

}  // namespace

Correlation pearson_correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("pearson_correlation: length mismatch");
  }
  const std::size_t n = x.size();
  if (n < 3) throw std::invalid_argument("pearson_correlation: need at least 3 points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw NumericError("pearson_correlation: zero variance");
  }
  Correlation out;
  out.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  const double df = static_cast<double>(n - 2);
  const double one_minus_r2 = 1.0 - out.r * out.r;
  if (one_minus_r2 <= 0.0) {
    out.p = 0.0;
  } else {
    const double t_sq = out.r * out.r * df / one_minus_r2;
    out.p = regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t_sq));
  }
  return out;
}

Matrix rook_adjacency(const GridSpec& grid) {
  const std::size_t m = grid.cells.size();
  Matrix w(m, m);
  std::map<std::pair<int, int>, std::size_t> by_pos;
  for (std::size_t i = 0; i < m; ++i) {
    by_pos[{grid.cells[i].row, grid.cells[i].col}] = i;
  }
  constexpr int kOffsets[4][2] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}};
  for (std::size_t i = 0; i < m; ++i) {
    for (const auto& off : kOffsets) {
      const auto it = by_pos.find({grid.cells[i].row + off[0], grid.cells[i].col + off[1]});
      if (it != by_pos.end()) {
        w(i, it->second) = 1.0;
        w(it->second, i) = 1.0;
      }
    }
  }
  return w;
}

}  // namespace frn
