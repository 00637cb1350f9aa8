#include "floodrisknet/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "floodrisknet/rng.hpp"

namespace frn {

namespace {

struct ColumnMap {
  double center;
  double scale;
  double lo;
  double hi;
};

// Affine maps from the latent space into plausible feature ranges. Affine so
// that z-scoring recovers the latent geometry; the clamps are guards that do
// not trigger at default settings.
constexpr ColumnMap kColumnMaps[9] = {
    {5000.0, 800.0, 0.0, 1e12},   // flood_intensity (mean claim per event)
    {3000.0, 400.0, 0.0, 1e12},   // population
    {50000.0, 8000.0, 0.0, 1e12}, // building_area
    {0.3, 0.04, 0.0, 1.0},        // poverty_rate
    {0.2, 0.03, 0.0, 1.0},        // disability_rate
    {0.15, 0.02, 0.0, 1.0},       // limited_english_rate
    {40.0, 6.0, 0.0, 1e12},       // poi_count
    {35.0, 5.0, 0.0, 1e12},       // building_age
    {1.2, 0.15, 0.0, 1e12},       // recip_foundation_height
};

}  // namespace

SyntheticData generate_synthetic(const SyntheticConfig& cfg) {
  if (cfg.m == 0) throw std::invalid_argument("generate_synthetic: m must be positive");
  if (cfg.k_planted == 0 || cfg.k_planted > cfg.m) {
    throw std::invalid_argument("generate_synthetic: need 1 <= k_planted <= m");
  }
  if (cfg.d_bf == 0) throw std::invalid_argument("generate_synthetic: d_bf must be positive");

  SyntheticData out;

  // Grid: near-square tiling, row-major ids, last row possibly partial.
  const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(cfg.m))));
  const int rows = static_cast<int>((cfg.m + cols - 1) / static_cast<std::size_t>(cols));
  out.grid.cell_size = cfg.cell_size;
  out.grid.rows = rows;
  out.grid.cols = cols;
  out.grid.bbox = {0.0, 0.0, cols * cfg.cell_size, rows * cfg.cell_size};
  out.grid.cells.reserve(cfg.m);
  for (std::size_t id = 0; id < cfg.m; ++id) {
    CellRecord c;
    c.cell_id = static_cast<std::int64_t>(id);
    c.row = static_cast<int>(id) / cols;
    c.col = static_cast<int>(id) % cols;
    c.min_x = c.col * cfg.cell_size;
    c.min_y = c.row * cfg.cell_size;
    c.max_x = c.min_x + cfg.cell_size;
    c.max_y = c.min_y + cfg.cell_size;
    out.grid.cells.push_back(c);
  }

  // Planted blocks: contiguous runs of row-major ids give horizontal bands,
  // which are spatially contiguous; the non-contiguous variant shuffles the
  // cell-to-block assignment.
  const std::size_t k = cfg.k_planted;
  out.labels.resize(cfg.m);
  for (std::size_t i = 0; i < cfg.m; ++i) {
    out.labels[i] = static_cast<int>(i * k / cfg.m);
  }
  if (!cfg.spatial_contiguity) {
    Rng rng(derive_seed(cfg.seed, "synthetic-shuffle"));
    rng.shuffle(out.labels);
  }

  // BF: each block floods often during its own week band and rarely outside.
  Rng bf_rng(derive_seed(cfg.seed, "synthetic-bf"));
  out.bf.bf = Matrix(cfg.m, cfg.d_bf);
  for (std::size_t i = 0; i < cfg.m; ++i) {
    const std::size_t band_lo = static_cast<std::size_t>(out.labels[i]) * cfg.d_bf / k;
    const std::size_t band_hi = (static_cast<std::size_t>(out.labels[i]) + 1) * cfg.d_bf / k;
    for (std::size_t w = 0; w < cfg.d_bf; ++w) {
      const bool active = w >= band_lo && w < band_hi;
      const double p = active ? cfg.active_week_rate : cfg.background_week_rate;
      if (bf_rng.bernoulli(p)) {
        out.bf.bf(i, w) = 1.0;
        out.events.push_back({static_cast<std::int64_t>(i), static_cast<std::int64_t>(w)});
      }
    }
  }

  // FR: latent centroids sit on distinct axes scaled so pairwise centroid
  // distance equals `separation` (for k <= 9); separation 0 collapses them.
  const double axis_scale = cfg.separation / std::sqrt(2.0);
  std::vector<std::array<double, 9>> centroids(k, std::array<double, 9>{});
  if (k <= 9) {
    for (std::size_t b = 0; b < k; ++b) centroids[b][b % 9] = axis_scale;
  } else {
    Rng dir_rng(derive_seed(cfg.seed, "synthetic-centroids"));
    for (std::size_t b = 0; b < k; ++b) {
      double norm_sq = 0.0;
      for (double& v : centroids[b]) {
        v = dir_rng.normal();
        norm_sq += v * v;
      }
      const double inv = norm_sq > 0.0 ? axis_scale / std::sqrt(norm_sq) : 0.0;
      for (double& v : centroids[b]) v *= inv;
    }
  }

  Rng fr_rng(derive_seed(cfg.seed, "synthetic-fr"));
  out.fr.fr = Matrix(cfg.m, kFeatureCount);
  for (std::size_t i = 0; i < cfg.m; ++i) {
    // flood_frequency = number of distinct flood weeks for the cell
    double weeks = 0.0;
    for (std::size_t w = 0; w < cfg.d_bf; ++w) weeks += out.bf.bf(i, w);
    out.fr.fr(i, kColFloodFrequency) = weeks;
    const auto& centroid = centroids[static_cast<std::size_t>(out.labels[i])];
    for (std::size_t d = 0; d < 9; ++d) {
      const double latent = centroid[d] + cfg.noise_sigma * fr_rng.normal();
      const ColumnMap& map = kColumnMaps[d];
      out.fr.fr(i, d + 1) = std::clamp(map.center + map.scale * latent, map.lo, map.hi);
    }
  }

  // Cities: coarse rectangle partition with per-city populations.
  const int cgx = std::max(1, cfg.city_grid_x);
  const int cgy = std::max(1, cfg.city_grid_y);
  Rng city_rng(derive_seed(cfg.seed, "synthetic-cities"));
  std::vector<std::int64_t> city_pop(static_cast<std::size_t>(cgx) * cgy);
  for (auto& p : city_pop) {
    p = cfg.city_pop_min +
        static_cast<std::int64_t>(city_rng.below(
            static_cast<std::uint64_t>(cfg.city_pop_max - cfg.city_pop_min + 1)));
  }
  for (CellRecord& c : out.grid.cells) {
    const int cx = std::min(c.col * cgx / cols, cgx - 1);
    const int cy = std::min(c.row * cgy / rows, cgy - 1);
    const int city = cy * cgx + cx;
    c.city_id = city;
    c.city_population = city_pop[static_cast<std::size_t>(city)];
  }

  return out;
}

}  // namespace frn
