// Desk-scale synthetic dataset with planted structure: spatially contiguous
// blocks that share both a feature centroid (FR) and a weekly flood-activity
// profile (BF), so the planted partition is recoverable from either input.
// Fully deterministic per seed.

#pragma once

#include <cstdint>
#include <vector>

#include "floodrisknet/ingest.hpp"

namespace frn {

struct SyntheticConfig {
  std::uint64_t seed = 0;
  std::size_t m = 150;
  std::size_t d_bf = 52;
  std::size_t k_planted = 3;
  double separation = 4.0;  // pairwise distance between latent block centroids
  bool spatial_contiguity = true;
  double cell_size = 2000.0;
  double noise_sigma = 0.5;
  // Weekly flood probabilities inside/outside a block's active week band.
  double active_week_rate = 0.6;
  double background_week_rate = 0.05;
  // Cities are planted as a coarse rectangle partition of the grid with
  // populations in [city_pop_min, city_pop_max]; analysis filters on these.
  int city_grid_x = 3;
  int city_grid_y = 2;
  std::int64_t city_pop_min = 8000;
  std::int64_t city_pop_max = 120000;
};

struct SyntheticData {
  GridSpec grid;
  FloodOccurrenceMatrix bf;
  FeatureMatrix fr;
  std::vector<int> labels;           // planted block per cell, 0..k_planted-1
  std::vector<FloodEvent> events;    // the raw events behind bf
};

SyntheticData generate_synthetic(const SyntheticConfig& cfg);

}  // namespace frn
