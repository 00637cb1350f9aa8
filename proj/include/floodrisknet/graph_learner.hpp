// Learns the spatial flood-dependence network from the binary occurrence
// matrix. An MLP embeds BF rows, the learned adjacency is the ReLU-clipped
// cosine similarity of the embeddings, and the embedding parameters are
// trained by contrasting a GCN encoding of the learned graph view against a
// KNN anchor view under the NT-Xent loss. The anchor drifts toward the
// learned graph through a slow bootstrap step.

#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "floodrisknet/autodiff.hpp"
#include "floodrisknet/matrix.hpp"
#include "floodrisknet/rng.hpp"

namespace frn {

struct GraphLearnerConfig {
  int embed_layers = 2;        // L_en
  int knn_k = 10;              // clamped to m-1 for tiny instances
  double temperature = 0.5;    // t
  double mask_prob = 0.3;      // p_m, feature-column masking
  double edge_drop_prob = 0.3; // p_d, symmetric edge dropping
  double bootstrap_tau = 0.99; // tau
  int bootstrap_period = 10;   // anchor update every this many epochs
  int encoder_width = 64;      // d_1
  int projector_width = 32;    // d_2
  int epochs = 500;
  double learning_rate = 1e-2;
  std::uint64_t seed = 0;
  // Denominator convention for the contrastive loss. The default keeps the
  // positive pair in the denominator (proper cross-entropy, always >= 0);
  // the alternative drops it, as a strict reading of the printed indicator.
  bool include_positive_in_denominator = true;
  // Entries of the final network strictly below this threshold are zeroed.
  double sparsify_threshold = 0.0;
};

struct SpatialDependenceGraph {
  Matrix a_star;  // symmetric, zero diagonal, entries in [0,1]
};

struct GraphTrainResult {
  SpatialDependenceGraph graph;
  std::vector<double> loss_history;
};

struct AugmentedView {
  Matrix adjacency;
  Matrix features;
  Matrix column_mask;  // 1 x d, 0 = masked feature column
  Matrix edge_mask;    // m x m symmetric 0/1, diagonal 1
  std::uint64_t seed = 0;
};

// E = L_en layers of row-normalized ReLU(E Omega); omega[l] must be square
// d_bf x d_bf. Returned rows have norm 1 or 0.
Var embed_for_similarity(Tape& tape, Var bf, const std::vector<Var>& omega);
Matrix embed_for_similarity(const Matrix& bf, const std::vector<Matrix>& omega);

// ReLU(cosine similarity of embedding rows) with the diagonal zeroed.
Var learned_adjacency(Tape& tape, Var embedding);
Matrix learned_adjacency(const Matrix& embedding);

// Cosine similarity of BF rows; keeps each row's k largest off-diagonal
// entries (ties broken toward the smaller column index), clamps kept values
// at 0, symmetrizes by elementwise max, zeroes the diagonal.
Matrix build_knn_graph(const Matrix& bf, int k);

AugmentedView augment_view(const Matrix& adjacency, const Matrix& features, double mask_prob,
                           double edge_drop_prob, std::uint64_t seed);

// Masks drawn per epoch from the shared training stream, column flags first,
// then edge pairs (i < j) in lexicographic order.
struct ViewMasks {
  Matrix column_mask;  // 1 x d
  Matrix edge_mask;    // m x m symmetric, diagonal 1
};
ViewMasks draw_view_masks(std::size_t m, std::size_t d, double mask_prob, double edge_drop_prob,
                          Rng& rng);

// Expands a 1 x d column mask to an m x d mask for elementwise application.
Matrix expand_column_mask(const Matrix& column_mask, std::size_t m);

// Two-layer GCN encoder (theta) followed by a two-layer MLP projector (xi);
// both parameter sets are shared across views.
struct ContrastiveParams {
  Parameter enc_w1;
  Parameter enc_w2;
  Parameter proj_w1;
  Parameter proj_b1;
  Parameter proj_w2;
  Parameter proj_b2;

  std::vector<Parameter*> all();
};

Var contrastive_embed(Tape& tape, Var adjacency, Var features, ContrastiveParams& params);

// Symmetric NT-Xent over cross-view cosine similarities (Eq. of SimCLR kind).
Var nt_xent_loss(Tape& tape, Var z_k, Var z_l, double temperature,
                 bool include_positive_in_denominator = true);
double nt_xent_loss(const Matrix& z_k, const Matrix& z_l, double temperature,
                    bool include_positive_in_denominator = true);

// K' = tau*K + (1-tau)*A~  (elementwise convex combination).
Matrix bootstrap_anchor(const Matrix& knn, const Matrix& learned, double tau);

// Called after each epoch's parameter update with the fresh network.
using GraphEpochObserver =
    std::function<void(int epoch, const Matrix& a_star, double loss)>;

GraphTrainResult train_graph_structure(const Matrix& bf, const GraphLearnerConfig& config,
                                       const GraphEpochObserver& observer = nullptr);

// Plain counterpart of Tape::normalize_adjacency for fixed graphs.
Matrix normalized_adjacency(const Matrix& a);

}  // namespace frn
