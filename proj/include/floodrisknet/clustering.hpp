// Deep clustering over the standardized feature matrix on the learned
// dependence network: an autoencoder captures feature interactions, a GCN
// propagates them over the network, the two paths are fused layer by layer,
// and a dual self-training loss (KL against a sharpened target distribution)
// refines soft cluster assignments.

#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "floodrisknet/autodiff.hpp"
#include "floodrisknet/matrix.hpp"
#include "floodrisknet/rng.hpp"

namespace frn {

struct ClusterModelConfig {
  std::vector<int> encoder_widths = {64, 32, 16};  // hidden widths after the input layer
  int cluster_count = 6;     // K
  double fusion_epsilon = 0.5;
  double t_dof = 1.0;        // degrees of freedom of the assignment kernel
  // Use the literal printed "/2" in the assignment kernel instead of the
  // Student-t "/dof" convention.
  bool literal_halved_kernel = false;
  double alpha = 0.1;        // weight of KL(P || Z)
  double beta = 0.01;        // weight of KL(P || Q)
  int pretrain_epochs = 200;
  int train_epochs = 300;
  double learning_rate = 1e-3;
  int p_update_period = 5;
  std::uint64_t seed = 0;
  int kmeans_restarts = 20;
};

struct AutoencoderParams {
  std::vector<Parameter> enc_w, enc_b;
  std::vector<Parameter> dec_w, dec_b;
  std::vector<Parameter*> all();
};

// Encoder layers are ReLU(x W + b); the decoder mirrors them with a linear
// final layer so signed z-scores are reconstructible.
AutoencoderParams make_autoencoder_params(std::size_t input_dim,
                                          const std::vector<int>& encoder_widths, Rng& rng);

struct AutoencoderForward {
  std::vector<Var> hidden;  // H^(1) .. H^(L); back() is the bottleneck
  Var reconstruction;
};
AutoencoderForward autoencoder_forward(Tape& tape, Var x, AutoencoderParams& params);

// L_res = (1/2N) sum_i ||x_i - x_hat_i||^2 with N = number of rows.
Var reconstruction_loss(Tape& tape, Var x, Var x_hat);
double reconstruction_loss(const Matrix& x, const Matrix& x_hat);

struct GcnParams {
  std::vector<Parameter> w;  // layer l: width_{l-1} x width_l
  Parameter w_final;         // bottleneck width x K
  std::vector<Parameter*> all();
};
GcnParams make_gcn_params(std::size_t input_dim, const std::vector<int>& widths,
                          int cluster_count, Rng& rng);

struct FusedGcnForward {
  std::vector<Var> layers;  // Z^(1) .. Z^(L)
  Var logits;               // pre-softmax output, m x K
};

// Layer l consumes (1-eps)H^(l-1) + eps Z^(l-1) (the first layer consumes the
// input directly, where both paths coincide); every layer convolves with the
// self-loop-normalized adjacency. The final assignment layer is linear.
FusedGcnForward fused_gcn_forward(Tape& tape, Var fr, Var norm_adjacency,
                                  const std::vector<Var>& hidden, GcnParams& params,
                                  double epsilon);

// Z = row softmax of the final conv output; hard labels are the row argmax,
// ties broken toward the smaller cluster index.
std::pair<Matrix, std::vector<int>> cluster_assignment(const Matrix& logits);

// q_ik proportional to (1 + ||h_i - u_k||^2 / divisor)^(-(dof+1)/2), rows
// normalized; divisor is `dof` or the literal 2 depending on the switch.
Var ancillary_distribution(Tape& tape, Var h, Var centers, double dof,
                           bool literal_halved = false);
Matrix ancillary_distribution(const Matrix& h, const Matrix& centers, double dof,
                              bool literal_halved = false);

// p_ik = (q_ik^2 / f_k) / sum_j (q_ij^2 / f_j),  f_k = sum_i q_ik.
Matrix target_distribution(const Matrix& q);

struct ClusteringLosses {
  double reconstruction = 0.0;
  double cluster = 0.0;   // KL(P || Z)
  double target = 0.0;    // KL(P || Q)
  double total = 0.0;
};
ClusteringLosses clustering_losses(const Matrix& p, const Matrix& z, const Matrix& q,
                                   double reconstruction, double alpha, double beta);

// Best-inertia k-means++ over `restarts` seeded runs.
Matrix kmeans_init_centers(const Matrix& points, std::size_t k, int restarts,
                           std::uint64_t seed);

struct PretrainResult {
  AutoencoderParams params;
  Matrix bottleneck;
  std::vector<double> loss_history;
};
PretrainResult pretrain_autoencoder(const Matrix& fr_std, const ClusterModelConfig& config);

struct ClusterState {
  Matrix h;        // m x d_emb bottleneck embedding
  Matrix z;        // m x K soft assignment
  Matrix q;        // m x K ancillary distribution
  Matrix p;        // m x K target distribution
  Matrix centers;  // K x d_emb
  std::vector<int> labels;        // dense labels over nonempty clusters
  std::vector<int> cluster_remap; // trained index -> dense index, -1 if dropped
  int k_effective = 0;
  std::vector<std::string> warnings;
};

struct ClusterTrainResult {
  ClusterState state;
  std::vector<ClusteringLosses> loss_history;
};

using ClusterEpochObserver = std::function<void(int epoch, const Matrix& z, const Matrix& q,
                                                const Matrix& p, const ClusteringLosses&)>;

ClusterTrainResult train_clustering(const Matrix& fr_std, const Matrix& a_star,
                                    const ClusterModelConfig& config,
                                    const ClusterEpochObserver& observer = nullptr);

// Mean silhouette coefficient on Euclidean distances; singleton clusters
// score 0, fewer than two clusters scores -1.
double silhouette_score(const Matrix& points, const std::vector<int>& labels);

struct SweepRow {
  int cluster_count = 0;
  double silhouette = 0.0;
  double final_loss = 0.0;
};
std::vector<SweepRow> sweep_cluster_count(const Matrix& fr_std, const Matrix& a_star,
                                          int k_lo, int k_hi,
                                          const ClusterModelConfig& config);

}  // namespace frn
