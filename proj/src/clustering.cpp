#include "floodrisknet/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "floodrisknet/errors.hpp"
#include "floodrisknet/graph_learner.hpp"
#include "floodrisknet/optim.hpp"

namespace frn {

std::vector<Parameter*> AutoencoderParams::all() {
  std::vector<Parameter*> out;
  for (auto& p : enc_w) out.push_back(&p);
  for (auto& p : enc_b) out.push_back(&p);
  for (auto& p : dec_w) out.push_back(&p);
  for (auto& p : dec_b) out.push_back(&p);
  return out;
}

std::vector<Parameter*> GcnParams::all() {
  std::vector<Parameter*> out;
  for (auto& p : w) out.push_back(&p);
  out.push_back(&w_final);
  return out;
}

AutoencoderParams make_autoencoder_params(std::size_t input_dim,
                                          const std::vector<int>& encoder_widths, Rng& rng) {
  if (encoder_widths.empty()) {
    throw std::invalid_argument("make_autoencoder_params: need at least one encoder layer");
  }
  AutoencoderParams params;
  std::size_t in = input_dim;
  for (std::size_t l = 0; l < encoder_widths.size(); ++l) {
    const std::size_t out = static_cast<std::size_t>(encoder_widths[l]);
    params.enc_w.emplace_back("enc_w" + std::to_string(l + 1), glorot_uniform(in, out, rng));
    params.enc_b.emplace_back("enc_b" + std::to_string(l + 1), Matrix(1, out));
    in = out;
  }
  for (std::size_t l = encoder_widths.size(); l-- > 0;) {
    const std::size_t out =
        l == 0 ? input_dim : static_cast<std::size_t>(encoder_widths[l - 1]);
    const std::size_t layer = encoder_widths.size() - l;
    params.dec_w.emplace_back("dec_w" + std::to_string(layer),
                              glorot_uniform(in, out, rng));
    params.dec_b.emplace_back("dec_b" + std::to_string(layer), Matrix(1, out));
    in = out;
  }
  return params;
}

AutoencoderForward autoencoder_forward(Tape& tape, Var x, AutoencoderParams& params) {
  if (params.enc_w.empty() || params.enc_w.size() != params.dec_w.size()) {
    throw std::invalid_argument("autoencoder_forward: malformed parameter set");
  }
  AutoencoderForward fwd;
  Var h = x;
  for (std::size_t l = 0; l < params.enc_w.size(); ++l) {
    h = tape.relu(tape.add_row_broadcast(tape.matmul(h, tape.param(params.enc_w[l])),
                                         tape.param(params.enc_b[l])));
    fwd.hidden.push_back(h);
  }
  Var d = h;
  for (std::size_t l = 0; l < params.dec_w.size(); ++l) {
    d = tape.add_row_broadcast(tape.matmul(d, tape.param(params.dec_w[l])),
                               tape.param(params.dec_b[l]));
    if (l + 1 < params.dec_w.size()) d = tape.relu(d);  // final layer stays linear
  }
  fwd.reconstruction = d;
  return fwd;
}

Var reconstruction_loss(Tape& tape, Var x, Var x_hat) {
  const Matrix& xv = tape.value(x);
  if (!xv.same_shape(tape.value(x_hat))) {
    throw std::invalid_argument("reconstruction_loss: shape mismatch");
  }
  Var diff = tape.sub(x, x_hat);
  return tape.scale(tape.sum(tape.hadamard(diff, diff)),
                    1.0 / (2.0 * static_cast<double>(xv.rows())));
}

double reconstruction_loss(const Matrix& x, const Matrix& x_hat) {
  Tape tape;
  return tape.scalar(reconstruction_loss(tape, tape.constant(x), tape.constant(x_hat)));
}

GcnParams make_gcn_params(std::size_t input_dim, const std::vector<int>& widths,
                          int cluster_count, Rng& rng) {
  if (cluster_count < 1) throw std::invalid_argument("make_gcn_params: cluster_count >= 1");
  GcnParams params;
  std::size_t in = input_dim;
  for (std::size_t l = 0; l < widths.size(); ++l) {
    const std::size_t out = static_cast<std::size_t>(widths[l]);
    params.w.emplace_back("gcn_w" + std::to_string(l + 1), glorot_uniform(in, out, rng));
    in = out;
  }
  params.w_final = Parameter("gcn_w_final",
                             glorot_uniform(in, static_cast<std::size_t>(cluster_count), rng));
  return params;
}

FusedGcnForward fused_gcn_forward(Tape& tape, Var fr, Var norm_adjacency,
                                  const std::vector<Var>& hidden, GcnParams& params,
                                  double epsilon) {
  if (hidden.size() != params.w.size()) {
    throw std::invalid_argument("fused_gcn_forward: hidden layer count (" +
                                std::to_string(hidden.size()) + ") must match GCN depth (" +
                                std::to_string(params.w.size()) + ")");
  }
  FusedGcnForward fwd;
  Var z = fr;
  for (std::size_t l = 0; l < params.w.size(); ++l) {
    Var input = z;
    if (l > 0) {
      const Matrix& hv = tape.value(hidden[l - 1]);
      if (!hv.same_shape(tape.value(z))) {
        throw std::invalid_argument("fused_gcn_forward: width mismatch at layer " +
                                    std::to_string(l + 1) + ": autoencoder " +
                                    shape_string(hv) + " vs GCN " +
                                    shape_string(tape.value(z)));
      }
      input = tape.add(tape.scale(hidden[l - 1], 1.0 - epsilon), tape.scale(z, epsilon));
    }
    z = tape.relu(tape.matmul(tape.matmul(norm_adjacency, input), tape.param(params.w[l])));
    fwd.layers.push_back(z);
  }
  fwd.logits = tape.matmul(tape.matmul(norm_adjacency, z), tape.param(params.w_final));
  return fwd;
}

std::pair<Matrix, std::vector<int>> cluster_assignment(const Matrix& logits) {
  Matrix z = row_softmax(logits);
  std::vector<int> labels(z.rows());
  for (std::size_t i = 0; i < z.rows(); ++i) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < z.cols(); ++k) {
      if (z(i, k) > z(i, best)) best = k;  // ties keep the smaller index
    }
    labels[i] = static_cast<int>(best);
  }
  return {std::move(z), std::move(labels)};
}

Var ancillary_distribution(Tape& tape, Var h, Var centers, double dof, bool literal_halved) {
  const Matrix& cv = tape.value(centers);
  if (cv.rows() == 0) throw std::invalid_argument("ancillary_distribution: no centers");
  const double divisor = literal_halved ? 2.0 : dof;
  Var d = tape.pairwise_sqdist(h, centers);
  return tape.row_normalize_sum(tape.student_t_kernel(d, divisor, dof));
}

Matrix ancillary_distribution(const Matrix& h, const Matrix& centers, double dof,
                              bool literal_halved) {
  Tape tape;
  return tape.value(ancillary_distribution(tape, tape.constant(h), tape.constant(centers), dof,
                                           literal_halved));
}

Matrix target_distribution(const Matrix& q) {
  const std::size_t m = q.rows();
  const std::size_t k = q.cols();
  std::vector<double> freq(k, 0.0);
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t i = 0; i < m; ++i) freq[j] += q(i, j);
    if (freq[j] <= 0.0) {
      throw NumericError("target_distribution: cluster " + std::to_string(j) +
                         " has zero soft frequency");
    }
  }
  Matrix p(m, k);
  for (std::size_t i = 0; i < m; ++i) {
    double row_sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      p(i, j) = q(i, j) * q(i, j) / freq[j];
      row_sum += p(i, j);
    }
    for (std::size_t j = 0; j < k; ++j) p(i, j) /= row_sum;
  }
  check_finite(p, "target_distribution");
  return p;
}

namespace {

double kl_divergence(const Matrix& p, const Matrix& q, const char* what) {
  if (!p.same_shape(q)) throw std::invalid_argument("kl_divergence: shape mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double pi = p.data()[i];
    if (pi <= 0.0) continue;
    const double qi = q.data()[i];
    if (qi <= 0.0) {
      throw NumericError(std::string(what) + ": zero probability where target > 0");
    }
    s += pi * std::log(pi / qi);
  }
  return s;
}

}  // namespace

ClusteringLosses clustering_losses(const Matrix& p, const Matrix& z, const Matrix& q,
                                   double reconstruction, double alpha, double beta) {
  ClusteringLosses losses;
  losses.reconstruction = reconstruction;
  losses.cluster = kl_divergence(p, z, "KL(P||Z)");
  losses.target = kl_divergence(p, q, "KL(P||Q)");
  losses.total = reconstruction + alpha * losses.cluster + beta * losses.target;
  return losses;
}

namespace {

double sqdist_rows(const Matrix& a, std::size_t i, const Matrix& b, std::size_t j) {
  double s = 0.0;
  for (std::size_t c = 0; c < a.cols(); ++c) {
    const double d = a(i, c) - b(j, c);
    s += d * d;
  }
  return s;
}

struct KmeansRun {
  Matrix centers;
  double inertia = std::numeric_limits<double>::infinity();
};

KmeansRun kmeans_single(const Matrix& points, std::size_t k, Rng& rng) {
  const std::size_t m = points.rows();
  const std::size_t dim = points.cols();
  Matrix centers(k, dim);

  // k-means++ seeding
  std::vector<double> dist2(m, std::numeric_limits<double>::infinity());
  std::size_t first = static_cast<std::size_t>(rng.below(m));
  for (std::size_t c = 0; c < dim; ++c) centers(0, c) = points(first, c);
  for (std::size_t chosen = 1; chosen < k; ++chosen) {
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      dist2[i] = std::min(dist2[i], sqdist_rows(points, i, centers, chosen - 1));
      total += dist2[i];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      pick = m - 1;
      for (std::size_t i = 0; i < m; ++i) {
        acc += dist2[i];
        if (acc >= target) {
          pick = i;
          break;
        }
      }
    }
    for (std::size_t c = 0; c < dim; ++c) centers(chosen, c) = points(pick, c);
  }

  // Lloyd iterations
  std::vector<int> labels(m, -1);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < m; ++i) {
      std::size_t best = 0;
      double best_d = sqdist_rows(points, i, centers, 0);
      for (std::size_t c = 1; c < k; ++c) {
        const double d = sqdist_rows(points, i, centers, c);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (labels[i] != static_cast<int>(best)) {
        labels[i] = static_cast<int>(best);
        changed = true;
      }
    }
    if (!changed && iter > 0) break;
    Matrix sums(k, dim);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t c = static_cast<std::size_t>(labels[i]);
      counts[c] += 1;
      for (std::size_t j = 0; j < dim; ++j) sums(c, j) += points(i, j);
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) {
        // move the empty center onto the point farthest from its center
        std::size_t far = 0;
        double far_d = -1.0;
        for (std::size_t i = 0; i < m; ++i) {
          const double d = sqdist_rows(points, i, centers,
                                       static_cast<std::size_t>(labels[i]));
          if (d > far_d) {
            far_d = d;
            far = i;
          }
        }
        for (std::size_t j = 0; j < dim; ++j) centers(c, j) = points(far, j);
        continue;
      }
      for (std::size_t j = 0; j < dim; ++j) {
        centers(c, j) = sums(c, j) / static_cast<double>(counts[c]);
      }
    }
  }

  KmeansRun run;
  run.centers = std::move(centers);
  run.inertia = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    double best_d = sqdist_rows(points, i, run.centers, 0);
    for (std::size_t c = 1; c < k; ++c) {
      best_d = std::min(best_d, sqdist_rows(points, i, run.centers, c));
    }
    run.inertia += best_d;
  }
  return run;
}

}  // namespace

Matrix kmeans_init_centers(const Matrix& points, std::size_t k, int restarts,
                           std::uint64_t seed) {
  if (k == 0 || k > points.rows()) {
    throw std::invalid_argument("kmeans_init_centers: need 1 <= k <= number of points");
  }
  if (restarts < 1) throw std::invalid_argument("kmeans_init_centers: restarts >= 1");
  KmeansRun best;
  for (int r = 0; r < restarts; ++r) {
    Rng rng(derive_seed(seed, "kmeans-restart-" + std::to_string(r)));
    KmeansRun run = kmeans_single(points, k, rng);
    if (run.inertia < best.inertia) best = std::move(run);
  }
  return best.centers;
}

PretrainResult pretrain_autoencoder(const Matrix& fr_std, const ClusterModelConfig& config) {
  Rng init_rng(derive_seed(config.seed, "cluster-ae-init"));
  PretrainResult result{make_autoencoder_params(fr_std.cols(), config.encoder_widths, init_rng),
                        Matrix(), {}};
  std::vector<Parameter*> params = result.params.all();
  const AdamOptions adam{config.learning_rate, 0.9, 0.999, 1e-8};
  for (int epoch = 1; epoch <= config.pretrain_epochs; ++epoch) {
    Tape tape;
    Var x = tape.constant(fr_std);
    AutoencoderForward fwd = autoencoder_forward(tape, x, result.params);
    Var loss = reconstruction_loss(tape, x, fwd.reconstruction);
    const double loss_value = tape.scalar(loss);
    if (!std::isfinite(loss_value)) {
      throw NumericError("pretrain_autoencoder: loss became non-finite at epoch " +
                         std::to_string(epoch));
    }
    for (Parameter* p : params) p->zero_grad();
    tape.backward(loss);
    adam_update_all(params, adam);
    result.loss_history.push_back(loss_value);
  }
  Tape tape;
  AutoencoderForward fwd = autoencoder_forward(tape, tape.constant(fr_std), result.params);
  result.bottleneck = tape.value(fwd.hidden.back());
  return result;
}

ClusterTrainResult train_clustering(const Matrix& fr_std, const Matrix& a_star,
                                    const ClusterModelConfig& config,
                                    const ClusterEpochObserver& observer) {
  const std::size_t m = fr_std.rows();
  if (a_star.rows() != m || a_star.cols() != m) {
    throw std::invalid_argument("train_clustering: A* must be m x m, got " +
                                shape_string(a_star));
  }
  if (config.cluster_count < 1 || static_cast<std::size_t>(config.cluster_count) > m) {
    throw std::invalid_argument("train_clustering: need 1 <= K <= m");
  }

  const Matrix norm_adj = normalized_adjacency(a_star);

  PretrainResult pre = pretrain_autoencoder(fr_std, config);
  AutoencoderParams ae_params = std::move(pre.params);

  Rng gcn_rng(derive_seed(config.seed, "cluster-gcn-init"));
  GcnParams gcn_params = make_gcn_params(fr_std.cols(), config.encoder_widths,
                                         config.cluster_count, gcn_rng);

  Matrix init_centers =
      kmeans_init_centers(pre.bottleneck, static_cast<std::size_t>(config.cluster_count),
                          config.kmeans_restarts, derive_seed(config.seed, "cluster-kmeans"));
  Parameter centers("cluster_centers", std::move(init_centers));

  std::vector<Parameter*> params = ae_params.all();
  for (Parameter* p : gcn_params.all()) params.push_back(p);
  params.push_back(&centers);

  Matrix target = target_distribution(ancillary_distribution(
      pre.bottleneck, centers.value, config.t_dof, config.literal_halved_kernel));

  const AdamOptions adam{config.learning_rate, 0.9, 0.999, 1e-8};
  ClusterTrainResult result;

  for (int epoch = 1; epoch <= config.train_epochs; ++epoch) {
    Tape tape;
    Var x = tape.constant(fr_std);
    Var na = tape.constant(norm_adj);
    AutoencoderForward ae = autoencoder_forward(tape, x, ae_params);
    FusedGcnForward gcn =
        fused_gcn_forward(tape, x, na, ae.hidden, gcn_params, config.fusion_epsilon);
    Var z = tape.row_softmax(gcn.logits);
    Var q = ancillary_distribution(tape, ae.hidden.back(), tape.param(centers), config.t_dof,
                                   config.literal_halved_kernel);
    if (epoch > 1 && (epoch - 1) % config.p_update_period == 0) {
      target = target_distribution(tape.value(q));
    }
    Var l_res = reconstruction_loss(tape, x, ae.reconstruction);
    Var l_clu = tape.kl_div(target, z);
    Var l_ta = tape.kl_div(target, q);
    Var loss = tape.add(
        l_res, tape.add(tape.scale(l_clu, config.alpha), tape.scale(l_ta, config.beta)));
    ClusteringLosses losses;
    losses.reconstruction = tape.scalar(l_res);
    losses.cluster = tape.scalar(l_clu);
    losses.target = tape.scalar(l_ta);
    losses.total = tape.scalar(loss);
    if (!std::isfinite(losses.total)) {
      throw NumericError("train_clustering: loss became non-finite at epoch " +
                         std::to_string(epoch));
    }
    if (observer) observer(epoch, tape.value(z), tape.value(q), target, losses);
    for (Parameter* p : params) p->zero_grad();
    tape.backward(loss);
    adam_update_all(params, adam);
    result.loss_history.push_back(losses);
  }

  // Final forward pass with the trained parameters.
  Tape tape;
  Var x = tape.constant(fr_std);
  Var na = tape.constant(norm_adj);
  AutoencoderForward ae = autoencoder_forward(tape, x, ae_params);
  FusedGcnForward gcn =
      fused_gcn_forward(tape, x, na, ae.hidden, gcn_params, config.fusion_epsilon);
  auto [z_final, raw_labels] = cluster_assignment(tape.value(gcn.logits));

  ClusterState& state = result.state;
  state.h = tape.value(ae.hidden.back());
  state.z = std::move(z_final);
  state.q = ancillary_distribution(state.h, centers.value, config.t_dof,
                                   config.literal_halved_kernel);
  state.p = std::move(target);
  state.centers = centers.value;

  // Drop empty clusters and re-index densely.
  const int k = config.cluster_count;
  std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
  for (int label : raw_labels) counts[static_cast<std::size_t>(label)] += 1;
  state.cluster_remap.assign(static_cast<std::size_t>(k), -1);
  int next = 0;
  for (int c = 0; c < k; ++c) {
    if (counts[static_cast<std::size_t>(c)] > 0) state.cluster_remap[c] = next++;
  }
  state.k_effective = next;
  if (next < k) {
    state.warnings.push_back("dropped " + std::to_string(k - next) +
                             " empty cluster(s); labels re-indexed densely");
  }
  if (next == 1 && k > 1) {
    state.warnings.push_back("all cells collapsed into a single cluster");
  }
  state.labels.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    state.labels[i] = state.cluster_remap[static_cast<std::size_t>(raw_labels[i])];
  }
  return result;
}

double silhouette_score(const Matrix& points, const std::vector<int>& labels) {
  const std::size_t m = points.rows();
  if (labels.size() != m) throw std::invalid_argument("silhouette_score: label count mismatch");
  int k = 0;
  for (int label : labels) k = std::max(k, label + 1);
  if (k < 2) return -1.0;
  std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
  for (int label : labels) counts[static_cast<std::size_t>(label)] += 1;

  double total = 0.0;
  std::vector<double> mean_dist(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < m; ++i) {
    std::fill(mean_dist.begin(), mean_dist.end(), 0.0);
    for (std::size_t j = 0; j < m; ++j) {
      if (j == i) continue;
      mean_dist[static_cast<std::size_t>(labels[j])] += std::sqrt(sqdist_rows(points, i,
                                                                              points, j));
    }
    const std::size_t own = static_cast<std::size_t>(labels[i]);
    if (counts[own] <= 1) continue;  // singleton scores 0
    const double a = mean_dist[own] / static_cast<double>(counts[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < static_cast<std::size_t>(k); ++c) {
      if (c == own || counts[c] == 0) continue;
      b = std::min(b, mean_dist[c] / static_cast<double>(counts[c]));
    }
    const double denom = std::max(a, b);
    if (denom > 0.0) total += (b - a) / denom;
  }
  return total / static_cast<double>(m);
}

std::vector<SweepRow> sweep_cluster_count(const Matrix& fr_std, const Matrix& a_star,
                                          int k_lo, int k_hi,
                                          const ClusterModelConfig& config) {
  if (k_lo > k_hi) throw std::invalid_argument("sweep_cluster_count: empty K range");
  if (k_lo < 2 || static_cast<std::size_t>(k_hi) > fr_std.rows() - 1) {
    throw std::invalid_argument("sweep_cluster_count: K range must lie in [2, m-1]");
  }
  std::vector<SweepRow> rows;
  for (int k = k_lo; k <= k_hi; ++k) {
    ClusterModelConfig cfg = config;
    cfg.cluster_count = k;
    ClusterTrainResult res = train_clustering(fr_std, a_star, cfg);
    SweepRow row;
    row.cluster_count = k;
    row.silhouette = silhouette_score(res.state.h, res.state.labels);
    row.final_loss = res.loss_history.empty() ? 0.0 : res.loss_history.back().total;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace frn
