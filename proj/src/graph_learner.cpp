#include "floodrisknet/graph_learner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "floodrisknet/errors.hpp"
#include "floodrisknet/optim.hpp"

namespace frn {

namespace {

Matrix off_diagonal_mask(std::size_t n) {
  Matrix m(n, n, 1.0);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 0.0;
  return m;
}

}  // namespace

Var embed_for_similarity(Tape& tape, Var bf, const std::vector<Var>& omega) {
  const std::size_t d = tape.value(bf).cols();
  Var e = bf;
  for (Var w : omega) {
    const Matrix& wv = tape.value(w);
    if (wv.rows() != d || wv.cols() != d) {
      throw std::invalid_argument("embed_for_similarity: omega must be " + std::to_string(d) +
                                  "x" + std::to_string(d) + ", got " + shape_string(wv));
    }
    e = tape.row_l2_normalize(tape.relu(tape.matmul(e, w)));
  }
  return e;
}

Matrix embed_for_similarity(const Matrix& bf, const std::vector<Matrix>& omega) {
  Tape tape;
  std::vector<Var> vars;
  vars.reserve(omega.size());
  for (const Matrix& w : omega) vars.push_back(tape.constant(w));
  return tape.value(embed_for_similarity(tape, tape.constant(bf), vars));
}

Var learned_adjacency(Tape& tape, Var embedding) {
  const std::size_t m = tape.value(embedding).rows();
  Var sim = tape.cross_cosine(embedding, embedding);
  return tape.hadamard(tape.relu(sim), tape.constant(off_diagonal_mask(m)));
}

Matrix learned_adjacency(const Matrix& embedding) {
  Tape tape;
  return tape.value(learned_adjacency(tape, tape.constant(embedding)));
}

Matrix build_knn_graph(const Matrix& bf, int k) {
  const std::size_t m = bf.rows();
  if (m < 2) throw std::invalid_argument("build_knn_graph: need at least 2 rows");
  if (k < 1 || static_cast<std::size_t>(k) > m - 1) {
    throw std::invalid_argument("build_knn_graph: k=" + std::to_string(k) +
                                " out of range [1, " + std::to_string(m - 1) + "]");
  }
  const Matrix sim = cosine_similarity_matrix(bf);
  Matrix knn(m, m);
  std::vector<std::size_t> order(m);
  for (std::size_t i = 0; i < m; ++i) {
    order.clear();
    for (std::size_t j = 0; j < m; ++j) {
      if (j != i) order.push_back(j);
    }
    // top-k by similarity, ties toward the smaller index
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return sim(i, a) > sim(i, b);
    });
    for (int n = 0; n < k; ++n) {
      const std::size_t j = order[static_cast<std::size_t>(n)];
      knn(i, j) = std::max(0.0, sim(i, j));
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      const double w = std::max(knn(i, j), knn(j, i));
      knn(i, j) = w;
      knn(j, i) = w;
    }
  }
  return knn;
}

ViewMasks draw_view_masks(std::size_t m, std::size_t d, double mask_prob, double edge_drop_prob,
                          Rng& rng) {
  if (mask_prob < 0.0 || mask_prob > 1.0 || edge_drop_prob < 0.0 || edge_drop_prob > 1.0) {
    throw std::invalid_argument("draw_view_masks: probabilities must be in [0,1]");
  }
  ViewMasks masks;
  masks.column_mask = Matrix(1, d, 1.0);
  for (std::size_t j = 0; j < d; ++j) {
    if (rng.bernoulli(mask_prob)) masks.column_mask(0, j) = 0.0;
  }
  masks.edge_mask = Matrix(m, m, 1.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      if (rng.bernoulli(edge_drop_prob)) {
        masks.edge_mask(i, j) = 0.0;
        masks.edge_mask(j, i) = 0.0;
      }
    }
  }
  return masks;
}

Matrix expand_column_mask(const Matrix& column_mask, std::size_t m) {
  Matrix full(m, column_mask.cols());
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < column_mask.cols(); ++j) full(i, j) = column_mask(0, j);
  }
  return full;
}

AugmentedView augment_view(const Matrix& adjacency, const Matrix& features, double mask_prob,
                           double edge_drop_prob, std::uint64_t seed) {
  if (adjacency.rows() != adjacency.cols() || adjacency.rows() != features.rows()) {
    throw std::invalid_argument("augment_view: adjacency/features shapes disagree");
  }
  Rng rng(seed);
  ViewMasks masks = draw_view_masks(features.rows(), features.cols(), mask_prob, edge_drop_prob,
                                    rng);
  AugmentedView view;
  view.adjacency = hadamard(adjacency, masks.edge_mask);
  view.features = hadamard(features, expand_column_mask(masks.column_mask, features.rows()));
  view.column_mask = masks.column_mask;
  view.edge_mask = masks.edge_mask;
  view.seed = seed;
  return view;
}

std::vector<Parameter*> ContrastiveParams::all() {
  return {&enc_w1, &enc_w2, &proj_w1, &proj_b1, &proj_w2, &proj_b2};
}

Var contrastive_embed(Tape& tape, Var adjacency, Var features, ContrastiveParams& params) {
  Var n = tape.normalize_adjacency(adjacency);
  Var h1 = tape.relu(tape.matmul(tape.matmul(n, features), tape.param(params.enc_w1)));
  Var h2 = tape.relu(tape.matmul(tape.matmul(n, h1), tape.param(params.enc_w2)));
  Var p1 = tape.relu(tape.add_row_broadcast(tape.matmul(h2, tape.param(params.proj_w1)),
                                            tape.param(params.proj_b1)));
  return tape.add_row_broadcast(tape.matmul(p1, tape.param(params.proj_w2)),
                                tape.param(params.proj_b2));
}

Var nt_xent_loss(Tape& tape, Var z_k, Var z_l, double temperature,
                 bool include_positive_in_denominator) {
  const Matrix& zk = tape.value(z_k);
  const Matrix& zl = tape.value(z_l);
  if (!zk.same_shape(zl)) {
    throw std::invalid_argument("nt_xent_loss: views have different shapes");
  }
  if (zk.rows() < 2) {
    throw std::invalid_argument("nt_xent_loss: need at least 2 nodes for negatives");
  }
  if (!(temperature > 0.0)) {
    throw std::invalid_argument("nt_xent_loss: temperature must be positive");
  }
  const std::size_t m = zk.rows();
  Var sim = tape.scale(tape.cross_cosine(z_k, z_l), 1.0 / temperature);
  Var sim_t = tape.transpose(sim);
  Var denom_kl = sim;
  Var denom_lk = sim_t;
  if (!include_positive_in_denominator) {
    // Remove the diagonal from the log-sum-exp with an additive mask.
    Matrix mask(m, m, 0.0);
    for (std::size_t i = 0; i < m; ++i) mask(i, i) = -1e30;
    Var mask_var = tape.constant(mask);
    denom_kl = tape.add(sim, mask_var);
    denom_lk = tape.add(sim_t, mask_var);
  }
  Var loss_kl = tape.mean(tape.sub(tape.row_logsumexp(denom_kl), tape.diag_as_col(sim)));
  Var loss_lk = tape.mean(tape.sub(tape.row_logsumexp(denom_lk), tape.diag_as_col(sim_t)));
  return tape.scale(tape.add(loss_kl, loss_lk), 0.5);
}

double nt_xent_loss(const Matrix& z_k, const Matrix& z_l, double temperature,
                    bool include_positive_in_denominator) {
  Tape tape;
  return tape.scalar(nt_xent_loss(tape, tape.constant(z_k), tape.constant(z_l), temperature,
                                  include_positive_in_denominator));
}

Matrix bootstrap_anchor(const Matrix& knn, const Matrix& learned, double tau) {
  if (!knn.same_shape(learned)) {
    throw std::invalid_argument("bootstrap_anchor: shape mismatch " + shape_string(knn) +
                                " vs " + shape_string(learned));
  }
  if (tau < 0.0 || tau > 1.0) {
    throw std::invalid_argument("bootstrap_anchor: tau must be in [0,1]");
  }
  Matrix out(knn.rows(), knn.cols());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double k = knn.data()[i];
    const double a = learned.data()[i];
    const double v = tau * k + (1.0 - tau) * a;
    // keep the convex combination inside the elementwise envelope
    out.data()[i] = std::clamp(v, std::min(k, a), std::max(k, a));
  }
  return out;
}

Matrix normalized_adjacency(const Matrix& a) {
  Tape tape;
  return tape.value(tape.normalize_adjacency(tape.constant(a)));
}

GraphTrainResult train_graph_structure(const Matrix& bf, const GraphLearnerConfig& config,
                                       const GraphEpochObserver& observer) {
  const std::size_t m = bf.rows();
  const std::size_t d = bf.cols();
  if (m < 2) throw std::invalid_argument("train_graph_structure: need at least 2 cells");
  if (config.embed_layers < 1) {
    throw std::invalid_argument("train_graph_structure: need at least one embedding layer");
  }

  const int k_eff = std::max(1, std::min<int>(config.knn_k, static_cast<int>(m) - 1));
  Matrix anchor = build_knn_graph(bf, k_eff);

  Rng init_rng(derive_seed(config.seed, "graph-init"));
  std::vector<Parameter> omega;
  omega.reserve(static_cast<std::size_t>(config.embed_layers));
  for (int l = 0; l < config.embed_layers; ++l) {
    omega.emplace_back("omega_" + std::to_string(l + 1), glorot_uniform(d, d, init_rng));
  }
  const std::size_t d1 = static_cast<std::size_t>(config.encoder_width);
  const std::size_t d2 = static_cast<std::size_t>(config.projector_width);
  ContrastiveParams cparams{
      Parameter("enc_w1", glorot_uniform(d, d1, init_rng)),
      Parameter("enc_w2", glorot_uniform(d1, d1, init_rng)),
      Parameter("proj_w1", glorot_uniform(d1, d2, init_rng)),
      Parameter("proj_b1", Matrix(1, d2)),
      Parameter("proj_w2", glorot_uniform(d2, d2, init_rng)),
      Parameter("proj_b2", Matrix(1, d2)),
  };
  std::vector<Parameter*> all_params;
  for (Parameter& p : omega) all_params.push_back(&p);
  for (Parameter* p : cparams.all()) all_params.push_back(p);

  const AdamOptions adam{config.learning_rate, 0.9, 0.999, 1e-8};
  Rng aug_rng(derive_seed(config.seed, "graph-augment"));

  const auto fresh_network = [&]() {
    std::vector<Matrix> omega_values;
    omega_values.reserve(omega.size());
    for (const Parameter& p : omega) omega_values.push_back(p.value);
    Matrix net = learned_adjacency(embed_for_similarity(bf, omega_values));
    if (config.sparsify_threshold > 0.0) {
      for (std::size_t i = 0; i < net.size(); ++i) {
        if (net.data()[i] < config.sparsify_threshold) net.data()[i] = 0.0;
      }
    }
    return net;
  };

  GraphTrainResult result;
  result.loss_history.reserve(static_cast<std::size_t>(config.epochs));
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    Tape tape;
    Var bf_const = tape.constant(bf);
    std::vector<Var> omega_vars;
    omega_vars.reserve(omega.size());
    for (Parameter& p : omega) omega_vars.push_back(tape.param(p));
    Var embedding = embed_for_similarity(tape, bf_const, omega_vars);
    Var network = learned_adjacency(tape, embedding);

    // one seeded stream, fixed order: learned view first, then anchor view
    ViewMasks learned_masks = draw_view_masks(m, d, config.mask_prob, config.edge_drop_prob,
                                              aug_rng);
    ViewMasks anchor_masks = draw_view_masks(m, d, config.mask_prob, config.edge_drop_prob,
                                             aug_rng);

    Var adj_learned = tape.hadamard(network, tape.constant(learned_masks.edge_mask));
    Var feat_learned =
        tape.constant(hadamard(bf, expand_column_mask(learned_masks.column_mask, m)));
    Var adj_anchor = tape.constant(hadamard(anchor, anchor_masks.edge_mask));
    Var feat_anchor =
        tape.constant(hadamard(bf, expand_column_mask(anchor_masks.column_mask, m)));

    Var z_anchor = contrastive_embed(tape, adj_anchor, feat_anchor, cparams);
    Var z_learned = contrastive_embed(tape, adj_learned, feat_learned, cparams);
    Var loss = nt_xent_loss(tape, z_anchor, z_learned, config.temperature,
                            config.include_positive_in_denominator);
    const double loss_value = tape.scalar(loss);
    if (!std::isfinite(loss_value)) {
      throw NumericError("train_graph_structure: loss became non-finite at epoch " +
                         std::to_string(epoch));
    }
    for (Parameter* p : all_params) p->zero_grad();
    tape.backward(loss);
    adam_update_all(all_params, adam);
    result.loss_history.push_back(loss_value);

    const bool bootstrap_now =
        config.bootstrap_period > 0 && epoch % config.bootstrap_period == 0;
    if (bootstrap_now || observer) {
      const Matrix net = fresh_network();
      if (bootstrap_now) anchor = bootstrap_anchor(anchor, net, config.bootstrap_tau);
      if (observer) observer(epoch, net, loss_value);
    }
  }

  result.graph.a_star = fresh_network();
  return result;
}

}  // namespace frn
