#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "floodrisknet/clustering.hpp"
#include "floodrisknet/errors.hpp"
#include "floodrisknet/graph_learner.hpp"
#include "floodrisknet/ingest.hpp"
#include "floodrisknet/rng.hpp"
#include "floodrisknet/synthetic.hpp"
#include "support/gradcheck.hpp"
#include "support/metrics.hpp"

using namespace frn;
using frn::testing::adjusted_rand_index;
using frn::testing::gradcheck;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng, double scale = 1.0) {
  Matrix m(r, c);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
  return m;
}

}  // namespace

TEST_CASE("autoencoder reconstruction has the input shape; zero params annihilate") {
  Rng rng(3);
  const Matrix x = random_matrix(5, 10, rng);
  AutoencoderParams params = make_autoencoder_params(10, {8, 4}, rng);
  Tape t;
  AutoencoderForward fwd = autoencoder_forward(t, t.constant(x), params);
  CHECK(t.value(fwd.reconstruction).rows() == 5);
  CHECK(t.value(fwd.reconstruction).cols() == 10);
  CHECK(fwd.hidden.size() == 2);
  CHECK(t.value(fwd.hidden.back()).cols() == 4);

  for (Parameter* p : params.all()) p->value = Matrix(p->value.rows(), p->value.cols());
  Tape t2;
  AutoencoderForward zero = autoencoder_forward(t2, t2.constant(x), params);
  for (std::size_t i = 0; i < t2.value(zero.reconstruction).size(); ++i) {
    CHECK(t2.value(zero.reconstruction).data()[i] == 0.0);
  }
  for (std::size_t i = 0; i < t2.value(zero.hidden.back()).size(); ++i) {
    CHECK(t2.value(zero.hidden.back()).data()[i] == 0.0);
  }
}

TEST_CASE("one-layer encoder matches a hand computation") {
  Rng rng(5);
  AutoencoderParams params = make_autoencoder_params(2, {2}, rng);
  params.enc_w[0].value = Matrix::from_rows({{1, -2}, {0, 3}});
  params.enc_b[0].value = Matrix::from_rows({{0.5, -0.5}});
  const Matrix x = Matrix::from_rows({{2, 1}});
  Tape t;
  AutoencoderForward fwd = autoencoder_forward(t, t.constant(x), params);
  // x W + b = [2*1+1*0+0.5, 2*(-2)+1*3-0.5] = [2.5, -1.5] -> relu -> [2.5, 0]
  CHECK(t.value(fwd.hidden[0])(0, 0) == 2.5);
  CHECK(t.value(fwd.hidden[0])(0, 1) == 0.0);
}

TEST_CASE("reconstruction loss examples") {
  const Matrix x = Matrix::from_rows({{1, 0}});
  CHECK(reconstruction_loss(x, x) == 0.0);
  CHECK(reconstruction_loss(x, Matrix(1, 2, 0.0)) == doctest::Approx(0.5).epsilon(1e-12));
  // doubling the residual quadruples the loss
  const Matrix x2 = Matrix::from_rows({{2, 0}});
  CHECK(reconstruction_loss(x2, Matrix(1, 2, 0.0)) ==
        doctest::Approx(4.0 * reconstruction_loss(x, Matrix(1, 2, 0.0))).epsilon(1e-12));
  CHECK_THROWS_AS(reconstruction_loss(x, Matrix(2, 2, 0.0)), std::invalid_argument);
}

TEST_CASE("fused gcn on a single self-loop node reduces to dense layers") {
  Rng rng(7);
  const Matrix x = random_matrix(1, 4, rng);
  AutoencoderParams ae = make_autoencoder_params(4, {3}, rng);
  GcnParams gcn = make_gcn_params(4, {3}, 2, rng);
  Tape t;
  Var xc = t.constant(x);
  AutoencoderForward fwd = autoencoder_forward(t, xc, ae);
  Var na = t.normalize_adjacency(t.constant(Matrix(1, 1, 0.0)));
  CHECK(t.value(na)(0, 0) == 1.0);
  FusedGcnForward g = fused_gcn_forward(t, xc, na, fwd.hidden, gcn, 0.5);
  const Matrix expected = relu(matmul(x, gcn.w[0].value));
  CHECK(max_abs_diff(t.value(g.layers[0]), expected) <= 1e-15);
}

TEST_CASE("fused gcn with epsilon 0 consumes only the autoencoder path") {
  Rng rng(9);
  const std::size_t m = 6;
  const Matrix x = random_matrix(m, 4, rng);
  const Matrix adj = relu(random_matrix(m, m, rng));
  AutoencoderParams ae = make_autoencoder_params(4, {5, 3}, rng);
  GcnParams gcn = make_gcn_params(4, {5, 3}, 2, rng);

  Tape t;
  Var xc = t.constant(x);
  Var na = t.normalize_adjacency(t.constant(adj));
  AutoencoderForward fwd = autoencoder_forward(t, xc, ae);
  FusedGcnForward g = fused_gcn_forward(t, xc, na, fwd.hidden, gcn, 0.0);
  // layer 2 must equal relu(N H1 W2) exactly: no dependence on the GCN layer-1 output
  const Matrix manual =
      relu(matmul(matmul(t.value(na), t.value(fwd.hidden[0])), gcn.w[1].value));
  CHECK(max_abs_diff(t.value(g.layers[1]), manual) == 0.0);
}

TEST_CASE("fused gcn one layer matches a hand-normalized two-node path") {
  const Matrix adj = Matrix::from_rows({{0, 1}, {1, 0}});
  const Matrix x = Matrix::from_rows({{1, 0}, {0, 2}});
  Rng rng(11);
  AutoencoderParams ae = make_autoencoder_params(2, {2}, rng);
  GcnParams gcn = make_gcn_params(2, {2}, 2, rng);
  gcn.w[0].value = Matrix::from_rows({{1, 2}, {3, 4}});
  Tape t;
  Var xc = t.constant(x);
  Var na = t.normalize_adjacency(t.constant(adj));
  // A+I = all-ones, degrees 2 -> N = [[0.5,0.5],[0.5,0.5]]
  CHECK(t.value(na)(0, 0) == 0.5);
  CHECK(t.value(na)(0, 1) == 0.5);
  AutoencoderForward fwd = autoencoder_forward(t, xc, ae);
  FusedGcnForward g = fused_gcn_forward(t, xc, na, fwd.hidden, gcn, 0.5);
  const Matrix nx = Matrix::from_rows({{0.5, 1.0}, {0.5, 1.0}});  // N x
  const Matrix expected = relu(matmul(nx, gcn.w[0].value));
  CHECK(max_abs_diff(t.value(g.layers[0]), expected) <= 1e-15);
}

TEST_CASE("cluster_assignment softmax rows, argmax, single cluster") {
  const auto [z1, s1] = cluster_assignment(Matrix(4, 1, 3.7));
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(z1(i, 0) == 1.0);
    CHECK(s1[i] == 0);
  }
  const auto [z, s] = cluster_assignment(Matrix::from_rows({{0.2, 1.7, 0.2}, {1, 1, 1}}));
  CHECK(s[0] == 1);
  CHECK(s[1] == 0);  // exact tie broken toward the smaller index
  for (std::size_t i = 0; i < z.rows(); ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < z.cols(); ++j) sum += z(i, j);
    CHECK(std::abs(sum - 1.0) <= 1e-12);
  }
}

TEST_CASE("ancillary distribution examples") {
  const Matrix one = ancillary_distribution(Matrix(3, 2, 0.5), Matrix(1, 2, 0.5), 1.0);
  for (std::size_t i = 0; i < 3; ++i) CHECK(one(i, 0) == 1.0);

  const Matrix h = Matrix::from_rows({{1, 0}});
  const Matrix centers = Matrix::from_rows({{0, 0}, {2, 0}});
  const Matrix q = ancillary_distribution(h, centers, 1.0);
  CHECK(q(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(q(0, 1) == doctest::Approx(0.5).epsilon(1e-12));

  const Matrix q2 =
      ancillary_distribution(Matrix::from_rows({{0, 0}}), centers, 1.0);
  CHECK(q2(0, 0) == doctest::Approx(0.83333).epsilon(1e-5));
  CHECK(q2(0, 1) == doctest::Approx(0.16667).epsilon(1e-4));

  // literal halved variant: kernel (1 + d/2)^{-1}
  const Matrix qh =
      ancillary_distribution(Matrix::from_rows({{0, 0}}), centers, 1.0, true);
  const double k0 = 1.0, k1 = 1.0 / (1.0 + 4.0 / 2.0);
  CHECK(qh(0, 0) == doctest::Approx(k0 / (k0 + k1)).epsilon(1e-12));
}

TEST_CASE("target distribution sharpening and guards") {
  const Matrix onehot = Matrix::from_rows({{1.0, 0.0}, {0.0, 1.0}});
  CHECK(max_abs_diff(target_distribution(onehot), onehot) == 0.0);
  CHECK(max_abs_diff(target_distribution(target_distribution(onehot)), onehot) == 0.0);

  const Matrix q = Matrix::from_rows({{0.8, 0.2}, {0.4, 0.6}});
  const Matrix p = target_distribution(q);
  CHECK(p(0, 0) == doctest::Approx(0.91429).epsilon(1e-5));
  CHECK(p(0, 1) == doctest::Approx(0.08571).epsilon(1e-4));
  CHECK(p(1, 0) == doctest::Approx(0.22857).epsilon(1e-5));
  CHECK(p(1, 1) == doctest::Approx(0.77143).epsilon(1e-5));
  for (std::size_t i = 0; i < p.rows(); ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < p.cols(); ++j) sum += p(i, j);
    CHECK(std::abs(sum - 1.0) <= 1e-12);
  }

  const Matrix dead_column = Matrix::from_rows({{1.0, 0.0}, {1.0, 0.0}});
  CHECK_THROWS_WITH_AS(target_distribution(dead_column), doctest::Contains("cluster 1"),
                       NumericError);
}

TEST_CASE("clustering losses identities and closed form") {
  const Matrix p = Matrix::from_rows({{1.0, 0.0}});
  const Matrix z = Matrix::from_rows({{0.5, 0.5}});
  const auto same = clustering_losses(p, p, p, 0.25, 0.1, 0.01);
  CHECK(same.cluster == 0.0);
  CHECK(same.target == 0.0);
  CHECK(same.total == doctest::Approx(0.25).epsilon(1e-12));

  const auto ln2 = clustering_losses(p, z, p, 0.0, 1.0, 1.0);
  CHECK(ln2.cluster == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(ln2.target == 0.0);

  const Matrix zero = Matrix::from_rows({{0.0, 1.0}});
  CHECK_THROWS_AS(clustering_losses(p, zero, p, 0.0, 1.0, 1.0), NumericError);
}

TEST_CASE("kmeans center initialization") {
  // K=1: the center is the column mean
  const Matrix pts = Matrix::from_rows({{0, 0}, {2, 0}, {4, 6}});
  const Matrix c1 = kmeans_init_centers(pts, 1, 5, 3);
  CHECK(c1(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(c1(0, 1) == doctest::Approx(2.0).epsilon(1e-12));

  // two well-separated blobs
  Rng rng(13);
  Matrix blobs(40, 2);
  for (std::size_t i = 0; i < 40; ++i) {
    const bool right = i >= 20;
    blobs(i, 0) = (right ? 10.0 : 0.0) + 0.3 * rng.normal();
    blobs(i, 1) = 0.3 * rng.normal();
  }
  const Matrix c2 = kmeans_init_centers(blobs, 2, 10, 5);
  std::vector<double> xs{c2(0, 0), c2(1, 0)};
  std::sort(xs.begin(), xs.end());
  CHECK(std::abs(xs[0] - 0.0) < 0.9);   // within 3 sigma of the blob mean
  CHECK(std::abs(xs[1] - 10.0) < 0.9);

  // K = m: every point its own center, inertia zero
  const Matrix cm = kmeans_init_centers(pts, 3, 4, 7);
  double inertia = 0.0;
  for (std::size_t i = 0; i < pts.rows(); ++i) {
    double best = 1e300;
    for (std::size_t c = 0; c < cm.rows(); ++c) {
      double d2 = 0.0;
      for (std::size_t j = 0; j < 2; ++j) {
        d2 += (pts(i, j) - cm(c, j)) * (pts(i, j) - cm(c, j));
      }
      best = std::min(best, d2);
    }
    inertia += best;
  }
  CHECK(inertia == 0.0);

  CHECK(kmeans_init_centers(blobs, 2, 10, 5) == c2);  // deterministic
  CHECK_THROWS_AS(kmeans_init_centers(pts, 4, 5, 3), std::invalid_argument);
}

TEST_CASE("pretrain reduces reconstruction loss deterministically") {
  SyntheticConfig synth;
  synth.seed = 21;
  synth.m = 40;
  synth.d_bf = 10;
  synth.k_planted = 2;
  const SyntheticData data = generate_synthetic(synth);
  const Matrix x = zscore_columns(data.fr.fr);

  ClusterModelConfig cfg;
  cfg.encoder_widths = {16, 8};
  cfg.pretrain_epochs = 80;
  cfg.seed = 2;
  const PretrainResult a = pretrain_autoencoder(x, cfg);
  const PretrainResult b = pretrain_autoencoder(x, cfg);
  CHECK(a.bottleneck == b.bottleneck);
  CHECK(a.loss_history.back() < a.loss_history.front());

  ClusterModelConfig none = cfg;
  none.pretrain_epochs = 0;
  const PretrainResult zero = pretrain_autoencoder(x, none);
  CHECK(zero.loss_history.empty());
  // untouched initialization: both runs agree bit for bit
  const PretrainResult zero2 = pretrain_autoencoder(x, none);
  CHECK(zero.bottleneck == zero2.bottleneck);
}

TEST_CASE("clustering loss gradients pass finite differences on a 6-node instance") {
  Rng rng(17);
  const std::size_t m = 6;
  const Matrix x = random_matrix(m, 4, rng);
  const Matrix adj = relu(random_matrix(m, m, rng));
  const Matrix norm_adj = normalized_adjacency(adj);
  AutoencoderParams ae = make_autoencoder_params(4, {3, 2}, rng);
  GcnParams gcn = make_gcn_params(4, {3, 2}, 2, rng);
  Parameter centers("centers", random_matrix(2, 2, rng));
  Matrix p = Matrix::from_rows(
      {{0.9, 0.1}, {0.2, 0.8}, {0.5, 0.5}, {0.7, 0.3}, {0.4, 0.6}, {0.1, 0.9}});

  std::vector<Parameter*> params = ae.all();
  for (Parameter* q : gcn.all()) params.push_back(q);
  params.push_back(&centers);

  auto build_total = [&](Tape& t) {
    Var xc = t.constant(x);
    Var na = t.constant(norm_adj);
    AutoencoderForward fwd = autoencoder_forward(t, xc, ae);
    FusedGcnForward g = fused_gcn_forward(t, xc, na, fwd.hidden, gcn, 0.5);
    Var z = t.row_softmax(g.logits);
    Var q = ancillary_distribution(t, fwd.hidden.back(), t.param(centers), 1.0);
    Var l_res = reconstruction_loss(t, xc, fwd.reconstruction);
    return t.add(l_res, t.add(t.scale(t.kl_div(p, z), 0.1), t.scale(t.kl_div(p, q), 0.01)));
  };
  const auto res = gradcheck(params, build_total);
  CHECK_MESSAGE(res.ok, res.first_failure);
}

TEST_CASE("train_clustering recovers planted blocks and stays normalized") {
  SyntheticConfig synth;
  synth.seed = 31;
  synth.m = 90;
  synth.d_bf = 30;
  synth.k_planted = 3;
  synth.separation = 4.0;
  const SyntheticData data = generate_synthetic(synth);
  const Matrix x = zscore_columns(data.fr.fr);

  GraphLearnerConfig gcfg;
  gcfg.epochs = 60;
  gcfg.encoder_width = 16;
  gcfg.projector_width = 8;
  gcfg.seed = 1;
  const Matrix a_star = train_graph_structure(data.bf.bf, gcfg).graph.a_star;

  ClusterModelConfig cfg;
  cfg.cluster_count = 3;
  cfg.encoder_widths = {32, 16, 8};
  cfg.pretrain_epochs = 120;
  cfg.train_epochs = 150;
  cfg.seed = 9;

  double worst_row_sum_err = 0.0;
  const auto result = train_clustering(
      x, a_star, cfg,
      [&](int, const Matrix& z, const Matrix& q, const Matrix& p, const ClusteringLosses&) {
        for (const Matrix* dist : {&z, &q, &p}) {
          for (std::size_t i = 0; i < dist->rows(); ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < dist->cols(); ++j) s += (*dist)(i, j);
            worst_row_sum_err = std::max(worst_row_sum_err, std::abs(s - 1.0));
          }
        }
      });
  CHECK(worst_row_sum_err <= 1e-9);
  CHECK(result.state.k_effective >= 2);
  CHECK(adjusted_rand_index(result.state.labels, data.labels) >= 0.9);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    CHECK(result.state.labels[i] >= 0);
    CHECK(result.state.labels[i] < result.state.k_effective);
  }

  const auto again = train_clustering(x, a_star, cfg);
  CHECK(again.state.labels == result.state.labels);
  CHECK(again.state.z == result.state.z);
}

TEST_CASE("train_clustering with K=1 converges to the single cluster") {
  SyntheticConfig synth;
  synth.seed = 3;
  synth.m = 20;
  synth.d_bf = 8;
  synth.k_planted = 2;
  const SyntheticData data = generate_synthetic(synth);
  const Matrix x = zscore_columns(data.fr.fr);
  const Matrix a_star = build_knn_graph(data.bf.bf, 4);

  ClusterModelConfig cfg;
  cfg.cluster_count = 1;
  cfg.encoder_widths = {8, 4};
  cfg.pretrain_epochs = 20;
  cfg.train_epochs = 25;
  cfg.seed = 5;
  const auto result = train_clustering(x, a_star, cfg);
  CHECK(result.state.k_effective == 1);
  for (int label : result.state.labels) CHECK(label == 0);
}

TEST_CASE("sweep_cluster_count finds the planted K") {
  SyntheticConfig synth;
  synth.seed = 13;
  synth.m = 45;
  synth.d_bf = 18;
  synth.k_planted = 3;
  synth.separation = 4.0;
  const SyntheticData data = generate_synthetic(synth);
  const Matrix x = zscore_columns(data.fr.fr);
  const Matrix a_star = build_knn_graph(data.bf.bf, 6);

  ClusterModelConfig cfg;
  cfg.encoder_widths = {16, 8};
  cfg.pretrain_epochs = 60;
  cfg.train_epochs = 80;
  cfg.seed = 7;

  const auto single = sweep_cluster_count(x, a_star, 2, 2, cfg);
  REQUIRE(single.size() == 1);
  CHECK(single[0].cluster_count == 2);

  const auto rows = sweep_cluster_count(x, a_star, 2, 4, cfg);
  REQUIRE(rows.size() == 3);
  int best_k = 0;
  double best_sil = -2.0;
  for (const auto& row : rows) {
    if (row.silhouette > best_sil) {
      best_sil = row.silhouette;
      best_k = row.cluster_count;
    }
  }
  CHECK(best_k == 3);

  const auto rows2 = sweep_cluster_count(x, a_star, 2, 4, cfg);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].silhouette == rows2[i].silhouette);
    CHECK(rows[i].final_loss == rows2[i].final_loss);
  }

  CHECK_THROWS_AS(sweep_cluster_count(x, a_star, 3, 2, cfg), std::invalid_argument);
}
