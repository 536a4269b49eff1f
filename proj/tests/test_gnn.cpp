#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fixseeker/error.hpp"
#include "fixseeker/gnn.hpp"

using namespace fixseeker;

namespace {

TrainConfig small_config(std::size_t hidden = 4, std::size_t width = 3) {
  TrainConfig c;
  c.hidden = hidden;
  c.graph_width = width;
  c.threads = 2;
  return c;
}

Matrix random_matrix(util::Rng& rng, std::size_t r, std::size_t c, double scale = 1.0) {
  Matrix m(r, c);
  for (auto& v : m.data) v = rng.uniform(-scale, scale);
  return m;
}

EdgeBits bits(int call, int cd, int dd, int sim) {
  return EdgeBits{static_cast<std::uint8_t>(call), static_cast<std::uint8_t>(cd), static_cast<std::uint8_t>(dd),
                  static_cast<std::uint8_t>(sim)};
}

GraphTensors random_graph(util::Rng& rng, std::size_t n, std::size_t d, std::size_t edges) {
  GraphTensors g;
  g.node_features = random_matrix(rng, n, d);
  std::vector<std::pair<int, int>> seen;
  edges = std::min(edges, n * (n - 1));
  while (g.edge_attr.size() < edges) {
    const int s = static_cast<int>(rng.below(n)), t = static_cast<int>(rng.below(n));
    if (s == t || std::find(seen.begin(), seen.end(), std::pair{s, t}) != seen.end()) continue;
    seen.emplace_back(s, t);
    EdgeBits b{};
    while (b == EdgeBits{})
      for (auto& x : b) x = static_cast<std::uint8_t>(rng.below(2));
    g.edge_index[0].push_back(s);
    g.edge_index[1].push_back(t);
    g.edge_attr.push_back(b);
  }
  return g;
}

ModelParams random_params(util::Rng& rng, std::size_t d_in, const TrainConfig& cfg) {
  ModelParams p = gnn::init_params(d_in, cfg);
  for (auto& [name, t] : p.tensors())
    for (auto& v : t->data) v = rng.uniform(-0.8, 0.8);
  return p;
}

// Independent dense evaluation of one layer: every type builds a full n x n
// operator from normalize_adjacency and per-edge attention, then applies it.
Matrix dense_layer(const Matrix& h, const GraphTensors& g, const LayerParams& p, bool relu) {
  const std::size_t n = h.rows, d = p.d_out();
  auto mul = [](const Matrix& a, const Matrix& b) {
    Matrix out(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i)
      for (std::size_t j = 0; j < b.cols; ++j)
        for (std::size_t k = 0; k < a.cols; ++k) out(i, j) += a(i, k) * b(k, j);
    return out;
  };
  Matrix out = mul(h, p.w_self);
  for (std::size_t r = 0; r < kEdgeTypes; ++r) {
    std::vector<std::pair<int, int>> edges;
    for (std::size_t c = 0; c < g.edge_attr.size(); ++c)
      if (g.edge_attr[c][r]) edges.emplace_back(g.edge_index[0][c], g.edge_index[1][c]);
    if (edges.empty()) continue;
    const Matrix adj = gnn::normalize_adjacency(n, edges);
    const auto alpha = gnn::attention_coefficients(h, edges, p.w[r], p.a[r]);
    Matrix op(n, n);
    for (std::size_t k = 0; k < edges.size(); ++k) {
      const auto s = static_cast<std::size_t>(edges[k].first), t = static_cast<std::size_t>(edges[k].second);
      op(t, s) += alpha[k] * adj(t, s);
    }
    const Matrix agg = mul(op, mul(h, p.w[r]));
    for (std::size_t i = 0; i < n * d; ++i) out.data[i] += agg.data[i];
  }
  if (relu)
    for (auto& v : out.data) v = std::max(v, 0.0);
  return out;
}

}  // namespace

TEST_CASE("normalize_adjacency") {
  SUBCASE("single node") {
    const auto a = gnn::normalize_adjacency(1, {});
    CHECK(a == Matrix(1, 1, 1.0));
  }
  SUBCASE("one edge") {
    const auto a = gnn::normalize_adjacency(2, {{0, 1}});
    CHECK(a(1, 0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK(a(0, 1) == 0.0);
    CHECK(a(0, 0) == doctest::Approx(1.0));
    CHECK(a(1, 1) == doctest::Approx(0.5));
  }
  SUBCASE("no edges of the type is the identity") {
    const auto a = gnn::normalize_adjacency(4, {});
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j) CHECK(a(i, j) == (i == j ? 1.0 : 0.0));
  }
  SUBCASE("symmetric input gives a symmetric non-negative matrix") {
    util::Rng rng(3);
    for (int round = 0; round < 50; ++round) {
      const std::size_t n = 2 + rng.below(7);
      std::vector<std::pair<int, int>> edges;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
          if (rng.below(2)) {
            edges.emplace_back(static_cast<int>(i), static_cast<int>(j));
            edges.emplace_back(static_cast<int>(j), static_cast<int>(i));
          }
      const auto a = gnn::normalize_adjacency(n, edges);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          CHECK(a(i, j) >= 0.0);
          CHECK(a(i, j) == doctest::Approx(a(j, i)).epsilon(1e-15));
        }
    }
  }
}

TEST_CASE("attention_coefficients") {
  // One feature column, W = [1], a = [1 | 0]: the score of edge i->j is h_i.
  Matrix w(1, 1, 1.0), a(1, 2);
  a.data = {1.0, 0.0};
  SUBCASE("single in-edge") {
    Matrix h(2, 1);
    h.data = {0.3, -4.0};
    CHECK(gnn::attention_coefficients(h, {{0, 1}}, w, a) == std::vector<double>{1.0});
  }
  SUBCASE("equal scores") {
    Matrix h(3, 1);
    h.data = {1.5, 1.5, 0.0};
    const auto alpha = gnn::attention_coefficients(h, {{0, 2}, {1, 2}}, w, a);
    CHECK(alpha[0] == doctest::Approx(0.5));
    CHECK(alpha[1] == doctest::Approx(0.5));
  }
  SUBCASE("scores 2 and 0") {
    Matrix h(3, 1);
    h.data = {2.0, 0.0, 0.0};
    const auto alpha = gnn::attention_coefficients(h, {{0, 2}, {1, 2}}, w, a);
    const double e2 = std::exp(2.0);
    CHECK(alpha[0] == doctest::Approx(e2 / (e2 + 1)).epsilon(1e-12));
    CHECK(alpha[1] == doctest::Approx(1 / (e2 + 1)).epsilon(1e-12));
    CHECK(alpha[0] == doctest::Approx(0.8808).epsilon(1e-4));
  }
  SUBCASE("rows sum to one per target") {
    util::Rng rng(8);
    for (int round = 0; round < 30; ++round) {
      const auto g = random_graph(rng, 6, 4, 12);
      std::vector<std::pair<int, int>> edges;
      for (std::size_t c = 0; c < g.num_edges(); ++c) edges.emplace_back(g.edge_index[0][c], g.edge_index[1][c]);
      const auto alpha =
          gnn::attention_coefficients(g.node_features, edges, random_matrix(rng, 4, 3), random_matrix(rng, 1, 6));
      std::vector<double> sum(6, 0.0);
      std::vector<bool> has(6, false);
      for (std::size_t k = 0; k < edges.size(); ++k) {
        sum[static_cast<std::size_t>(edges[k].second)] += alpha[k];
        has[static_cast<std::size_t>(edges[k].second)] = true;
      }
      for (std::size_t j = 0; j < 6; ++j)
        if (has[j]) CHECK(sum[j] == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("layer_forward") {
  const auto cfg = small_config();
  util::Rng rng(21);
  SUBCASE("zero weights") {
    auto p = gnn::init_params(5, cfg);
    for (auto& [name, t] : p.tensors()) t->zero();
    const auto g = random_graph(rng, 4, 5, 5);
    const auto out = gnn::layer_forward(g.node_features, g, p.layer1, true);
    CHECK(out == Matrix(4, 4));
  }
  SUBCASE("isolated node") {
    const auto p = random_params(rng, 5, cfg);
    GraphTensors g;
    g.node_features = random_matrix(rng, 3, 5);
    g.edge_index = {std::vector<int>{0}, std::vector<int>{1}};
    g.edge_attr = {bits(1, 0, 1, 0)};
    const auto out = gnn::layer_forward(g.node_features, g, p.layer1, true);
    for (std::size_t c = 0; c < 4; ++c) {
      double v = 0;
      for (std::size_t k = 0; k < 5; ++k) v += g.node_features(2, k) * p.layer1.w_self(k, c);
      CHECK(out(2, c) == doctest::Approx(std::max(v, 0.0)).epsilon(1e-12));
    }
  }
  SUBCASE("3-node path with identity weights") {
    LayerParams p;
    p.w_self = Matrix(3, 3);
    for (std::size_t r = 0; r < kEdgeTypes; ++r) {
      p.w[r] = Matrix(3, 3);
      for (std::size_t i = 0; i < 3; ++i) p.w[r](i, i) = 1.0;
      p.a[r] = Matrix(1, 6, 0.1 * static_cast<double>(r + 1));
    }
    for (std::size_t i = 0; i < 3; ++i) p.w_self(i, i) = 1.0;
    GraphTensors g;
    g.node_features = Matrix(3, 3);
    g.node_features.data = {1, 0, 0, 0, 2, 0, 0, 0, -3};
    g.edge_index = {std::vector<int>{0, 1}, std::vector<int>{1, 2}};
    g.edge_attr = {bits(1, 0, 0, 0), bits(1, 0, 1, 0)};
    const auto got = gnn::layer_forward(g.node_features, g, p, false);
    // Node 1: self (0,2,0) + CALL edge from 0 with alpha 1 and 1/sqrt(2).
    CHECK(got(1, 0) == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(got(1, 1) == doctest::Approx(2.0));
    const auto want = dense_layer(g.node_features, g, p, false);
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(got.data[i] == doctest::Approx(want.data[i]).epsilon(1e-12));
  }
  SUBCASE("random graphs against the dense reference") {
    for (int round = 0; round < 40; ++round) {
      const auto p = random_params(rng, 5, cfg);
      const auto g = random_graph(rng, 2 + rng.below(6), 5, rng.below(8));
      const bool relu = round % 2 == 0;
      const auto got = gnn::layer_forward(g.node_features, g, p.layer1, relu);
      const auto want = dense_layer(g.node_features, g, p.layer1, relu);
      for (std::size_t i = 0; i < got.size(); ++i)
        CHECK(got.data[i] == doctest::Approx(want.data[i]).epsilon(1e-11));
    }
  }
  SUBCASE("shape mismatch") {
    const auto p = random_params(rng, 5, cfg);
    const auto g = random_graph(rng, 3, 6, 1);
    CHECK_THROWS_AS(gnn::layer_forward(g.node_features, g, p.layer1, true), Error);
  }
}

TEST_CASE("mean_pool") {
  CHECK(gnn::mean_pool(Matrix(1, 3, 2.5)) == std::vector<double>{2.5, 2.5, 2.5});
  Matrix two(2, 4);
  for (std::size_t c = 0; c < 4; ++c) two(1, c) = 2.0;
  CHECK(gnn::mean_pool(two) == std::vector<double>(4, 1.0));
  util::Rng rng(5);
  const auto m = random_matrix(rng, 5, 8);
  const auto got = gnn::mean_pool(m);
  for (std::size_t c = 0; c < 8; ++c) {
    double s = 0;
    for (std::size_t r = 0; r < 5; ++r) s += m(r, c);
    CHECK(std::abs(got[c] - s / 5) <= 1e-12);
  }
}

TEST_CASE("classifier softmax") {
  const auto even = gnn::softmax2(0, 0);
  CHECK(even.first == 0.5);
  CHECK(even.second == 0.5);
  const auto p = gnn::softmax2(1, 3);
  const double e2 = std::exp(2.0);
  CHECK(p.first == doctest::Approx(1 / (1 + e2)).epsilon(1e-12));
  CHECK(p.second == doctest::Approx(e2 / (1 + e2)).epsilon(1e-12));
  const auto big = gnn::softmax2(800, -800);
  CHECK(std::abs(big.first + big.second - 1.0) <= 1e-9);
}

TEST_CASE("class_weights") {
  const auto w = gnn::class_weights(9, 1);
  CHECK(w.w1 == doctest::Approx(1.8));
  CHECK(w.w0 == doctest::Approx(0.2));
  const auto even = gnn::class_weights(7, 7);
  CHECK(even.w0 == 1.0);
  CHECK(even.w1 == 1.0);
  const auto skew = gnn::class_weights(25, 1);
  CHECK(skew.w1 == doctest::Approx(50.0 / 26).epsilon(1e-12));
  CHECK(skew.w0 == doctest::Approx(2.0 / 26).epsilon(1e-12));
  CHECK(skew.w0 + skew.w1 == doctest::Approx(2.0));
  CHECK_THROWS_AS(gnn::class_weights(0, 4), Error);
  CHECK_THROWS_AS(gnn::class_weights(4, 0), Error);
}

TEST_CASE("weighted_ce_loss") {
  CHECK(gnn::weighted_ce_loss({0.5}, {1}, {0.2, 1.8}) == doctest::Approx(1.8 * std::log(2.0)).epsilon(1e-12));
  CHECK(gnn::weighted_ce_loss({0.5}, {1}, {0.2, 1.8}) == doctest::Approx(1.2477).epsilon(1e-4));

  const double at_optimum = gnn::weighted_ce_loss({1 - kProbEpsilon, kProbEpsilon, 1.0, 0.0}, {1, 0, 1, 0}, {0.4, 1.6});
  CHECK(at_optimum <= 1.6 * -std::log(1 - kProbEpsilon) + 1e-15);
  CHECK(std::isfinite(gnn::weighted_ce_loss({0.0, 1.0}, {1, 0}, {1, 1})));

  util::Rng rng(12);
  for (int round = 0; round < 200; ++round) {
    const std::size_t n = 1 + rng.below(40);
    std::vector<double> p(n);
    std::vector<int> y(n);
    double oracle = 0;
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = rng.uniform(0.01, 0.99);
      y[i] = static_cast<int>(rng.below(2));
      oracle += y[i] ? -std::log(p[i]) : -std::log(1 - p[i]);
    }
    CHECK(std::abs(gnn::weighted_ce_loss(p, y, {1, 1}) - oracle / static_cast<double>(n)) <= 1e-12);
  }
}

TEST_CASE("forward") {
  const auto cfg = small_config();
  util::Rng rng(33);
  const auto p = random_params(rng, 6, cfg);
  SUBCASE("single node") {
    GraphTensors g;
    g.node_features = random_matrix(rng, 1, 6);
    const auto [p0, p1] = gnn::forward(g, p);
    CHECK(std::isfinite(p1));
    CHECK(std::abs(p0 + p1 - 1.0) <= 1e-9);
  }
  SUBCASE("eval is repeatable, train draws dropout") {
    const auto g = random_graph(rng, 5, 6, 6);
    CHECK(gnn::forward(g, p) == gnn::forward(g, p));
    util::Rng a(1), b(1);
    CHECK(gnn::forward(g, p, Mode::TRAIN, &a) == gnn::forward(g, p, Mode::TRAIN, &b));
  }
  SUBCASE("permutation invariance") {
    for (int round = 0; round < 50; ++round) {
      const std::size_t n = 2 + rng.below(7);
      const auto g = random_graph(rng, n, 6, rng.below(n * (n - 1) / 2 + 1));
      std::vector<int> perm(n);
      std::iota(perm.begin(), perm.end(), 0);
      rng.shuffle(perm);
      GraphTensors h = g;
      for (std::size_t i = 0; i < n; ++i)
        std::copy(g.node_features.row(i), g.node_features.row(i) + 6,
                  h.node_features.row(static_cast<std::size_t>(perm[i])));
      for (auto& side : h.edge_index)
        for (auto& v : side) v = perm[static_cast<std::size_t>(v)];
      CHECK(std::abs(gnn::forward(g, p).second - gnn::forward(h, p).second) <= 1e-9);
    }
  }
  SUBCASE("graphs are independent within a batch") {
    const auto g = random_graph(rng, 4, 6, 3);
    const auto out = gnn::predict({g, g}, p, 2);
    CHECK(out[0] == out[1]);
    CHECK(out[0] == gnn::forward(g, p).second);
  }
}

TEST_CASE("gradients match central differences") {
  const auto cfg = small_config(4, 3);
  util::Rng rng(99);
  for (int round = 0; round < 3; ++round) {
    // Central differences are meaningless across a ReLU kink; redraw until
    // every first-layer pre-activation is clear of zero.
    ModelParams p;
    GraphTensors g;
    double margin = 0;
    while (margin < 1e-2) {
      p = random_params(rng, 6, cfg);
      g = random_graph(rng, 5, 6, 7);
      const auto pre = gnn::layer_forward(g.node_features, g, p.layer1, false);
      margin = 1;
      for (double v : pre.data) margin = std::min(margin, std::abs(v));
    }
    const int label = round % 2;
    const LossConfig loss{0.6, 1.4};
    ModelParams grad = gnn::zeros_like(p);
    gnn::backward(g, label, p, loss, 1.0, {}, grad);
    auto analytic = grad.tensors();
    auto params = p.tensors();
    const double h = 1e-4;
    for (std::size_t t = 0; t < params.size(); ++t) {
      INFO("tensor " << params[t].first);
      double worst = 0;
      for (std::size_t i = 0; i < params[t].second->size(); ++i) {
        double& w = params[t].second->data[i];
        const double keep = w;
        w = keep + h;
        const double up = gnn::weighted_ce_loss({gnn::forward(g, p).second}, {label}, loss);
        w = keep - h;
        const double down = gnn::weighted_ce_loss({gnn::forward(g, p).second}, {label}, loss);
        w = keep;
        const double numeric = (up - down) / (2 * h);
        const double a = analytic[t].second->data[i];
        const double mag = std::max(std::abs(a), std::abs(numeric));
        if (mag < 1e-6)
          CHECK(std::abs(a - numeric) < 1e-6);
        else
          worst = std::max(worst, std::abs(a - numeric) / mag);
      }
      CHECK(worst < 1e-3);
    }
  }
}

TEST_CASE("gradient with dropout mask matches the masked forward") {
  const auto cfg = small_config(4, 3);
  util::Rng rng(7);
  ModelParams p = random_params(rng, 6, cfg);
  const auto g = random_graph(rng, 5, 6, 6);
  const std::vector<double> mask{2.0, 0.0, 2.0};
  ModelParams grad = gnn::zeros_like(p);
  gnn::backward(g, 1, p, {1, 1}, 1.0, mask, grad);
  CHECK(grad.fc(1, 1) == 0.0);
  CHECK(grad.fc(0, 1) != 0.0);
}

TEST_CASE("check_finite names the tensor") {
  auto p = gnn::init_params(4, small_config());
  p.layer2.a[2].data[1] = std::nan("");
  try {
    gnn::check_finite(p);
    FAIL("expected NonFiniteValue");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonFiniteValue);
    CHECK(std::string(e.what()).find("layer2.a_DD") != std::string::npos);
  }
}

TEST_CASE("upsample") {
  std::vector<int> labels(100, 0);
  for (int i = 0; i < 10; ++i) labels[static_cast<std::size_t>(i * 10)] = 1;
  const auto idx = gnn::upsample(labels);
  std::size_t pos = 0;
  for (auto i : idx) pos += static_cast<std::size_t>(labels[i]);
  CHECK(pos == 90);
  CHECK(idx.size() - pos == 90);
  CHECK(gnn::upsample({1, 1, 0}).size() == 4);
  CHECK(gnn::upsample({}).empty());
}

TEST_CASE("init_params") {
  auto cfg = small_config(8, 4);
  const auto a = gnn::init_params(10, cfg), b = gnn::init_params(10, cfg);
  CHECK(a.tensors().size() == 2 * (1 + 2 * kEdgeTypes) + 2);
  for (std::size_t t = 0; t < a.tensors().size(); ++t) CHECK(*a.tensors()[t].second == *b.tensors()[t].second);
  const double limit = std::sqrt(6.0 / 18.0);
  for (double v : a.layer1.w_self.data) CHECK(std::abs(v) <= limit);
  CHECK(a.fc_bias == Matrix(1, 2));
  CHECK(a.fc.cols == 2);
  cfg.layers = 3;
  CHECK_THROWS_AS(gnn::init_params(10, cfg), Error);
}

namespace {

// Positives carry a CALL edge and a planted direction in one node.
std::vector<GraphTensors> separable_set(util::Rng& rng, std::size_t n, std::size_t pos) {
  std::vector<GraphTensors> out;
  for (std::size_t k = 0; k < n; ++k) {
    const bool positive = k < pos;
    GraphTensors g = random_graph(rng, 3 + rng.below(3), 8, 0);
    for (auto& v : g.node_features.data) v *= 0.1;
    for (std::size_t c = 0; c + 1 < g.num_nodes(); ++c)
      if (positive || c > 0) {
        g.edge_index[0].push_back(static_cast<int>(c));
        g.edge_index[1].push_back(static_cast<int>(c + 1));
        g.edge_attr.push_back(positive && c == 0 ? bits(1, 0, 0, 0) : bits(0, 0, 1, 0));
      }
    if (positive) g.node_features(0, 0) += 1.0;
    g.label = positive ? 1 : 0;
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace

TEST_CASE("training") {
  util::Rng rng(2024);
  auto cfg = small_config(16, 8);
  cfg.batch_size = 8;
  cfg.patience = 100;
  SUBCASE("separable set is learned") {
    const auto set = separable_set(rng, 40, 12);
    const auto result = gnn::train(set, {}, cfg);
    double best_acc = 0;
    for (const auto& r : result.history) best_acc = std::max(best_acc, r.train_acc);
    CHECK(best_acc == 1.0);
    CHECK(result.history.size() <= 100);
    CHECK(result.train_size == 56);
    const auto scores = gnn::predict(set, result.params);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < set.size(); ++i) correct += (scores[i] >= 0.5) == (*set[i].label == 1);
    CHECK(correct == set.size());
  }
  SUBCASE("fixed seed reproduces the history") {
    const auto set = separable_set(rng, 20, 5);
    const auto val = separable_set(rng, 8, 2);
    cfg.epochs = 5;
    const auto a = gnn::train(set, val, cfg);
    cfg.threads = 1;
    const auto b = gnn::train(set, val, cfg);
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t i = 0; i < a.history.size(); ++i) {
      CHECK(a.history[i].train_loss == b.history[i].train_loss);
      CHECK(a.history[i].val_f1 == b.history[i].val_f1);
    }
    CHECK(a.val_size == 12);
    CHECK(a.weights.w0 == 1.0);
  }
  SUBCASE("one class only") {
    auto set = separable_set(rng, 6, 0);
    CHECK_THROWS_AS(gnn::train(set, {}, cfg), Error);
  }
  SUBCASE("early stop honours patience") {
    const auto set = separable_set(rng, 20, 10);
    cfg.patience = 2;
    cfg.epochs = 100;
    const auto r = gnn::train(set, set, cfg);
    CHECK(r.history.size() < 100);
    CHECK(static_cast<int>(r.history.size()) - r.best_epoch <= 2);
  }
}

TEST_CASE("checkpoint round trip") {
  util::Rng rng(55);
  auto cfg = small_config(5, 3);
  cfg.seed = 77;
  cfg.dropout = 0.25;
  ModelParams p = random_params(rng, 7, cfg);
  p.seed = 77;
  p.dropout_p = 0.25;
  p.layer1.w_self.data[0] = 0.1 + 0.2;
  const auto text = gnn::save_checkpoint(p, cfg);
  TrainConfig back;
  const auto q = gnn::load_checkpoint(text, &back);
  CHECK(q.seed == 77);
  CHECK(q.dropout_p == 0.25);
  CHECK(back.hidden == 5);
  const auto pa = p.tensors();
  const auto qa = q.tensors();
  for (std::size_t t = 0; t < pa.size(); ++t) CHECK(*pa[t].second == *qa[t].second);
  CHECK(gnn::save_checkpoint(q, back) == text);

  auto code = [](const std::string& s) {
    try {
      gnn::load_checkpoint(s);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::IoError;
  };
  CHECK(code("fixseeker-model 2\n") == ErrorCode::CheckpointMismatch);
  CHECK(code(text.substr(0, text.size() / 2)) == ErrorCode::CheckpointMismatch);
  std::string wrong = text;
  wrong.replace(wrong.find("matrix layer1.W_self 7 5"), 24, "matrix layer1.W_self 7 4");
  CHECK(code(wrong) == ErrorCode::CheckpointMismatch);
  CHECK(code("") == ErrorCode::CheckpointMismatch);
}

TEST_CASE("config parsing") {
  const auto c = gnn::parse_config("# defaults tweaked\nhidden = 64\nlr=0.01  # faster\n\nseed=9\n");
  CHECK(c.hidden == 64);
  CHECK(c.lr == 0.01);
  CHECK(c.seed == 9);
  CHECK(c.graph_width == 128);
  const auto again = gnn::parse_config(gnn::format_config(c));
  CHECK(gnn::format_config(again) == gnn::format_config(c));
  CHECK_THROWS_AS(gnn::parse_config("layers=3\n"), Error);
  CHECK_THROWS_AS(gnn::parse_config("color=blue\n"), Error);
  CHECK_THROWS_AS(gnn::parse_config("hidden=lots\n"), Error);
  CHECK_THROWS_AS(gnn::parse_config("hidden\n"), Error);
}
