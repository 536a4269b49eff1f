#include "fixseeker/gnn.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <thread>

#include "fixseeker/error.hpp"
#include "fixseeker/kernels.hpp"
#include "fixseeker/util/text.hpp"

namespace fixseeker {

namespace {

constexpr const char* kTypeNames[kEdgeTypes] = {"CALL", "CD", "DD", "SIM"};
constexpr double kLeakySlope = 0.2;
// Gradient accumulation is split into a fixed number of shards, reduced in
// order, so results do not depend on the thread count.
constexpr std::size_t kShards = 8;

double leaky(double u) { return u > 0 ? u : kLeakySlope * u; }

// out (n x d_out) = h (n x d_in) * w (d_in x d_out); h is often sparse.
void matmul(const Matrix& h, const Matrix& w, Matrix& out) {
  out = Matrix(h.rows, w.cols);
  for (std::size_t i = 0; i < h.rows; ++i) {
    const double* hr = h.row(i);
    double* o = out.row(i);
    for (std::size_t k = 0; k < h.cols; ++k)
      if (hr[k] != 0.0) kernels::axpy(hr[k], w.row(k), o, w.cols);
  }
}

// dw += h^T * d
void accumulate_outer(const Matrix& h, const Matrix& d, Matrix& dw) {
  for (std::size_t i = 0; i < h.rows; ++i) {
    const double* hr = h.row(i);
    const double* dr = d.row(i);
    for (std::size_t k = 0; k < h.cols; ++k)
      if (hr[k] != 0.0) kernels::axpy(hr[k], dr, dw.row(k), d.cols);
  }
}

// dh += d * w^T
void accumulate_input_grad(const Matrix& d, const Matrix& w, Matrix& dh) {
  for (std::size_t i = 0; i < d.rows; ++i)
    for (std::size_t k = 0; k < w.rows; ++k) dh(i, k) += kernels::dot(d.row(i), w.row(k), d.cols);
}

struct TypeCache {
  bool active = false;
  Matrix z;
  std::vector<int> src, dst;
  std::vector<double> coef, u, alpha;
};

struct LayerCache {
  Matrix pre;
  Matrix out;
  std::array<TypeCache, kEdgeTypes> types;
};

// Softmax of leaky(u) over edges sharing a target.
void target_softmax(const std::vector<int>& dst, const std::vector<double>& u, std::vector<double>& alpha) {
  alpha.assign(u.size(), 0.0);
  std::map<int, double> peak, total;
  for (std::size_t k = 0; k < u.size(); ++k) {
    const double e = leaky(u[k]);
    auto [it, fresh] = peak.emplace(dst[k], e);
    if (!fresh) it->second = std::max(it->second, e);
  }
  for (std::size_t k = 0; k < u.size(); ++k) {
    alpha[k] = std::exp(leaky(u[k]) - peak[dst[k]]);
    total[dst[k]] += alpha[k];
  }
  for (std::size_t k = 0; k < u.size(); ++k) alpha[k] /= total[dst[k]];
}

void attention_scores(const Matrix& z, const Matrix& a, const std::vector<int>& src,
                      const std::vector<int>& dst, std::vector<double>& u) {
  const std::size_t d = z.cols;
  u.resize(src.size());
  for (std::size_t k = 0; k < src.size(); ++k)
    u[k] = kernels::dot(a.data.data(), z.row(static_cast<std::size_t>(src[k])), d) +
           kernels::dot(a.data.data() + d, z.row(static_cast<std::size_t>(dst[k])), d);
}

void check_graph(const GraphTensors& g, std::size_t d_in) {
  if (g.node_features.rows == 0) throw Error(ErrorCode::ShapeMismatch, "graph without nodes");
  if (g.node_features.cols != d_in)
    throw Error(ErrorCode::ShapeMismatch, "node features have width " +
                                              std::to_string(g.node_features.cols) + ", model expects " +
                                              std::to_string(d_in));
  if (g.edge_index[0].size() != g.edge_attr.size() || g.edge_index[1].size() != g.edge_attr.size())
    throw Error(ErrorCode::ShapeMismatch, "edge_index and edge_attr disagree");
  const int n = static_cast<int>(g.node_features.rows);
  for (std::size_t c = 0; c < g.edge_attr.size(); ++c)
    if (g.edge_index[0][c] < 0 || g.edge_index[0][c] >= n || g.edge_index[1][c] < 0 ||
        g.edge_index[1][c] >= n)
      throw Error(ErrorCode::ShapeMismatch, "edge index out of range");
}

void layer_forward_cached(const Matrix& h, const GraphTensors& g, const LayerParams& p, bool relu,
                          LayerCache& c) {
  const std::size_t n = h.rows;
  matmul(h, p.w_self, c.pre);
  for (std::size_t r = 0; r < kEdgeTypes; ++r) {
    auto& t = c.types[r];
    t = TypeCache{};
    for (std::size_t col = 0; col < g.edge_attr.size(); ++col)
      if (g.edge_attr[col][r]) {
        t.src.push_back(g.edge_index[0][col]);
        t.dst.push_back(g.edge_index[1][col]);
      }
    if (t.src.empty()) continue;
    t.active = true;
    std::vector<int> indeg(n, 0);
    for (int j : t.dst) ++indeg[static_cast<std::size_t>(j)];
    t.coef.resize(t.src.size());
    for (std::size_t k = 0; k < t.src.size(); ++k)
      t.coef[k] = 1.0 / std::sqrt(static_cast<double>(indeg[static_cast<std::size_t>(t.dst[k])] + 1) *
                                  static_cast<double>(indeg[static_cast<std::size_t>(t.src[k])] + 1));
    matmul(h, p.w[r], t.z);
    attention_scores(t.z, p.a[r], t.src, t.dst, t.u);
    target_softmax(t.dst, t.u, t.alpha);
    for (std::size_t k = 0; k < t.src.size(); ++k)
      kernels::axpy(t.alpha[k] * t.coef[k], t.z.row(static_cast<std::size_t>(t.src[k])),
                    c.pre.row(static_cast<std::size_t>(t.dst[k])), p.d_out());
  }
  c.out = c.pre;
  if (relu)
    for (auto& v : c.out.data) v = std::max(v, 0.0);
}

// d_out holds dL/d(layer output); returns dL/dh when `need_input`.
Matrix layer_backward(const Matrix& h, const LayerCache& c, const LayerParams& p, bool relu,
                      Matrix d_out, LayerParams& grad, bool need_input) {
  const std::size_t n = h.rows, d = p.d_out();
  if (relu)
    for (std::size_t i = 0; i < d_out.size(); ++i)
      if (c.pre.data[i] <= 0) d_out.data[i] = 0;
  Matrix dh;
  if (need_input) dh = Matrix(n, p.d_in());
  accumulate_outer(h, d_out, grad.w_self);
  if (need_input) accumulate_input_grad(d_out, p.w_self, dh);

  for (std::size_t r = 0; r < kEdgeTypes; ++r) {
    const auto& t = c.types[r];
    if (!t.active) continue;
    Matrix dz(n, d);
    std::vector<double> dalpha(t.src.size()), ds(n, 0.0), dt(n, 0.0);
    for (std::size_t k = 0; k < t.src.size(); ++k) {
      const auto i = static_cast<std::size_t>(t.src[k]), j = static_cast<std::size_t>(t.dst[k]);
      kernels::axpy(t.alpha[k] * t.coef[k], d_out.row(j), dz.row(i), d);
      dalpha[k] = t.coef[k] * kernels::dot(d_out.row(j), t.z.row(i), d);
    }
    std::map<int, double> weighted;
    for (std::size_t k = 0; k < t.src.size(); ++k) weighted[t.dst[k]] += t.alpha[k] * dalpha[k];
    for (std::size_t k = 0; k < t.src.size(); ++k) {
      const double de = t.alpha[k] * (dalpha[k] - weighted[t.dst[k]]);
      const double du = de * (t.u[k] > 0 ? 1.0 : kLeakySlope);
      ds[static_cast<std::size_t>(t.src[k])] += du;
      dt[static_cast<std::size_t>(t.dst[k])] += du;
    }
    const double* a_src = p.a[r].data.data();
    const double* a_dst = a_src + d;
    double* ga_src = grad.a[r].data.data();
    double* ga_dst = ga_src + d;
    for (std::size_t i = 0; i < n; ++i) {
      if (ds[i] != 0.0) {
        kernels::axpy(ds[i], a_src, dz.row(i), d);
        kernels::axpy(ds[i], t.z.row(i), ga_src, d);
      }
      if (dt[i] != 0.0) {
        kernels::axpy(dt[i], a_dst, dz.row(i), d);
        kernels::axpy(dt[i], t.z.row(i), ga_dst, d);
      }
    }
    accumulate_outer(h, dz, grad.w[r]);
    if (need_input) accumulate_input_grad(dz, p.w[r], dh);
  }
  return dh;
}

struct ForwardState {
  LayerCache l1, l2;
  std::vector<double> pooled;
  std::vector<double> dropped;
  double l0 = 0, l1v = 0;
};

std::pair<double, double> run_forward(const GraphTensors& g, const ModelParams& p,
                                      const std::vector<double>& mask, ForwardState& s) {
  check_graph(g, p.layer1.d_in());
  layer_forward_cached(g.node_features, g, p.layer1, true, s.l1);
  layer_forward_cached(s.l1.out, g, p.layer2, false, s.l2);
  s.pooled = gnn::mean_pool(s.l2.out);
  s.dropped = s.pooled;
  if (!mask.empty())
    for (std::size_t i = 0; i < s.dropped.size(); ++i) s.dropped[i] *= mask[i];
  const std::size_t w = s.dropped.size();
  s.l0 = p.fc_bias.data[0];
  s.l1v = p.fc_bias.data[1];
  for (std::size_t i = 0; i < w; ++i) {
    s.l0 += s.dropped[i] * p.fc(i, 0);
    s.l1v += s.dropped[i] * p.fc(i, 1);
  }
  return gnn::softmax2(s.l0, s.l1v);
}

std::vector<double> dropout_mask(std::size_t width, double p, util::Rng& rng) {
  std::vector<double> m(width);
  const double keep = 1.0 - p;
  for (auto& v : m) v = rng.uniform() < keep ? 1.0 / keep : 0.0;
  return m;
}

int resolve_threads(int threads) {
  if (threads > 0) return threads;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(std::min(hw, 16u));
}

// Runs job(k) for k in [0, count) on up to `threads` workers.
template <typename Job>
void parallel_for(std::size_t count, int threads, Job job) {
  const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(resolve_threads(threads)));
  if (workers <= 1) {
    for (std::size_t k = 0; k < count; ++k) job(k);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      try {
        for (std::size_t k = w; k < count; k += workers) job(k);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

double f1_at(const std::vector<double>& scores, const std::vector<int>& labels, double threshold) {
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool pred = scores[i] >= threshold;
    if (pred && labels[i] == 1) ++tp;
    if (pred && labels[i] == 0) ++fp;
    if (!pred && labels[i] == 1) ++fn;
  }
  return tp == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

std::vector<int> labels_of(const std::vector<GraphTensors>& set) {
  std::vector<int> out;
  out.reserve(set.size());
  for (const auto& g : set) {
    if (!g.label) throw Error(ErrorCode::InvalidArgument, "training graph without a label");
    out.push_back(*g.label);
  }
  return out;
}

struct Adam {
  std::vector<Matrix> m, v;
  long step = 0;

  explicit Adam(const ModelParams& p) {
    for (const auto& [name, t] : p.tensors()) {
      m.emplace_back(t->rows, t->cols);
      v.emplace_back(t->rows, t->cols);
    }
  }

  void update(ModelParams& p, const ModelParams& g, const TrainConfig& cfg) {
    ++step;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
    auto params = p.tensors();
    const auto grads = g.tensors();
    for (std::size_t t = 0; t < params.size(); ++t) {
      auto& w = params[t].second->data;
      const auto& d = grads[t].second->data;
      auto& mt = m[t].data;
      auto& vt = v[t].data;
      for (std::size_t i = 0; i < w.size(); ++i) {
        mt[i] = cfg.beta1 * mt[i] + (1 - cfg.beta1) * d[i];
        vt[i] = cfg.beta2 * vt[i] + (1 - cfg.beta2) * d[i] * d[i];
        w[i] -= cfg.lr * (mt[i] / c1) / (std::sqrt(vt[i] / c2) + cfg.adam_eps);
      }
    }
  }
};

void add_into(ModelParams& acc, const ModelParams& g) {
  auto a = acc.tensors();
  const auto b = g.tensors();
  for (std::size_t t = 0; t < a.size(); ++t)
    kernels::axpy(1.0, b[t].second->data.data(), a[t].second->data.data(), a[t].second->size());
}

void zero_all(ModelParams& p) {
  for (auto& [name, t] : p.tensors()) t->zero();
}

}  // namespace

std::vector<std::pair<std::string, Matrix*>> ModelParams::tensors() {
  std::vector<std::pair<std::string, Matrix*>> out;
  for (auto [tag, layer] : {std::pair{"layer1", &layer1}, std::pair{"layer2", &layer2}}) {
    out.emplace_back(std::string(tag) + ".W_self", &layer->w_self);
    for (std::size_t r = 0; r < kEdgeTypes; ++r)
      out.emplace_back(std::string(tag) + ".W_" + kTypeNames[r], &layer->w[r]);
    for (std::size_t r = 0; r < kEdgeTypes; ++r)
      out.emplace_back(std::string(tag) + ".a_" + kTypeNames[r], &layer->a[r]);
  }
  out.emplace_back("fc.W", &fc);
  out.emplace_back("fc.b", &fc_bias);
  return out;
}

std::vector<std::pair<std::string, const Matrix*>> ModelParams::tensors() const {
  std::vector<std::pair<std::string, const Matrix*>> out;
  for (auto& [name, t] : const_cast<ModelParams*>(this)->tensors()) out.emplace_back(name, t);
  return out;
}

namespace gnn {

Matrix normalize_adjacency(std::size_t n, const std::vector<std::pair<int, int>>& edges) {
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i) a(i, i) = 1.0;
  for (const auto& [s, t] : edges)
    if (s != t) a(static_cast<std::size_t>(t), static_cast<std::size_t>(s)) = 1.0;
  std::vector<double> deg(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) deg[i] += a(i, j);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) /= std::sqrt(deg[i] * deg[j]);
  return a;
}

std::vector<double> attention_coefficients(const Matrix& h, const std::vector<std::pair<int, int>>& edges,
                                           const Matrix& w, const Matrix& a) {
  Matrix z;
  matmul(h, w, z);
  std::vector<int> src, dst;
  for (const auto& [s, t] : edges) {
    src.push_back(s);
    dst.push_back(t);
  }
  std::vector<double> u, alpha;
  attention_scores(z, a, src, dst, u);
  target_softmax(dst, u, alpha);
  return alpha;
}

Matrix layer_forward(const Matrix& h, const GraphTensors& g, const LayerParams& p, bool relu) {
  if (h.cols != p.d_in() || h.rows != g.node_features.rows)
    throw Error(ErrorCode::ShapeMismatch, "layer input does not match the layer or graph");
  LayerCache c;
  layer_forward_cached(h, g, p, relu, c);
  return c.out;
}

std::vector<double> mean_pool(const Matrix& h) {
  std::vector<double> out(h.cols, 0.0);
  for (std::size_t i = 0; i < h.rows; ++i) kernels::axpy(1.0, h.row(i), out.data(), h.cols);
  if (h.rows) kernels::scale(1.0 / static_cast<double>(h.rows), out.data(), out.size());
  return out;
}

std::pair<double, double> softmax2(double l0, double l1) {
  const double m = std::max(l0, l1);
  const double e0 = std::exp(l0 - m), e1 = std::exp(l1 - m);
  return {e0 / (e0 + e1), e1 / (e0 + e1)};
}

LossConfig class_weights(std::size_t n_neg, std::size_t n_pos) {
  if (n_neg == 0 || n_pos == 0) throw Error(ErrorCode::ZeroClass, "class weights need both classes");
  const double total = static_cast<double>(n_neg + n_pos);
  return {2.0 * static_cast<double>(n_pos) / total, 2.0 * static_cast<double>(n_neg) / total};
}

double weighted_ce_loss(const std::vector<double>& p_vfc, const std::vector<int>& labels,
                        const LossConfig& cfg) {
  if (p_vfc.size() != labels.size() || p_vfc.empty())
    throw Error(ErrorCode::ShapeMismatch, "predictions and labels differ in length");
  double sum = 0;
  for (std::size_t i = 0; i < p_vfc.size(); ++i) {
    const double p = std::clamp(p_vfc[i], kProbEpsilon, 1.0 - kProbEpsilon);
    const int y = labels[i];
    const double w = y == 1 ? cfg.w1 : cfg.w0;
    sum += -w * (y * std::log(p) + (1 - y) * std::log(1 - p));
  }
  return sum / static_cast<double>(p_vfc.size());
}

ModelParams init_params(std::size_t d_in, const TrainConfig& cfg) {
  if (cfg.layers != 2) throw Error(ErrorCode::InvalidArgument, "the model has exactly 2 graph layers");
  if (cfg.hidden == 0 || cfg.graph_width == 0 || d_in == 0)
    throw Error(ErrorCode::InvalidArgument, "layer widths must be positive");
  if (!(cfg.dropout >= 0 && cfg.dropout < 1)) throw Error(ErrorCode::InvalidArgument, "dropout must lie in [0, 1)");
  ModelParams p;
  p.dropout_p = cfg.dropout;
  p.seed = cfg.seed;
  auto shape = [](LayerParams& l, std::size_t in, std::size_t out) {
    l.w_self = Matrix(in, out);
    for (std::size_t r = 0; r < kEdgeTypes; ++r) {
      l.w[r] = Matrix(in, out);
      l.a[r] = Matrix(1, 2 * out);
    }
  };
  shape(p.layer1, d_in, cfg.hidden);
  shape(p.layer2, cfg.hidden, cfg.graph_width);
  p.fc = Matrix(cfg.graph_width, 2);
  p.fc_bias = Matrix(1, 2);
  util::Rng rng(cfg.seed);
  for (auto& [name, t] : p.tensors()) {
    if (name == "fc.b") continue;
    const bool attention = name.find(".a_") != std::string::npos;
    const double fan_in = static_cast<double>(attention ? t->cols : t->rows);
    const double fan_out = static_cast<double>(attention ? 1 : t->cols);
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (auto& v : t->data) v = rng.uniform(-limit, limit);
  }
  return p;
}

std::pair<double, double> forward(const GraphTensors& g, const ModelParams& p, Mode mode, util::Rng* rng) {
  ForwardState s;
  std::vector<double> mask;
  if (mode == Mode::TRAIN && p.dropout_p > 0) {
    if (!rng) throw Error(ErrorCode::InvalidArgument, "training-mode forward needs a generator");
    mask = dropout_mask(p.fc.rows, p.dropout_p, *rng);
  }
  return run_forward(g, p, mask, s);
}

double backward(const GraphTensors& g, int label, const ModelParams& p, const LossConfig& loss,
                double batch_n, const std::vector<double>& mask, ModelParams& grad) {
  ForwardState s;
  const auto probs = run_forward(g, p, mask, s);
  const double p_vfc = probs.second;
  const double w = label == 1 ? loss.w1 : loss.w0;
  const double clamped = std::clamp(p_vfc, kProbEpsilon, 1.0 - kProbEpsilon);
  const double value = -w * (label * std::log(clamped) + (1 - label) * std::log(1 - clamped)) / batch_n;

  // dL/dlogit1 = w (p - y) while unclamped; the clamp has zero slope.
  const bool inside = p_vfc > kProbEpsilon && p_vfc < 1.0 - kProbEpsilon;
  const double dl1 = inside ? w * (p_vfc - label) / batch_n : 0.0;
  const double dl0 = -dl1;

  const std::size_t width = s.dropped.size();
  grad.fc_bias.data[0] += dl0;
  grad.fc_bias.data[1] += dl1;
  std::vector<double> dpool(width);
  for (std::size_t i = 0; i < width; ++i) {
    grad.fc(i, 0) += s.dropped[i] * dl0;
    grad.fc(i, 1) += s.dropped[i] * dl1;
    dpool[i] = p.fc(i, 0) * dl0 + p.fc(i, 1) * dl1;
    if (!mask.empty()) dpool[i] *= mask[i];
  }
  const std::size_t n = s.l2.out.rows;
  Matrix d2(n, width);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t c = 0; c < width; ++c) d2(j, c) = dpool[c] / static_cast<double>(n);
  Matrix d1 = layer_backward(s.l1.out, s.l2, p.layer2, false, std::move(d2), grad.layer2, true);
  layer_backward(g.node_features, s.l1, p.layer1, true, std::move(d1), grad.layer1, false);
  return value;
}

ModelParams zeros_like(const ModelParams& p) {
  ModelParams z = p;
  zero_all(z);
  return z;
}

void check_finite(const ModelParams& p) {
  for (const auto& [name, t] : p.tensors())
    for (double v : t->data)
      if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteValue, "non-finite value in " + name);
}

std::vector<std::size_t> upsample(const std::vector<int>& labels) {
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] == 1 ? pos : neg).push_back(i);
  std::vector<std::size_t> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) out[i] = i;
  auto& minority = pos.size() < neg.size() ? pos : neg;
  const std::size_t target = std::max(pos.size(), neg.size());
  if (minority.empty()) return out;
  for (std::size_t k = minority.size(); k < target; ++k) out.push_back(minority[k % minority.size()]);
  return out;
}

std::vector<double> predict(const std::vector<GraphTensors>& graphs, const ModelParams& p, int threads) {
  std::vector<double> out(graphs.size());
  parallel_for(graphs.size(), threads, [&](std::size_t k) { out[k] = forward(graphs[k], p).second; });
  return out;
}

TrainResult train(const std::vector<GraphTensors>& train_set, const std::vector<GraphTensors>& val_set,
                  const TrainConfig& cfg, const std::function<void(const EpochRecord&)>& on_epoch) {
  if (train_set.empty()) throw Error(ErrorCode::SingleClassTraining, "empty training set");
  const auto train_labels = labels_of(train_set);
  const auto val_labels = labels_of(val_set);
  const auto positives = static_cast<std::size_t>(std::count(train_labels.begin(), train_labels.end(), 1));
  if (positives == 0 || positives == train_labels.size())
    throw Error(ErrorCode::SingleClassTraining, "training split holds one class only");
  if (cfg.batch_size == 0 || cfg.epochs < 1)
    throw Error(ErrorCode::InvalidArgument, "batch size and epochs must be positive");

  const auto train_idx = upsample(train_labels);
  const auto val_idx = upsample(val_labels);
  std::size_t up_pos = 0;
  for (auto i : train_idx) up_pos += static_cast<std::size_t>(train_labels[i]);

  TrainResult result;
  result.train_size = train_idx.size();
  result.val_size = val_idx.size();
  result.weights = class_weights(train_idx.size() - up_pos, up_pos);
  ModelParams params = init_params(train_set.front().node_features.cols, cfg);
  result.params = params;

  util::Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  Adam adam(params);
  std::vector<ModelParams> shards(kShards, zeros_like(params));
  ModelParams total = zeros_like(params);

  std::vector<GraphTensors> val_up;
  std::vector<int> val_up_labels;
  for (auto i : val_idx) {
    val_up.push_back(val_set[i]);
    val_up_labels.push_back(val_labels[i]);
  }

  double best = -1.0;
  int since = 0;
  std::vector<std::size_t> order = train_idx;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const std::size_t count = end - start;
      std::vector<std::vector<double>> masks(count);
      if (params.dropout_p > 0)
        for (auto& m : masks) m = dropout_mask(params.fc.rows, params.dropout_p, rng);
      std::vector<double> losses(count, 0.0);
      const std::size_t used = std::min(kShards, count);
      for (std::size_t s = 0; s < used; ++s) zero_all(shards[s]);
      parallel_for(used, cfg.threads, [&](std::size_t s) {
        for (std::size_t k = s; k < count; k += used) {
          const std::size_t gi = order[start + k];
          losses[k] = backward(train_set[gi], train_labels[gi], params, result.weights,
                               static_cast<double>(count), masks[k], shards[s]);
        }
      });
      zero_all(total);
      for (std::size_t s = 0; s < used; ++s) add_into(total, shards[s]);
      check_finite(total);
      adam.update(params, total, cfg);
      for (double l : losses) epoch_loss += l * static_cast<double>(count);
    }
    check_finite(params);

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = epoch_loss / static_cast<double>(order.size());
    const auto train_scores = predict(train_set, params, cfg.threads);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < train_scores.size(); ++i)
      correct += static_cast<std::size_t>((train_scores[i] >= cfg.threshold) == (train_labels[i] == 1));
    rec.train_acc = static_cast<double>(correct) / static_cast<double>(train_scores.size());
    if (!val_up.empty()) {
      const auto val_scores = predict(val_up, params, cfg.threads);
      rec.val_loss = weighted_ce_loss(val_scores, val_up_labels, result.weights);
      rec.val_f1 = f1_at(val_scores, val_up_labels, cfg.threshold);
    } else {
      rec.val_f1 = f1_at(train_scores, train_labels, cfg.threshold);
    }
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (rec.val_f1 > best) {
      best = rec.val_f1;
      result.params = params;
      result.best_epoch = epoch;
      since = 0;
    } else if (++since >= cfg.patience) {
      break;
    }
  }
  return result;
}

std::string save_checkpoint(const ModelParams& p, const TrainConfig& cfg) {
  std::string out = "fixseeker-model 1\n";
  TrainConfig c = cfg;
  c.hidden = p.layer1.d_out();
  c.graph_width = p.layer2.d_out();
  c.dropout = p.dropout_p;
  c.seed = p.seed;
  c.threads = 0;  // a runtime choice, kept out so checkpoints compare by content
  for (const auto& line : util::split_lines(format_config(c))) out += "config " + line + "\n";
  out += "input " + std::to_string(p.layer1.d_in()) + "\n";
  char buf[32];
  for (const auto& [name, t] : p.tensors()) {
    out += "matrix " + name + " " + std::to_string(t->rows) + " " + std::to_string(t->cols) + "\n";
    for (std::size_t r = 0; r < t->rows; ++r) {
      for (std::size_t c2 = 0; c2 < t->cols; ++c2) {
        std::snprintf(buf, sizeof buf, "%.17g", (*t)(r, c2));
        if (c2) out += ' ';
        out += buf;
      }
      out += '\n';
    }
  }
  out += "end\n";
  return out;
}

ModelParams load_checkpoint(std::string_view text, TrainConfig* cfg_out) {
  auto bad = [](const std::string& what) { return Error(ErrorCode::CheckpointMismatch, what); };
  const auto lines = util::split_lines(text);
  if (lines.empty() || lines[0] != "fixseeker-model 1")
    throw bad(lines.empty() ? "empty checkpoint" : "unsupported checkpoint header '" + lines[0] + "'");
  std::size_t pos = 1;
  std::string config;
  while (pos < lines.size() && util::starts_with(lines[pos], "config ")) config += lines[pos++].substr(7) + "\n";
  TrainConfig cfg;
  try {
    cfg = parse_config(config);
  } catch (const Error& e) {
    throw bad(std::string("checkpoint config: ") + e.what());
  }
  if (pos >= lines.size() || !util::starts_with(lines[pos], "input ")) throw bad("missing input width");
  const std::size_t d_in = std::strtoull(lines[pos++].c_str() + 6, nullptr, 10);
  ModelParams p;
  try {
    p = init_params(d_in, cfg);
  } catch (const Error& e) {
    throw bad(e.what());
  }
  for (auto& [name, t] : p.tensors()) {
    if (pos >= lines.size()) throw bad("truncated before " + name);
    const auto head = util::split(lines[pos++], ' ');
    if (head.size() != 4 || head[0] != "matrix" || head[1] != name ||
        head[2] != std::to_string(t->rows) || head[3] != std::to_string(t->cols))
      throw bad("expected matrix " + name + " " + std::to_string(t->rows) + "x" + std::to_string(t->cols));
    for (std::size_t r = 0; r < t->rows; ++r) {
      if (pos >= lines.size()) throw bad("truncated inside " + name);
      const auto vals = util::split(lines[pos++], ' ');
      if (vals.size() != t->cols) throw bad("row width mismatch in " + name);
      for (std::size_t c = 0; c < t->cols; ++c) {
        double v = 0;
        const auto res = std::from_chars(vals[c].data(), vals[c].data() + vals[c].size(), v);
        if (res.ec != std::errc() || res.ptr != vals[c].data() + vals[c].size())
          throw bad("bad number in " + name);
        (*t)(r, c) = v;
      }
    }
  }
  if (pos >= lines.size() || lines[pos] != "end") throw bad("missing end marker");
  check_finite(p);
  if (cfg_out) *cfg_out = cfg;
  return p;
}

TrainConfig parse_config(std::string_view text) {
  TrainConfig c;
  auto num = [](const std::string& key, std::string_view v, auto& out) {
    using T = std::decay_t<decltype(out)>;
    T parsed{};
    const auto r = std::from_chars(v.data(), v.data() + v.size(), parsed);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size())
      throw Error(ErrorCode::InvalidArgument, "bad value for " + key + ": '" + std::string(v) + "'");
    out = parsed;
  };
  for (const auto& raw : util::split_lines(text)) {
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.front()))) line.remove_prefix(1);
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.remove_suffix(1);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw Error(ErrorCode::InvalidArgument, "expected key=value: " + raw);
    std::string key(line.substr(0, eq));
    std::string_view value = line.substr(eq + 1);
    while (!key.empty() && std::isspace(static_cast<unsigned char>(key.back()))) key.pop_back();
    while (!value.empty() && std::isspace(static_cast<unsigned char>(value.front()))) value.remove_prefix(1);
    if (key == "hidden") num(key, value, c.hidden);
    else if (key == "graph_width") num(key, value, c.graph_width);
    else if (key == "layers") num(key, value, c.layers);
    else if (key == "dropout") num(key, value, c.dropout);
    else if (key == "lr") num(key, value, c.lr);
    else if (key == "beta1") num(key, value, c.beta1);
    else if (key == "beta2") num(key, value, c.beta2);
    else if (key == "adam_eps") num(key, value, c.adam_eps);
    else if (key == "batch_size") num(key, value, c.batch_size);
    else if (key == "epochs") num(key, value, c.epochs);
    else if (key == "patience") num(key, value, c.patience);
    else if (key == "threshold") num(key, value, c.threshold);
    else if (key == "seed") num(key, value, c.seed);
    else if (key == "threads") num(key, value, c.threads);
    else throw Error(ErrorCode::InvalidArgument, "unknown config key '" + key + "'");
  }
  if (c.layers != 2) throw Error(ErrorCode::InvalidArgument, "layers must be 2");
  return c;
}

std::string format_config(const TrainConfig& c) {
  std::ostringstream os;
  os << "hidden=" << c.hidden << "\n"
     << "graph_width=" << c.graph_width << "\n"
     << "layers=" << c.layers << "\n"
     << "dropout=" << util::format_double(c.dropout) << "\n"
     << "lr=" << util::format_double(c.lr) << "\n"
     << "beta1=" << util::format_double(c.beta1) << "\n"
     << "beta2=" << util::format_double(c.beta2) << "\n"
     << "adam_eps=" << util::format_double(c.adam_eps) << "\n"
     << "batch_size=" << c.batch_size << "\n"
     << "epochs=" << c.epochs << "\n"
     << "patience=" << c.patience << "\n"
     << "threshold=" << util::format_double(c.threshold) << "\n"
     << "seed=" << c.seed << "\n"
     << "threads=" << c.threads << "\n";
  return os.str();
}

}  // namespace gnn
}  // namespace fixseeker
