#include "handover/net.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>

namespace handover::net {

using json = nlohmann::json;

NetCfg NetCfg::desk_default() {
  NetCfg cfg;
  cfg.sa_layers = {SALayerCfg{256, 0.04, 16, {16, 32}}, SALayerCfg{64, 0.10, 16, {32, 64}}};
  cfg.head_widths = {64, 32, 7};
  cfg.dropout_p = 0.2;
  cfg.use_norm = false;
  cfg.num_classes = 7;
  return cfg;
}

void NetCfg::validate() const {
  if (num_classes != 7) throw BadK("num_classes must be 7");
  if (head_widths[2] != num_classes) throw BadK("last head width must equal num_classes");
  if (dropout_p < 0.0 || dropout_p >= 1.0) throw BadK("dropout_p must be in [0,1)");
  if (sa_layers.empty()) throw BadK("at least one set-abstraction layer required");
  for (const auto& l : sa_layers) {
    if (l.num_centroids < 1 || l.max_group < 1 || l.radius <= 0.0 || l.mlp_widths.empty())
      throw BadK("invalid set-abstraction layer config");
  }
}

int NetCfg::max_centroids() const {
  int m = 0;
  for (const auto& l : sa_layers) m = std::max(m, l.num_centroids);
  return m;
}

// --- sampling and grouping ---

template <typename S>
std::vector<int> fps(const PointMatrix<S>& cloud, int k) {
  const int n = static_cast<int>(cloud.cols());
  if (k < 1 || k > n) throw BadK("fps: k out of range");
  std::vector<int> picks;
  picks.reserve(k);
  std::vector<char> picked(n, 0);
  VecX<S> d2 =
      (cloud.colwise() - cloud.col(0)).colwise().squaredNorm().transpose();
  picks.push_back(0);
  picked[0] = 1;
  for (int t = 1; t < k; ++t) {
    int best = -1;
    S best_d = S(-1);
    for (int j = 0; j < n; ++j) {
      if (picked[j]) continue;
      if (d2[j] > best_d) {
        best_d = d2[j];
        best = j;
      }
    }
    picks.push_back(best);
    picked[best] = 1;
    const VecX<S> dn =
        (cloud.colwise() - cloud.col(best)).colwise().squaredNorm().transpose();
    d2 = d2.cwiseMin(dn);
  }
  return picks;
}

template <typename S>
std::vector<std::vector<int>> ball_group(const std::vector<int>& centers,
                                         const PointMatrix<S>& cloud, S radius,
                                         int max_group) {
  const int n = static_cast<int>(cloud.cols());
  const S r2 = radius * radius;
  std::vector<std::vector<int>> groups(centers.size());
  std::vector<std::pair<S, int>> cand;
  for (std::size_t i = 0; i < centers.size(); ++i) {
    const int c = centers[i];
    if (c < 0 || c >= n) throw BadK("ball_group: center index out of range");
    cand.clear();
    for (int j = 0; j < n; ++j) {
      const S d2 = (cloud.col(j) - cloud.col(c)).squaredNorm();
      if (d2 <= r2) cand.emplace_back(d2, j);
    }
    std::sort(cand.begin(), cand.end());
    const int take = std::min<int>(max_group, static_cast<int>(cand.size()));
    auto& g = groups[i];
    g.reserve(take);
    for (int t = 0; t < take; ++t) g.push_back(cand[t].second);
    if (g.empty()) g.push_back(c);
  }
  return groups;
}

template <typename S>
CloudGraphT<S> build_graph(const NetCfg& cfg, const PointMatrix<S>& cloud) {
  const int n = static_cast<int>(cloud.cols());
  if (n < cfg.max_centroids()) throw TooFewPoints("cloud smaller than centroid count");

  CloudGraphT<S> g;
  const Eigen::Matrix<S, 3, 1> centroid = cloud.rowwise().mean();
  PointMatrix<S> x = cloud.colwise() - centroid;
  S max_r = std::sqrt(x.colwise().squaredNorm().maxCoeff());
  if (max_r <= S(0)) max_r = S(1);
  g.x = x / max_r;

  g.pts.push_back(g.x);
  for (const auto& lc : cfg.sa_layers) {
    typename CloudGraphT<S>::Layer layer;
    const PointMatrix<S>& pts = g.pts.back();
    layer.radius = static_cast<S>(lc.radius) / max_r;
    layer.centers = fps(pts, lc.num_centroids);
    layer.groups = ball_group(layer.centers, pts, layer.radius, lc.max_group);
    PointMatrix<S> next(3, layer.centers.size());
    for (std::size_t i = 0; i < layer.centers.size(); ++i)
      next.col(i) = pts.col(layer.centers[i]);
    g.layers.push_back(std::move(layer));
    g.pts.push_back(std::move(next));
  }
  return g;
}

// --- parameters ---

namespace {

template <typename S, typename F>
void visit_all(NetParamsT<S>& p, F&& f) {
  for (auto& layer : p.sa)
    for (auto& d : layer) {
      f(d.w);
      f(d.b);
    }
  for (auto& d : p.head) {
    f(d.w);
    f(d.b);
  }
  for (auto& nrm : p.norms) {
    f(nrm.gamma);
    f(nrm.beta);
    f(nrm.run_mean);
    f(nrm.run_var);
  }
}

template <typename S>
void collect_ptrs(MatX<S>& m, std::vector<S*>& out) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out.push_back(&m(i, j));
}
template <typename S>
void collect_ptrs(VecX<S>& v, std::vector<S*>& out) {
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(&v(i));
}

}  // namespace

NetParams init_params(const NetCfg& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(mix_seed(seed, 0x1217));
  auto make_dense = [&rng](int in, int out) {
    DenseT<scalar_t> d;
    d.w = MatX<scalar_t>(out, in);
    const scalar_t a = std::sqrt(6.0 / (in + out));
    for (int i = 0; i < out; ++i)
      for (int j = 0; j < in; ++j) d.w(i, j) = rng.uniform(-a, a);
    // Small nonzero bias: group centers have exactly-zero inputs, and a zero
    // bias would park their pre-activations on the relu kink.
    d.b = VecX<scalar_t>(out);
    for (int i = 0; i < out; ++i) d.b[i] = rng.uniform(-0.01, 0.01);
    return d;
  };

  NetParams p;
  int feat = 0;
  for (const auto& lc : cfg.sa_layers) {
    std::vector<DenseT<scalar_t>> mlp;
    int in = 6 + feat;  // relative offset + absolute position + features
    for (int w : lc.mlp_widths) {
      mlp.push_back(make_dense(in, w));
      in = w;
    }
    feat = in;
    p.sa.push_back(std::move(mlp));
  }
  int in = feat;
  for (int i = 0; i < 3; ++i) {
    p.head[i] = make_dense(in, cfg.head_widths[i]);
    in = cfg.head_widths[i];
  }
  if (cfg.use_norm) {
    for (int i = 0; i < 2; ++i) {
      BatchNormT<scalar_t> bn;
      bn.gamma = VecX<scalar_t>::Ones(cfg.head_widths[i]);
      bn.beta = VecX<scalar_t>::Zero(cfg.head_widths[i]);
      bn.run_mean = VecX<scalar_t>::Zero(cfg.head_widths[i]);
      bn.run_var = VecX<scalar_t>::Ones(cfg.head_widths[i]);
      p.norms.push_back(std::move(bn));
    }
  }
  return p;
}

NetParams zero_like(const NetParams& p) {
  NetParams z = p;
  visit_all(z, [](auto& m) { m.setZero(); });
  return z;
}

template <typename S>
std::vector<S*> parameter_view(NetParamsT<S>& p) {
  std::vector<S*> out;
  for (auto& layer : p.sa)
    for (auto& d : layer) {
      collect_ptrs(d.w, out);
      collect_ptrs(d.b, out);
    }
  for (auto& d : p.head) {
    collect_ptrs(d.w, out);
    collect_ptrs(d.b, out);
  }
  for (auto& nrm : p.norms) {
    collect_ptrs(nrm.gamma, out);
    collect_ptrs(nrm.beta, out);
  }
  return out;
}

template <typename S>
std::vector<S*> state_view(NetParamsT<S>& p) {
  std::vector<S*> out;
  for (auto& nrm : p.norms) {
    collect_ptrs(nrm.run_mean, out);
    collect_ptrs(nrm.run_var, out);
  }
  return out;
}

// --- forward ---

namespace {

template <typename S>
struct LayerCache {
  MatX<S> a;                       // G x (3 + C_prev)
  std::vector<MatX<S>> h;          // post-relu activations per mlp stage
  std::vector<int> row_member;     // input point index per row
  Eigen::MatrixXi argmax_row;      // C_l x K
  MatX<S> pooled;                  // C_l x K
};

template <typename S>
struct SaCache {
  std::vector<LayerCache<S>> layers;
  VecX<S> global;                  // C_L
  std::vector<int> global_argmax;  // per channel, centroid column
};

/** Set-abstraction stack up to the global pooled feature. */
template <typename S>
VecX<S> sa_forward(const NetParamsT<S>& params, const NetCfg& cfg,
                   const CloudGraphT<S>& graph, SaCache<S>* cache) {
  MatX<S> feat(0, graph.x.cols());
  if (cache) cache->layers.resize(cfg.sa_layers.size());

  for (std::size_t l = 0; l < cfg.sa_layers.size(); ++l) {
    const auto& layer = graph.layers[l];
    const PointMatrix<S>& pts = graph.pts[l];
    const int k = static_cast<int>(layer.centers.size());
    const int c_prev = static_cast<int>(feat.rows());
    int rows = 0;
    for (const auto& g : layer.groups) rows += static_cast<int>(g.size());

    // Per-point rows: radius-relative offset, absolute normalized position,
    // then the point's features from the previous layer.
    MatX<S> a(rows, 6 + c_prev);
    std::vector<int> row_member(rows);
    std::vector<int> group_begin(k + 1, 0);
    int r = 0;
    for (int i = 0; i < k; ++i) {
      group_begin[i] = r;
      const int c = layer.centers[i];
      for (int j : layer.groups[i]) {
        a.row(r).template head<3>() =
            ((pts.col(j) - pts.col(c)) / layer.radius).transpose();
        a.row(r).template segment<3>(3) = pts.col(j).transpose();
        if (c_prev > 0) a.row(r).tail(c_prev) = feat.col(j).transpose();
        row_member[r] = j;
        ++r;
      }
    }
    group_begin[k] = r;

    std::vector<MatX<S>> hs;
    MatX<S> h = std::move(a);
    if (cache) cache->layers[l].a = h;
    for (const auto& d : params.sa[l]) {
      MatX<S> z = h * d.w.transpose();
      z.rowwise() += d.b.transpose();
      h = z.cwiseMax(S(0));
      if (cache) hs.push_back(h);
    }

    const int c_out = static_cast<int>(h.cols());
    MatX<S> pooled(c_out, k);
    Eigen::MatrixXi argmax(c_out, k);
    for (int i = 0; i < k; ++i) {
      const int b = group_begin[i], e = group_begin[i + 1];
      for (int c = 0; c < c_out; ++c) {
        int best = b;
        S best_v = h(b, c);
        for (int rr = b + 1; rr < e; ++rr) {
          if (h(rr, c) > best_v) {
            best_v = h(rr, c);
            best = rr;
          }
        }
        pooled(c, i) = best_v;
        argmax(c, i) = best;
      }
    }
    if (cache) {
      cache->layers[l].h = std::move(hs);
      cache->layers[l].row_member = std::move(row_member);
      cache->layers[l].argmax_row = argmax;
      cache->layers[l].pooled = pooled;
    }
    feat = std::move(pooled);
  }

  const int c_out = static_cast<int>(feat.rows());
  VecX<S> global(c_out);
  std::vector<int> gmax(c_out, 0);
  for (int c = 0; c < c_out; ++c) {
    int best = 0;
    S best_v = feat(c, 0);
    for (int i = 1; i < feat.cols(); ++i) {
      if (feat(c, i) > best_v) {
        best_v = feat(c, i);
        best = i;
      }
    }
    global[c] = best_v;
    gmax[c] = best;
  }
  if (cache) {
    cache->global = global;
    cache->global_argmax = std::move(gmax);
  }
  return global;
}

/** Backprop through the SA stack; accumulates parameter grads. */
template <typename S>
void sa_backward(const NetParamsT<S>& params, const NetCfg& cfg,
                 const CloudGraphT<S>& graph, const SaCache<S>& cache,
                 const VecX<S>& d_global, NetParamsT<S>& grad) {
  const int num_layers = static_cast<int>(cfg.sa_layers.size());
  // d wrt pooled features of the last layer
  const LayerCache<S>& last = cache.layers[num_layers - 1];
  MatX<S> d_feat = MatX<S>::Zero(last.pooled.rows(), last.pooled.cols());
  for (int c = 0; c < d_feat.rows(); ++c)
    d_feat(c, cache.global_argmax[c]) += d_global[c];

  for (int l = num_layers - 1; l >= 0; --l) {
    const LayerCache<S>& lc = cache.layers[l];
    const int rows = static_cast<int>(lc.row_member.size());
    const int stages = static_cast<int>(params.sa[l].size());

    // route pooled grads to argmax rows
    MatX<S> dh = MatX<S>::Zero(rows, lc.h.back().cols());
    for (int i = 0; i < lc.pooled.cols(); ++i)
      for (int c = 0; c < lc.pooled.rows(); ++c)
        dh(lc.argmax_row(c, i), c) += d_feat(c, i);

    for (int t = stages - 1; t >= 0; --t) {
      const MatX<S>& h_out = lc.h[t];
      const MatX<S>& h_in = t == 0 ? lc.a : lc.h[t - 1];
      MatX<S> dz = ((h_out.array() > S(0)).template cast<S>() * dh.array()).matrix();
      grad.sa[l][t].w += dz.transpose() * h_in;
      grad.sa[l][t].b += dz.colwise().sum().transpose();
      dh = dz * params.sa[l][t].w;
    }

    if (l > 0) {
      const int c_prev = static_cast<int>(cache.layers[l - 1].pooled.rows());
      d_feat = MatX<S>::Zero(c_prev, cache.layers[l - 1].pooled.cols());
      for (int r = 0; r < rows; ++r)
        d_feat.col(lc.row_member[r]) += dh.row(r).tail(c_prev).transpose();
    }
  }
}

constexpr scalar_t kBnEps = 1e-5;

}  // namespace

template <typename S>
VecX<S> softmax(const VecX<S>& logits) {
  const S m = logits.maxCoeff();
  VecX<S> e = (logits.array() - m).exp();
  return e / e.sum();
}

template <typename S>
VecX<S> forward(const NetParamsT<S>& params, const NetCfg& cfg,
                const PointMatrix<S>& cloud, bool train_mode, Rng& rng) {
  cfg.validate();
  const CloudGraphT<S> graph = build_graph<S>(cfg, cloud);
  VecX<S> h = sa_forward<S>(params, cfg, graph, nullptr);
  for (int t = 0; t < 3; ++t) {
    VecX<S> z = params.head[t].w * h + params.head[t].b;
    if (t == 2) return z;
    if (cfg.use_norm) {
      const auto& bn = params.norms[t];
      z = ((bn.gamma.array() * (z - bn.run_mean).array() /
            (bn.run_var.array() + S(kBnEps)).sqrt()) +
           bn.beta.array())
              .matrix();
    }
    h = z.cwiseMax(S(0));
    if (train_mode && cfg.dropout_p > 0.0) {
      const S keep = S(1) - S(cfg.dropout_p);
      for (Eigen::Index i = 0; i < h.size(); ++i)
        h[i] = rng.uniform() < cfg.dropout_p ? S(0) : h[i] / keep;
    }
  }
  return h;  // unreachable
}

LossGrad loss_and_grad(const NetParams& params, const NetCfg& cfg,
                       const std::vector<const Example*>& batch, Rng& rng,
                       const std::vector<const CloudGraph*>* graphs) {
  cfg.validate();
  if (batch.empty()) throw BadK("loss_and_grad: empty batch");
  const int b = static_cast<int>(batch.size());
  const int h1 = cfg.head_widths[0], h2 = cfg.head_widths[1];

  std::vector<CloudGraph> local_graphs;
  std::vector<const CloudGraph*> graph_ptrs;
  if (graphs) {
    graph_ptrs = *graphs;
  } else {
    local_graphs.reserve(b);
    for (const Example* e : batch) local_graphs.push_back(build_graph<scalar_t>(cfg, e->cloud));
    for (const auto& g : local_graphs) graph_ptrs.push_back(&g);
  }

  std::vector<SaCache<scalar_t>> caches(b);
  const int feat_dim = static_cast<int>(params.head[0].w.cols());
  MatX<scalar_t> g_in(feat_dim, b);
  MatX<scalar_t> mask1(h1, b), mask2(h2, b);
  const scalar_t keep = 1.0 - cfg.dropout_p;
  for (int s = 0; s < b; ++s) {
    g_in.col(s) = sa_forward<scalar_t>(params, cfg, *graph_ptrs[s], &caches[s]);
    for (int i = 0; i < h1; ++i)
      mask1(i, s) = (cfg.dropout_p > 0.0 && rng.uniform() < cfg.dropout_p) ? 0.0 : 1.0 / keep;
    for (int i = 0; i < h2; ++i)
      mask2(i, s) = (cfg.dropout_p > 0.0 && rng.uniform() < cfg.dropout_p) ? 0.0 : 1.0 / keep;
  }

  LossGrad out;
  out.grad = zero_like(params);

  // head forward (batched over columns)
  struct BnCache {
    VecX<scalar_t> mean, var, istd;
    MatX<scalar_t> xhat;
  };
  std::array<BnCache, 2> bnc;
  std::array<MatX<scalar_t>, 2> hcache;  // post-dropout hidden activations
  std::array<MatX<scalar_t>, 2> relu_in;

  MatX<scalar_t> h = g_in;
  for (int t = 0; t < 2; ++t) {
    MatX<scalar_t> z = params.head[t].w * h;
    z.colwise() += params.head[t].b;
    if (cfg.use_norm) {
      BnCache& c = bnc[t];
      c.mean = z.rowwise().mean();
      MatX<scalar_t> centered = z.colwise() - c.mean;
      c.var = centered.array().square().rowwise().mean().matrix();
      c.istd = (c.var.array() + kBnEps).rsqrt().matrix();
      c.xhat = (centered.array().colwise() * c.istd.array()).matrix();
      z = (c.xhat.array().colwise() * params.norms[t].gamma.array()).matrix();
      z.colwise() += params.norms[t].beta;
    }
    relu_in[t] = z;
    MatX<scalar_t> a = z.cwiseMax(0.0);
    h = (a.array() * (t == 0 ? mask1 : mask2).array()).matrix();
    hcache[t] = h;
  }
  MatX<scalar_t> logits = params.head[2].w * h;
  logits.colwise() += params.head[2].b;

  // softmax cross-entropy
  MatX<scalar_t> probs(logits.rows(), b);
  scalar_t loss = 0.0;
  for (int s = 0; s < b; ++s) {
    const VecX<scalar_t> p = softmax<scalar_t>(logits.col(s));
    probs.col(s) = p;
    loss -= std::log(std::max(p[batch[s]->label], 1e-300));
    int arg = 0;
    for (int c = 1; c < p.size(); ++c)
      if (p[c] > p[arg]) arg = c;
    if (arg == batch[s]->label) ++out.correct;
  }
  out.loss = loss / b;

  MatX<scalar_t> dz = probs;
  for (int s = 0; s < b; ++s) dz(batch[s]->label, s) -= 1.0;
  dz /= static_cast<scalar_t>(b);

  // head backward
  out.grad.head[2].w += dz * hcache[1].transpose();
  out.grad.head[2].b += dz.rowwise().sum();
  MatX<scalar_t> dh = params.head[2].w.transpose() * dz;
  for (int t = 1; t >= 0; --t) {
    MatX<scalar_t> da = (dh.array() * (t == 0 ? mask1 : mask2).array()).matrix();
    MatX<scalar_t> dzn =
        ((relu_in[t].array() > 0.0).cast<scalar_t>() * da.array()).matrix();
    if (cfg.use_norm) {
      const BnCache& c = bnc[t];
      out.grad.norms[t].beta += dzn.rowwise().sum();
      out.grad.norms[t].gamma += (dzn.array() * c.xhat.array()).rowwise().sum().matrix();
      MatX<scalar_t> dxhat =
          (dzn.array().colwise() * params.norms[t].gamma.array()).matrix();
      const VecX<scalar_t> sum_dxhat = dxhat.rowwise().sum();
      const VecX<scalar_t> sum_dxhat_xhat =
          (dxhat.array() * c.xhat.array()).rowwise().sum().matrix();
      MatX<scalar_t> dx = (dxhat * static_cast<scalar_t>(b)).colwise() - sum_dxhat;
      dx -= (c.xhat.array().colwise() * sum_dxhat_xhat.array()).matrix();
      dx = (dx.array().colwise() * (c.istd.array() / static_cast<scalar_t>(b))).matrix();
      dzn = dx;
    }
    const MatX<scalar_t>& h_in = t == 0 ? g_in : hcache[0];
    out.grad.head[t].w += dzn * h_in.transpose();
    out.grad.head[t].b += dzn.rowwise().sum();
    dh = params.head[t].w.transpose() * dzn;
  }

  for (int s = 0; s < b; ++s)
    sa_backward<scalar_t>(params, cfg, *graph_ptrs[s], caches[s], dh.col(s), out.grad);

  if (cfg.use_norm) {
    for (int t = 0; t < 2; ++t) {
      out.new_run_mean.push_back(0.9 * params.norms[t].run_mean + 0.1 * bnc[t].mean);
      out.new_run_var.push_back(0.9 * params.norms[t].run_var + 0.1 * bnc[t].var);
    }
  }
  return out;
}

// --- training and evaluation ---

std::vector<const scenegen::LabeledSample*> subject_samples(const scenegen::Dataset& ds,
                                                            int subject_id) {
  std::vector<const scenegen::LabeledSample*> out;
  for (const auto& s : ds.samples)
    if (subject_id < 0 || s.subject_id == subject_id) out.push_back(&s);
  return out;
}

std::pair<NetParams, TrainHistory> train(const scenegen::Dataset& dataset,
                                         const NetCfg& net_cfg, const TrainCfg& train_cfg) {
  net_cfg.validate();
  if (train_cfg.epochs < 1) throw BadK("epochs must be >= 1");
  if (train_cfg.batch_size < 1) throw BadK("batch_size must be >= 1");
  if (train_cfg.learning_rate <= 0.0) throw BadK("learning_rate must be > 0");

  std::set<int> subjects;
  for (const auto& s : dataset.samples) subjects.insert(s.subject_id);
  if (subjects.size() < 2) throw BadSplit("dataset must contain at least two subjects");
  if (subjects.count(train_cfg.held_out_subject) == 0)
    throw BadSplit("held-out subject has no samples");

  std::vector<Example> examples;
  for (const auto& s : dataset.samples) {
    if (s.subject_id == train_cfg.held_out_subject) continue;
    examples.push_back(Example{s.cloud.cast<scalar_t>(), static_cast<int>(s.label)});
  }
  if (examples.empty()) throw BadSplit("no training samples after the split");

  std::vector<CloudGraph> graphs;
  graphs.reserve(examples.size());
  for (const auto& e : examples) graphs.push_back(build_graph<scalar_t>(net_cfg, e.cloud));

  NetParams params = init_params(net_cfg, train_cfg.seed);
  NetParams velocity = zero_like(params);
  auto p_view = parameter_view(params);
  auto v_view = parameter_view(velocity);

  TrainHistory history;
  const int n = static_cast<int>(examples.size());
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;

  for (int epoch = 0; epoch < train_cfg.epochs; ++epoch) {
    scalar_t lr = train_cfg.learning_rate;
    if (epoch >= (train_cfg.epochs * 6) / 10) lr *= train_cfg.lr_decay;
    if (epoch >= (train_cfg.epochs * 17) / 20) lr *= train_cfg.lr_decay;

    Rng shuffle_rng(mix_seed(train_cfg.seed, 0xE000 + static_cast<std::uint64_t>(epoch)));
    for (int i = n - 1; i > 0; --i) {
      const int j = shuffle_rng.uniform_int(0, i);
      std::swap(order[i], order[j]);
    }
    scalar_t epoch_loss = 0.0;
    int epoch_correct = 0;
    int batch_index = 0;
    for (int start = 0; start < n; start += train_cfg.batch_size, ++batch_index) {
      const int end = std::min(n, start + train_cfg.batch_size);
      std::vector<const Example*> batch;
      std::vector<const CloudGraph*> batch_graphs;
      for (int i = start; i < end; ++i) {
        batch.push_back(&examples[order[i]]);
        batch_graphs.push_back(&graphs[order[i]]);
      }
      Rng batch_rng(mix_seed(train_cfg.seed,
                             0xB000 + static_cast<std::uint64_t>(epoch) * 1000003 +
                                 static_cast<std::uint64_t>(batch_index)));
      LossGrad lg = loss_and_grad(params, net_cfg, batch, batch_rng, &batch_graphs);
      auto g_view = parameter_view(lg.grad);
      for (std::size_t i = 0; i < p_view.size(); ++i) {
        *v_view[i] = train_cfg.momentum * *v_view[i] + *g_view[i];
        *p_view[i] -= lr * *v_view[i];
      }
      if (net_cfg.use_norm) {
        for (int t = 0; t < 2; ++t) {
          params.norms[t].run_mean = lg.new_run_mean[t];
          params.norms[t].run_var = lg.new_run_var[t];
        }
      }
      epoch_loss += lg.loss * static_cast<scalar_t>(batch.size());
      epoch_correct += lg.correct;
    }
    history.loss.push_back(epoch_loss / n);
    history.accuracy.push_back(static_cast<scalar_t>(epoch_correct) / n);
  }
  return {params, history};
}

EvalResult evaluate(const NetParams& params, const NetCfg& cfg,
                    const std::vector<const scenegen::LabeledSample*>& samples) {
  if (samples.empty()) throw BadK("evaluate: empty sample set");
  EvalResult res;
  Rng rng(0);
  int correct = 0;
  for (const auto* s : samples) {
    const PointCloud cloud = s->cloud.cast<scalar_t>();
    const VecX<scalar_t> logits = forward<scalar_t>(params, cfg, cloud, false, rng);
    int arg = 0;
    for (int c = 1; c < logits.size(); ++c)
      if (logits[c] > logits[arg]) arg = c;
    res.confusion(static_cast<int>(s->label), arg)++;
    if (arg == static_cast<int>(s->label)) ++correct;
  }
  res.accuracy = static_cast<scalar_t>(correct) / static_cast<scalar_t>(samples.size());
  return res;
}

// --- checkpoint io ---

namespace {

json cfg_to_json(const NetCfg& cfg) {
  json j;
  j["num_classes"] = cfg.num_classes;
  j["dropout_p"] = cfg.dropout_p;
  j["use_norm"] = cfg.use_norm;
  j["head_widths"] = cfg.head_widths;
  j["sa_layers"] = json::array();
  for (const auto& l : cfg.sa_layers) {
    j["sa_layers"].push_back({{"num_centroids", l.num_centroids},
                              {"radius", l.radius},
                              {"max_group", l.max_group},
                              {"mlp_widths", l.mlp_widths}});
  }
  return j;
}

NetCfg cfg_from_json(const json& j) {
  NetCfg cfg;
  cfg.num_classes = j.at("num_classes").get<int>();
  cfg.dropout_p = j.at("dropout_p").get<scalar_t>();
  cfg.use_norm = j.at("use_norm").get<bool>();
  const auto hw = j.at("head_widths").get<std::vector<int>>();
  if (hw.size() != 3) throw IoError("checkpoint head_widths must have 3 entries");
  cfg.head_widths = {hw[0], hw[1], hw[2]};
  cfg.sa_layers.clear();
  for (const auto& l : j.at("sa_layers")) {
    SALayerCfg sl;
    sl.num_centroids = l.at("num_centroids").get<int>();
    sl.radius = l.at("radius").get<scalar_t>();
    sl.max_group = l.at("max_group").get<int>();
    sl.mlp_widths = l.at("mlp_widths").get<std::vector<int>>();
    cfg.sa_layers.push_back(std::move(sl));
  }
  return cfg;
}

constexpr char kCheckpointMagic[8] = {'G', 'N', 'E', 'T', '1', '\0', '\0', '\0'};

}  // namespace

void save_checkpoint(const std::string& path, const NetCfg& cfg, const NetParams& params) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint for write: " + path);
  f.write(kCheckpointMagic, 8);
  const std::string j = cfg_to_json(cfg).dump();
  const std::uint32_t len = static_cast<std::uint32_t>(j.size());
  f.write(reinterpret_cast<const char*>(&len), 4);
  f.write(j.data(), len);
  NetParams copy = params;
  visit_all(copy, [&f](auto& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j2 = 0; j2 < m.cols(); ++j2) {
        const float v = static_cast<float>(m(i, j2));
        f.write(reinterpret_cast<const char*>(&v), 4);
      }
  });
  if (!f) throw IoError("checkpoint write failed: " + path);
}

std::pair<NetCfg, NetParams> load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint for read: " + path);
  char magic[8];
  f.read(magic, 8);
  if (!f || std::memcmp(magic, kCheckpointMagic, 8) != 0)
    throw IoError("bad checkpoint magic: " + path);
  std::uint32_t len = 0;
  f.read(reinterpret_cast<char*>(&len), 4);
  std::string j(len, '\0');
  f.read(j.data(), len);
  if (!f) throw IoError("truncated checkpoint header: " + path);
  const NetCfg cfg = cfg_from_json(json::parse(j));
  NetParams params = init_params(cfg, 0);
  visit_all(params, [&f](auto& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j2 = 0; j2 < m.cols(); ++j2) {
        float v = 0;
        f.read(reinterpret_cast<char*>(&v), 4);
        m(i, j2) = static_cast<scalar_t>(v);
      }
  });
  if (!f) throw IoError("truncated checkpoint params: " + path);
  return {cfg, params};
}

// explicit instantiations
template std::vector<int> fps<float>(const PointMatrix<float>&, int);
template std::vector<int> fps<double>(const PointMatrix<double>&, int);
template std::vector<std::vector<int>> ball_group<float>(const std::vector<int>&,
                                                         const PointMatrix<float>&, float,
                                                         int);
template std::vector<std::vector<int>> ball_group<double>(const std::vector<int>&,
                                                          const PointMatrix<double>&,
                                                          double, int);
template CloudGraphT<float> build_graph<float>(const NetCfg&, const PointMatrix<float>&);
template CloudGraphT<double> build_graph<double>(const NetCfg&, const PointMatrix<double>&);
template VecX<float> forward<float>(const NetParamsT<float>&, const NetCfg&,
                                    const PointMatrix<float>&, bool, Rng&);
template VecX<double> forward<double>(const NetParamsT<double>&, const NetCfg&,
                                      const PointMatrix<double>&, bool, Rng&);
template VecX<float> softmax<float>(const VecX<float>&);
template VecX<double> softmax<double>(const VecX<double>&);
template std::vector<float*> parameter_view<float>(NetParamsT<float>&);
template std::vector<double*> parameter_view<double>(NetParamsT<double>&);
template std::vector<float*> state_view<float>(NetParamsT<float>&);
template std::vector<double*> state_view<double>(NetParamsT<double>&);

}  // namespace handover::net
