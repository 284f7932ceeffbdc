#include "handover/net.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace handover;
using namespace handover::net;

namespace {

// Spec-literal greedy oracle: recompute min distance to the picked set from
// scratch at every step.
std::vector<int> fps_oracle(const PointCloud& c, int k) {
  const int n = static_cast<int>(c.cols());
  std::vector<int> picks = {0};
  std::vector<char> used(n, 0);
  used[0] = 1;
  while (static_cast<int>(picks.size()) < k) {
    int best = -1;
    scalar_t best_d = -1;
    for (int j = 0; j < n; ++j) {
      if (used[j]) continue;
      scalar_t dmin = 1e30;
      for (int p : picks) dmin = std::min(dmin, (c.col(j) - c.col(p)).squaredNorm());
      if (dmin > best_d) {
        best_d = dmin;
        best = j;
      }
    }
    picks.push_back(best);
    used[best] = 1;
  }
  return picks;
}

std::vector<std::vector<int>> ball_group_oracle(const std::vector<int>& centers,
                                                const PointCloud& c, scalar_t radius,
                                                int max_group) {
  std::vector<std::vector<int>> out;
  for (int ci : centers) {
    std::vector<std::pair<scalar_t, int>> cand;
    for (int j = 0; j < c.cols(); ++j) {
      const scalar_t d2 = (c.col(j) - c.col(ci)).squaredNorm();
      if (d2 <= radius * radius) cand.emplace_back(d2, j);
    }
    std::sort(cand.begin(), cand.end());
    std::vector<int> g;
    for (int t = 0; t < std::min<int>(max_group, cand.size()); ++t)
      g.push_back(cand[t].second);
    if (g.empty()) g.push_back(ci);
    out.push_back(g);
  }
  return out;
}

PointCloud random_cloud(int n, Rng& rng, scalar_t extent = 0.08) {
  PointCloud c(3, n);
  for (int i = 0; i < n; ++i)
    c.col(i) = vector3_t(rng.uniform(-extent, extent), rng.uniform(-extent, extent),
                         rng.uniform(-extent, extent));
  return c;
}

NetCfg tiny_cfg(bool use_norm = false) {
  NetCfg cfg;
  cfg.sa_layers = {SALayerCfg{8, 0.06, 4, {6, 8}}, SALayerCfg{4, 0.12, 4, {8, 8}}};
  cfg.head_widths = {8, 8, 7};
  cfg.dropout_p = 0.2;
  cfg.use_norm = use_norm;
  return cfg;
}

scenegen::Dataset tiny_dataset() {
  scenegen::DatasetSpec spec;
  spec.samples_per_class = 10;
  spec.num_subjects = 2;
  spec.n_points = 64;
  return scenegen::generate_dataset(spec, 99);
}

}  // namespace

TEST_CASE("fps forced cases") {
  PointCloud c(3, 3);
  c.col(0) = vector3_t(0, 0, 0);
  c.col(1) = vector3_t(1, 0, 0);
  c.col(2) = vector3_t(0.4, 0, 0);
  const auto picks = fps(c, 2);
  REQUIRE(picks.size() == 2);
  CHECK(picks[0] == 0);
  CHECK(picks[1] == 1);

  const auto all = fps(c, 3);
  CHECK(all == std::vector<int>{0, 1, 2});

  CHECK_THROWS_AS(fps(c, 0), BadK);
  CHECK_THROWS_AS(fps(c, 4), BadK);
}

TEST_CASE("fps matches the exhaustive greedy oracle") {
  Rng rng(12345);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = rng.uniform_int(2, 16);
    const int k = rng.uniform_int(1, n);
    const PointCloud c = random_cloud(n, rng);
    CHECK(fps(c, k) == fps_oracle(c, k));
  }
}

TEST_CASE("ball_group forced cases and oracle equivalence") {
  Rng rng(54321);
  const PointCloud c = random_cloud(10, rng);
  const std::vector<int> centers = {0, 3, 7};

  // radius smaller than any pairwise distance: every group is its center
  const auto singles = ball_group(centers, c, 1e-9, 4);
  for (std::size_t i = 0; i < centers.size(); ++i)
    CHECK(singles[i] == std::vector<int>{centers[i]});

  // infinite radius, max_group = count: nearest-sorted full cloud
  const auto full = ball_group(centers, c, scalar_t(1e9), 10);
  for (std::size_t i = 0; i < centers.size(); ++i) {
    CHECK(full[i].size() == 10);
    CHECK(full[i][0] == centers[i]);
    for (std::size_t t = 1; t < full[i].size(); ++t) {
      const scalar_t prev = (c.col(full[i][t - 1]) - c.col(centers[i])).squaredNorm();
      const scalar_t cur = (c.col(full[i][t]) - c.col(centers[i])).squaredNorm();
      CHECK(prev <= cur);
    }
  }

  for (int trial = 0; trial < 100; ++trial) {
    const int n = rng.uniform_int(2, 16);
    const PointCloud cl = random_cloud(n, rng);
    std::vector<int> cs;
    for (int i = 0; i < n; i += 2) cs.push_back(i);
    const scalar_t r = rng.uniform(0.01, 0.15);
    const int mg = rng.uniform_int(1, 8);
    CHECK(ball_group(cs, cl, r, mg) == ball_group_oracle(cs, cl, r, mg));
  }
}

TEST_CASE("forward: zero parameters give uniform softmax") {
  const NetCfg cfg = tiny_cfg();
  NetParams p = init_params(cfg, 1);
  p = zero_like(p);
  Rng rng(0);
  const PointCloud c = random_cloud(32, rng);
  Rng frng(0);
  const auto logits = forward<scalar_t>(p, cfg, c, false, frng);
  CHECK(logits.cwiseAbs().maxCoeff() == 0.0);
  const auto probs = softmax<scalar_t>(logits);
  for (int i = 0; i < 7; ++i) CHECK(probs[i] == doctest::Approx(1.0 / 7.0).epsilon(1e-12));
}

TEST_CASE("forward invariances") {
  // One SA layer covering the whole cloud: permutation cannot change logits.
  NetCfg cfg;
  cfg.sa_layers = {SALayerCfg{12, 10.0, 12, {8}}};
  cfg.head_widths = {8, 8, 7};
  cfg.dropout_p = 0.0;
  const NetParams p = init_params(cfg, 5);
  Rng rng(9);
  const PointCloud c = random_cloud(12, rng);

  Rng f1(0), f2(0);
  const auto base = forward<scalar_t>(p, cfg, c, false, f1);

  PointCloud perm(3, 12);
  const int order[12] = {5, 2, 9, 0, 11, 3, 7, 1, 10, 4, 8, 6};
  for (int i = 0; i < 12; ++i) perm.col(i) = c.col(order[i]);
  const auto permuted = forward<scalar_t>(p, cfg, perm, false, f2);
  CHECK((base - permuted).cwiseAbs().maxCoeff() < 1e-6);

  // Translation invariance from input centering.
  PointCloud shifted = c;
  shifted.colwise() += vector3_t(0.3, 0, 0);
  Rng f3(0);
  const auto moved = forward<scalar_t>(p, cfg, shifted, false, f3);
  CHECK((base - moved).cwiseAbs().maxCoeff() < 1e-9);

  // softmax is positive and sums to one
  const auto probs = softmax<scalar_t>(base);
  CHECK(std::abs(probs.sum() - 1.0) < 1e-9);
  CHECK(probs.minCoeff() > 0.0);
}

TEST_CASE("forward rejects too-small clouds") {
  const NetCfg cfg = tiny_cfg();
  const NetParams p = init_params(cfg, 1);
  Rng rng(0);
  const PointCloud c = random_cloud(7, rng);
  Rng frng(0);
  CHECK_THROWS_AS(forward<scalar_t>(p, cfg, c, false, frng), TooFewPoints);
}

TEST_CASE("cross-entropy limits") {
  const NetCfg cfg = tiny_cfg();
  NetParams p = init_params(cfg, 1);
  p = zero_like(p);
  Rng rng(3);
  Example e{random_cloud(32, rng), 4};
  const std::vector<const Example*> batch = {&e};

  // uniform logits: loss = ln 7
  Rng r1(0);
  const auto uniform = loss_and_grad(p, cfg, batch, r1);
  CHECK(uniform.loss == doctest::Approx(std::log(7.0)).epsilon(1e-9));
  CHECK(uniform.loss == doctest::Approx(1.945910).epsilon(1e-6));

  // forcing the correct logit high drives the loss to zero
  NetParams p10 = p;
  p10.head[2].b[4] = 10.0;
  NetParams p25 = p;
  p25.head[2].b[4] = 25.0;
  Rng r2(0), r3(0);
  const scalar_t l10 = loss_and_grad(p10, cfg, batch, r2).loss;
  const scalar_t l25 = loss_and_grad(p25, cfg, batch, r3).loss;
  CHECK(l10 < 1e-3);
  CHECK(l25 < l10);
  CHECK(l25 < 1e-9);
}

TEST_CASE("analytic gradients match central finite differences") {
  for (const bool use_norm : {false, true}) {
    for (const std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
      const NetCfg cfg = tiny_cfg(use_norm);
      NetParams params = init_params(cfg, seed);
      Rng crng(mix_seed(seed, 77));
      std::vector<Example> ex;
      for (int i = 0; i < 3; ++i) ex.push_back({random_cloud(32, crng), (int)(i * 2)});
      std::vector<const Example*> batch = {&ex[0], &ex[1], &ex[2]};

      Rng g0(42);
      const LossGrad lg = loss_and_grad(params, cfg, batch, g0);
      NetParams grad = lg.grad;
      auto pv = parameter_view(params);
      auto gv = parameter_view(grad);

      const scalar_t h = 1e-5;
      scalar_t worst = 0.0;
      for (std::size_t i = 0; i < pv.size(); ++i) {
        const scalar_t orig = *pv[i];
        *pv[i] = orig + h;
        Rng ra(42);
        const scalar_t lp = loss_and_grad(params, cfg, batch, ra).loss;
        *pv[i] = orig - h;
        Rng rb(42);
        const scalar_t lm = loss_and_grad(params, cfg, batch, rb).loss;
        *pv[i] = orig;
        const scalar_t fd = (lp - lm) / (2 * h);
        const scalar_t denom = std::max({scalar_t(1), std::abs(fd), std::abs(*gv[i])});
        worst = std::max(worst, std::abs(fd - *gv[i]) / denom);
      }
      CHECK(worst < 1e-4);
    }
  }
}

TEST_CASE("training contracts") {
  const auto ds = tiny_dataset();
  NetCfg cfg = tiny_cfg();
  cfg.sa_layers[0].num_centroids = 16;
  cfg.sa_layers[1].num_centroids = 8;

  TrainCfg tc;
  tc.epochs = 1;
  tc.batch_size = 8;
  tc.seed = 42;
  tc.held_out_subject = 1;
  const auto [params, history] = train(ds, cfg, tc);
  REQUIRE(history.loss.size() == 1);
  CHECK(std::isfinite(history.loss[0]));

  TrainCfg bad = tc;
  bad.epochs = 0;
  CHECK_THROWS_AS(train(ds, cfg, bad), BadK);
  bad = tc;
  bad.held_out_subject = 9;
  CHECK_THROWS_AS(train(ds, cfg, bad), BadSplit);

  // determinism: identical seeds give bit-identical parameters
  tc.epochs = 2;
  auto [p1, h1] = train(ds, cfg, tc);
  auto [p2, h2] = train(ds, cfg, tc);
  auto v1 = parameter_view(p1), v2 = parameter_view(p2);
  REQUIRE(v1.size() == v2.size());
  for (std::size_t i = 0; i < v1.size(); ++i) CHECK(*v1[i] == *v2[i]);
  CHECK(h1.loss == h2.loss);

  // loss decreases on a longer run
  tc.epochs = 20;
  tc.learning_rate = 0.05;
  const auto [p3, h3] = train(ds, cfg, tc);
  CHECK(h3.loss.back() < h3.loss.front());
  for (const scalar_t l : h3.loss) CHECK(std::isfinite(l));
}

TEST_CASE("evaluate: tie-break, counting identities") {
  const auto ds = tiny_dataset();
  const NetCfg cfg = tiny_cfg();
  NetParams zero = zero_like(init_params(cfg, 1));

  const auto all = subject_samples(ds, -1);
  const auto res = evaluate(zero, cfg, all);
  // zero net predicts the lowest-index class everywhere
  for (int r = 0; r < 7; ++r) {
    CHECK(res.confusion(r, 0) == 10);
    for (int c = 1; c < 7; ++c) CHECK(res.confusion(r, c) == 0);
  }
  // row sums match per-class counts; accuracy = trace/total
  CHECK(res.accuracy == doctest::Approx(10.0 / 70.0));

  // all-label-0 subset: zero net is "perfect", diagonal confusion
  std::vector<const scenegen::LabeledSample*> zeros;
  for (const auto* s : all)
    if (s->label == GraspClass::OnOpenPalm) zeros.push_back(s);
  const auto perfect = evaluate(zero, cfg, zeros);
  CHECK(perfect.accuracy == doctest::Approx(1.0));
  CHECK(perfect.confusion(0, 0) == 10);
}

TEST_CASE("checkpoint round trip is bit exact") {
  const NetCfg cfg = tiny_cfg(true);
  const NetParams p = init_params(cfg, 31337);
  const auto path = (std::filesystem::temp_directory_path() / "hnd_net.ck").string();
  const auto path2 = (std::filesystem::temp_directory_path() / "hnd_net2.ck").string();
  save_checkpoint(path, cfg, p);
  auto [cfg2, p2] = load_checkpoint(path);
  CHECK(cfg2.use_norm == cfg.use_norm);
  CHECK(cfg2.sa_layers.size() == cfg.sa_layers.size());
  CHECK(cfg2.sa_layers[0].num_centroids == cfg.sa_layers[0].num_centroids);
  save_checkpoint(path2, cfg2, p2);

  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  const std::string b1((std::istreambuf_iterator<char>(f1)), {});
  const std::string b2((std::istreambuf_iterator<char>(f2)), {});
  CHECK(b1 == b2);
  CHECK_FALSE(b1.empty());
}
