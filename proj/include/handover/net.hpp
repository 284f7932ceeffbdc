#pragma once

#include "handover/grasp.hpp"
#include "handover/rng.hpp"
#include "handover/scenegen.hpp"
#include "handover/types.hpp"

#include <array>
#include <string>
#include <utility>
#include <vector>

namespace handover::net {

template <typename S>
using MatX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using VecX = Eigen::Matrix<S, Eigen::Dynamic, 1>;

struct SALayerCfg {
  int num_centroids{64};
  scalar_t radius{0.1};  // meters
  int max_group{16};
  std::vector<int> mlp_widths{32, 64};
};

struct NetCfg {
  std::vector<SALayerCfg> sa_layers;
  std::array<int, 3> head_widths{64, 32, 7};  // three-layer perceptron, last = classes
  scalar_t dropout_p{0.2};
  bool use_norm{false};
  int num_classes{7};

  /** CPU-sized two-layer default used by the rest of the system. */
  static NetCfg desk_default();
  void validate() const;
  int max_centroids() const;
};

template <typename S>
struct DenseT {
  MatX<S> w;  // out x in
  VecX<S> b;
};

template <typename S>
struct BatchNormT {
  VecX<S> gamma, beta;
  VecX<S> run_mean, run_var;  // inference statistics
};

template <typename S>
struct NetParamsT {
  std::vector<std::vector<DenseT<S>>> sa;  // [layer][mlp stage]
  std::array<DenseT<S>, 3> head;
  std::vector<BatchNormT<S>> norms;  // two entries when use_norm

  template <typename T>
  NetParamsT<T> cast() const {
    NetParamsT<T> out;
    out.sa.resize(sa.size());
    for (std::size_t l = 0; l < sa.size(); ++l)
      for (const auto& d : sa[l])
        out.sa[l].push_back({d.w.template cast<T>(), d.b.template cast<T>()});
    for (int i = 0; i < 3; ++i)
      out.head[i] = {head[i].w.template cast<T>(), head[i].b.template cast<T>()};
    for (const auto& n : norms)
      out.norms.push_back({n.gamma.template cast<T>(), n.beta.template cast<T>(),
                           n.run_mean.template cast<T>(), n.run_var.template cast<T>()});
    return out;
  }
};

using NetParams = NetParamsT<scalar_t>;

NetParams init_params(const NetCfg& cfg, std::uint64_t seed);
NetParams zero_like(const NetParams& p);

/** Trainable scalars in declaration order (weights row-major, then bias). */
template <typename S>
std::vector<S*> parameter_view(NetParamsT<S>& p);
/** Normalization running statistics, declaration order. */
template <typename S>
std::vector<S*> state_view(NetParamsT<S>& p);

/**
 * Greedy farthest-point sampling starting from index 0; each pick maximizes
 * the minimum squared distance to the picked set, ties to the lowest index.
 */
template <typename S>
std::vector<int> fps(const PointMatrix<S>& cloud, int k);

/**
 * For each center, up to max_group points within radius, nearest first with
 * ties by index; a group that would be empty falls back to its center.
 */
template <typename S>
std::vector<std::vector<int>> ball_group(const std::vector<int>& centers,
                                         const PointMatrix<S>& cloud, S radius,
                                         int max_group);

/** Precomputed sampling/grouping structure for one cloud (parameter-free). */
template <typename S>
struct CloudGraphT {
  PointMatrix<S> x;  // centered, scaled by 1/max-radius
  struct Layer {
    std::vector<int> centers;
    std::vector<std::vector<int>> groups;
    S radius;  // in normalized units
  };
  std::vector<Layer> layers;
  std::vector<PointMatrix<S>> pts;  // pts[l] = input coordinates of layer l
};
using CloudGraph = CloudGraphT<scalar_t>;

template <typename S>
CloudGraphT<S> build_graph(const NetCfg& cfg, const PointMatrix<S>& cloud);

/**
 * Class logits for one cloud. Dropout is active only in train mode and is
 * deterministic given rng. Throws TooFewPoints when the cloud is smaller
 * than the largest centroid count.
 */
template <typename S>
VecX<S> forward(const NetParamsT<S>& params, const NetCfg& cfg,
                const PointMatrix<S>& cloud, bool train_mode, Rng& rng);

template <typename S>
VecX<S> softmax(const VecX<S>& logits);

struct Example {
  PointCloud cloud;
  int label{0};
};

struct LossGrad {
  scalar_t loss{0};
  int correct{0};
  NetParams grad;
  std::vector<VecX<scalar_t>> new_run_mean, new_run_var;  // when use_norm
};

/** Mean cross-entropy over the batch and exact gradients of every parameter. */
LossGrad loss_and_grad(const NetParams& params, const NetCfg& cfg,
                       const std::vector<const Example*>& batch, Rng& rng,
                       const std::vector<const CloudGraph*>* graphs = nullptr);

struct TrainCfg {
  int epochs{60};
  int batch_size{16};
  scalar_t learning_rate{0.1};
  scalar_t momentum{0.9};
  scalar_t lr_decay{0.5};     // multiplier applied at 60% and 85% of the run
  std::uint64_t seed{42};
  int held_out_subject{0};
};

struct TrainHistory {
  std::vector<scalar_t> loss;      // per-epoch mean train loss
  std::vector<scalar_t> accuracy;  // per-epoch train accuracy (train-mode logits)
};

/** Minibatch gradient descent excluding the held-out subject. */
std::pair<NetParams, TrainHistory> train(const scenegen::Dataset& dataset,
                                         const NetCfg& net_cfg, const TrainCfg& train_cfg);

struct EvalResult {
  scalar_t accuracy{0};
  Eigen::Matrix<int, 7, 7> confusion{Eigen::Matrix<int, 7, 7>::Zero()};  // rows = truth
};

EvalResult evaluate(const NetParams& params, const NetCfg& cfg,
                    const std::vector<const scenegen::LabeledSample*>& samples);

/** Samples of one subject (pass -1 for all). */
std::vector<const scenegen::LabeledSample*> subject_samples(const scenegen::Dataset& ds,
                                                            int subject_id);

void save_checkpoint(const std::string& path, const NetCfg& cfg, const NetParams& params);
std::pair<NetCfg, NetParams> load_checkpoint(const std::string& path);

}  // namespace handover::net
