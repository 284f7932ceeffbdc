#pragma once

#include "handover/net.hpp"
#include "handover/scenegen.hpp"
#include "handover/types.hpp"

#include <deque>
#include <functional>

namespace handover::perception {

struct StreamParams {
  int window{7};                 // majority-vote window, frames
  scalar_t still_window{0.5};    // seconds
  scalar_t eps_still{0.01};      // meters
  scalar_t tau_uncertain{0.6};   // confidence threshold
  scalar_t theta_visible{0.3};   // visibility-baseline presence threshold
};

struct Frame {
  scalar_t t{0};
  Pose hand_pose;                        // noisy estimate
  PointCloud cloud;                      // camera frame; empty = no detection
  const scenegen::Scene* true_scene{nullptr};  // ground truth, comparators only
};

struct PerceptionOut {
  GraspClass filtered_class{GraspClass::Waiting};
  scalar_t confidence{0};
  bool uncertain{true};
  bool hand_still{false};
  bool object_present{false};
};

/**
 * Per-trial classification stream: majority vote over the last `window`
 * frames (ties to the most recent), mean max-softmax confidence, and a
 * displacement-based stillness flag.
 */
class Stream {
 public:
  using Classifier = std::function<std::pair<GraspClass, scalar_t>(const PointCloud&)>;

  Stream(const net::NetParamsT<float>* params, const net::NetCfg* cfg,
         StreamParams sp = {});
  /** Stream with an injected classifier (tests, ablations). */
  Stream(Classifier classifier, StreamParams sp = {});

  PerceptionOut step(const Frame& frame);
  void reset();

 private:
  const net::NetParamsT<float>* params_{nullptr};
  const net::NetCfg* cfg_{nullptr};
  Classifier classifier_;
  StreamParams sp_;
  std::deque<std::pair<GraspClass, scalar_t>> votes_;
  std::deque<std::pair<scalar_t, vector3_t>> positions_;
};

/**
 * Presence from ground-truth visibility: true iff the visible block-surface
 * fraction is at least theta. Simulation-only comparator standing in for an
 * occlusion-limited object detector.
 */
bool presence_visibility_baseline(const Frame& frame, scalar_t theta = 0.3);

}  // namespace handover::perception
