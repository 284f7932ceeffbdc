#include "handover/perception.hpp"

#include <bit>
#include <cmath>

namespace handover::perception {

Stream::Stream(const net::NetParamsT<float>* params, const net::NetCfg* cfg,
               StreamParams sp)
    : params_(params), cfg_(cfg), sp_(sp) {}

Stream::Stream(Classifier classifier, StreamParams sp)
    : classifier_(std::move(classifier)), sp_(sp) {}

void Stream::reset() {
  votes_.clear();
  positions_.clear();
}

PerceptionOut Stream::step(const Frame& frame) {
  GraspClass predicted = GraspClass::Waiting;
  scalar_t top = 0.0;
  if (classifier_) {
    std::tie(predicted, top) = classifier_(frame.cloud);
  } else if (frame.cloud.cols() >= cfg_->max_centroids()) {
    const PointMatrix<float> cloud_f = frame.cloud.cast<float>();
    Rng rng(0);  // dropout inactive at inference
    const auto logits = net::forward<float>(*params_, *cfg_, cloud_f, false, rng);
    const auto probs = net::softmax<float>(logits);
    int arg = 0;
    for (int i = 1; i < probs.size(); ++i)
      if (probs[i] > probs[arg]) arg = i;
    predicted = static_cast<GraspClass>(arg);
    top = probs[arg];
  }
  // detection failures enter the window as low-confidence Waiting

  votes_.emplace_back(predicted, top);
  while (static_cast<int>(votes_.size()) > sp_.window) votes_.pop_front();

  positions_.emplace_back(frame.t, frame.hand_pose.position);
  while (!positions_.empty() && positions_.front().first < frame.t - sp_.still_window)
    positions_.pop_front();

  // majority vote, ties to the class seen most recently
  int counts[kNumGraspClasses] = {0};
  for (const auto& [g, c] : votes_) counts[static_cast<int>(g)]++;
  int best_count = 0;
  for (int i = 0; i < kNumGraspClasses; ++i) best_count = std::max(best_count, counts[i]);
  GraspClass filtered = GraspClass::Waiting;
  for (auto it = votes_.rbegin(); it != votes_.rend(); ++it) {
    if (counts[static_cast<int>(it->first)] == best_count) {
      filtered = it->first;
      break;
    }
  }

  scalar_t conf = 0.0;
  for (const auto& [g, c] : votes_) conf += c;
  conf /= static_cast<scalar_t>(votes_.size());

  // still only once the window has full time coverage
  bool still = false;
  if (!positions_.empty() &&
      positions_.front().first <= frame.t - 0.9 * sp_.still_window) {
    scalar_t max_disp = 0.0;
    for (std::size_t i = 0; i < positions_.size(); ++i)
      for (std::size_t j = i + 1; j < positions_.size(); ++j)
        max_disp =
            std::max(max_disp, (positions_[i].second - positions_[j].second).norm());
    still = max_disp <= sp_.eps_still;
  }

  PerceptionOut out;
  out.filtered_class = filtered;
  out.confidence = conf;
  out.uncertain = conf < sp_.tau_uncertain;
  out.hand_still = still;
  out.object_present = is_holding(filtered);
  return out;
}

bool presence_visibility_baseline(const Frame& frame, scalar_t theta) {
  if (!frame.true_scene || !frame.true_scene->block) return false;
  Rng rng(mix_seed(0xBA5E11DEULL, std::bit_cast<std::uint64_t>(frame.t)));
  return scenegen::visible_block_fraction(*frame.true_scene, 300, rng) >= theta;
}

}  // namespace handover::perception
