#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "declineforge/models/vit.hpp"
#include "declineforge/nn/optim.hpp"
#include "declineforge/volume.hpp"

namespace df {

// From-scratch 3D CNN classifier: four stride-2 conv blocks with ReLU,
// global average pooling, 4-way linear head. The backbone and head carry
// separate learning rates.
class CnnBaseline {
 public:
  CnnBaseline(std::array<int, 3> vol_dims, uint64_t seed);

  nn::ParamStore& params() { return store_; }
  std::vector<std::array<double, 4>> predict_proba(
      const std::vector<Volume>& volumes);

  nn::NodePtr logits(const nn::NodePtr& vol01);

  static constexpr double kBackboneLr = 1e-4;
  static constexpr double kHeadLr = 1e-2;

 private:
  std::array<int, 3> dims_;
  nn::ParamStore store_;
};

CnnBaseline train_cnn_baseline(const std::vector<Volume>& volumes,
                               const std::vector<int>& labels,
                               const TrainConfig& cfg);

}  // namespace df
