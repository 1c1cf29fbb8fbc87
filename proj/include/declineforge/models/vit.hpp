#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "declineforge/nn/optim.hpp"
#include "declineforge/volume.hpp"

namespace df {

struct TrainConfig {
  int epochs = 200;
  double learning_rate = 1e-4;
  int batch_size = 4;
  double dropout_rate = 0.0;
  uint64_t seed = 0;
};

struct ViTConfig {
  std::array<int, 3> vol_dims{32, 32, 32};
  int patch_size = 8;
  int embed_dim = 64;
  int depth = 4;
  int heads = 4;
  int mlp_ratio = 4;
  double dropout_rate = 0.0;

  void validate() const;  // throws ConfigError
  int n_tokens() const;
  int patch_voxels() const { return patch_size * patch_size * patch_size; }
};

struct ReconHistory {
  std::vector<double> train_mse;
  std::vector<double> monitor_ssim;
};

// Patch-embed + pre-norm transformer encoder + linear-unpatch decoder.
class ViTModel {
 public:
  ViTModel(ViTConfig cfg, uint64_t seed);

  const ViTConfig& config() const { return cfg_; }
  nn::ParamStore& params() { return store_; }
  const nn::ParamStore& params() const { return store_; }

  // Final-block tokens [n_tokens x d]. Volume values are expected in [0,1].
  nn::NodePtr encode(const nn::NodePtr& vol01, bool train, Rng& rng);
  // Reconstruction [D x H x W] from tokens.
  nn::NodePtr decode(const nn::NodePtr& tokens);

  // Eval-mode reconstruction of a [0,255] volume, returned in [0,1].
  Volume reconstruct(const Volume& v);
  // Mean-pooled final tokens; eval mode, deterministic.
  std::vector<double> embed(const Volume& v);

 private:
  ViTConfig cfg_;
  nn::ParamStore store_;
};

// Volume promoted to a double tensor scaled into [0,1] (divides by 255).
nn::Tensor volume_to_tensor01(const Volume& v);

// Trains MSE reconstruction; inputs[i] reconstructs targets[i] (pass the
// same list twice for plain self-reconstruction). SSIM is monitored on
// monitor_volumes after each epoch. Throws DivergedError on non-finite loss.
ReconHistory pretrain_reconstruction(ViTModel& model,
                                     const std::vector<Volume>& inputs,
                                     const std::vector<Volume>& targets,
                                     const std::vector<Volume>& monitor_volumes,
                                     const TrainConfig& cfg);

std::vector<std::vector<double>> extract_embeddings(
    ViTModel& model, const std::vector<Volume>& volumes);

// d -> 128 -> 32 -> 4 classifier over embeddings.
class FcHead {
 public:
  FcHead(int in_dim, uint64_t seed);
  nn::ParamStore& params() { return store_; }
  std::vector<std::array<double, 4>> predict_proba(
      const std::vector<std::vector<double>>& embeddings) const;

 private:
  friend struct FcHeadTrainer;
  int in_dim_;
  nn::ParamStore store_;
};

struct FcHeadResult {
  FcHead head;
  std::vector<std::array<double, 4>> val_probs;
  double train_accuracy = 0.0;
};

// Encoder stays frozen: its checksum is asserted unchanged across training.
FcHeadResult train_fc_head(ViTModel& encoder,
                           const std::vector<Volume>& train_volumes,
                           const std::vector<int>& train_labels,
                           const std::vector<Volume>& val_volumes,
                           const TrainConfig& cfg);

// Same head training entry for precomputed embeddings.
FcHeadResult train_fc_head_on_embeddings(
    const std::vector<std::vector<double>>& train_embeddings,
    const std::vector<int>& train_labels,
    const std::vector<std::vector<double>>& val_embeddings,
    const TrainConfig& cfg);

}  // namespace df
