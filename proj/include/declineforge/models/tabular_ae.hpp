#pragma once

#include <cstdint>
#include <vector>

#include "declineforge/models/vit.hpp"

namespace df {

struct TabularAeResult {
  std::vector<std::vector<double>> latents;  // one per input row
  double train_recon_mse = 0.0;
  int latent_dim = 0;
};

// Median-imputes and standardizes using train-row statistics, trains an
// in -> 8 -> latent / latent -> 8 -> in MSE autoencoder on the train rows,
// then encodes every row. latent = min(8, ceil(in/2)).
// NaN marks missing; an all-missing column on the train rows is a data error.
TabularAeResult train_tabular_autoencoder(
    const std::vector<std::vector<double>>& X,
    const std::vector<size_t>& train_rows, const TrainConfig& cfg);

}  // namespace df
