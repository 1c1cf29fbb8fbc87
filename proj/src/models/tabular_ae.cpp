#include "declineforge/models/tabular_ae.hpp"

#include <algorithm>
#include <cmath>

#include "declineforge/error.hpp"

namespace df {

using nn::NodePtr;
using nn::Tensor;

TabularAeResult train_tabular_autoencoder(
    const std::vector<std::vector<double>>& X,
    const std::vector<size_t>& train_rows, const TrainConfig& cfg) {
  if (X.empty()) throw ArgumentError("tabular_ae: empty input");
  if (train_rows.empty()) throw ArgumentError("tabular_ae: no train rows");
  const int p = static_cast<int>(X[0].size());
  for (const auto& row : X)
    if (static_cast<int>(row.size()) != p)
      throw ArgumentError("tabular_ae: ragged input");

  // train-split medians for imputation
  std::vector<double> median(p);
  for (int j = 0; j < p; ++j) {
    std::vector<double> vals;
    for (size_t r : train_rows)
      if (std::isfinite(X[r][j])) vals.push_back(X[r][j]);
    if (vals.empty())
      throw DataError("tabular_ae: column " + std::to_string(j) +
                      " is entirely missing on the train split");
    std::sort(vals.begin(), vals.end());
    median[j] = vals.size() % 2 ? vals[vals.size() / 2]
                                : 0.5 * (vals[vals.size() / 2 - 1] +
                                         vals[vals.size() / 2]);
  }

  const auto imputed = [&](const std::vector<double>& row) {
    std::vector<double> out(p);
    for (int j = 0; j < p; ++j)
      out[j] = std::isfinite(row[j]) ? row[j] : median[j];
    return out;
  };

  // train-split standardization
  std::vector<double> mean(p, 0.0), stddev(p, 0.0);
  for (size_t r : train_rows) {
    const auto row = imputed(X[r]);
    for (int j = 0; j < p; ++j) mean[j] += row[j];
  }
  for (int j = 0; j < p; ++j) mean[j] /= train_rows.size();
  for (size_t r : train_rows) {
    const auto row = imputed(X[r]);
    for (int j = 0; j < p; ++j)
      stddev[j] += (row[j] - mean[j]) * (row[j] - mean[j]);
  }
  for (int j = 0; j < p; ++j) {
    stddev[j] = std::sqrt(stddev[j] / train_rows.size());
    if (stddev[j] < 1e-12) stddev[j] = 1.0;  // constant column
  }
  const auto standardized = [&](const std::vector<double>& row) {
    auto out = imputed(row);
    for (int j = 0; j < p; ++j) out[j] = (out[j] - mean[j]) / stddev[j];
    return out;
  };

  const int latent = std::min(8, (p + 1) / 2);
  const int hidden = 8;

  nn::ParamStore store;
  Rng init_rng(Rng::derive(cfg.seed, 41));
  store.add("enc1.w", nn::fan_in_uniform_init({p, hidden}, p, init_rng));
  store.add("enc1.b", Tensor::zeros({hidden}));
  store.add("enc2.w", nn::fan_in_uniform_init({hidden, latent}, hidden, init_rng));
  store.add("enc2.b", Tensor::zeros({latent}));
  store.add("dec1.w", nn::fan_in_uniform_init({latent, hidden}, latent, init_rng));
  store.add("dec1.b", Tensor::zeros({hidden}));
  store.add("dec2.w", nn::fan_in_uniform_init({hidden, p}, hidden, init_rng));
  store.add("dec2.b", Tensor::zeros({p}));

  Tensor train_mat({static_cast<int>(train_rows.size()), p});
  for (size_t i = 0; i < train_rows.size(); ++i) {
    const auto row = standardized(X[train_rows[i]]);
    for (int j = 0; j < p; ++j) train_mat.at(static_cast<int>(i), j) = row[j];
  }

  const auto encode = [&](const NodePtr& x) {
    auto h = nn::relu(nn::linear(x, store.node("enc1.w"), store.node("enc1.b")));
    return nn::linear(h, store.node("enc2.w"), store.node("enc2.b"));
  };
  const auto decode = [&](const NodePtr& z) {
    auto h = nn::relu(nn::linear(z, store.node("dec1.w"), store.node("dec1.b")));
    return nn::linear(h, store.node("dec2.w"), store.node("dec2.b"));
  };

  nn::AdamConfig adam;
  adam.lr = cfg.learning_rate;
  double final_loss = 0.0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    store.zero_grad();
    auto x = nn::constant(train_mat);
    auto loss = nn::mse_loss(decode(encode(x)), nn::constant(train_mat));
    if (!std::isfinite(loss->value.data[0]))
      throw DivergedError("tabular_ae: non-finite loss", epoch);
    final_loss = loss->value.data[0];
    nn::backward(loss);
    store.collect_grads();
    adam_step(store, adam, epoch + 1);
  }

  TabularAeResult result;
  result.latent_dim = latent;
  result.train_recon_mse = final_loss;
  Tensor all({static_cast<int>(X.size()), p});
  for (size_t i = 0; i < X.size(); ++i) {
    const auto row = standardized(X[i]);
    for (int j = 0; j < p; ++j) all.at(static_cast<int>(i), j) = row[j];
  }
  auto z = encode(nn::constant(all));
  store.zero_grad();
  result.latents.resize(X.size(), std::vector<double>(latent));
  for (size_t i = 0; i < X.size(); ++i)
    for (int j = 0; j < latent; ++j)
      result.latents[i][j] = z->value.at(static_cast<int>(i), j);
  return result;
}

}  // namespace df
