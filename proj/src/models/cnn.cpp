#include "declineforge/models/cnn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "declineforge/error.hpp"

namespace df {

using nn::NodePtr;
using nn::Tensor;

namespace {
constexpr int kChannels[5] = {1, 8, 16, 32, 64};
}

CnnBaseline::CnnBaseline(std::array<int, 3> vol_dims, uint64_t seed)
    : dims_(vol_dims) {
  for (int d : vol_dims)
    if (d < 16)
      throw ConfigError("cnn: volume dimension below the 16-voxel minimum");
  Rng rng(seed);
  for (int i = 0; i < 4; ++i) {
    const int cin = kChannels[i], cout = kChannels[i + 1];
    const int fan_in = cin * 27;
    store_.add("backbone.conv" + std::to_string(i) + ".k",
               nn::fan_in_uniform_init({cout, cin, 3, 3, 3}, fan_in, rng));
    store_.add("backbone.conv" + std::to_string(i) + ".b",
               Tensor::zeros({cout}));
  }
  store_.add("head.w", nn::fan_in_uniform_init({64, 4}, 64, rng));
  store_.add("head.b", Tensor::zeros({4}));
}

NodePtr CnnBaseline::logits(const NodePtr& vol01) {
  auto x = nn::reshape(vol01, {1, dims_[2], dims_[1], dims_[0]});
  for (int i = 0; i < 4; ++i) {
    x = nn::relu(nn::conv3d(
        x, store_.node("backbone.conv" + std::to_string(i) + ".k"),
        store_.node("backbone.conv" + std::to_string(i) + ".b"), 2, 1));
  }
  // global average pool: [64, d, h, w] -> [1, 64]
  const int ch = x->value.dim(0);
  const int spatial = static_cast<int>(x->value.size()) / ch;
  auto flat = nn::reshape(x, {ch, spatial});
  auto pooled = nn::mean_rows(nn::transpose(flat));  // [1, ch]
  return nn::linear(pooled, store_.node("head.w"), store_.node("head.b"));
}

std::vector<std::array<double, 4>> CnnBaseline::predict_proba(
    const std::vector<Volume>& volumes) {
  std::vector<std::array<double, 4>> out;
  out.reserve(volumes.size());
  for (const auto& v : volumes) {
    auto probs =
        nn::softmax_rows(logits(nn::constant(volume_to_tensor01(v))));
    store_.zero_grad();
    std::array<double, 4> row;
    for (int c = 0; c < 4; ++c) row[c] = probs->value.data[c];
    out.push_back(row);
  }
  return out;
}

CnnBaseline train_cnn_baseline(const std::vector<Volume>& volumes,
                               const std::vector<int>& labels,
                               const TrainConfig& cfg) {
  if (volumes.empty() || volumes.size() != labels.size())
    throw ArgumentError("cnn: volumes/labels size mismatch");
  for (int y : labels)
    if (y < 0 || y > 3) throw ArgumentError("cnn: label out of range");

  CnnBaseline model(volumes[0].dims, Rng::derive(cfg.seed, 31));
  std::vector<Tensor> in_t;
  in_t.reserve(volumes.size());
  for (const auto& v : volumes) in_t.push_back(volume_to_tensor01(v));

  nn::AdamConfig adam;
  const auto lr_for = [](const std::string& name) {
    return name.rfind("head.", 0) == 0 ? CnnBaseline::kHeadLr
                                       : CnnBaseline::kBackboneLr;
  };

  const int batch = std::max(1, cfg.batch_size);
  Rng order_rng(Rng::derive(cfg.seed, 33));
  std::vector<size_t> order(volumes.size());
  std::iota(order.begin(), order.end(), 0);
  int64_t step = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[order_rng.uniform_int(0, i - 1)]);
    size_t pos = 0;
    while (pos < order.size()) {
      const size_t end = std::min(order.size(), pos + batch);
      model.params().zero_grad();
      double batch_loss = 0.0;
      for (size_t s = pos; s < end; ++s) {
        auto logits = model.logits(nn::constant(in_t[order[s]]));
        auto loss = nn::softmax_cross_entropy(logits, {labels[order[s]]});
        nn::backward(loss);
        model.params().collect_grads();
        batch_loss += loss->value.data[0];
      }
      if (!std::isfinite(batch_loss))
        throw DivergedError("cnn: non-finite loss at epoch " +
                                std::to_string(epoch),
                            epoch);
      const double scale = 1.0 / static_cast<double>(end - pos);
      for (auto& [name, p] : model.params().params())
        for (double& g : p.grad.data) g *= scale;
      adam_step(model.params(), adam, ++step, lr_for);
      pos = end;
    }
  }
  return model;
}

}  // namespace df
