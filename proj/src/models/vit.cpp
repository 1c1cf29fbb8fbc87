#include "declineforge/models/vit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "declineforge/error.hpp"
#include "declineforge/metrics.hpp"

namespace df {

using nn::NodePtr;
using nn::Tensor;

void ViTConfig::validate() const {
  for (int d : vol_dims) {
    if (d <= 0) throw ConfigError("vit: non-positive volume dimension");
    if (d % patch_size != 0)
      throw ConfigError("vit: patch size " + std::to_string(patch_size) +
                        " does not divide volume dimension " +
                        std::to_string(d));
  }
  if (embed_dim % heads != 0)
    throw ConfigError("vit: embed_dim " + std::to_string(embed_dim) +
                      " not divisible by heads " + std::to_string(heads));
  if (depth < 1 || mlp_ratio < 1)
    throw ConfigError("vit: depth and mlp_ratio must be positive");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
    throw ConfigError("vit: dropout_rate must be in [0,1)");
}

int ViTConfig::n_tokens() const {
  return (vol_dims[0] / patch_size) * (vol_dims[1] / patch_size) *
         (vol_dims[2] / patch_size);
}

Tensor volume_to_tensor01(const Volume& v) {
  Tensor t({v.dims[2], v.dims[1], v.dims[0]});
  for (size_t i = 0; i < v.data.size(); ++i)
    t.data[i] = static_cast<double>(v.data[i]) / 255.0;
  return t;
}

ViTModel::ViTModel(ViTConfig cfg, uint64_t seed) : cfg_(std::move(cfg)) {
  cfg_.validate();
  Rng rng(seed);
  const int d = cfg_.embed_dim;
  const int pv = cfg_.patch_voxels();
  const int hidden = d * cfg_.mlp_ratio;

  store_.add("embed.w", nn::fan_in_uniform_init({pv, d}, pv, rng));
  store_.add("embed.b", Tensor::zeros({d}));
  store_.add("pos", nn::trunc_normal_init({cfg_.n_tokens(), d}, 0.02, rng));
  for (int i = 0; i < cfg_.depth; ++i) {
    const std::string p = "blk" + std::to_string(i) + ".";
    store_.add(p + "ln1.g", Tensor::full({d}, 1.0));
    store_.add(p + "ln1.b", Tensor::zeros({d}));
    for (const char* w : {"wq", "wk", "wv", "wo"})
      store_.add(p + "attn." + w, nn::trunc_normal_init({d, d}, 0.02, rng));
    for (const char* b : {"bq", "bk", "bv", "bo"})
      store_.add(p + "attn." + b, Tensor::zeros({d}));
    store_.add(p + "ln2.g", Tensor::full({d}, 1.0));
    store_.add(p + "ln2.b", Tensor::zeros({d}));
    store_.add(p + "mlp.w1", nn::trunc_normal_init({d, hidden}, 0.02, rng));
    store_.add(p + "mlp.b1", Tensor::zeros({hidden}));
    store_.add(p + "mlp.w2", nn::trunc_normal_init({hidden, d}, 0.02, rng));
    store_.add(p + "mlp.b2", Tensor::zeros({d}));
  }
  store_.add("lnf.g", Tensor::full({d}, 1.0));
  store_.add("lnf.b", Tensor::zeros({d}));
  store_.add("dec.w", nn::fan_in_uniform_init({d, pv}, d, rng));
  store_.add("dec.b", Tensor::zeros({pv}));
}

NodePtr ViTModel::encode(const NodePtr& vol01, bool train, Rng& rng) {
  const auto expect =
      std::vector<int>{cfg_.vol_dims[2], cfg_.vol_dims[1], cfg_.vol_dims[0]};
  if (vol01->value.shape != expect)
    throw ShapeError("vit: volume shape " + vol01->value.shape_str() +
                     " does not match model config");
  auto tokens = nn::patchify(vol01, cfg_.patch_size);
  auto x = nn::add(
      nn::linear(tokens, store_.node("embed.w"), store_.node("embed.b")),
      store_.node("pos"));
  for (int i = 0; i < cfg_.depth; ++i) {
    const std::string p = "blk" + std::to_string(i) + ".";
    nn::AttentionParams ap{
        store_.node(p + "attn.wq"), store_.node(p + "attn.wk"),
        store_.node(p + "attn.wv"), store_.node(p + "attn.wo"),
        store_.node(p + "attn.bq"), store_.node(p + "attn.bk"),
        store_.node(p + "attn.bv"), store_.node(p + "attn.bo")};
    auto attn = nn::multi_head_attention(
        nn::layer_norm(x, store_.node(p + "ln1.g"), store_.node(p + "ln1.b")),
        cfg_.heads, ap);
    x = nn::add(x, nn::dropout(attn, cfg_.dropout_rate, train, rng));
    auto h = nn::linear(
        nn::layer_norm(x, store_.node(p + "ln2.g"), store_.node(p + "ln2.b")),
        store_.node(p + "mlp.w1"), store_.node(p + "mlp.b1"));
    auto mlp = nn::linear(nn::gelu(h), store_.node(p + "mlp.w2"),
                          store_.node(p + "mlp.b2"));
    x = nn::add(x, nn::dropout(mlp, cfg_.dropout_rate, train, rng));
  }
  return nn::layer_norm(x, store_.node("lnf.g"), store_.node("lnf.b"));
}

NodePtr ViTModel::decode(const NodePtr& tokens) {
  auto patches =
      nn::linear(tokens, store_.node("dec.w"), store_.node("dec.b"));
  return nn::unpatchify(
      patches, cfg_.patch_size,
      {cfg_.vol_dims[2], cfg_.vol_dims[1], cfg_.vol_dims[0]});
}

Volume ViTModel::reconstruct(const Volume& v) {
  Rng rng(0);
  auto vol = nn::constant(volume_to_tensor01(v));
  auto out = decode(encode(vol, /*train=*/false, rng));
  store_.zero_grad();
  Volume r = v;
  for (size_t i = 0; i < r.data.size(); ++i)
    r.data[i] = static_cast<float>(
        std::clamp(out->value.data[i], 0.0, 1.0));
  return r;
}

std::vector<double> ViTModel::embed(const Volume& v) {
  Rng rng(0);
  auto tokens = encode(nn::constant(volume_to_tensor01(v)), false, rng);
  store_.zero_grad();
  const int n = tokens->value.rows(), d = tokens->value.cols();
  std::vector<double> e(d, 0.0);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < d; ++c) e[c] += tokens->value.at(r, c) / n;
  return e;
}

ReconHistory pretrain_reconstruction(ViTModel& model,
                                     const std::vector<Volume>& inputs,
                                     const std::vector<Volume>& targets,
                                     const std::vector<Volume>& monitor_volumes,
                                     const TrainConfig& cfg) {
  if (inputs.size() != targets.size())
    throw ArgumentError("pretrain: inputs/targets size mismatch");
  ReconHistory history;
  if (cfg.epochs <= 0 || inputs.empty()) return history;

  std::vector<Tensor> in_t, tgt_t;
  in_t.reserve(inputs.size());
  for (const auto& v : inputs) in_t.push_back(volume_to_tensor01(v));
  for (const auto& v : targets) tgt_t.push_back(volume_to_tensor01(v));

  nn::AdamConfig adam;
  adam.lr = cfg.learning_rate;
  const int batch = std::max(1, cfg.batch_size);
  Rng order_rng(Rng::derive(cfg.seed, 11));
  Rng drop_rng(Rng::derive(cfg.seed, 13));
  int64_t step = 0;

  std::vector<size_t> order(inputs.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[order_rng.uniform_int(0, i - 1)]);
    double epoch_loss = 0.0;
    size_t pos = 0;
    while (pos < order.size()) {
      const size_t end = std::min(order.size(), pos + batch);
      model.params().zero_grad();
      double batch_loss = 0.0;
      for (size_t s = pos; s < end; ++s) {
        auto vol = nn::constant(in_t[order[s]]);
        auto recon = model.decode(model.encode(vol, true, drop_rng));
        auto loss = nn::mse_loss(recon, nn::constant(tgt_t[order[s]]));
        nn::backward(loss);
        model.params().collect_grads();
        batch_loss += loss->value.data[0];
      }
      const double scale = 1.0 / static_cast<double>(end - pos);
      for (auto& [name, p] : model.params().params())
        for (double& g : p.grad.data) g *= scale;
      batch_loss *= scale;
      if (!std::isfinite(batch_loss))
        throw DivergedError("pretrain: non-finite loss at epoch " +
                                std::to_string(epoch),
                            epoch);
      epoch_loss += batch_loss * (end - pos);
      adam_step(model.params(), adam, ++step);
      pos = end;
    }
    history.train_mse.push_back(epoch_loss / inputs.size());

    double ssim_sum = 0.0;
    for (const auto& mv : monitor_volumes) {
      Volume recon01 = model.reconstruct(mv);
      Volume ref01 = mv;
      for (auto& x : ref01.data) x /= 255.0f;
      ssim_sum += ssim3d(recon01, ref01, 7, 1.0);
    }
    history.monitor_ssim.push_back(
        monitor_volumes.empty() ? 0.0 : ssim_sum / monitor_volumes.size());
  }
  return history;
}

std::vector<std::vector<double>> extract_embeddings(
    ViTModel& model, const std::vector<Volume>& volumes) {
  std::vector<std::vector<double>> out;
  out.reserve(volumes.size());
  for (const auto& v : volumes) out.push_back(model.embed(v));
  return out;
}

FcHead::FcHead(int in_dim, uint64_t seed) : in_dim_(in_dim) {
  Rng rng(seed);
  store_.add("fc1.w", nn::fan_in_uniform_init({in_dim, 128}, in_dim, rng));
  store_.add("fc1.b", Tensor::zeros({128}));
  store_.add("fc2.w", nn::fan_in_uniform_init({128, 32}, 128, rng));
  store_.add("fc2.b", Tensor::zeros({32}));
  store_.add("fc3.w", nn::fan_in_uniform_init({32, 4}, 32, rng));
  store_.add("fc3.b", Tensor::zeros({4}));
}

namespace {

Tensor embeddings_matrix(const std::vector<std::vector<double>>& e) {
  if (e.empty()) throw ArgumentError("fc_head: empty embedding list");
  const int d = static_cast<int>(e[0].size());
  Tensor t({static_cast<int>(e.size()), d});
  for (size_t i = 0; i < e.size(); ++i) {
    if (static_cast<int>(e[i].size()) != d)
      throw ArgumentError("fc_head: ragged embeddings");
    for (int j = 0; j < d; ++j) t.at(static_cast<int>(i), j) = e[i][j];
  }
  return t;
}

}  // namespace

struct FcHeadTrainer {
  static NodePtr logits(FcHead& head, const NodePtr& x, double drop,
                        bool train, Rng& rng) {
    auto& s = head.store_;
    auto h1 = nn::dropout(
        nn::relu(nn::linear(x, s.node("fc1.w"), s.node("fc1.b"))), drop,
        train, rng);
    auto h2 = nn::dropout(
        nn::relu(nn::linear(h1, s.node("fc2.w"), s.node("fc2.b"))), drop,
        train, rng);
    return nn::linear(h2, s.node("fc3.w"), s.node("fc3.b"));
  }
};

std::vector<std::array<double, 4>> FcHead::predict_proba(
    const std::vector<std::vector<double>>& embeddings) const {
  auto& self = const_cast<FcHead&>(*this);
  Rng rng(0);
  auto x = nn::constant(embeddings_matrix(embeddings));
  auto probs = nn::softmax_rows(
      FcHeadTrainer::logits(self, x, 0.0, false, rng));
  self.store_.zero_grad();
  std::vector<std::array<double, 4>> out(embeddings.size());
  for (size_t i = 0; i < out.size(); ++i)
    for (int c = 0; c < 4; ++c)
      out[i][c] = probs->value.at(static_cast<int>(i), c);
  return out;
}

FcHeadResult train_fc_head_on_embeddings(
    const std::vector<std::vector<double>>& train_embeddings,
    const std::vector<int>& train_labels,
    const std::vector<std::vector<double>>& val_embeddings,
    const TrainConfig& cfg) {
  if (train_embeddings.size() != train_labels.size())
    throw ArgumentError("fc_head: embeddings/labels size mismatch");
  for (int y : train_labels)
    if (y < 0 || y > 3) throw ArgumentError("fc_head: label out of range");

  FcHeadResult result{FcHead(static_cast<int>(train_embeddings[0].size()),
                             Rng::derive(cfg.seed, 21)),
                      {},
                      0.0};
  auto& head = result.head;
  const Tensor X = embeddings_matrix(train_embeddings);

  nn::AdamConfig adam;
  adam.lr = cfg.learning_rate;
  Rng drop_rng(Rng::derive(cfg.seed, 23));
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    head.params().zero_grad();
    auto logits = FcHeadTrainer::logits(head, nn::constant(X),
                                        cfg.dropout_rate, true, drop_rng);
    auto loss = nn::softmax_cross_entropy(logits, train_labels);
    if (!std::isfinite(loss->value.data[0]))
      throw DivergedError("fc_head: non-finite loss", epoch);
    nn::backward(loss);
    head.params().collect_grads();
    adam_step(head.params(), adam, epoch + 1);
  }

  const auto train_probs = head.predict_proba(train_embeddings);
  int correct = 0;
  for (size_t i = 0; i < train_probs.size(); ++i) {
    const int pred = static_cast<int>(
        std::max_element(train_probs[i].begin(), train_probs[i].end()) -
        train_probs[i].begin());
    if (pred == train_labels[i]) ++correct;
  }
  result.train_accuracy =
      static_cast<double>(correct) / static_cast<double>(train_probs.size());
  if (!val_embeddings.empty())
    result.val_probs = head.predict_proba(val_embeddings);
  return result;
}

FcHeadResult train_fc_head(ViTModel& encoder,
                           const std::vector<Volume>& train_volumes,
                           const std::vector<int>& train_labels,
                           const std::vector<Volume>& val_volumes,
                           const TrainConfig& cfg) {
  const uint64_t before = encoder.params().checksum();
  const auto train_emb = extract_embeddings(encoder, train_volumes);
  const auto val_emb = extract_embeddings(encoder, val_volumes);
  auto result =
      train_fc_head_on_embeddings(train_emb, train_labels, val_emb, cfg);
  if (encoder.params().checksum() != before)
    throw Error("fc_head: frozen encoder parameters changed during training");
  return result;
}

}  // namespace df
