#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "declineforge/cohort.hpp"
#include "declineforge/error.hpp"
#include "declineforge/models/cnn.hpp"
#include "declineforge/models/tabular_ae.hpp"
#include "declineforge/models/vit.hpp"
#include "declineforge/rng.hpp"
#include "doctest.h"

using namespace df;

namespace {

ViTConfig tiny_vit() {
  ViTConfig cfg;
  cfg.vol_dims = {16, 16, 16};
  cfg.patch_size = 8;
  cfg.embed_dim = 16;
  cfg.depth = 1;
  cfg.heads = 2;
  return cfg;
}

std::vector<Volume> phantom_volumes(int n, int dim, uint64_t seed) {
  CohortSpec s;
  s.n_subjects = std::max(n, 8);
  s.volume_dims = {dim, dim, dim};
  s.seed = seed;
  std::vector<int> groups;
  for (const auto& [t, g] : gen_trajectories(s)) groups.push_back(g);
  auto vols = gen_volumes(groups, s);
  vols.resize(n);
  return vols;
}

}  // namespace

TEST_CASE("vit shape contracts") {
  SUBCASE("32^3 with patch 8 gives 64 tokens") {
    ViTConfig cfg;
    CHECK(cfg.n_tokens() == 64);
  }
  SUBCASE("indivisible dims rejected") {
    ViTConfig cfg = tiny_vit();
    cfg.patch_size = 5;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
  SUBCASE("reconstruction output dims equal input dims") {
    ViTModel model(tiny_vit(), 3);
    const auto vols = phantom_volumes(1, 16, 5);
    const Volume r = model.reconstruct(vols[0]);
    CHECK(r.dims == vols[0].dims);
  }
  SUBCASE("same seed builds identical parameters") {
    ViTModel a(tiny_vit(), 4);
    ViTModel b(tiny_vit(), 4);
    CHECK(a.params().checksum() == b.params().checksum());
  }
  SUBCASE("embedding has embed_dim entries and is deterministic") {
    ViTModel model(tiny_vit(), 5);
    const auto vols = phantom_volumes(2, 16, 6);
    const auto e1 = model.embed(vols[0]);
    const auto e2 = model.embed(vols[0]);
    CHECK(e1.size() == 16);
    CHECK(e1 == e2);
  }
}

TEST_CASE("pretraining contracts") {
  const auto vols = phantom_volumes(6, 16, 7);
  SUBCASE("zero epochs: empty history, parameters untouched") {
    ViTModel model(tiny_vit(), 8);
    const uint64_t before = model.params().checksum();
    TrainConfig cfg;
    cfg.epochs = 0;
    const ReconHistory h =
        pretrain_reconstruction(model, vols, vols, {vols[0]}, cfg);
    CHECK(h.train_mse.empty());
    CHECK(h.monitor_ssim.empty());
    CHECK(model.params().checksum() == before);
  }
  SUBCASE("history lengths equal epochs; loss drops") {
    ViTModel model(tiny_vit(), 8);
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.batch_size = 2;
    cfg.learning_rate = 1e-3;
    cfg.seed = 9;
    const ReconHistory h =
        pretrain_reconstruction(model, vols, vols, {vols[0]}, cfg);
    REQUIRE(h.train_mse.size() == 5);
    REQUIRE(h.monitor_ssim.size() == 5);
    CHECK(h.train_mse.back() < h.train_mse.front());
  }
  SUBCASE("fixed seeds give identical histories") {
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.seed = 10;
    auto run = [&] {
      ViTModel model(tiny_vit(), 8);
      return pretrain_reconstruction(model, vols, vols, {vols[0]}, cfg);
    };
    const ReconHistory a = run(), b = run();
    CHECK(a.train_mse == b.train_mse);
    CHECK(a.monitor_ssim == b.monitor_ssim);
  }
}

TEST_CASE("fc head freeze and training") {
  const auto vols = phantom_volumes(8, 16, 11);
  const std::vector<int> labels{0, 1, 2, 3, 0, 1, 2, 3};
  ViTModel encoder(tiny_vit(), 12);
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.seed = 13;

  SUBCASE("encoder parameters bit-identical across train_fc_head") {
    const uint64_t before = encoder.params().checksum();
    const FcHeadResult res = train_fc_head(encoder, vols, labels, vols, cfg);
    CHECK(encoder.params().checksum() == before);
    REQUIRE(res.val_probs.size() == vols.size());
    for (const auto& row : res.val_probs) {
      double sum = 0;
      for (double p : row) sum += p;
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
  SUBCASE("linearly separable embeddings reach high training accuracy") {
    // plant 4 well-separated clusters in embedding space
    Rng rng(14);
    std::vector<std::vector<double>> emb;
    std::vector<int> y;
    for (int i = 0; i < 80; ++i) {
      const int c = i % 4;
      std::vector<double> e(8, 0.0);
      for (int j = 0; j < 8; ++j) e[j] = rng.normal() * 0.1;
      e[c] += 4.0;
      emb.push_back(std::move(e));
      y.push_back(c);
    }
    TrainConfig hc;
    hc.epochs = 200;
    hc.learning_rate = 1e-2;
    hc.seed = 15;
    const FcHeadResult res = train_fc_head_on_embeddings(emb, y, emb, hc);
    CHECK(res.train_accuracy >= 0.95);
  }
}

TEST_CASE("cnn baseline") {
  SUBCASE("volumes under 16^3 rejected") {
    CHECK_THROWS_AS(CnnBaseline({8, 8, 8}, 1), ConfigError);
  }
  SUBCASE("head and backbone step magnitudes follow their learning rates") {
    CnnBaseline model({16, 16, 16}, 2);
    auto& store = model.params();
    // unit-gradient probe on one backbone and one head parameter
    std::map<std::string, double> before;
    for (auto& [name, p] : store.params()) {
      before[name] = p.value.data[0];
      p.grad = nn::Tensor::zeros(p.value.shape);
      p.grad.data[0] = 1.0;
    }
    nn::AdamConfig ac;
    nn::adam_step(store, ac, 1, [](const std::string& name) {
      return name.rfind("head.", 0) == 0 ? CnnBaseline::kHeadLr
                                         : CnnBaseline::kBackboneLr;
    });
    CHECK(std::fabs(store.at("head.w").value.data[0] - before["head.w"]) ==
          doctest::Approx(1e-2).epsilon(1e-6));
    CHECK(std::fabs(store.at("backbone.conv0.k").value.data[0] -
                    before["backbone.conv0.k"]) ==
          doctest::Approx(1e-4).epsilon(1e-6));
  }
  SUBCASE("constant volumes predict near chance") {
    std::vector<Volume> vols(16, Volume(16, 16, 16, 100.0f));
    std::vector<int> labels;
    for (int i = 0; i < 16; ++i) labels.push_back(i % 4);
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.batch_size = 4;
    cfg.seed = 16;
    CnnBaseline model = train_cnn_baseline(vols, labels, cfg);
    const auto probs = model.predict_proba(vols);
    int correct = 0;
    for (size_t i = 0; i < probs.size(); ++i) {
      const int pred = static_cast<int>(
          std::max_element(probs[i].begin(), probs[i].end()) -
          probs[i].begin());
      correct += pred == labels[i];
    }
    const double acc = static_cast<double>(correct) / probs.size();
    CHECK(acc <= 0.35);  // chance is 0.25; identical inputs cannot separate
  }
}

TEST_CASE("tabular autoencoder") {
  SUBCASE("latent dim for 5 features is 3") {
    Rng rng(17);
    std::vector<std::vector<double>> X;
    for (int i = 0; i < 20; ++i) {
      std::vector<double> row(5);
      for (auto& v : row) v = rng.normal();
      X.push_back(std::move(row));
    }
    std::vector<size_t> train(20);
    std::iota(train.begin(), train.end(), 0);
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.learning_rate = 1e-2;
    const TabularAeResult res = train_tabular_autoencoder(X, train, cfg);
    CHECK(res.latent_dim == 3);
    CHECK(res.latents.size() == 20);
  }
  SUBCASE("rank-1 data reconstructs well") {
    Rng rng(18);
    std::vector<std::vector<double>> X;
    for (int i = 0; i < 40; ++i) {
      const double t = rng.uniform(-2.0, 2.0);
      X.push_back({t, 2 * t, -t, 0.5 * t});
    }
    std::vector<size_t> train(40);
    std::iota(train.begin(), train.end(), 0);
    TrainConfig cfg;
    cfg.epochs = 800;
    cfg.learning_rate = 1e-2;
    cfg.seed = 19;
    const TabularAeResult res = train_tabular_autoencoder(X, train, cfg);
    CHECK(res.train_recon_mse <= 1e-2);
  }
  SUBCASE("deterministic latents") {
    Rng rng(20);
    std::vector<std::vector<double>> X;
    for (int i = 0; i < 10; ++i) X.push_back({rng.normal(), rng.normal()});
    std::vector<size_t> train{0, 1, 2, 3, 4, 5, 6};
    TrainConfig cfg;
    cfg.epochs = 20;
    cfg.seed = 21;
    const auto a = train_tabular_autoencoder(X, train, cfg);
    const auto b = train_tabular_autoencoder(X, train, cfg);
    CHECK(a.latents == b.latents);
  }
  SUBCASE("all-missing train column is a data error naming the column") {
    std::vector<std::vector<double>> X{
        {1.0, std::nan("")}, {2.0, std::nan("")}, {3.0, 5.0}};
    std::vector<size_t> train{0, 1};
    TrainConfig cfg;
    cfg.epochs = 1;
    CHECK_THROWS_WITH_AS(train_tabular_autoencoder(X, train, cfg),
                         doctest::Contains("column 1"), DataError);
  }
}
