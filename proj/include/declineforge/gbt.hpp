#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace df {

struct GbtParams {
  int n_rounds = 100;
  int max_depth = 3;
  double learning_rate = 0.1;
  double l2_lambda = 1.0;
  double gamma = 0.0;
  double min_child_hessian = 1e-3;
  uint64_t seed = 0;

  void validate() const;  // throws ConfigError
};

// Flat node array; children indices, -1 marks a leaf.
struct GbtNode {
  int feature = -1;
  double threshold = 0.0;
  bool default_left = true;  // routing for missing values
  int left = -1;
  int right = -1;
  double weight = 0.0;  // leaf value (already scaled by learning rate)
  bool is_leaf() const { return left < 0; }
};

struct GbtTree {
  std::vector<GbtNode> nodes;  // node 0 is the root
  double predict(const std::vector<double>& row) const;
};

struct GbtModel {
  int n_features = 0;
  std::array<double, 4> base_score{};       // log class priors
  std::vector<std::array<GbtTree, 4>> rounds;

  std::string to_json() const;
  static GbtModel from_json(const std::string& text);
};

// Regularized second-order gain of a candidate split.
double split_gain(double gl, double hl, double gr, double hr, double lambda,
                  double gamma);

// Softmax multiclass boosting with exact greedy splits; NaN marks missing.
GbtModel fit_gbt(const std::vector<std::vector<double>>& features,
                 const std::vector<int>& labels, const GbtParams& params);

std::vector<std::array<double, 4>> predict_proba(
    const GbtModel& model, const std::vector<std::vector<double>>& features);

// Training-set multiclass log-loss after each round (diagnostics/tests).
std::vector<double> training_logloss_curve(
    const std::vector<std::vector<double>>& features,
    const std::vector<int>& labels, const GbtParams& params);

}  // namespace df
