#include "declineforge/gbt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "declineforge/error.hpp"
#include "json.hpp"

namespace df {

void GbtParams::validate() const {
  if (n_rounds < 0) throw ConfigError("gbt: n_rounds < 0");
  if (max_depth < 1) throw ConfigError("gbt: max_depth < 1");
  if (learning_rate <= 0) throw ConfigError("gbt: learning_rate <= 0");
  if (l2_lambda <= 0) throw ConfigError("gbt: l2_lambda <= 0");
  if (gamma < 0) throw ConfigError("gbt: gamma < 0");
  if (min_child_hessian <= 0) throw ConfigError("gbt: min_child_hessian <= 0");
}

double split_gain(double gl, double hl, double gr, double hr, double lambda,
                  double gamma) {
  const double g = gl + gr, h = hl + hr;
  return 0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) -
                g * g / (h + lambda)) -
         gamma;
}

double GbtTree::predict(const std::vector<double>& row) const {
  int idx = 0;
  while (!nodes[idx].is_leaf()) {
    const GbtNode& n = nodes[idx];
    const double v = row[n.feature];
    if (std::isnan(v))
      idx = n.default_left ? n.left : n.right;
    else
      idx = v < n.threshold ? n.left : n.right;
  }
  return nodes[idx].weight;
}

namespace {

struct SplitChoice {
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
  bool default_left = true;
};

// Exact greedy enumeration over sorted non-missing values; missing rows are
// routed to whichever side yields the higher gain.
SplitChoice best_split(const std::vector<std::vector<double>>& X,
                       const std::vector<double>& g,
                       const std::vector<double>& h,
                       const std::vector<int>& rows, const GbtParams& params) {
  SplitChoice best;
  double g_total = 0, h_total = 0;
  for (int i : rows) {
    g_total += g[i];
    h_total += h[i];
  }
  const int p = static_cast<int>(X[0].size());
  for (int j = 0; j < p; ++j) {
    std::vector<std::pair<double, int>> present;
    double g_miss = 0, h_miss = 0;
    for (int i : rows) {
      const double v = X[i][j];
      if (std::isnan(v)) {
        g_miss += g[i];
        h_miss += h[i];
      } else {
        present.emplace_back(v, i);
      }
    }
    if (present.size() < 2) continue;
    std::sort(present.begin(), present.end());

    double gl = 0, hl = 0;
    for (size_t k = 0; k + 1 < present.size(); ++k) {
      gl += g[present[k].second];
      hl += h[present[k].second];
      if (present[k].first == present[k + 1].first) continue;
      const double threshold =
          0.5 * (present[k].first + present[k + 1].first);
      const double gr = g_total - g_miss - gl;
      const double hr = h_total - h_miss - hl;
      // evaluate both missing routings
      for (int route_left = 1; route_left >= 0; --route_left) {
        const double GL = gl + (route_left ? g_miss : 0.0);
        const double HL = hl + (route_left ? h_miss : 0.0);
        const double GR = gr + (route_left ? 0.0 : g_miss);
        const double HR = hr + (route_left ? 0.0 : h_miss);
        if (HL < params.min_child_hessian || HR < params.min_child_hessian)
          continue;
        const double gain =
            split_gain(GL, HL, GR, HR, params.l2_lambda, params.gamma);
        // strict > keeps the lowest feature index / lowest threshold on ties
        if (gain > best.gain) {
          best = {gain, j, threshold, route_left == 1};
        }
      }
    }
  }
  return best;
}

int build_node(const std::vector<std::vector<double>>& X,
               const std::vector<double>& g, const std::vector<double>& h,
               const std::vector<int>& rows, int depth, const GbtParams& params,
               GbtTree* tree) {
  const int idx = static_cast<int>(tree->nodes.size());
  tree->nodes.emplace_back();

  double G = 0, H = 0;
  for (int i : rows) {
    G += g[i];
    H += h[i];
  }
  const auto make_leaf = [&]() {
    tree->nodes[idx].weight =
        -G / (H + params.l2_lambda) * params.learning_rate;
    return idx;
  };
  if (depth >= params.max_depth) return make_leaf();

  const SplitChoice split = best_split(X, g, h, rows, params);
  if (split.feature < 0 || split.gain <= 0.0) return make_leaf();

  std::vector<int> left_rows, right_rows;
  for (int i : rows) {
    const double v = X[i][split.feature];
    const bool go_left =
        std::isnan(v) ? split.default_left : v < split.threshold;
    (go_left ? left_rows : right_rows).push_back(i);
  }
  tree->nodes[idx].feature = split.feature;
  tree->nodes[idx].threshold = split.threshold;
  tree->nodes[idx].default_left = split.default_left;
  const int l = build_node(X, g, h, left_rows, depth + 1, params, tree);
  const int r = build_node(X, g, h, right_rows, depth + 1, params, tree);
  tree->nodes[idx].left = l;
  tree->nodes[idx].right = r;
  return idx;
}

void softmax4(const std::array<double, 4>& margin, std::array<double, 4>* out) {
  const double mx = *std::max_element(margin.begin(), margin.end());
  double sum = 0;
  for (int c = 0; c < 4; ++c) {
    (*out)[c] = std::exp(margin[c] - mx);
    sum += (*out)[c];
  }
  for (int c = 0; c < 4; ++c) (*out)[c] /= sum;
}

}  // namespace

GbtModel fit_gbt(const std::vector<std::vector<double>>& features,
                 const std::vector<int>& labels, const GbtParams& params) {
  params.validate();
  const int n = static_cast<int>(features.size());
  if (n < 2) throw ArgumentError("gbt: need at least 2 samples");
  if (features.size() != labels.size())
    throw ArgumentError("gbt: features/labels size mismatch");
  const int p = static_cast<int>(features[0].size());
  if (p == 0) throw ConfigError("gbt: zero features");
  for (const auto& row : features)
    if (static_cast<int>(row.size()) != p)
      throw ArgumentError("gbt: ragged feature rows");
  for (int y : labels)
    if (y < 0 || y > 3) throw ArgumentError("gbt: label out of range");

  GbtModel model;
  model.n_features = p;
  std::array<double, 4> prior{};
  for (int y : labels) prior[y] += 1.0;
  for (int c = 0; c < 4; ++c)
    model.base_score[c] = std::log(std::max(prior[c] / n, 1e-12));

  std::vector<std::array<double, 4>> margin(n, model.base_score);
  std::vector<int> all_rows(n);
  std::iota(all_rows.begin(), all_rows.end(), 0);

  std::vector<double> g(n), h(n);
  for (int round = 0; round < params.n_rounds; ++round) {
    std::array<GbtTree, 4> trees;
    for (int c = 0; c < 4; ++c) {
      for (int i = 0; i < n; ++i) {
        std::array<double, 4> prob;
        softmax4(margin[i], &prob);
        g[i] = prob[c] - (labels[i] == c ? 1.0 : 0.0);
        h[i] = std::max(prob[c] * (1.0 - prob[c]), 1e-16);
      }
      build_node(features, g, h, all_rows, 0, params, &trees[c]);
    }
    for (int c = 0; c < 4; ++c)
      for (int i = 0; i < n; ++i)
        margin[i][c] += trees[c].predict(features[i]);
    model.rounds.push_back(std::move(trees));
  }
  return model;
}

std::vector<std::array<double, 4>> predict_proba(
    const GbtModel& model, const std::vector<std::vector<double>>& features) {
  std::vector<std::array<double, 4>> out;
  out.reserve(features.size());
  for (const auto& row : features) {
    if (static_cast<int>(row.size()) != model.n_features)
      throw ArgumentError("gbt: feature arity mismatch (expected " +
                          std::to_string(model.n_features) + ", got " +
                          std::to_string(row.size()) + ")");
    std::array<double, 4> margin = model.base_score;
    for (const auto& trees : model.rounds)
      for (int c = 0; c < 4; ++c) margin[c] += trees[c].predict(row);
    std::array<double, 4> prob;
    softmax4(margin, &prob);
    out.push_back(prob);
  }
  return out;
}

std::vector<double> training_logloss_curve(
    const std::vector<std::vector<double>>& features,
    const std::vector<int>& labels, const GbtParams& params) {
  const GbtModel model = fit_gbt(features, labels, params);
  const int n = static_cast<int>(features.size());
  std::vector<std::array<double, 4>> margin(n, model.base_score);
  std::vector<double> curve;
  for (const auto& trees : model.rounds) {
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < 4; ++c) margin[i][c] += trees[c].predict(features[i]);
    double loss = 0;
    for (int i = 0; i < n; ++i) {
      std::array<double, 4> prob;
      softmax4(margin[i], &prob);
      loss -= std::log(std::max(prob[labels[i]], 1e-300));
    }
    curve.push_back(loss / n);
  }
  return curve;
}

std::string GbtModel::to_json() const {
  nlohmann::json j;
  j["format"] = "declineforge-gbt";
  j["version"] = 1;
  j["n_features"] = n_features;
  j["base_score"] = base_score;
  nlohmann::json rounds_json = nlohmann::json::array();
  for (const auto& trees : rounds) {
    nlohmann::json round_json = nlohmann::json::array();
    for (const auto& tree : trees) {
      nlohmann::json nodes = nlohmann::json::array();
      for (const auto& n : tree.nodes) {
        nodes.push_back({{"feature", n.feature},
                         {"threshold", n.threshold},
                         {"default_left", n.default_left},
                         {"left", n.left},
                         {"right", n.right},
                         {"weight", n.weight}});
      }
      round_json.push_back({{"nodes", nodes}});
    }
    rounds_json.push_back(round_json);
  }
  j["rounds"] = rounds_json;
  return j.dump(2);
}

GbtModel GbtModel::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("gbt: bad model JSON: " + std::string(e.what()));
  }
  if (j.value("format", "") != "declineforge-gbt" || j.value("version", 0) != 1)
    throw ParseError("gbt: unrecognized model format/version");
  GbtModel model;
  model.n_features = j.at("n_features").get<int>();
  model.base_score = j.at("base_score").get<std::array<double, 4>>();
  for (const auto& round_json : j.at("rounds")) {
    std::array<GbtTree, 4> trees;
    int c = 0;
    for (const auto& tree_json : round_json) {
      GbtTree tree;
      for (const auto& nj : tree_json.at("nodes")) {
        GbtNode n;
        n.feature = nj.at("feature").get<int>();
        n.threshold = nj.at("threshold").get<double>();
        n.default_left = nj.at("default_left").get<bool>();
        n.left = nj.at("left").get<int>();
        n.right = nj.at("right").get<int>();
        n.weight = nj.at("weight").get<double>();
        tree.nodes.push_back(n);
      }
      trees[c++] = std::move(tree);
    }
    model.rounds.push_back(std::move(trees));
  }
  return model;
}

}  // namespace df
