#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>

#include "declineforge/nn/graph.hpp"
#include "declineforge/nn/tensor.hpp"

namespace df::nn {

struct Param {
  Tensor value;
  Tensor grad;
  Tensor m;  // Adam first moment
  Tensor v;  // Adam second moment
};

// Named parameters with paired gradient buffers and Adam state.
// Iteration order is the map's (name-sorted) order.
class ParamStore {
 public:
  Tensor& add(const std::string& name, Tensor init);
  Param& at(const std::string& name);
  const Param& at(const std::string& name) const;
  bool has(const std::string& name) const { return params_.count(name) > 0; }

  // Fresh leaf node over the parameter's current value; the node is
  // remembered so collect_grads() can pull its gradient back.
  NodePtr node(const std::string& name);

  void zero_grad();
  // Adds each remembered leaf's grad into the store and clears the leaf list.
  void collect_grads();

  std::map<std::string, Param>& params() { return params_; }
  const std::map<std::string, Param>& params() const { return params_; }

  // Bitwise content fingerprint of all parameter values (freeze checks).
  uint64_t checksum() const;

 private:
  std::map<std::string, Param> params_;
  std::vector<std::pair<std::string, NodePtr>> leaves_;
};

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Standard bias-corrected Adam update at timestep t (1-based). A subset of
// parameter names may be given a different learning rate.
void adam_step(ParamStore& store, const AdamConfig& cfg, int64_t t);
void adam_step(ParamStore& store, const AdamConfig& cfg, int64_t t,
               const std::function<double(const std::string&)>& lr_for);

// Versioned binary checkpoint plus a JSON shape manifest at <path>.manifest.json.
void save_checkpoint(const ParamStore& store, const std::string& path);
void load_checkpoint(ParamStore& store, const std::string& path);

// init helpers, deterministic under the rng
Tensor trunc_normal_init(std::vector<int> shape, double stddev, Rng& rng);
Tensor fan_in_uniform_init(std::vector<int> shape, int fan_in, Rng& rng);

// Central finite differences (step 1e-5) against reverse-mode gradients over
// every parameter and every input tensor; returns the max relative error.
double grad_check(
    ParamStore& store,
    const std::function<NodePtr(ParamStore&, std::vector<NodePtr>&)>& build,
    std::vector<Tensor> inputs, double fd_step = 1e-5);

}  // namespace df::nn
