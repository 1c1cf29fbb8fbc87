#include "declineforge/nn/optim.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "declineforge/error.hpp"
#include "json.hpp"

namespace df::nn {

Tensor& ParamStore::add(const std::string& name, Tensor init) {
  if (params_.count(name))
    throw ArgumentError("ParamStore: duplicate parameter '" + name + "'");
  Param p;
  p.grad = Tensor::zeros(init.shape);
  p.m = Tensor::zeros(init.shape);
  p.v = Tensor::zeros(init.shape);
  p.value = std::move(init);
  return params_.emplace(name, std::move(p)).first->second.value;
}

Param& ParamStore::at(const std::string& name) {
  const auto it = params_.find(name);
  if (it == params_.end())
    throw ArgumentError("ParamStore: unknown parameter '" + name + "'");
  return it->second;
}

const Param& ParamStore::at(const std::string& name) const {
  const auto it = params_.find(name);
  if (it == params_.end())
    throw ArgumentError("ParamStore: unknown parameter '" + name + "'");
  return it->second;
}

NodePtr ParamStore::node(const std::string& name) {
  auto n = leaf(at(name).value);
  leaves_.emplace_back(name, n);
  return n;
}

void ParamStore::zero_grad() {
  for (auto& [name, p] : params_)
    std::fill(p.grad.data.begin(), p.grad.data.end(), 0.0);
  leaves_.clear();
}

void ParamStore::collect_grads() {
  for (auto& [name, node] : leaves_) {
    auto& g = at(name).grad;
    if (node->grad.size() != g.size()) continue;  // backward never reached it
    for (size_t i = 0; i < g.size(); ++i) g.data[i] += node->grad.data[i];
  }
  leaves_.clear();
}

uint64_t ParamStore::checksum() const {
  // FNV-1a over raw parameter bytes, in name order
  uint64_t h = 1469598103934665603ULL;
  for (const auto& [name, p] : params_) {
    for (char c : name) {
      h ^= static_cast<uint8_t>(c);
      h *= 1099511628211ULL;
    }
    for (double d : p.value.data) {
      uint64_t bits;
      std::memcpy(&bits, &d, sizeof(bits));
      for (int b = 0; b < 8; ++b) {
        h ^= (bits >> (8 * b)) & 0xff;
        h *= 1099511628211ULL;
      }
    }
  }
  return h;
}

void adam_step(ParamStore& store, const AdamConfig& cfg, int64_t t) {
  adam_step(store, cfg, t, [&](const std::string&) { return cfg.lr; });
}

void adam_step(ParamStore& store, const AdamConfig& cfg, int64_t t,
               const std::function<double(const std::string&)>& lr_for) {
  if (t < 1) throw ArgumentError("adam_step: timestep must be >= 1");
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  for (auto& [name, p] : store.params()) {
    const double lr = lr_for(name);
    for (size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad.data[i];
      p.m.data[i] = cfg.beta1 * p.m.data[i] + (1.0 - cfg.beta1) * g;
      p.v.data[i] = cfg.beta2 * p.v.data[i] + (1.0 - cfg.beta2) * g * g;
      const double mhat = p.m.data[i] / bc1;
      const double vhat = p.v.data[i] / bc2;
      p.value.data[i] -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

namespace {
constexpr char kMagic[8] = {'D', 'F', 'C', 'K', 'P', 'T', '0', '1'};
}

void save_checkpoint(const ParamStore& store, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("checkpoint: cannot write '" + path + "'");
  f.write(kMagic, 8);
  const uint64_t count = store.params().size();
  f.write(reinterpret_cast<const char*>(&count), 8);
  nlohmann::json manifest;
  for (const auto& [name, p] : store.params()) {
    const uint32_t name_len = static_cast<uint32_t>(name.size());
    f.write(reinterpret_cast<const char*>(&name_len), 4);
    f.write(name.data(), name_len);
    const uint32_t ndim = static_cast<uint32_t>(p.value.shape.size());
    f.write(reinterpret_cast<const char*>(&ndim), 4);
    for (int d : p.value.shape) {
      const int32_t dd = d;
      f.write(reinterpret_cast<const char*>(&dd), 4);
    }
    f.write(reinterpret_cast<const char*>(p.value.data.data()),
            static_cast<std::streamsize>(p.value.size() * sizeof(double)));
    manifest[name] = p.value.shape;
  }
  if (!f) throw IoError("checkpoint: short write to '" + path + "'");
  std::ofstream mf(path + ".manifest.json");
  mf << manifest.dump(2) << "\n";
}

void load_checkpoint(ParamStore& store, const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("checkpoint: cannot open '" + path + "'");
  char magic[8];
  f.read(magic, 8);
  if (f.gcount() != 8 || std::memcmp(magic, kMagic, 8) != 0)
    throw ParseError("checkpoint: bad magic in '" + path + "'");
  uint64_t count = 0;
  f.read(reinterpret_cast<char*>(&count), 8);
  for (uint64_t i = 0; i < count; ++i) {
    uint32_t name_len = 0;
    f.read(reinterpret_cast<char*>(&name_len), 4);
    std::string name(name_len, '\0');
    f.read(name.data(), name_len);
    uint32_t ndim = 0;
    f.read(reinterpret_cast<char*>(&ndim), 4);
    std::vector<int> shape(ndim);
    for (uint32_t d = 0; d < ndim; ++d) {
      int32_t dd = 0;
      f.read(reinterpret_cast<char*>(&dd), 4);
      shape[d] = dd;
    }
    Tensor t(shape);
    f.read(reinterpret_cast<char*>(t.data.data()),
           static_cast<std::streamsize>(t.size() * sizeof(double)));
    if (!f) throw ParseError("checkpoint: truncated blob for '" + name + "'");
    if (store.has(name)) {
      auto& p = store.at(name);
      if (p.value.shape != shape)
        throw ParseError("checkpoint: shape mismatch for '" + name + "'");
      p.value = std::move(t);
    } else {
      store.add(name, std::move(t));
    }
  }
}

Tensor trunc_normal_init(std::vector<int> shape, double stddev, Rng& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.data) {
    double x;
    do {
      x = rng.normal();
    } while (std::abs(x) > 2.0);
    v = x * stddev;
  }
  return t;
}

Tensor fan_in_uniform_init(std::vector<int> shape, int fan_in, Rng& rng) {
  Tensor t(std::move(shape));
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (double& v : t.data) v = rng.uniform(-bound, bound);
  return t;
}

double grad_check(
    ParamStore& store,
    const std::function<NodePtr(ParamStore&, std::vector<NodePtr>&)>& build,
    std::vector<Tensor> inputs, double fd_step) {
  std::vector<NodePtr> input_nodes;
  input_nodes.reserve(inputs.size());
  for (auto& t : inputs) input_nodes.push_back(constant(t));

  store.zero_grad();
  auto out = build(store, input_nodes);
  if (out->value.size() != 1)
    throw ArgumentError("grad_check: fragment output must be scalar");
  backward(out);
  store.collect_grads();

  const auto eval = [&]() {
    std::vector<NodePtr> nodes;
    nodes.reserve(inputs.size());
    for (auto& t : inputs) nodes.push_back(constant(t));
    ParamStore& s = store;
    auto o = build(s, nodes);
    s.zero_grad();  // drop leaves registered by this probe pass
    return o->value.data[0];
  };

  double max_rel = 0.0;
  const auto compare = [&](double analytic, double* slot) {
    const double saved = *slot;
    *slot = saved + fd_step;
    const double fp = eval();
    *slot = saved - fd_step;
    const double fm = eval();
    *slot = saved;
    const double fd = (fp - fm) / (2.0 * fd_step);
    // The floor must sit above central-difference roundoff (~eps*|f|/step),
    // or components whose true gradient is exactly zero — e.g. the key bias,
    // which cancels inside a row softmax — report pure noise as error.
    const double denom = std::max({1e-3, std::abs(analytic), std::abs(fd)});
    max_rel = std::max(max_rel, std::abs(analytic - fd) / denom);
  };

  // copy analytic grads first: eval() calls zero_grad and clears them
  std::map<std::string, Tensor> analytic;
  for (auto& [name, p] : store.params()) analytic[name] = p.grad;
  std::vector<Tensor> input_grads;
  for (auto& n : input_nodes)
    input_grads.push_back(n->grad.size() == n->value.size()
                              ? n->grad
                              : Tensor::zeros(n->value.shape));

  for (auto& [name, p] : store.params())
    for (size_t i = 0; i < p.value.size(); ++i)
      compare(analytic[name].data[i], &p.value.data[i]);
  for (size_t k = 0; k < inputs.size(); ++k)
    for (size_t i = 0; i < inputs[k].size(); ++i)
      compare(input_grads[k].data[i], &inputs[k].data[i]);

  return max_rel;
}

}  // namespace df::nn
