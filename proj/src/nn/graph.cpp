#include "declineforge/nn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "declineforge/error.hpp"

namespace df::nn {

NodePtr constant(Tensor t) { return std::make_shared<Node>(std::move(t)); }
NodePtr leaf(Tensor t) { return std::make_shared<Node>(std::move(t)); }

void backward(const NodePtr& out) {
  if (out->value.size() != 1)
    throw ArgumentError("backward: output must be scalar, got shape " +
                        out->value.shape_str());
  // iterative post-order topological sort
  std::vector<Node*> topo;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, size_t>> stack{{out.get(), 0}};
  visited.insert(out.get());
  while (!stack.empty()) {
    auto& [node, next_child] = stack.back();
    if (next_child < node->parents.size()) {
      Node* child = node->parents[next_child++].get();
      if (visited.insert(child).second) stack.emplace_back(child, 0);
    } else {
      topo.push_back(node);
      stack.pop_back();
    }
  }
  for (Node* n : topo) n->grad = Tensor::zeros(n->value.shape);
  out->grad.data[0] = 1.0;
  for (auto it = topo.rbegin(); it != topo.rend(); ++it)
    if ((*it)->backward_fn) (*it)->backward_fn(**it);
}

namespace {

NodePtr make(Tensor value, std::vector<NodePtr> parents,
             std::function<void(Node&)> bwd) {
  auto n = std::make_shared<Node>(std::move(value));
  n->parents = std::move(parents);
  n->backward_fn = std::move(bwd);
  return n;
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b))
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_str() +
                     " vs " + b.shape_str());
}

}  // namespace

NodePtr add(const NodePtr& a, const NodePtr& b) {
  check_same_shape(a->value, b->value, "add");
  Tensor out = a->value;
  for (size_t i = 0; i < out.size(); ++i) out.data[i] += b->value.data[i];
  return make(std::move(out), {a, b}, [](Node& n) {
    for (size_t i = 0; i < n.grad.size(); ++i) {
      n.parents[0]->grad.data[i] += n.grad.data[i];
      n.parents[1]->grad.data[i] += n.grad.data[i];
    }
  });
}

NodePtr sub(const NodePtr& a, const NodePtr& b) {
  check_same_shape(a->value, b->value, "sub");
  Tensor out = a->value;
  for (size_t i = 0; i < out.size(); ++i) out.data[i] -= b->value.data[i];
  return make(std::move(out), {a, b}, [](Node& n) {
    for (size_t i = 0; i < n.grad.size(); ++i) {
      n.parents[0]->grad.data[i] += n.grad.data[i];
      n.parents[1]->grad.data[i] -= n.grad.data[i];
    }
  });
}

NodePtr mul(const NodePtr& a, const NodePtr& b) {
  check_same_shape(a->value, b->value, "mul");
  Tensor out = a->value;
  for (size_t i = 0; i < out.size(); ++i) out.data[i] *= b->value.data[i];
  return make(std::move(out), {a, b}, [](Node& n) {
    for (size_t i = 0; i < n.grad.size(); ++i) {
      n.parents[0]->grad.data[i] += n.grad.data[i] * n.parents[1]->value.data[i];
      n.parents[1]->grad.data[i] += n.grad.data[i] * n.parents[0]->value.data[i];
    }
  });
}

NodePtr scale(const NodePtr& a, double s) {
  Tensor out = a->value;
  for (double& v : out.data) v *= s;
  return make(std::move(out), {a}, [s](Node& n) {
    for (size_t i = 0; i < n.grad.size(); ++i)
      n.parents[0]->grad.data[i] += s * n.grad.data[i];
  });
}

NodePtr add_rowvec(const NodePtr& a, const NodePtr& bias) {
  const int d = a->value.cols();
  if (static_cast<int>(bias->value.size()) != d)
    throw ShapeError("add_rowvec: bias length " + bias->value.shape_str() +
                     " vs matrix " + a->value.shape_str());
  Tensor out = a->value;
  const int n = out.rows();
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < d; ++c) out.at(r, c) += bias->value.data[c];
  return make(std::move(out), {a, bias}, [n, d](Node& node) {
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < d; ++c) {
        node.parents[0]->grad.at(r, c) += node.grad.at(r, c);
        node.parents[1]->grad.data[c] += node.grad.at(r, c);
      }
  });
}

NodePtr matmul(const NodePtr& a, const NodePtr& b) {
  Tensor out;
  matmul_into(a->value, b->value, out);
  return make(std::move(out), {a, b}, [](Node& n) {
    matmul_a_bt_accum(n.grad, n.parents[1]->value, n.parents[0]->grad);
    matmul_at_b_accum(n.parents[0]->value, n.grad, n.parents[1]->grad);
  });
}

NodePtr transpose(const NodePtr& a) {
  if (a->value.ndim() != 2) throw ShapeError("transpose: need 2D tensor");
  const int n = a->value.rows(), m = a->value.cols();
  Tensor out({m, n});
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < m; ++c) out.at(c, r) = a->value.at(r, c);
  return make(std::move(out), {a}, [n, m](Node& node) {
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < m; ++c)
        node.parents[0]->grad.at(r, c) += node.grad.at(c, r);
  });
}

NodePtr slice_cols(const NodePtr& a, int start, int len) {
  const int n = a->value.rows(), m = a->value.cols();
  if (start < 0 || len < 1 || start + len > m)
    throw ShapeError("slice_cols: range out of bounds");
  Tensor out({n, len});
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < len; ++c) out.at(r, c) = a->value.at(r, start + c);
  return make(std::move(out), {a}, [n, len, start](Node& node) {
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < len; ++c)
        node.parents[0]->grad.at(r, start + c) += node.grad.at(r, c);
  });
}

NodePtr concat_cols(const std::vector<NodePtr>& parts) {
  if (parts.empty()) throw ArgumentError("concat_cols: no parts");
  const int n = parts[0]->value.rows();
  int total = 0;
  for (const auto& p : parts) {
    if (p->value.rows() != n)
      throw ShapeError("concat_cols: row count mismatch");
    total += p->value.cols();
  }
  Tensor out({n, total});
  int off = 0;
  for (const auto& p : parts) {
    const int m = p->value.cols();
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < m; ++c) out.at(r, off + c) = p->value.at(r, c);
    off += m;
  }
  return make(std::move(out), parts, [n](Node& node) {
    int off = 0;
    for (auto& p : node.parents) {
      const int m = p->value.cols();
      for (int r = 0; r < n; ++r)
        for (int c = 0; c < m; ++c)
          p->grad.at(r, c) += node.grad.at(r, off + c);
      off += m;
    }
  });
}

NodePtr reshape(const NodePtr& a, std::vector<int> shape) {
  if (shape_product(shape) != a->value.size())
    throw ShapeError("reshape: size mismatch");
  Tensor out(std::move(shape), a->value.data);
  return make(std::move(out), {a}, [](Node& n) {
    for (size_t i = 0; i < n.grad.size(); ++i)
      n.parents[0]->grad.data[i] += n.grad.data[i];
  });
}

NodePtr mean_rows(const NodePtr& a) {
  const int n = a->value.rows(), d = a->value.cols();
  Tensor out({1, d});
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < d; ++c) out.data[c] += a->value.at(r, c) / n;
  return make(std::move(out), {a}, [n, d](Node& node) {
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < d; ++c)
        node.parents[0]->grad.at(r, c) += node.grad.data[c] / n;
  });
}

NodePtr relu(const NodePtr& a) {
  Tensor out = a->value;
  for (double& v : out.data) v = std::max(0.0, v);
  return make(std::move(out), {a}, [](Node& n) {
    for (size_t i = 0; i < n.grad.size(); ++i)
      if (n.parents[0]->value.data[i] > 0.0)
        n.parents[0]->grad.data[i] += n.grad.data[i];
  });
}

NodePtr gelu(const NodePtr& a) {
  constexpr double kC = 0.7978845608028654;  // sqrt(2/pi)
  constexpr double kA = 0.044715;
  Tensor out = a->value;
  for (double& v : out.data) {
    const double t = std::tanh(kC * (v + kA * v * v * v));
    v = 0.5 * v * (1.0 + t);
  }
  return make(std::move(out), {a}, [](Node& n) {
    for (size_t i = 0; i < n.grad.size(); ++i) {
      const double x = n.parents[0]->value.data[i];
      const double u = kC * (x + kA * x * x * x);
      const double t = std::tanh(u);
      const double du = kC * (1.0 + 3.0 * kA * x * x);
      const double d = 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du;
      n.parents[0]->grad.data[i] += d * n.grad.data[i];
    }
  });
}

NodePtr softmax_rows(const NodePtr& a) {
  const int n = a->value.rows(), d = a->value.cols();
  Tensor out = a->value;
  for (int r = 0; r < n; ++r) {
    double mx = out.at(r, 0);
    for (int c = 1; c < d; ++c) mx = std::max(mx, out.at(r, c));
    double sum = 0;
    for (int c = 0; c < d; ++c) {
      out.at(r, c) = std::exp(out.at(r, c) - mx);
      sum += out.at(r, c);
    }
    for (int c = 0; c < d; ++c) out.at(r, c) /= sum;
  }
  return make(std::move(out), {a}, [n, d](Node& node) {
    for (int r = 0; r < n; ++r) {
      double dot = 0;
      for (int c = 0; c < d; ++c) dot += node.grad.at(r, c) * node.value.at(r, c);
      for (int c = 0; c < d; ++c)
        node.parents[0]->grad.at(r, c) +=
            node.value.at(r, c) * (node.grad.at(r, c) - dot);
    }
  });
}

NodePtr layer_norm(const NodePtr& x, const NodePtr& gain, const NodePtr& bias,
                   double eps) {
  const int n = x->value.rows(), d = x->value.cols();
  if (static_cast<int>(gain->value.size()) != d ||
      static_cast<int>(bias->value.size()) != d)
    throw ShapeError("layer_norm: gain/bias length mismatch");
  Tensor out({n, d});
  std::vector<double> inv_std(n), mean(n);
  for (int r = 0; r < n; ++r) {
    double mu = 0;
    for (int c = 0; c < d; ++c) mu += x->value.at(r, c);
    mu /= d;
    double var = 0;
    for (int c = 0; c < d; ++c) {
      const double dv = x->value.at(r, c) - mu;
      var += dv * dv;
    }
    var /= d;
    mean[r] = mu;
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (int c = 0; c < d; ++c)
      out.at(r, c) = (x->value.at(r, c) - mu) * inv_std[r] * gain->value.data[c] +
                     bias->value.data[c];
  }
  return make(std::move(out), {x, gain, bias},
              [n, d, mean, inv_std](Node& node) {
                auto& xg = node.parents[0]->grad;
                const auto& xv = node.parents[0]->value;
                const auto& g = node.parents[1]->value;
                for (int r = 0; r < n; ++r) {
                  // dy w.r.t. normalized input
                  double sum_dn = 0, sum_dn_xhat = 0;
                  std::vector<double> dn(d), xhat(d);
                  for (int c = 0; c < d; ++c) {
                    xhat[c] = (xv.at(r, c) - mean[r]) * inv_std[r];
                    dn[c] = node.grad.at(r, c) * g.data[c];
                    sum_dn += dn[c];
                    sum_dn_xhat += dn[c] * xhat[c];
                    node.parents[1]->grad.data[c] +=
                        node.grad.at(r, c) * xhat[c];
                    node.parents[2]->grad.data[c] += node.grad.at(r, c);
                  }
                  for (int c = 0; c < d; ++c)
                    xg.at(r, c) += inv_std[r] * (dn[c] - sum_dn / d -
                                                 xhat[c] * sum_dn_xhat / d);
                }
              });
}

NodePtr dropout(const NodePtr& a, double rate, bool train, Rng& rng) {
  if (!train || rate == 0.0) {
    return make(a->value, {a}, [](Node& n) {
      for (size_t i = 0; i < n.grad.size(); ++i)
        n.parents[0]->grad.data[i] += n.grad.data[i];
    });
  }
  if (!(rate >= 0.0 && rate < 1.0))
    throw ArgumentError("dropout: rate must be in [0,1)");
  const double keep = 1.0 - rate;
  auto mask = std::make_shared<std::vector<double>>(a->value.size());
  Tensor out = a->value;
  for (size_t i = 0; i < out.size(); ++i) {
    (*mask)[i] = rng.uniform() < rate ? 0.0 : 1.0 / keep;
    out.data[i] *= (*mask)[i];
  }
  return make(std::move(out), {a}, [mask](Node& n) {
    for (size_t i = 0; i < n.grad.size(); ++i)
      n.parents[0]->grad.data[i] += (*mask)[i] * n.grad.data[i];
  });
}

NodePtr linear(const NodePtr& x, const NodePtr& w, const NodePtr& b) {
  return add_rowvec(matmul(x, w), b);
}

namespace {

struct ConvGeom {
  int cin, cout, k, stride, pad;
  int in[3], out[3];  // D,H,W
};

ConvGeom conv_geometry(const Tensor& x, const Tensor& kernels, int stride,
                       int padding) {
  if (x.ndim() != 4 || kernels.ndim() != 5)
    throw ShapeError("conv3d: expected x[C,D,H,W], kernels[Co,Ci,k,k,k]; got " +
                     x.shape_str() + " and " + kernels.shape_str());
  ConvGeom g;
  g.cin = x.dim(0);
  g.cout = kernels.dim(0);
  g.k = kernels.dim(2);
  g.stride = stride;
  g.pad = padding;
  if (kernels.dim(1) != g.cin)
    throw ShapeError("conv3d: channel mismatch " + x.shape_str() + " vs " +
                     kernels.shape_str());
  if (stride < 1) throw ShapeError("conv3d: stride < 1");
  for (int i = 0; i < 3; ++i) {
    g.in[i] = x.dim(i + 1);
    const int o = (g.in[i] + 2 * padding - g.k) / stride + 1;
    if (g.in[i] + 2 * padding < g.k)
      throw ShapeError("conv3d: kernel larger than padded input");
    g.out[i] = o;
  }
  return g;
}

// columns of the im2col matrix: one per output voxel
void im2col(const Tensor& x, const ConvGeom& g, Tensor& col) {
  const int patch = g.cin * g.k * g.k * g.k;
  const int ncols = g.out[0] * g.out[1] * g.out[2];
  col = Tensor({patch, ncols});
  int cidx = 0;
  for (int od = 0; od < g.out[0]; ++od)
    for (int oh = 0; oh < g.out[1]; ++oh)
      for (int ow = 0; ow < g.out[2]; ++ow, ++cidx) {
        int ridx = 0;
        for (int c = 0; c < g.cin; ++c)
          for (int kd = 0; kd < g.k; ++kd)
            for (int kh = 0; kh < g.k; ++kh)
              for (int kw = 0; kw < g.k; ++kw, ++ridx) {
                const int id = od * g.stride + kd - g.pad;
                const int ih = oh * g.stride + kh - g.pad;
                const int iw = ow * g.stride + kw - g.pad;
                double v = 0.0;
                if (id >= 0 && ih >= 0 && iw >= 0 && id < g.in[0] &&
                    ih < g.in[1] && iw < g.in[2]) {
                  v = x.data[((static_cast<size_t>(c) * g.in[0] + id) *
                                  g.in[1] +
                              ih) *
                                 g.in[2] +
                             iw];
                }
                col.at(ridx, cidx) = v;
              }
      }
}

void col2im_accum(const Tensor& col, const ConvGeom& g, Tensor& x_grad) {
  int cidx = 0;
  for (int od = 0; od < g.out[0]; ++od)
    for (int oh = 0; oh < g.out[1]; ++oh)
      for (int ow = 0; ow < g.out[2]; ++ow, ++cidx) {
        int ridx = 0;
        for (int c = 0; c < g.cin; ++c)
          for (int kd = 0; kd < g.k; ++kd)
            for (int kh = 0; kh < g.k; ++kh)
              for (int kw = 0; kw < g.k; ++kw, ++ridx) {
                const int id = od * g.stride + kd - g.pad;
                const int ih = oh * g.stride + kh - g.pad;
                const int iw = ow * g.stride + kw - g.pad;
                if (id >= 0 && ih >= 0 && iw >= 0 && id < g.in[0] &&
                    ih < g.in[1] && iw < g.in[2]) {
                  x_grad.data[((static_cast<size_t>(c) * g.in[0] + id) *
                                   g.in[1] +
                               ih) *
                                  g.in[2] +
                              iw] += col.at(ridx, cidx);
                }
              }
      }
}

}  // namespace

NodePtr conv3d(const NodePtr& x, const NodePtr& kernels, const NodePtr& bias,
               int stride, int padding) {
  const ConvGeom g = conv_geometry(x->value, kernels->value, stride, padding);
  if (static_cast<int>(bias->value.size()) != g.cout)
    throw ShapeError("conv3d: bias length mismatch");
  const int patch = g.cin * g.k * g.k * g.k;
  const int ncols = g.out[0] * g.out[1] * g.out[2];

  auto col = std::make_shared<Tensor>();
  im2col(x->value, g, *col);
  Tensor kmat({g.cout, patch}, kernels->value.data);
  Tensor prod;
  matmul_into(kmat, *col, prod);  // [cout, ncols]
  Tensor out({g.cout, g.out[0], g.out[1], g.out[2]});
  for (int c = 0; c < g.cout; ++c)
    for (int i = 0; i < ncols; ++i)
      out.data[static_cast<size_t>(c) * ncols + i] =
          prod.at(c, i) + bias->value.data[c];

  return make(std::move(out), {x, kernels, bias},
              [g, col, patch, ncols](Node& n) {
                Tensor gout({g.cout, ncols}, n.grad.data);
                // bias grads: row sums
                for (int c = 0; c < g.cout; ++c)
                  for (int i = 0; i < ncols; ++i)
                    n.parents[2]->grad.data[c] += gout.at(c, i);
                // kernel grads: gout * col^T
                Tensor kg({g.cout, patch}, std::move(n.parents[1]->grad.data));
                matmul_a_bt_accum(gout, *col, kg);
                n.parents[1]->grad.data = std::move(kg.data);
                // input grads: kmat^T * gout, scattered back
                Tensor kmat({g.cout, patch}, n.parents[1]->value.data);
                Tensor dcol({patch, ncols});
                matmul_at_b_accum(kmat, gout, dcol);
                col2im_accum(dcol, g, n.parents[0]->grad);
              });
}

namespace {

std::vector<size_t> patch_index_map(const std::vector<int>& dims, int patch) {
  // token-major then within-patch, both in z,y,x nesting with x fastest
  const int nz = dims[0] / patch, ny = dims[1] / patch, nx = dims[2] / patch;
  std::vector<size_t> map;
  map.reserve(shape_product(dims));
  for (int pz = 0; pz < nz; ++pz)
    for (int py = 0; py < ny; ++py)
      for (int px = 0; px < nx; ++px)
        for (int dz = 0; dz < patch; ++dz)
          for (int dy = 0; dy < patch; ++dy)
            for (int dx = 0; dx < patch; ++dx) {
              const size_t z = static_cast<size_t>(pz) * patch + dz;
              const size_t y = static_cast<size_t>(py) * patch + dy;
              const size_t x = static_cast<size_t>(px) * patch + dx;
              map.push_back((z * dims[1] + y) * dims[2] + x);
            }
  return map;
}

}  // namespace

NodePtr patchify(const NodePtr& vol, int patch) {
  const auto& s = vol->value.shape;
  if (s.size() != 3) throw ShapeError("patchify: expected 3D volume");
  for (int d : s)
    if (d % patch != 0)
      throw ConfigError("patchify: patch size " + std::to_string(patch) +
                        " does not divide volume " + vol->value.shape_str());
  const int n_tokens = static_cast<int>(vol->value.size()) /
                       (patch * patch * patch);
  auto map = std::make_shared<std::vector<size_t>>(patch_index_map(s, patch));
  Tensor out({n_tokens, patch * patch * patch});
  for (size_t i = 0; i < map->size(); ++i)
    out.data[i] = vol->value.data[(*map)[i]];
  return make(std::move(out), {vol}, [map](Node& n) {
    for (size_t i = 0; i < map->size(); ++i)
      n.parents[0]->grad.data[(*map)[i]] += n.grad.data[i];
  });
}

NodePtr unpatchify(const NodePtr& tokens, int patch,
                   std::vector<int> vol_shape) {
  if (shape_product(vol_shape) != tokens->value.size())
    throw ShapeError("unpatchify: token count does not match volume");
  auto map =
      std::make_shared<std::vector<size_t>>(patch_index_map(vol_shape, patch));
  Tensor out(std::move(vol_shape));
  for (size_t i = 0; i < map->size(); ++i)
    out.data[(*map)[i]] = tokens->value.data[i];
  return make(std::move(out), {tokens}, [map](Node& n) {
    for (size_t i = 0; i < map->size(); ++i)
      n.parents[0]->grad.data[i] += n.grad.data[(*map)[i]];
  });
}

NodePtr mse_loss(const NodePtr& pred, const NodePtr& target) {
  check_same_shape(pred->value, target->value, "mse_loss");
  const size_t N = pred->value.size();
  double acc = 0;
  for (size_t i = 0; i < N; ++i) {
    const double d = pred->value.data[i] - target->value.data[i];
    acc += d * d;
  }
  return make(Tensor::scalar(acc / N), {pred, target}, [N](Node& n) {
    const double up = n.grad.data[0];
    for (size_t i = 0; i < N; ++i) {
      const double d =
          n.parents[0]->value.data[i] - n.parents[1]->value.data[i];
      n.parents[0]->grad.data[i] += up * 2.0 * d / N;
      n.parents[1]->grad.data[i] -= up * 2.0 * d / N;
    }
  });
}

NodePtr softmax_cross_entropy(const NodePtr& logits,
                              const std::vector<int>& labels) {
  const int n = logits->value.rows(), c = logits->value.cols();
  if (static_cast<int>(labels.size()) != n)
    throw ArgumentError("cross_entropy: label count mismatch");
  for (int y : labels)
    if (y < 0 || y >= c)
      throw ArgumentError("cross_entropy: label " + std::to_string(y) +
                          " out of range [0," + std::to_string(c) + ")");
  auto probs = std::make_shared<Tensor>(Tensor({n, c}));
  double loss = 0;
  for (int r = 0; r < n; ++r) {
    double mx = logits->value.at(r, 0);
    for (int j = 1; j < c; ++j) mx = std::max(mx, logits->value.at(r, j));
    double sum = 0;
    for (int j = 0; j < c; ++j) {
      probs->at(r, j) = std::exp(logits->value.at(r, j) - mx);
      sum += probs->at(r, j);
    }
    for (int j = 0; j < c; ++j) probs->at(r, j) /= sum;
    loss -= std::log(std::max(probs->at(r, labels[r]), 1e-300));
  }
  return make(Tensor::scalar(loss / n), {logits},
              [probs, labels, n, c](Node& node) {
                const double up = node.grad.data[0];
                for (int r = 0; r < n; ++r)
                  for (int j = 0; j < c; ++j) {
                    const double onehot = labels[r] == j ? 1.0 : 0.0;
                    node.parents[0]->grad.at(r, j) +=
                        up * (probs->at(r, j) - onehot) / n;
                  }
              });
}

NodePtr multi_head_attention(const NodePtr& x, int heads,
                             const AttentionParams& p) {
  const int d = x->value.cols();
  if (d % heads != 0)
    throw ConfigError("attention: embed dim " + std::to_string(d) +
                      " not divisible by " + std::to_string(heads) + " heads");
  const int dh = d / heads;
  const auto q = linear(x, p.wq, p.bq);
  const auto k = linear(x, p.wk, p.bk);
  const auto v = linear(x, p.wv, p.bv);
  std::vector<NodePtr> head_outs;
  head_outs.reserve(heads);
  for (int h = 0; h < heads; ++h) {
    const auto qh = slice_cols(q, h * dh, dh);
    const auto kh = slice_cols(k, h * dh, dh);
    const auto vh = slice_cols(v, h * dh, dh);
    const auto scores = scale(matmul(qh, transpose(kh)), 1.0 / std::sqrt(dh));
    head_outs.push_back(matmul(softmax_rows(scores), vh));
  }
  return linear(concat_cols(head_outs), p.wo, p.bo);
}

}  // namespace df::nn
