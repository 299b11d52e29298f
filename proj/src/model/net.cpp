#include "graspforge/model/net.hpp"

#include "graspforge/depthproc/process.hpp"
#include "graspforge/error.hpp"
#include "graspforge/io.hpp"
#include "graspforge/parallel.hpp"

#include <Eigen/Core>
#include <fmt/format.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>

namespace graspforge {

namespace {

struct Shape {
  int c = 0, h = 0, w = 0;
  std::size_t size() const { return static_cast<std::size_t>(c) * h * w; }
};

bool trainable(LayerKind k) { return k == LayerKind::conv || k == LayerKind::depthwise || k == LayerKind::dense; }

// Shapes after every layer plus the flat offsets of each trainable layer's weight and bias.
struct Plan {
  std::vector<Shape> shapes;  // shapes[0] is the input
  std::vector<std::size_t> weight_offset, bias_offset;
  std::vector<std::vector<int>> weight_dims;
  std::vector<int> bias_dim;
  std::size_t param_count = 0;
};

Plan make_plan(int input_size, const std::vector<Layer>& layers) {
  if (input_size < 1) throw Error("ShapeMismatch", "input size must be >= 1");
  Plan plan;
  Shape s{1, input_size, input_size};
  plan.shapes.push_back(s);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const Layer& l = layers[i];
    std::vector<int> wdims;
    int bdim = 0;
    switch (l.kind) {
      case LayerKind::conv:
        if (l.in != s.c || l.out < 1 || l.k < 1 || l.k % 2 == 0) {
          throw Error("ShapeMismatch", fmt::format("layer {}: bad conv", i));
        }
        wdims = {l.out, l.in, l.k, l.k};
        bdim = l.out;
        s.c = l.out;
        break;
      case LayerKind::depthwise:
        if (l.in != s.c || l.out != s.c || l.k < 1 || l.k % 2 == 0) {
          throw Error("ShapeMismatch", fmt::format("layer {}: bad depthwise conv", i));
        }
        wdims = {l.out, 1, l.k, l.k};
        bdim = l.out;
        break;
      case LayerKind::relu: break;
      case LayerKind::maxpool:
        if (s.h % 2 || s.w % 2) throw Error("ShapeMismatch", fmt::format("layer {}: odd size before pooling", i));
        s.h /= 2;
        s.w /= 2;
        break;
      case LayerKind::global_avg_pool: s = {s.c, 1, 1}; break;
      case LayerKind::dense:
        if (static_cast<std::size_t>(l.in) != s.size() || l.out < 1) {
          throw Error("ShapeMismatch", fmt::format("layer {}: dense expects {} inputs", i, s.size()));
        }
        wdims = {l.out, l.in};
        bdim = l.out;
        s = {l.out, 1, 1};
        break;
    }
    std::size_t wsize = 1;
    for (int d : wdims) wsize *= static_cast<std::size_t>(d);
    plan.weight_offset.push_back(plan.param_count);
    plan.bias_offset.push_back(plan.param_count + (wdims.empty() ? 0 : wsize));
    if (!wdims.empty()) plan.param_count += wsize + static_cast<std::size_t>(bdim);
    plan.weight_dims.push_back(wdims);
    plan.bias_dim.push_back(bdim);
    plan.shapes.push_back(s);
  }
  if (plan.shapes.back().size() != 1) throw Error("ShapeMismatch", "network must end in a single value");
  return plan;
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// dst(y, x) += wv * src(y + dy, x + dx) over the valid window.
inline void shifted_axpy(double* dst, const double* src, double wv, int h, int w, int dy, int dx) {
  const int y0 = std::max(0, -dy), y1 = std::min(h, h - dy);
  const int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
  for (int y = y0; y < y1; ++y) {
    double* d = dst + static_cast<std::ptrdiff_t>(y) * w;
    const double* s = src + static_cast<std::ptrdiff_t>(y + dy) * w + dx;
    for (int x = x0; x < x1; ++x) d[x] += wv * s[x];
  }
}

// sum over the valid window of a(y, x) * b(y + dy, x + dx).
inline double shifted_dot(const double* a, const double* b, int h, int w, int dy, int dx) {
  const int y0 = std::max(0, -dy), y1 = std::min(h, h - dy);
  const int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
  double acc = 0.0;
  for (int y = y0; y < y1; ++y) {
    const double* pa = a + static_cast<std::ptrdiff_t>(y) * w;
    const double* pb = b + static_cast<std::ptrdiff_t>(y + dy) * w + dx;
    for (int x = x0; x < x1; ++x) acc += pa[x] * pb[x];
  }
  return acc;
}

// dst(y + dy, x + dx) += wv * src(y, x) over the valid window.
inline void shifted_axpy_back(double* dst, const double* src, double wv, int h, int w, int dy, int dx) {
  const int y0 = std::max(0, -dy), y1 = std::min(h, h - dy);
  const int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
  for (int y = y0; y < y1; ++y) {
    double* d = dst + static_cast<std::ptrdiff_t>(y + dy) * w + dx;
    const double* s = src + static_cast<std::ptrdiff_t>(y) * w;
    for (int x = x0; x < x1; ++x) d[x] += wv * s[x];
  }
}

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Row (i, ky, kx), column (y, x) holds x_i(y + ky - pad, x + kx - pad), zero outside.
std::vector<double> im2col(const double* x, const Shape& in, int k) {
  const int pad = k / 2;
  const std::size_t hw = static_cast<std::size_t>(in.h) * in.w;
  std::vector<double> cols(static_cast<std::size_t>(in.c) * k * k * hw, 0.0);
  for (int i = 0; i < in.c; ++i) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        double* row = cols.data() + ((static_cast<std::size_t>(i) * k + ky) * k + kx) * hw;
        shifted_axpy(row, x + i * hw, 1.0, in.h, in.w, ky - pad, kx - pad);
      }
    }
  }
  return cols;
}

// Adjoint of im2col: scatters column gradients back onto the input.
void col2im_add(const double* cols, const Shape& in, int k, double* gx) {
  const int pad = k / 2;
  const std::size_t hw = static_cast<std::size_t>(in.h) * in.w;
  for (int i = 0; i < in.c; ++i) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const double* row = cols + ((static_cast<std::size_t>(i) * k + ky) * k + kx) * hw;
        shifted_axpy_back(gx + i * hw, row, 1.0, in.h, in.w, ky - pad, kx - pad);
      }
    }
  }
}

struct Activations {
  std::vector<std::vector<double>> values;       // values[0] is the input
  std::vector<std::vector<std::uint32_t>> argmax;  // per maxpool layer
};

double run_forward(const std::vector<Layer>& layers, const Plan& plan, const double* p, std::span<const double> input,
                   Activations& act) {
  act.values.resize(layers.size() + 1);
  act.argmax.resize(layers.size());
  act.values[0].assign(input.begin(), input.end());
  for (std::size_t li = 0; li < layers.size(); ++li) {
    const Layer& l = layers[li];
    const Shape in = plan.shapes[li], out = plan.shapes[li + 1];
    const std::vector<double>& x = act.values[li];
    std::vector<double>& y = act.values[li + 1];
    y.assign(out.size(), 0.0);
    const double* wt = p + plan.weight_offset[li];
    const double* b = p + plan.bias_offset[li];
    const std::size_t hw = static_cast<std::size_t>(in.h) * in.w;
    switch (l.kind) {
      case LayerKind::conv: {
        const std::vector<double> cols = im2col(x.data(), in, l.k);
        const Eigen::Index patch = static_cast<Eigen::Index>(l.in) * l.k * l.k;
        RowMat::MapType(y.data(), l.out, static_cast<Eigen::Index>(hw)).noalias() =
            RowMat::ConstMapType(wt, l.out, patch) * RowMat::ConstMapType(cols.data(), patch, static_cast<Eigen::Index>(hw));
        for (int o = 0; o < l.out; ++o) {
          double* dst = y.data() + o * hw;
          for (std::size_t j = 0; j < hw; ++j) dst[j] += b[o];
        }
        break;
      }
      case LayerKind::depthwise: {
        const int pad = l.k / 2;
        for (int c = 0; c < l.out; ++c) {
          double* dst = y.data() + c * hw;
          std::fill(dst, dst + hw, b[c]);
          const double* wk = wt + static_cast<std::size_t>(c) * l.k * l.k;
          for (int ky = 0; ky < l.k; ++ky) {
            for (int kx = 0; kx < l.k; ++kx) {
              shifted_axpy(dst, x.data() + c * hw, wk[ky * l.k + kx], in.h, in.w, ky - pad, kx - pad);
            }
          }
        }
        break;
      }
      case LayerKind::relu:
        for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
        break;
      case LayerKind::maxpool: {
        auto& idx = act.argmax[li];
        idx.assign(out.size(), 0);
        std::size_t k = 0;
        for (int c = 0; c < out.c; ++c) {
          for (int oy = 0; oy < out.h; ++oy) {
            for (int ox = 0; ox < out.w; ++ox, ++k) {
              std::uint32_t best = static_cast<std::uint32_t>(c * hw + (2 * oy) * in.w + 2 * ox);
              for (int dy = 0; dy < 2; ++dy) {
                for (int dx = 0; dx < 2; ++dx) {
                  const auto j = static_cast<std::uint32_t>(c * hw + (2 * oy + dy) * in.w + 2 * ox + dx);
                  if (x[j] > x[best]) best = j;
                }
              }
              idx[k] = best;
              y[k] = x[best];
            }
          }
        }
        break;
      }
      case LayerKind::global_avg_pool:
        for (int c = 0; c < in.c; ++c) {
          double acc = 0.0;
          for (std::size_t j = 0; j < hw; ++j) acc += x[c * hw + j];
          y[c] = acc / static_cast<double>(hw);
        }
        break;
      case LayerKind::dense:
        for (int o = 0; o < l.out; ++o) {
          double acc = b[o];
          const double* row = wt + static_cast<std::size_t>(o) * l.in;
          for (int j = 0; j < l.in; ++j) acc += row[j] * x[j];
          y[o] = acc;
        }
        break;
    }
  }
  return act.values.back()[0];
}

// Accumulates d(logit)/d(params) * g_out into grad.
void run_backward(const std::vector<Layer>& layers, const Plan& plan, const double* p, const Activations& act,
                  double g_out, double* grad) {
  std::vector<double> g{g_out}, gin;
  for (std::size_t li = layers.size(); li-- > 0;) {
    const Layer& l = layers[li];
    const Shape in = plan.shapes[li];
    const std::vector<double>& x = act.values[li];
    const double* wt = p + plan.weight_offset[li];
    double* gw = grad + plan.weight_offset[li];
    double* gb = grad + plan.bias_offset[li];
    const std::size_t hw = static_cast<std::size_t>(in.h) * in.w;
    gin.assign(in.size(), 0.0);
    switch (l.kind) {
      case LayerKind::conv: {
        const std::vector<double> cols = im2col(x.data(), in, l.k);
        const Eigen::Index patch = static_cast<Eigen::Index>(l.in) * l.k * l.k;
        const auto n = static_cast<Eigen::Index>(hw);
        const RowMat::ConstMapType go(g.data(), l.out, n);
        for (int o = 0; o < l.out; ++o) gb[o] += go.row(o).sum();
        RowMat::MapType(gw, l.out, patch).noalias() += go * RowMat::ConstMapType(cols.data(), patch, n).transpose();
        RowMat gcols(patch, n);
        gcols.noalias() = RowMat::ConstMapType(wt, l.out, patch).transpose() * go;
        col2im_add(gcols.data(), in, l.k, gin.data());
        break;
      }
      case LayerKind::depthwise: {
        const int pad = l.k / 2;
        for (int c = 0; c < l.out; ++c) {
          const double* go = g.data() + c * hw;
          double sum = 0.0;
          for (std::size_t j = 0; j < hw; ++j) sum += go[j];
          gb[c] += sum;
          const std::size_t base = static_cast<std::size_t>(c) * l.k * l.k;
          for (int ky = 0; ky < l.k; ++ky) {
            for (int kx = 0; kx < l.k; ++kx) {
              const int dy = ky - pad, dx = kx - pad;
              gw[base + ky * l.k + kx] += shifted_dot(go, x.data() + c * hw, in.h, in.w, dy, dx);
              shifted_axpy_back(gin.data() + c * hw, go, wt[base + ky * l.k + kx], in.h, in.w, dy, dx);
            }
          }
        }
        break;
      }
      case LayerKind::relu:
        for (std::size_t i = 0; i < gin.size(); ++i) gin[i] = x[i] > 0.0 ? g[i] : 0.0;
        break;
      case LayerKind::maxpool: {
        const auto& idx = act.argmax[li];
        for (std::size_t k = 0; k < idx.size(); ++k) gin[idx[k]] += g[k];
        break;
      }
      case LayerKind::global_avg_pool:
        for (int c = 0; c < in.c; ++c) {
          const double v = g[c] / static_cast<double>(hw);
          std::fill(gin.begin() + c * hw, gin.begin() + (c + 1) * hw, v);
        }
        break;
      case LayerKind::dense:
        for (int o = 0; o < l.out; ++o) {
          gb[o] += g[o];
          const double* row = wt + static_cast<std::size_t>(o) * l.in;
          double* grow = gw + static_cast<std::size_t>(o) * l.in;
          for (int j = 0; j < l.in; ++j) {
            grow[j] += g[o] * x[j];
            gin[j] += g[o] * row[j];
          }
        }
        break;
    }
    std::swap(g, gin);
  }
}

// d(loss)/d(logit) for one sample; zero where the clamp is active.
double loss_slope(double q, int y, const std::array<double, 2>& phi) {
  if (q <= kLossClamp || q >= 1.0 - kLossClamp) return 0.0;
  return y == 1 ? -phi[1] * (1.0 - q) : phi[0] * q;
}

void check_batch(const QualityNet& net, std::span<const LabeledPatch> batch) {
  if (batch.empty()) throw Error("InvalidArgument", "batch must not be empty");
  for (const auto& s : batch) {
    if (!s.patch || s.patch->width != net.input_size || s.patch->height != net.input_size) {
      throw Error("ShapeMismatch", fmt::format("batch patch does not match input size {}", net.input_size));
    }
  }
}

}  // namespace

QualityNet QualityNet::from_layers(int input_size, std::vector<Layer> layers) {
  const Plan plan = make_plan(input_size, layers);
  QualityNet net;
  net.input_size = input_size;
  net.layers = std::move(layers);
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    if (!trainable(net.layers[i].kind)) continue;
    Tensor w, b;
    w.dims = plan.weight_dims[i];
    w.data.assign(plan.bias_offset[i] - plan.weight_offset[i], 0.0f);
    b.dims = {plan.bias_dim[i]};
    b.data.assign(static_cast<std::size_t>(plan.bias_dim[i]), 0.0f);
    net.params.push_back(std::move(w));
    net.params.push_back(std::move(b));
  }
  return net;
}

std::size_t QualityNet::param_count() const {
  std::size_t n = 0;
  for (const auto& t : params) n += t.data.size();
  return n;
}

std::vector<double> QualityNet::flat_params() const {
  std::vector<double> out;
  out.reserve(param_count());
  for (const auto& t : params) out.insert(out.end(), t.data.begin(), t.data.end());
  return out;
}

void QualityNet::set_flat_params(std::span<const double> values) {
  if (values.size() != param_count()) {
    throw Error("ShapeMismatch", fmt::format("expected {} parameters, got {}", param_count(), values.size()));
  }
  std::size_t k = 0;
  for (auto& t : params) {
    for (auto& v : t.data) v = static_cast<float>(values[k++]);
  }
}

std::vector<Layer> standard_layers() {
  std::vector<Layer> layers;
  constexpr int W = 32;
  int ch = 1;
  for (int i = 0; i < 3; ++i) {
    layers.push_back({LayerKind::conv, ch, W, 3});
    layers.push_back({LayerKind::relu});
    layers.push_back({LayerKind::maxpool});
    ch = W;
  }
  layers.push_back({LayerKind::depthwise, W, W, 3});
  layers.push_back({LayerKind::conv, W, 2 * W, 1});
  layers.push_back({LayerKind::relu});
  layers.push_back({LayerKind::global_avg_pool});
  layers.push_back({LayerKind::dense, 2 * W, 1});
  return layers;
}

QualityNet make_quality_net(int input_size, Rng& rng) {
  if (input_size < 8 || input_size % 8 != 0) {
    throw Error("InvalidArgument", fmt::format("input size {} is not a positive multiple of 8", input_size));
  }
  QualityNet net = QualityNet::from_layers(input_size, standard_layers());
  std::size_t t = 0;
  for (const auto& l : net.layers) {
    if (!trainable(l.kind)) continue;
    const int fan_in = l.kind == LayerKind::conv ? l.in * l.k * l.k : l.kind == LayerKind::depthwise ? l.k * l.k : l.in;
    const double limit = std::sqrt(6.0 / fan_in);
    for (auto& v : net.params[t].data) v = static_cast<float>(uniform(rng, -limit, limit));
    t += 2;
  }
  return net;
}

std::vector<double> net_input(const Patch& patch) {
  if (patch.width != patch.height || patch.width < 1) throw Error("ShapeMismatch", "patch must be square");
  const int s = patch.width;
  const int b = std::min(s, s % 2 == 0 ? 4 : 3);
  const int start = (s - b) / 2;
  std::vector<double> block;
  for (int v = start; v < start + b; ++v) {
    for (int u = start; u < start + b; ++u) block.push_back(patch.at(u, v));
  }
  std::sort(block.begin(), block.end());
  const std::size_t n = block.size();
  const double ref = n % 2 ? block[n / 2] : 0.5 * (block[n / 2 - 1] + block[n / 2]);
  std::vector<double> out(patch.data.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::clamp((ref - patch.data[i]) / kInputScale, -kInputClamp, kInputClamp);
  }
  return out;
}

double forward_logit(const QualityNet& net, std::span<const double> input) {
  const Plan plan = make_plan(net.input_size, net.layers);
  if (input.size() != plan.shapes[0].size()) throw Error("ShapeMismatch", "input size mismatch");
  const std::vector<double> p = net.flat_params();
  Activations act;
  return run_forward(net.layers, plan, p.data(), input, act);
}

double forward(const QualityNet& net, const Patch& patch) {
  if (patch.width != net.input_size || patch.height != net.input_size) {
    throw Error("ShapeMismatch",
                fmt::format("patch {}x{} does not match input size {}", patch.width, patch.height, net.input_size));
  }
  return sigmoid(forward_logit(net, net_input(patch)));
}

double loss(double y_hat, int y, const std::array<double, 2>& phi) {
  const double q = std::clamp(y_hat, kLossClamp, 1.0 - kLossClamp);
  return -phi[y == 1 ? 1 : 0] * (y == 1 ? std::log(q) : std::log(1.0 - q));
}

double batch_loss(const QualityNet& net, std::span<const double> params, std::span<const LabeledPatch> batch,
                  const std::array<double, 2>& phi) {
  check_batch(net, batch);
  const Plan plan = make_plan(net.input_size, net.layers);
  if (params.size() != plan.param_count) throw Error("ShapeMismatch", "parameter count mismatch");
  Activations act;
  double total = 0.0;
  for (const auto& s : batch) {
    const double z = run_forward(net.layers, plan, params.data(), net_input(*s.patch), act);
    total += loss(sigmoid(z), s.label, phi);
  }
  return total / static_cast<double>(batch.size());
}

Gradients gradients(const QualityNet& net, std::span<const LabeledPatch> batch, const std::array<double, 2>& phi,
                    int jobs) {
  check_batch(net, batch);
  const Plan plan = make_plan(net.input_size, net.layers);
  const std::vector<double> p = net.flat_params();
  std::vector<std::vector<double>> per(batch.size());
  std::vector<double> losses(batch.size());
  parallel_for(batch.size(), jobs, [&](std::size_t i) {
    Activations act;
    const double z = run_forward(net.layers, plan, p.data(), net_input(*batch[i].patch), act);
    const double q = sigmoid(z);
    losses[i] = loss(q, batch[i].label, phi);
    per[i].assign(plan.param_count, 0.0);
    const double slope = loss_slope(q, batch[i].label, phi);
    if (slope != 0.0) run_backward(net.layers, plan, p.data(), act, slope, per[i].data());
  });
  Gradients out;
  out.grad.assign(plan.param_count, 0.0);
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    out.loss += losses[i];
    for (std::size_t k = 0; k < plan.param_count; ++k) out.grad[k] += per[i][k];
  }
  out.loss *= inv;
  for (auto& gk : out.grad) gk *= inv;
  return out;
}

void adam_step(std::vector<double>& params, AdamState& state, std::span<const double> grad, const AdamConfig& cfg) {
  if (grad.size() != params.size()) throw Error("ShapeMismatch", "gradient size does not match parameters");
  if (state.m.empty() && state.v.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw Error("ShapeMismatch", "optimizer state does not match parameters");
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grad[i];
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
    params[i] -= cfg.lr * (state.m[i] / c1) / (std::sqrt(state.v[i] / c2) + cfg.eps);
  }
}

void adam_step(QualityNet& net, AdamState& state, std::span<const double> grad, const AdamConfig& cfg) {
  std::vector<double> p = net.flat_params();
  adam_step(p, state, grad, cfg);
  net.set_flat_params(p);
}

std::array<Patch, 4> flip_variants(const Patch& patch) {
  const Patch h = flip_horizontal(patch);
  return {patch, h, flip_vertical(patch), flip_vertical(h)};
}

namespace {

constexpr std::uint32_t kCheckpointVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

struct Reader {
  const std::string& bytes;
  std::size_t pos = 0;

  std::uint32_t u32() {
    if (pos + 4 > bytes.size()) throw Error("InvalidCheckpoint", "truncated checkpoint");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
};

}  // namespace

std::string encode_checkpoint(const QualityNet& net) {
  if (net.layers != standard_layers()) {
    throw Error("InvalidArgument", "only the standard layout can be checkpointed");
  }
  std::string out = "GFQN";
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(net.input_size));
  put_u32(out, static_cast<std::uint32_t>(net.params.size()));
  for (const auto& t : net.params) {
    put_u32(out, static_cast<std::uint32_t>(t.dims.size()));
    for (int d : t.dims) put_u32(out, static_cast<std::uint32_t>(d));
    for (float v : t.data) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

void save_checkpoint(const QualityNet& net, const std::filesystem::path& path) {
  write_file_atomic(path, encode_checkpoint(net));
}

QualityNet decode_checkpoint(const std::string& bytes) {
  if (bytes.size() < 4 || bytes.compare(0, 4, "GFQN") != 0) throw Error("InvalidCheckpoint", "bad magic");
  Reader r{bytes, 4};
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) throw Error("InvalidCheckpoint", fmt::format("unsupported version {}", version));
  const std::uint32_t s = r.u32();
  if (s < 8 || s % 8 != 0 || s > 4096) throw Error("InvalidCheckpoint", fmt::format("bad input size {}", s));
  QualityNet net = QualityNet::from_layers(static_cast<int>(s), standard_layers());
  if (r.u32() != net.params.size()) throw Error("InvalidCheckpoint", "tensor count mismatch");
  for (auto& t : net.params) {
    const std::uint32_t rank = r.u32();
    if (rank != t.dims.size()) throw Error("InvalidCheckpoint", "tensor rank mismatch");
    for (int d : t.dims) {
      if (r.u32() != static_cast<std::uint32_t>(d)) throw Error("InvalidCheckpoint", "tensor shape mismatch");
    }
    for (auto& v : t.data) {
      v = std::bit_cast<float>(r.u32());
      if (!std::isfinite(v)) throw Error("InvalidCheckpoint", "non-finite parameter");
    }
  }
  if (r.pos != bytes.size()) throw Error("InvalidCheckpoint", "trailing bytes");
  return net;
}

QualityNet load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file(path, "CheckpointNotFound"));
}

}  // namespace graspforge
