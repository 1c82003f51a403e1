#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cutplan/errors.hpp"

namespace cutplan {

struct NetDims {
  int input = 6;
  int hidden = 64;
  int output = 6;

  long long param_count() const {
    const long long h = hidden, i = input, o = output;
    return 4 * (h * i + h * h + h) + o * h + o;
  }
};

enum class Gate { Input = 0, Forget = 1, Output = 2, Cell = 3 };

struct MatView {
  double* data;
  int rows, cols;
  double& operator()(int r, int c) const { return data[static_cast<long long>(r) * cols + c]; }
};

struct ConstMatView {
  const double* data;
  int rows, cols;
  double operator()(int r, int c) const { return data[static_cast<long long>(r) * cols + c]; }
};

// All gate weights (W, U, b for input/forget/output/cell) plus the sigmoid
// head, stored in one flat buffer so the optimizer, the gradient checker and
// the checkpoint format can treat parameters uniformly. Layout per gate:
// W (hidden x input), U (hidden x hidden), b (hidden); then the head
// W_out (output x hidden), b_out (output). Row-major throughout.
class PolicyParams {
 public:
  explicit PolicyParams(NetDims dims) : dims_(dims) {
    if (dims.input <= 0 || dims.hidden <= 0 || dims.output <= 0)
      throw ValidationError("network dims must be positive");
    const long long gate = static_cast<long long>(dims.hidden) * dims.input +
                           static_cast<long long>(dims.hidden) * dims.hidden + dims.hidden;
    gate_stride_ = gate;
    head_offset_ = 4 * gate;
    const long long total = head_offset_ + static_cast<long long>(dims.output) * dims.hidden +
                            dims.output;
    if (total != dims.param_count())
      throw ValidationError("parameter layout does not match the declared count");
    flat_.assign(static_cast<std::size_t>(total), 0.0);
  }

  const NetDims& dims() const { return dims_; }

  MatView w(Gate g) { return {block(g), dims_.hidden, dims_.input}; }
  MatView u(Gate g) {
    return {block(g) + static_cast<long long>(dims_.hidden) * dims_.input, dims_.hidden,
            dims_.hidden};
  }
  std::span<double> b(Gate g) {
    return {block(g) + static_cast<long long>(dims_.hidden) * (dims_.input + dims_.hidden),
            static_cast<std::size_t>(dims_.hidden)};
  }
  MatView w_out() { return {flat_.data() + head_offset_, dims_.output, dims_.hidden}; }
  std::span<double> b_out() {
    return {flat_.data() + head_offset_ + static_cast<long long>(dims_.output) * dims_.hidden,
            static_cast<std::size_t>(dims_.output)};
  }

  ConstMatView w(Gate g) const { return {block(g), dims_.hidden, dims_.input}; }
  ConstMatView u(Gate g) const {
    return {block(g) + static_cast<long long>(dims_.hidden) * dims_.input, dims_.hidden,
            dims_.hidden};
  }
  std::span<const double> b(Gate g) const {
    return {block(g) + static_cast<long long>(dims_.hidden) * (dims_.input + dims_.hidden),
            static_cast<std::size_t>(dims_.hidden)};
  }
  ConstMatView w_out() const { return {flat_.data() + head_offset_, dims_.output, dims_.hidden}; }
  std::span<const double> b_out() const {
    return {flat_.data() + head_offset_ + static_cast<long long>(dims_.output) * dims_.hidden,
            static_cast<std::size_t>(dims_.output)};
  }

  std::span<double> flat() { return flat_; }
  std::span<const double> flat() const { return flat_; }

 private:
  double* block(Gate g) { return flat_.data() + static_cast<int>(g) * gate_stride_; }
  const double* block(Gate g) const { return flat_.data() + static_cast<int>(g) * gate_stride_; }

  NetDims dims_;
  long long gate_stride_ = 0;
  long long head_offset_ = 0;
  std::vector<double> flat_;
};

using ParamGrads = PolicyParams;

// Glorot-uniform weights, zero biases, forget-gate bias +1.
inline PolicyParams glorot_init(NetDims dims, std::mt19937_64& rng) {
  PolicyParams params(dims);
  auto fill = [&](MatView m, int fan_in, int fan_out) {
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> uniform(-limit, limit);
    for (int r = 0; r < m.rows; ++r)
      for (int c = 0; c < m.cols; ++c) m(r, c) = uniform(rng);
  };
  for (Gate g : {Gate::Input, Gate::Forget, Gate::Output, Gate::Cell}) {
    fill(params.w(g), dims.input, dims.hidden);
    fill(params.u(g), dims.hidden, dims.hidden);
  }
  fill(params.w_out(), dims.hidden, dims.output);
  for (double& b : params.b(Gate::Forget)) b = 1.0;
  return params;
}

struct NetState {
  std::vector<double> h, c;

  static NetState zeros(const NetDims& dims) {
    return NetState{std::vector<double>(dims.hidden, 0.0),
                    std::vector<double>(dims.hidden, 0.0)};
  }
};

// Everything the backward pass needs from one forward step.
struct LstmCache {
  std::vector<double> x, h_prev, c_prev;
  std::vector<double> gi, gf, go, gc;  // gate activations; gc = tanh candidate
  std::vector<double> c_new, tanh_c;
};

// One recorded step: LSTM intermediates plus the head's sigmoid outputs.
struct StepCache {
  LstmCache lstm;
  std::vector<double> probs;
};

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// i = sig(W_i x + U_i h + b_i), f/o likewise, g = tanh(W_c x + U_c h + b_c),
// c' = f.c + i.g, h' = o.tanh(c').
inline std::pair<NetState, LstmCache> lstm_forward(std::span<const double> x,
                                                   const NetState& state,
                                                   const PolicyParams& params) {
  const NetDims& dims = params.dims();
  if (static_cast<int>(x.size()) != dims.input)
    throw DimensionError("lstm_forward: input size " + std::to_string(x.size()) +
                         " does not match dims.input " + std::to_string(dims.input));
  if (static_cast<int>(state.h.size()) != dims.hidden ||
      static_cast<int>(state.c.size()) != dims.hidden)
    throw DimensionError("lstm_forward: recurrent state does not match dims.hidden");
  for (double v : x)
    if (!std::isfinite(v)) throw NumericError("lstm_forward: non-finite input");

  LstmCache cache;
  cache.x.assign(x.begin(), x.end());
  cache.h_prev = state.h;
  cache.c_prev = state.c;

  const int h = dims.hidden;
  auto preact = [&](Gate g, int k) {
    const ConstMatView w = params.w(g);
    const ConstMatView u = params.u(g);
    double z = params.b(g)[k];
    for (int j = 0; j < dims.input; ++j) z += w(k, j) * x[j];
    for (int j = 0; j < h; ++j) z += u(k, j) * state.h[j];
    return z;
  };

  cache.gi.resize(h);
  cache.gf.resize(h);
  cache.go.resize(h);
  cache.gc.resize(h);
  cache.c_new.resize(h);
  cache.tanh_c.resize(h);
  NetState next = NetState::zeros(dims);
  for (int k = 0; k < h; ++k) {
    cache.gi[k] = sigmoid(preact(Gate::Input, k));
    cache.gf[k] = sigmoid(preact(Gate::Forget, k));
    cache.go[k] = sigmoid(preact(Gate::Output, k));
    cache.gc[k] = std::tanh(preact(Gate::Cell, k));
    cache.c_new[k] = cache.gf[k] * state.c[k] + cache.gi[k] * cache.gc[k];
    cache.tanh_c[k] = std::tanh(cache.c_new[k]);
    next.c[k] = cache.c_new[k];
    next.h[k] = cache.go[k] * cache.tanh_c[k];
  }
  return {std::move(next), std::move(cache)};
}

// Element-wise sigmoid over the fully connected head.
inline std::vector<double> head_forward(std::span<const double> h, const PolicyParams& params) {
  const NetDims& dims = params.dims();
  if (static_cast<int>(h.size()) != dims.hidden)
    throw DimensionError("head_forward: hidden size mismatch");
  const ConstMatView w = params.w_out();
  std::vector<double> probs(dims.output);
  for (int k = 0; k < dims.output; ++k) {
    double z = params.b_out()[k];
    for (int j = 0; j < dims.hidden; ++j) z += w(k, j) * h[j];
    probs[k] = sigmoid(z);
  }
  return probs;
}

// Exact reverse-mode gradients of a scalar episode loss, given the forward
// caches and the loss gradient w.r.t. the head output at every step.
// Accumulates through the h and c recurrences across time.
inline ParamGrads episode_backward(std::span<const StepCache> caches,
                                   std::span<const std::vector<double>> dloss_dprobs,
                                   const PolicyParams& params) {
  if (caches.size() != dloss_dprobs.size())
    throw DimensionError("episode_backward: " + std::to_string(caches.size()) +
                         " caches but " + std::to_string(dloss_dprobs.size()) +
                         " loss gradients");
  const NetDims& dims = params.dims();
  ParamGrads grads(dims);
  const int nh = dims.hidden;
  const int ni = dims.input;
  const int no = dims.output;

  std::vector<double> dh_next(nh, 0.0), dc_next(nh, 0.0);
  std::vector<double> dh(nh), dzi(nh), dzf(nh), dzo(nh), dzg(nh);

  for (int t = static_cast<int>(caches.size()) - 1; t >= 0; --t) {
    const StepCache& sc = caches[t];
    const LstmCache& lc = sc.lstm;
    if (static_cast<int>(sc.probs.size()) != no ||
        static_cast<int>(dloss_dprobs[t].size()) != no ||
        static_cast<int>(lc.gi.size()) != nh || static_cast<int>(lc.x.size()) != ni)
      throw DimensionError("episode_backward: cache/step shape mismatch at step " +
                           std::to_string(t));

    // Head: p = sig(W_out h + b_out).
    for (int j = 0; j < nh; ++j) dh[j] = dh_next[j];
    {
      MatView gw = grads.w_out();
      auto gb = grads.b_out();
      const ConstMatView w = params.w_out();
      for (int k = 0; k < no; ++k) {
        const double p = sc.probs[k];
        const double dz = dloss_dprobs[t][k] * p * (1.0 - p);
        gb[k] += dz;
        for (int j = 0; j < nh; ++j) {
          gw(k, j) += dz * lc.go[j] * lc.tanh_c[j];  // h_t = o . tanh(c_t)
          dh[j] += w(k, j) * dz;
        }
      }
    }

    for (int k = 0; k < nh; ++k) {
      const double i = lc.gi[k], f = lc.gf[k], o = lc.go[k], g = lc.gc[k];
      const double dout = dh[k] * lc.tanh_c[k];
      const double dc = dh[k] * o * (1.0 - lc.tanh_c[k] * lc.tanh_c[k]) + dc_next[k];
      dzi[k] = dc * g * i * (1.0 - i);
      dzf[k] = dc * lc.c_prev[k] * f * (1.0 - f);
      dzo[k] = dout * o * (1.0 - o);
      dzg[k] = dc * i * (1.0 - g * g);
      dc_next[k] = dc * f;
    }

    std::fill(dh_next.begin(), dh_next.end(), 0.0);
    auto accumulate = [&](Gate gate, const std::vector<double>& dz) {
      MatView gw = grads.w(gate);
      MatView gu = grads.u(gate);
      auto gb = grads.b(gate);
      const ConstMatView u = params.u(gate);
      for (int k = 0; k < nh; ++k) {
        gb[k] += dz[k];
        for (int j = 0; j < ni; ++j) gw(k, j) += dz[k] * lc.x[j];
        for (int j = 0; j < nh; ++j) {
          gu(k, j) += dz[k] * lc.h_prev[j];
          dh_next[j] += u(k, j) * dz[k];
        }
      }
    };
    accumulate(Gate::Input, dzi);
    accumulate(Gate::Forget, dzf);
    accumulate(Gate::Output, dzo);
    accumulate(Gate::Cell, dzg);
  }
  return grads;
}

// Bias-corrected adaptive-moment update.
struct AdamState {
  std::vector<double> m, v;
  long long t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  explicit AdamState(const NetDims& dims)
      : m(static_cast<std::size_t>(dims.param_count()), 0.0),
        v(static_cast<std::size_t>(dims.param_count()), 0.0) {}
};

inline void adam_step(PolicyParams& params, const ParamGrads& grads, AdamState& adam,
                      double lr = 0.001) {
  auto theta = params.flat();
  auto g = grads.flat();
  if (theta.size() != g.size() || theta.size() != adam.m.size())
    throw DimensionError("adam_step: parameter/gradient/moment shape mismatch");
  for (double v : g)
    if (!std::isfinite(v)) throw NumericError("adam_step: non-finite gradient");

  adam.t += 1;
  const double c1 = 1.0 - std::pow(adam.beta1, static_cast<double>(adam.t));
  const double c2 = 1.0 - std::pow(adam.beta2, static_cast<double>(adam.t));
  for (std::size_t k = 0; k < theta.size(); ++k) {
    adam.m[k] = adam.beta1 * adam.m[k] + (1.0 - adam.beta1) * g[k];
    adam.v[k] = adam.beta2 * adam.v[k] + (1.0 - adam.beta2) * g[k] * g[k];
    const double mhat = adam.m[k] / c1;
    const double vhat = adam.v[k] / c2;
    theta[k] -= lr * mhat / (std::sqrt(vhat) + adam.eps);
  }
}

// Central-difference spot check of an analytic gradient on randomly probed
// coordinates. The loss must be deterministic in the parameters.
template <typename LossFn>
double finite_diff_check(PolicyParams& params, LossFn&& loss,
                         std::span<const double> analytic, int probes, double eps,
                         std::mt19937_64& rng) {
  auto theta = params.flat();
  if (analytic.size() != theta.size())
    throw DimensionError("finite_diff_check: analytic gradient size mismatch");
  std::uniform_int_distribution<std::size_t> pick(0, theta.size() - 1);
  double worst = 0.0;
  for (int p = 0; p < probes; ++p) {
    const std::size_t k = pick(rng);
    const double saved = theta[k];
    theta[k] = saved + eps;
    const double up = loss(params);
    theta[k] = saved - eps;
    const double down = loss(params);
    theta[k] = saved;
    const double numeric = (up - down) / (2.0 * eps);
    const double denom = std::max(1e-8, std::abs(analytic[k]) + std::abs(numeric));
    worst = std::max(worst, std::abs(analytic[k] - numeric) / denom);
  }
  return worst;
}

}  // namespace cutplan
