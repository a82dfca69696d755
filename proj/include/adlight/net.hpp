#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "adlight/features.hpp"

namespace adlight {

// Shapes of the fixed architecture: state 8x8 -> shared per-row encoder to
// 128 -> full mixer over all rows to 256 -> 128 -> 64 -> policy 32->A and
// value 32->1. The two "conv" stages are exactly the 1x8/8x1 convolutions at
// these shapes, written as affine maps.
inline constexpr int kStateRows = kNumMovements;        // 8
inline constexpr int kStateCols = kFeaturesPerMovement;  // 8
inline constexpr int kEncoderDim = 128;
inline constexpr int kMixerDim = 256;
inline constexpr int kFc1Dim = 128;
inline constexpr int kFc2Dim = 64;
inline constexpr int kHeadHiddenDim = 32;
inline constexpr int kNumActions = 12;  // policy FC-12

template <typename T>
struct Linear {
  int in = 0;
  int out = 0;
  std::vector<T> w;  // row-major, out x in
  std::vector<T> b;

  Linear() = default;
  Linear(int in_dim, int out_dim)
      : in(in_dim), out(out_dim), w(static_cast<std::size_t>(in_dim) * out_dim, T(0)),
        b(out_dim, T(0)) {}
};

template <typename T>
struct NetworkParamsT {
  Linear<T> enc;   // 8 -> 128, shared across the 8 movement rows
  Linear<T> mix;   // 1024 -> 256
  Linear<T> fc1;   // 256 -> 128
  Linear<T> fc2;   // 128 -> 64
  Linear<T> pol1;  // 64 -> 32
  Linear<T> pol2;  // 32 -> n_actions
  Linear<T> val1;  // 64 -> 32
  Linear<T> val2;  // 32 -> 1

  explicit NetworkParamsT(int n_actions = kNumActions)
      : enc(kStateCols, kEncoderDim),
        mix(kEncoderDim * kStateRows, kMixerDim),
        fc1(kMixerDim, kFc1Dim),
        fc2(kFc1Dim, kFc2Dim),
        pol1(kFc2Dim, kHeadHiddenDim),
        pol2(kHeadHiddenDim, n_actions),
        val1(kFc2Dim, kHeadHiddenDim),
        val2(kHeadHiddenDim, 1) {}

  int n_actions() const { return pol2.out; }

  template <typename Fn>
  void for_each_tensor(Fn&& fn) {
    fn("enc.w", enc.w); fn("enc.b", enc.b);
    fn("mix.w", mix.w); fn("mix.b", mix.b);
    fn("fc1.w", fc1.w); fn("fc1.b", fc1.b);
    fn("fc2.w", fc2.w); fn("fc2.b", fc2.b);
    fn("pol1.w", pol1.w); fn("pol1.b", pol1.b);
    fn("pol2.w", pol2.w); fn("pol2.b", pol2.b);
    fn("val1.w", val1.w); fn("val1.b", val1.b);
    fn("val2.w", val2.w); fn("val2.b", val2.b);
  }

  template <typename Fn>
  void for_each_tensor(Fn&& fn) const {
    const_cast<NetworkParamsT*>(this)->for_each_tensor(
        [&](const char* name, const std::vector<T>& v) { fn(name, v); });
  }

  template <typename Fn>
  void for_each_layer(Fn&& fn) {
    fn("enc", enc); fn("mix", mix); fn("fc1", fc1); fn("fc2", fc2);
    fn("pol1", pol1); fn("pol2", pol2); fn("val1", val1); fn("val2", val2);
  }

  template <typename Fn>
  void for_each_layer(Fn&& fn) const {
    const_cast<NetworkParamsT*>(this)->for_each_layer(
        [&](const char* name, const Linear<T>& l) { fn(name, l); });
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for_each_tensor([&](const char*, const std::vector<T>& v) { n += v.size(); });
    return n;
  }
};

using NetworkParams = NetworkParamsT<float>;

// Gradients share the parameter layout.
template <typename T>
using GradientsT = NetworkParamsT<T>;
using Gradients = GradientsT<float>;

template <typename T>
struct ForwardCache {
  std::array<std::array<T, kStateCols>, kStateRows> input{};
  std::array<std::array<T, kEncoderDim>, kStateRows> enc_pre{};
  std::vector<T> concat;    // 1024, rectified encoder outputs
  std::vector<T> mix_pre;   // 256
  std::vector<T> mix_act;
  std::vector<T> fc1_pre, fc1_act;
  std::vector<T> fc2_pre, fc2_act;
  std::vector<T> pol1_pre, pol1_act;
  std::vector<T> val1_pre, val1_act;
  std::vector<T> logits;
  T value = T(0);
};

namespace detail {

template <typename T>
void affine(const Linear<T>& layer, const T* x, T* y) {
  for (int o = 0; o < layer.out; ++o) {
    T acc = layer.b[o];
    const T* row = layer.w.data() + static_cast<std::size_t>(o) * layer.in;
    for (int i = 0; i < layer.in; ++i) acc += row[i] * x[i];
    y[o] = acc;
  }
}

template <typename T>
inline T relu(T x) { return x > T(0) ? x : T(0); }

// dL/dx and grads given dL/dy of an affine layer.
template <typename T>
void affine_backward(const Linear<T>& layer, const T* x, const T* dy,
                     Linear<T>& grad, T* dx) {
  for (int o = 0; o < layer.out; ++o) {
    T g = dy[o];
    grad.b[o] += g;
    T* grow = grad.w.data() + static_cast<std::size_t>(o) * layer.in;
    const T* wrow = layer.w.data() + static_cast<std::size_t>(o) * layer.in;
    for (int i = 0; i < layer.in; ++i) {
      grow[i] += g * x[i];
      if (dx) dx[i] += g * wrow[i];
    }
  }
}

}  // namespace detail

template <typename T>
ForwardCache<T> forward(const NetworkParamsT<T>& params, const StateMatrix& state) {
  for (const auto& row : state.rows)
    for (double v : row)
      if (!std::isfinite(v)) throw std::invalid_argument("forward: non-finite state");

  ForwardCache<T> c;
  c.concat.resize(kStateRows * kEncoderDim);
  for (int r = 0; r < kStateRows; ++r) {
    for (int i = 0; i < kStateCols; ++i) c.input[r][i] = static_cast<T>(state.rows[r][i]);
    detail::affine(params.enc, c.input[r].data(), c.enc_pre[r].data());
    for (int o = 0; o < kEncoderDim; ++o)
      c.concat[r * kEncoderDim + o] = detail::relu(c.enc_pre[r][o]);
  }
  c.mix_pre.resize(kMixerDim);
  detail::affine(params.mix, c.concat.data(), c.mix_pre.data());
  c.mix_act.resize(kMixerDim);
  for (int o = 0; o < kMixerDim; ++o) c.mix_act[o] = detail::relu(c.mix_pre[o]);

  c.fc1_pre.resize(kFc1Dim);
  detail::affine(params.fc1, c.mix_act.data(), c.fc1_pre.data());
  c.fc1_act.resize(kFc1Dim);
  for (int o = 0; o < kFc1Dim; ++o) c.fc1_act[o] = detail::relu(c.fc1_pre[o]);

  c.fc2_pre.resize(kFc2Dim);
  detail::affine(params.fc2, c.fc1_act.data(), c.fc2_pre.data());
  c.fc2_act.resize(kFc2Dim);
  for (int o = 0; o < kFc2Dim; ++o) c.fc2_act[o] = detail::relu(c.fc2_pre[o]);

  c.pol1_pre.resize(kHeadHiddenDim);
  detail::affine(params.pol1, c.fc2_act.data(), c.pol1_pre.data());
  c.pol1_act.resize(kHeadHiddenDim);
  for (int o = 0; o < kHeadHiddenDim; ++o) c.pol1_act[o] = detail::relu(c.pol1_pre[o]);
  c.logits.resize(params.n_actions());
  detail::affine(params.pol2, c.pol1_act.data(), c.logits.data());

  c.val1_pre.resize(kHeadHiddenDim);
  detail::affine(params.val1, c.fc2_act.data(), c.val1_pre.data());
  c.val1_act.resize(kHeadHiddenDim);
  for (int o = 0; o < kHeadHiddenDim; ++o) c.val1_act[o] = detail::relu(c.val1_pre[o]);
  T value = params.val2.b[0];
  for (int i = 0; i < kHeadHiddenDim; ++i) value += params.val2.w[i] * c.val1_act[i];
  c.value = value;
  return c;
}

// Accumulates into grads (callers zero-initialize or average over a batch).
template <typename T>
void backward(const NetworkParamsT<T>& params, const ForwardCache<T>& cache,
              const std::vector<T>& dlogits, T dvalue, GradientsT<T>& grads) {
  if (static_cast<int>(dlogits.size()) != params.n_actions())
    throw std::invalid_argument("backward: dlogits size mismatch");

  std::vector<T> dfc2(kFc2Dim, T(0));

  // policy head
  std::vector<T> dpol1(kHeadHiddenDim, T(0));
  detail::affine_backward(params.pol2, cache.pol1_act.data(), dlogits.data(),
                          grads.pol2, dpol1.data());
  for (int o = 0; o < kHeadHiddenDim; ++o)
    if (cache.pol1_pre[o] <= T(0)) dpol1[o] = T(0);
  detail::affine_backward(params.pol1, cache.fc2_act.data(), dpol1.data(),
                          grads.pol1, dfc2.data());

  // value head
  std::vector<T> dval1(kHeadHiddenDim, T(0));
  std::vector<T> dv(1, dvalue);
  detail::affine_backward(params.val2, cache.val1_act.data(), dv.data(),
                          grads.val2, dval1.data());
  for (int o = 0; o < kHeadHiddenDim; ++o)
    if (cache.val1_pre[o] <= T(0)) dval1[o] = T(0);
  detail::affine_backward(params.val1, cache.fc2_act.data(), dval1.data(),
                          grads.val1, dfc2.data());

  for (int o = 0; o < kFc2Dim; ++o)
    if (cache.fc2_pre[o] <= T(0)) dfc2[o] = T(0);
  std::vector<T> dfc1(kFc1Dim, T(0));
  detail::affine_backward(params.fc2, cache.fc1_act.data(), dfc2.data(), grads.fc2,
                          dfc1.data());
  for (int o = 0; o < kFc1Dim; ++o)
    if (cache.fc1_pre[o] <= T(0)) dfc1[o] = T(0);
  std::vector<T> dmix(kMixerDim, T(0));
  detail::affine_backward(params.fc1, cache.mix_act.data(), dfc1.data(), grads.fc1,
                          dmix.data());
  for (int o = 0; o < kMixerDim; ++o)
    if (cache.mix_pre[o] <= T(0)) dmix[o] = T(0);
  std::vector<T> dconcat(kStateRows * kEncoderDim, T(0));
  detail::affine_backward(params.mix, cache.concat.data(), dmix.data(), grads.mix,
                          dconcat.data());

  // shared encoder: gradients sum over the 8 row positions
  for (int r = 0; r < kStateRows; ++r) {
    std::array<T, kEncoderDim> denc{};
    for (int o = 0; o < kEncoderDim; ++o) {
      T g = dconcat[r * kEncoderDim + o];
      denc[o] = cache.enc_pre[r][o] > T(0) ? g : T(0);
    }
    detail::affine_backward(params.enc, cache.input[r].data(), denc.data(), grads.enc,
                            static_cast<T*>(nullptr));
  }
}

template <typename T>
void init_params(NetworkParamsT<T>& params, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto init_layer = [&](Linear<T>& layer, double scale) {
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / layer.in) * scale);
    for (auto& w : layer.w) w = static_cast<T>(dist(rng));
    for (auto& b : layer.b) b = T(0);
  };
  init_layer(params.enc, 1.0);
  init_layer(params.mix, 1.0);
  init_layer(params.fc1, 1.0);
  init_layer(params.fc2, 1.0);
  init_layer(params.pol1, 1.0);
  init_layer(params.pol2, 0.01);  // near-uniform initial policy
  init_layer(params.val1, 1.0);
  init_layer(params.val2, 0.01);
}

struct AdamConfig {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename T>
struct OptimizerStateT {
  AdamConfig config;
  std::int64_t step_count = 0;
  NetworkParamsT<T> m;  // first moments, same layout as the parameters
  NetworkParamsT<T> v;  // second moments

  explicit OptimizerStateT(int n_actions = kNumActions) : m(n_actions), v(n_actions) {}
};

using OptimizerState = OptimizerStateT<float>;

template <typename T>
void adam_step(NetworkParamsT<T>& params, const GradientsT<T>& grads,
               OptimizerStateT<T>& opt) {
  grads.for_each_tensor([&](const char* name, const std::vector<T>& g) {
    for (T x : g)
      if (!std::isfinite(static_cast<double>(x)))
        throw std::runtime_error(std::string("adam_step: non-finite gradient in ") + name);
  });
  ++opt.step_count;
  double bc1 = 1.0 - std::pow(opt.config.beta1, static_cast<double>(opt.step_count));
  double bc2 = 1.0 - std::pow(opt.config.beta2, static_cast<double>(opt.step_count));

  std::vector<std::vector<T>*> ptensors, mtensors, vtensors;
  std::vector<const std::vector<T>*> gtensors;
  params.for_each_tensor([&](const char*, std::vector<T>& t) { ptensors.push_back(&t); });
  opt.m.for_each_tensor([&](const char*, std::vector<T>& t) { mtensors.push_back(&t); });
  opt.v.for_each_tensor([&](const char*, std::vector<T>& t) { vtensors.push_back(&t); });
  grads.for_each_tensor([&](const char*, const std::vector<T>& t) { gtensors.push_back(&t); });

  for (std::size_t k = 0; k < ptensors.size(); ++k) {
    auto& p = *ptensors[k];
    auto& m = *mtensors[k];
    auto& v = *vtensors[k];
    const auto& g = *gtensors[k];
    if (p.size() != g.size()) throw std::invalid_argument("adam_step: shape mismatch");
    for (std::size_t i = 0; i < p.size(); ++i) {
      double gi = static_cast<double>(g[i]);
      double mi = opt.config.beta1 * m[i] + (1.0 - opt.config.beta1) * gi;
      double vi = opt.config.beta2 * v[i] + (1.0 - opt.config.beta2) * gi * gi;
      m[i] = static_cast<T>(mi);
      v[i] = static_cast<T>(vi);
      double update = opt.config.learning_rate * (mi / bc1) /
                      (std::sqrt(vi / bc2) + opt.config.epsilon);
      p[i] = static_cast<T>(p[i] - update);
    }
  }
}

// Softmax helpers used by the policy.
std::vector<double> softmax(const std::vector<float>& logits);
std::vector<double> softmax(const std::vector<double>& logits);
int argmax(const std::vector<double>& probs);
int sample_categorical(const std::vector<double>& probs, std::mt19937_64& rng);

}  // namespace adlight
