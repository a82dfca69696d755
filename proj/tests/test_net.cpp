#include <stdexcept>
#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <limits>
#include <random>

#include "adlight/checkpoint.hpp"
#include "adlight/net.hpp"
#include "doctest.h"

using namespace adlight;

namespace {

StateMatrix random_state(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  StateMatrix s;
  for (auto& row : s.rows)
    for (auto& v : row) v = dist(rng);
  return s;
}

// Scalar test loss: fixed linear combination of the logits plus the value.
struct ProbeLoss {
  std::vector<double> c;
  double cv;

  explicit ProbeLoss(int n_actions, std::uint64_t seed) : cv(0.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    c.resize(n_actions);
    for (auto& x : c) x = dist(rng);
    cv = dist(rng);
  }

  double eval(const NetworkParamsT<double>& p, const StateMatrix& s) const {
    ForwardCache<double> cache = forward(p, s);
    double loss = cv * cache.value;
    for (std::size_t k = 0; k < c.size(); ++k) loss += c[k] * cache.logits[k];
    return loss;
  }
};

}  // namespace

TEST_CASE("zero parameters produce a uniform policy and zero value") {
  NetworkParams params;
  StateMatrix state = random_state(5);
  ForwardCache<float> cache = forward(params, state);
  auto probs = softmax(cache.logits);
  REQUIRE(probs.size() == kNumActions);
  for (double p : probs) CHECK(p == doctest::Approx(1.0 / kNumActions));
  CHECK(cache.value == 0.0f);
}

TEST_CASE("parameter count matches the architecture") {
  NetworkParams params;
  // 8->128 shared encoder, 1024->256, 256->128, 128->64, two 64->32 heads,
  // 32->12 policy out, 32->1 value out.
  std::size_t expected = (8 * 128 + 128) + (1024 * 256 + 256) + (256 * 128 + 128) +
                         (128 * 64 + 64) + (64 * 32 + 32) + (32 * 12 + 12) +
                         (64 * 32 + 32) + (32 * 1 + 1);
  CHECK(params.parameter_count() == expected);
  NetworkParamsT<float> small(3);
  CHECK(small.n_actions() == 3);
  CHECK(small.pol2.w.size() == 32u * 3u);
}

TEST_CASE("forward rejects a non-finite state") {
  NetworkParams params;
  StateMatrix state = random_state(1);
  state.rows[2][3] = std::nan("");
  CHECK_THROWS_AS(forward(params, state), std::invalid_argument);
}

TEST_CASE("analytic gradients match central finite differences") {
  NetworkParamsT<double> params;
  init_params(params, 77);
  StateMatrix state = random_state(78);
  ProbeLoss loss(params.n_actions(), 79);

  GradientsT<double> grads;
  ForwardCache<double> cache = forward(params, state);
  std::vector<double> dlogits(loss.c.begin(), loss.c.end());
  backward(params, cache, dlogits, loss.cv, grads);

  std::vector<std::vector<double>*> ptensors;
  std::vector<std::vector<double>*> gtensors;
  params.for_each_tensor([&](const char*, std::vector<double>& t) { ptensors.push_back(&t); });
  grads.for_each_tensor([&](const char*, std::vector<double>& t) { gtensors.push_back(&t); });

  std::mt19937_64 rng(80);
  const double eps = 1e-6;
  int checked = 0;
  for (std::size_t k = 0; k < ptensors.size(); ++k) {
    auto& tensor = *ptensors[k];
    auto& gtensor = *gtensors[k];
    std::uniform_int_distribution<std::size_t> pick(0, tensor.size() - 1);
    for (int reps = 0; reps < 12; ++reps) {
      std::size_t i = pick(rng);
      double saved = tensor[i];
      tensor[i] = saved + eps;
      double hi = loss.eval(params, state);
      tensor[i] = saved - eps;
      double lo = loss.eval(params, state);
      tensor[i] = saved;
      double fd = (hi - lo) / (2.0 * eps);
      double scale = std::max({1.0, std::abs(fd), std::abs(gtensor[i])});
      CHECK(std::abs(fd - gtensor[i]) / scale < 1e-6);
      ++checked;
    }
  }
  CHECK(checked == 12 * 16);
}

TEST_CASE("adam takes bias-corrected steps") {
  NetworkParams params;
  OptimizerState opt;
  opt.config.learning_rate = 0.1;
  Gradients grads;
  grads.enc.w[0] = 2.0f;
  grads.val2.b[0] = -0.5f;
  adam_step(params, grads, opt);
  // after bias correction the first update is lr * g / (|g| + eps)
  CHECK(params.enc.w[0] == doctest::Approx(-0.1).epsilon(1e-5));
  CHECK(params.val2.b[0] == doctest::Approx(0.1).epsilon(1e-5));
  CHECK(params.enc.b[0] == 0.0f);  // zero-gradient entries untouched
  CHECK(opt.step_count == 1);

  // second step with the same gradient: m_hat = g, v_hat = g^2 again
  adam_step(params, grads, opt);
  CHECK(params.enc.w[0] == doctest::Approx(-0.2).epsilon(1e-4));
  CHECK(opt.step_count == 2);
}

TEST_CASE("adam rejects non-finite gradients") {
  NetworkParams params;
  OptimizerState opt;
  Gradients grads;
  grads.fc1.w[10] = std::numeric_limits<float>::infinity();
  CHECK_THROWS_AS(adam_step(params, grads, opt), std::runtime_error);
}

TEST_CASE("softmax is stable for large logits and sums to one") {
  std::vector<double> logits = {1000.0, 1001.0, 999.0};
  auto probs = softmax(logits);
  double sum = 0.0;
  for (double p : probs) {
    CHECK(std::isfinite(p));
    sum += p;
  }
  CHECK(sum == doctest::Approx(1.0));
  CHECK(argmax(probs) == 1);
}

TEST_CASE("categorical sampling follows the distribution and the seed") {
  std::vector<double> probs = {0.2, 0.5, 0.3};
  std::mt19937_64 a(7), b(7);
  std::array<int, 3> counts{};
  for (int i = 0; i < 30000; ++i) {
    int s = sample_categorical(probs, a);
    CHECK(s == sample_categorical(probs, b));
    ++counts[s];
  }
  CHECK(counts[0] / 30000.0 == doctest::Approx(0.2).epsilon(0.05));
  CHECK(counts[1] / 30000.0 == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("checkpoint round-trips parameters and optimizer state bit-exactly") {
  NetworkParams params;
  init_params(params, 123);
  OptimizerState opt;
  opt.config.learning_rate = 1e-3;
  opt.step_count = 42;
  init_params(opt.m, 124);
  init_params(opt.v, 125);

  const std::string path = "ckpt_roundtrip.bin";
  save_checkpoint(params, opt, path);
  auto [loaded, loaded_opt] = load_checkpoint(path);
  std::remove(path.c_str());

  std::vector<const std::vector<float>*> a, b;
  params.for_each_tensor([&](const char*, const std::vector<float>& t) { a.push_back(&t); });
  loaded.for_each_tensor([&](const char*, const std::vector<float>& t) { b.push_back(&t); });
  REQUIRE(a.size() == b.size());
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(*a[k] == *b[k]);
  CHECK(loaded_opt.step_count == 42);
  CHECK(loaded_opt.config.learning_rate == 1e-3);
  CHECK(loaded_opt.m.enc.w == opt.m.enc.w);
  CHECK(loaded_opt.v.mix.w == opt.v.mix.w);
}

TEST_CASE("checkpoint loader detects truncation and bad magic") {
  NetworkParams params;
  OptimizerState opt;
  const std::string path = "ckpt_bad.bin";
  save_checkpoint(params, opt, path);

  // truncate the file
  {
    FILE* f = std::fopen(path.c_str(), "rb+");
    REQUIRE(f != nullptr);
    REQUIRE(std::fseek(f, 0, SEEK_END) == 0);
    long size = std::ftell(f);
    std::fclose(f);
    REQUIRE(truncate(path.c_str(), size / 2) == 0);
  }
  CHECK_THROWS_AS(load_checkpoint(path), std::runtime_error);

  // corrupt the magic
  save_checkpoint(params, opt, path);
  {
    FILE* f = std::fopen(path.c_str(), "rb+");
    REQUIRE(f != nullptr);
    std::fputc('X', f);
    std::fclose(f);
  }
  CHECK_THROWS_AS(load_checkpoint(path), std::runtime_error);
  std::remove(path.c_str());

  CHECK_THROWS_AS(load_checkpoint("no_such_checkpoint.bin"), std::runtime_error);
}
