#include "adlight/net.hpp"

#include <algorithm>

namespace adlight {

namespace {

template <typename T>
std::vector<double> softmax_impl(const std::vector<T>& logits) {
  double max_logit = -1e300;
  for (T l : logits) max_logit = std::max(max_logit, static_cast<double>(l));
  std::vector<double> probs(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp(static_cast<double>(logits[i]) - max_logit);
    total += probs[i];
  }
  for (double& p : probs) p /= total;
  return probs;
}

}  // namespace

std::vector<double> softmax(const std::vector<float>& logits) {
  return softmax_impl(logits);
}

std::vector<double> softmax(const std::vector<double>& logits) {
  return softmax_impl(logits);
}

int argmax(const std::vector<double>& probs) {
  return static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

int sample_categorical(const std::vector<double>& probs, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  double u = uniform(rng);
  double cum = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    cum += probs[i];
    if (u < cum) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

}  // namespace adlight
