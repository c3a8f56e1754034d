#include "oddball/sampler.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "oddball/fault.hpp"

namespace oddball {

Vector compute_novelty(const ParameterSet& params, const Dataset& train,
                       const ActivationKind& act, ThreadPool* pool) {
  if (train.size() == 0)
    throw std::invalid_argument("compute_novelty: empty dataset");
  Vector novelty(train.size());
  parallel_for(pool, train.size(), [&](std::size_t begin, std::size_t end, unsigned) {
    LayerActivations acts;
    for (std::size_t i = begin; i < end; ++i) {
      forward_into(params, train.inputs[i], act, nullptr, acts);
      const Vector& target = train.labels[i];
      double sum = 0.0;
      for (std::size_t k = 0; k < target.size(); ++k)
        sum += std::fabs(acts.output_prob[k] - target[k]);
      novelty[i] = sum;
    }
  });
  return novelty;
}

Vector normalize_novelty(std::span<const double> novelty) {
  double total = 0.0;
  for (double v : novelty) {
    if (v < 0.0)
      throw std::invalid_argument("normalize_novelty: negative entry");
    total += v;
  }
  Vector probs(novelty.size());
  if (total < 1e-15) {
    // Perfect fit everywhere: fall back to uniform selection.
    const double u = 1.0 / static_cast<double>(novelty.size());
    for (double& p : probs) p = u;
    return probs;
  }
  for (std::size_t i = 0; i < novelty.size(); ++i) probs[i] = novelty[i] / total;
  return probs;
}

std::size_t sample_index(std::span<const double> probs, RngStream& rng) {
  if (probs.empty()) throw std::invalid_argument("sample_index: empty distribution");
  if (fault::active() == fault::Kind::sampler_uniform)
    return static_cast<std::size_t>(rng.next_below(probs.size()));
  const double u = rng.next_double();
  double cum = 0.0;
  std::size_t last_positive = probs.size();
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    cum += probs[i];
    last_positive = i;
    if (u < cum) return i;
  }
  // Floating-point residue: the cumulative sum fell a hair short of 1.
  if (last_positive == probs.size())
    throw std::invalid_argument("sample_index: no positive probability");
  return last_positive;
}

std::vector<std::uint32_t> full_sweep_order(std::size_t n, RngStream& rng) {
  if (n == 0) throw std::invalid_argument("full_sweep_order: n must be >= 1");
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  for (std::size_t i = n - 1; i > 0; --i) {
    const std::size_t j = rng.next_below(i + 1);
    std::swap(order[i], order[j]);
  }
  return order;
}

}  // namespace oddball
