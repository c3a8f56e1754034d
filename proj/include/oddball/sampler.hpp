#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "oddball/data.hpp"
#include "oddball/net.hpp"
#include "oddball/pool.hpp"
#include "oddball/rng.hpp"

namespace oddball {

// Per-example novelty: one clean forward pass (no dither, no mask) per
// training example, then the sum over the 10 outputs of |prob - target|.
Vector compute_novelty(const ParameterSet& params, const Dataset& train,
                       const ActivationKind& act, ThreadPool* pool = nullptr);

// probs = novelty / sum(novelty). An all-zero vector (perfect fit) falls
// back to the uniform distribution. Throws on negative entries.
Vector normalize_novelty(std::span<const double> novelty);

// Inverse-CDF draw: returns i with probability probs[i]. Entries with
// probability exactly zero are never returned.
std::size_t sample_index(std::span<const double> probs, RngStream& rng);

// Unbiased Fisher-Yates shuffle of 0..n-1; the uniform-SGD sweep order.
std::vector<std::uint32_t> full_sweep_order(std::size_t n, RngStream& rng);

}  // namespace oddball
