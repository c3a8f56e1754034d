#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

#include "oddball/net.hpp"
#include "oddball/pool.hpp"

namespace oddball {

enum class RegularizerMode {
  none,
  dropout,
  dither,
  parallel_dither,
  parallel_dither_dropout,
};

const char* regularizer_mode_name(RegularizerMode m);

struct RegularizerConfig {
  RegularizerMode mode = RegularizerMode::none;
  int replicas = 100;              // parallel modes; non-parallel modes run 1
  double dropout_rate = 0.5;       // in [0, 1)
  double dither_half_width = 0.5;  // uniform noise support is +/- this

  bool uses_dither() const {
    return mode == RegularizerMode::dither ||
           mode == RegularizerMode::parallel_dither ||
           mode == RegularizerMode::parallel_dither_dropout;
  }
  bool uses_dropout() const {
    return mode == RegularizerMode::dropout ||
           mode == RegularizerMode::parallel_dither_dropout;
  }
  bool is_parallel() const {
    return mode == RegularizerMode::parallel_dither ||
           mode == RegularizerMode::parallel_dither_dropout;
  }
  int effective_replicas() const { return is_parallel() ? replicas : 1; }

  void validate() const;  // throws std::invalid_argument
};

struct Replica {
  Vector input;
  std::optional<Vector> hidden_mask;  // entries 0 or 1/(1-rate)
};

struct ParallelSet {
  std::vector<Replica> replicas;
};

// Identifies where in a run a draw happens; together with the draw purpose
// and replica index this keys every noise stream.
struct StreamCoords {
  std::uint64_t seed = 0;
  std::uint64_t variant_tag = 0;
  std::uint64_t step = 0;
};

// Builds the per-example replica set: independent dither per pixel per
// replica, independent inverted-dropout hidden mask per replica, per the
// configured mode. Deterministic in (coords, replica index) alone.
ParallelSet make_parallel_set(std::span<const double> input,
                              const RegularizerConfig& cfg,
                              const StreamCoords& coords,
                              std::size_t hidden_units);
void make_parallel_set_into(std::span<const double> input,
                            const RegularizerConfig& cfg,
                            const StreamCoords& coords, std::size_t hidden_units,
                            ParallelSet& out, ThreadPool* pool = nullptr);

// Element-wise mean. Every element is summed over the list in index order,
// so the result is identical no matter how the inputs were produced.
// Throws std::invalid_argument on an empty list or mismatched shapes.
GradientSet average_gradients(std::span<const GradientSet> grads);
void average_gradients_into(std::span<const GradientSet> grads, GradientSet& out,
                            ThreadPool* pool = nullptr);

}  // namespace oddball
