#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "oddball/data.hpp"
#include "oddball/net.hpp"
#include "oddball/pool.hpp"
#include "oddball/regularize.hpp"

namespace oddball {

enum class Variant {
  baseline,
  dropout,
  dither,
  parallel_dither,
  parallel_dither_dropout,
  oddball,
};

inline constexpr Variant kAllVariants[] = {
    Variant::baseline,        Variant::dropout,
    Variant::dither,          Variant::parallel_dither,
    Variant::parallel_dither_dropout, Variant::oddball,
};

const char* variant_name(Variant v);
std::optional<Variant> parse_variant(std::string_view name);

// Stable id used to key per-variant RNG streams.
std::uint64_t variant_tag(Variant v);

// The regularizer each variant trains with. Non-parallel variants run a
// single replica with a fresh draw per step.
RegularizerConfig regularizer_for(Variant v, int replicas = 100,
                                  double dropout_rate = 0.5,
                                  double dither_half_width = 0.5);

struct TrainingConfig {
  Variant variant = Variant::baseline;
  int sweeps = 100;
  double learning_rate = 1.0;
  RegularizerConfig regularizer;  // must match regularizer_for(variant)'s mode
  ActivationKind activation;
  LossKind loss = LossKind::cross_entropy;
  int novelty_refresh_steps = 1;       // oddball: recompute novelty every k steps
  std::uint64_t seed = 0;
  int eval_every_sweeps = 1;
  long long eval_every_steps = 0;      // 0 = eval_every_sweeps * train size;
                                       // oddball accepts sub-sweep cadences
  std::size_t hidden_units = 100;
  bool record_timing = false;          // off: wall_ms logs as 0 so result files
                                       // are byte-reproducible across runs

  // Structural checks (variant/regularizer coherence, positive counts).
  // Throws std::invalid_argument.
  void validate() const;
};

struct MetricsRow {
  Variant variant;
  double equivalent_sweep;  // steps / train size
  long long steps;
  double test_error;
  double train_novelty_sum;
  long long wall_ms;
  std::uint64_t seed;
};

struct MetricsLog {
  std::vector<MetricsRow> rows;
};

// Raised when parameters go non-finite mid-run (lr=1 with wide dither can
// genuinely do this); carries the failing step for diagnostics.
struct TrainingDiverged : std::runtime_error {
  TrainingDiverged(long long step, std::size_t example, const std::string& msg)
      : std::runtime_error(msg), step(step), example(example) {}
  long long step;
  std::size_t example;
};

// One SGD update from one training example: build the replica set, one
// gradient per replica, average, apply with the configured learning rate.
// Value in, value out; the runners use the same machinery in place.
ParameterSet train_step(const ParameterSet& params, std::size_t example_index,
                        const Dataset& train, const TrainingConfig& cfg,
                        long long step, ThreadPool* pool = nullptr);

// Fraction of `test` misclassified by argmax; clean forward passes.
double evaluate(const ParameterSet& params, const Dataset& test,
                const ActivationKind& act, ThreadPool* pool = nullptr);

struct RunResult {
  MetricsLog log;
  ParameterSet final_params;
};

// Full-sweep uniform-order training (all variants except oddball): a fresh
// random permutation per sweep, one evaluation row per eval_every_sweeps,
// plus the sweep-0 row for the untrained net.
MetricsLog run_uniform_variant(const TrainingConfig& cfg, const Dataset& train,
                               const Dataset& test, ThreadPool* pool = nullptr);

// Novelty-driven training: every novelty_refresh_steps steps the selection
// distribution is recomputed from clean forward passes; each step draws its
// example from the current distribution.
MetricsLog run_oddball(const TrainingConfig& cfg, const Dataset& train,
                       const Dataset& test, ThreadPool* pool = nullptr);

// Dispatches on cfg.variant; optionally starts from caller-supplied
// parameters (run_comparison shares one init across variants this way).
RunResult run_variant(const TrainingConfig& cfg, const Dataset& train,
                      const Dataset& test, ThreadPool* pool = nullptr,
                      const ParameterSet* initial = nullptr);

// Trains every requested variant from one shared init_params(base_seed).
// Per-variant noise streams are keyed by (base_seed, variant tag), so runs
// differ across variants but reproduce exactly across invocations.
std::vector<MetricsLog> run_comparison(std::uint64_t base_seed,
                                       std::span<const Variant> variants,
                                       const TrainingConfig& base,
                                       const Dataset& train, const Dataset& test,
                                       ThreadPool* pool = nullptr);

}  // namespace oddball
