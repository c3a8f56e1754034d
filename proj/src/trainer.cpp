#include "oddball/trainer.hpp"

#include <chrono>
#include <cmath>

#include "oddball/rng.hpp"
#include "oddball/sampler.hpp"

namespace oddball {

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::baseline: return "baseline";
    case Variant::dropout: return "dropout";
    case Variant::dither: return "dither";
    case Variant::parallel_dither: return "parallel-dither";
    case Variant::parallel_dither_dropout: return "parallel-dither-dropout";
    case Variant::oddball: return "oddball";
  }
  return "baseline";
}

std::optional<Variant> parse_variant(std::string_view name) {
  for (Variant v : kAllVariants)
    if (name == variant_name(v)) return v;
  return std::nullopt;
}

std::uint64_t variant_tag(Variant v) {
  return static_cast<std::uint64_t>(v) + 1;
}

RegularizerConfig regularizer_for(Variant v, int replicas, double dropout_rate,
                                  double dither_half_width) {
  RegularizerConfig cfg;
  cfg.replicas = replicas;
  cfg.dropout_rate = dropout_rate;
  cfg.dither_half_width = dither_half_width;
  switch (v) {
    case Variant::baseline: cfg.mode = RegularizerMode::none; break;
    case Variant::dropout: cfg.mode = RegularizerMode::dropout; break;
    case Variant::dither: cfg.mode = RegularizerMode::dither; break;
    case Variant::parallel_dither: cfg.mode = RegularizerMode::parallel_dither; break;
    case Variant::parallel_dither_dropout:
    case Variant::oddball:
      cfg.mode = RegularizerMode::parallel_dither_dropout;
      break;
  }
  return cfg;
}

void TrainingConfig::validate() const {
  regularizer.validate();
  if (regularizer.mode != regularizer_for(variant).mode)
    throw std::invalid_argument(
        std::string("config: variant '") + variant_name(variant) +
        "' requires regularizer mode '" +
        regularizer_mode_name(regularizer_for(variant).mode) + "'");
  if (sweeps < 0) throw std::invalid_argument("config: sweeps must be >= 0");
  if (learning_rate < 0.0)
    throw std::invalid_argument("config: learning_rate must be >= 0");
  if (novelty_refresh_steps < 1)
    throw std::invalid_argument("config: novelty_refresh_steps must be >= 1");
  if (eval_every_sweeps < 1)
    throw std::invalid_argument("config: eval_every_sweeps must be >= 1");
  if (eval_every_steps < 0)
    throw std::invalid_argument("config: eval_every_steps must be >= 0");
  if (hidden_units < 1)
    throw std::invalid_argument("config: hidden_units must be >= 1");
}

namespace {

struct StepWorkspace {
  ParallelSet set;
  Matrix delta_hidden;  // replica-major, R x hidden
  Matrix delta_out;     // R x outputs
  Matrix hidden_post;   // R x hidden
  GradientSet avg;
  std::vector<LayerActivations> scratch;  // one per worker slot
};

double sum_all(const ParameterSet& p) {
  double s = 0.0;
  for (double v : p.w1.data) s += v;
  for (double v : p.b1) s += v;
  for (double v : p.w2.data) s += v;
  for (double v : p.b2) s += v;
  return s;
}

void apply_update(Vector& dst, const Vector& grad, double lr) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] -= lr * grad[i];
}

// One update, without materializing a GradientSet per replica. The averaged
// gradient is assembled element by element with the replica sum always taken
// in ascending replica order, so the result is bit-identical to
// average_gradients over per-replica backward() outputs (the oracle tests
// assert exactly that) and independent of the thread count.
void apply_step(ParameterSet& params, std::size_t example_index,
                const Dataset& train, const TrainingConfig& cfg, long long step,
                StepWorkspace& ws, ThreadPool* pool) {
  if (example_index >= train.size())
    throw std::invalid_argument("train_step: example index out of range");
  const StreamCoords coords{cfg.seed, variant_tag(cfg.variant),
                            static_cast<std::uint64_t>(step)};
  const NetworkShape shape = params.shape();
  make_parallel_set_into(train.inputs[example_index], cfg.regularizer, coords,
                         shape.hidden, ws.set, pool);

  const std::size_t n = ws.set.replicas.size();
  const std::size_t H = shape.hidden;
  const std::size_t K = shape.outputs;
  const std::size_t I = shape.inputs;
  auto ensure = [](Matrix& m, std::size_t rows, std::size_t cols) {
    if (m.rows != rows || m.cols != cols) m = Matrix(rows, cols);
  };
  ensure(ws.delta_hidden, n, H);
  ensure(ws.delta_out, n, K);
  ensure(ws.hidden_post, n, H);
  ws.scratch.resize(pool ? pool->size() : 1);
  const Vector& target = train.labels[example_index];

  // Per-replica forward pass and error terms.
  parallel_for(pool, n, [&](std::size_t begin, std::size_t end, unsigned slot) {
    LayerActivations& acts = ws.scratch[slot];
    for (std::size_t r = begin; r < end; ++r) {
      const Replica& rep = ws.set.replicas[r];
      const Vector* mask = rep.hidden_mask ? &*rep.hidden_mask : nullptr;
      forward_into(params, rep.input, cfg.activation, mask, acts);
      std::span<double> d_out(ws.delta_out.row(r), K);
      output_delta(acts.output_prob, target, cfg.loss, d_out);
      hidden_delta(params, d_out, acts.hidden_pre, cfg.activation, mask,
                   {ws.delta_hidden.row(r), H});
      std::copy(acts.hidden_post.begin(), acts.hidden_post.end(),
                ws.hidden_post.row(r));
    }
  });

  GradientSet& avg = ws.avg;
  avg.dw1.rows = H;
  avg.dw1.cols = I;
  avg.dw1.data.resize(H * I);
  avg.db1.resize(H);
  avg.dw2.rows = K;
  avg.dw2.cols = H;
  avg.dw2.data.resize(K * H);
  avg.db2.resize(K);
  const double inv = 1.0 / static_cast<double>(n);

  // avg.dw1[j][i] = inv * sum_r delta_hidden[r][j] * input[r][i].
  parallel_for(pool, H, [&](std::size_t jb, std::size_t je, unsigned) {
    std::size_t j = jb;
    for (; j + 4 <= je; j += 4) {
      double* __restrict__ o0 = avg.dw1.row(j);
      double* __restrict__ o1 = avg.dw1.row(j + 1);
      double* __restrict__ o2 = avg.dw1.row(j + 2);
      double* __restrict__ o3 = avg.dw1.row(j + 3);
      std::fill(o0, o0 + I, 0.0);
      std::fill(o1, o1 + I, 0.0);
      std::fill(o2, o2 + I, 0.0);
      std::fill(o3, o3 + I, 0.0);
      for (std::size_t r = 0; r < n; ++r) {
        const double* __restrict__ x = ws.set.replicas[r].input.data();
        const double d0 = ws.delta_hidden.at(r, j);
        const double d1 = ws.delta_hidden.at(r, j + 1);
        const double d2 = ws.delta_hidden.at(r, j + 2);
        const double d3 = ws.delta_hidden.at(r, j + 3);
        for (std::size_t i = 0; i < I; ++i) {
          o0[i] += d0 * x[i];
          o1[i] += d1 * x[i];
          o2[i] += d2 * x[i];
          o3[i] += d3 * x[i];
        }
      }
      for (std::size_t i = 0; i < I; ++i) {
        o0[i] *= inv;
        o1[i] *= inv;
        o2[i] *= inv;
        o3[i] *= inv;
      }
    }
    for (; j < je; ++j) {
      double* __restrict__ o = avg.dw1.row(j);
      std::fill(o, o + I, 0.0);
      for (std::size_t r = 0; r < n; ++r) {
        const double* __restrict__ x = ws.set.replicas[r].input.data();
        const double d = ws.delta_hidden.at(r, j);
        for (std::size_t i = 0; i < I; ++i) o[i] += d * x[i];
      }
      for (std::size_t i = 0; i < I; ++i) o[i] *= inv;
    }
  });

  for (std::size_t j = 0; j < H; ++j) {
    double s = 0.0;
    for (std::size_t r = 0; r < n; ++r) s += ws.delta_hidden.at(r, j);
    avg.db1[j] = s * inv;
  }
  for (std::size_t k = 0; k < K; ++k) {
    double* row = avg.dw2.row(k);
    for (std::size_t j = 0; j < H; ++j) {
      double s = 0.0;
      for (std::size_t r = 0; r < n; ++r)
        s += ws.delta_out.at(r, k) * ws.hidden_post.at(r, j);
      row[j] = s * inv;
    }
    double s = 0.0;
    for (std::size_t r = 0; r < n; ++r) s += ws.delta_out.at(r, k);
    avg.db2[k] = s * inv;
  }

  const double lr = cfg.learning_rate;
  apply_update(params.w1.data, avg.dw1.data, lr);
  apply_update(params.b1, avg.db1, lr);
  apply_update(params.w2.data, avg.dw2.data, lr);
  apply_update(params.b2, avg.db2, lr);

  if (!std::isfinite(sum_all(params)))
    throw TrainingDiverged(
        step, example_index,
        "training diverged: non-finite parameters after step " +
            std::to_string(step) + " (example " + std::to_string(example_index) +
            ", variant " + variant_name(cfg.variant) + ")");
}

class RowRecorder {
 public:
  RowRecorder(const TrainingConfig& cfg, const Dataset& train,
              const Dataset& test, ThreadPool* pool)
      : cfg_(cfg), train_(train), test_(test), pool_(pool),
        start_(std::chrono::steady_clock::now()) {}

  void record(MetricsLog& log, const ParameterSet& params, long long steps) {
    MetricsRow row;
    row.variant = cfg_.variant;
    row.steps = steps;
    row.equivalent_sweep =
        static_cast<double>(steps) / static_cast<double>(train_.size());
    row.test_error = evaluate(params, test_, cfg_.activation, pool_);
    const Vector novelty = compute_novelty(params, train_, cfg_.activation, pool_);
    double sum = 0.0;
    for (double v : novelty) sum += v;
    row.train_novelty_sum = sum;
    row.wall_ms = 0;
    if (cfg_.record_timing) {
      row.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::steady_clock::now() - start_)
                        .count();
    }
    row.seed = cfg_.seed;
    log.rows.push_back(row);
  }

 private:
  const TrainingConfig& cfg_;
  const Dataset& train_;
  const Dataset& test_;
  ThreadPool* pool_;
  std::chrono::steady_clock::time_point start_;
};

void require_trainable(const TrainingConfig& cfg, const Dataset& train,
                       const Dataset& test) {
  cfg.validate();
  if (cfg.learning_rate <= 0.0)
    throw std::invalid_argument("run: learning_rate must be > 0");
  if (train.size() == 0) throw std::invalid_argument("run: empty training set");
  if (test.size() == 0) throw std::invalid_argument("run: empty test set");
}

NetworkShape shape_for(const TrainingConfig& cfg, const Dataset& train) {
  return {train.inputs[0].size(), cfg.hidden_units, train.labels[0].size()};
}

}  // namespace

ParameterSet train_step(const ParameterSet& params, std::size_t example_index,
                        const Dataset& train, const TrainingConfig& cfg,
                        long long step, ThreadPool* pool) {
  cfg.validate();
  ParameterSet next = params;
  StepWorkspace ws;
  apply_step(next, example_index, train, cfg, step, ws, pool);
  if (!all_finite(next.w1) || !all_finite(next.b1) || !all_finite(next.w2) ||
      !all_finite(next.b2))
    throw TrainingDiverged(step, example_index,
                           "train_step: non-finite parameter produced");
  return next;
}

double evaluate(const ParameterSet& params, const Dataset& test,
                const ActivationKind& act, ThreadPool* pool) {
  if (test.size() == 0) throw std::invalid_argument("evaluate: empty test set");
  const unsigned slots = pool ? pool->size() : 1;
  std::vector<long long> wrong(slots, 0);
  parallel_for(pool, test.size(),
               [&](std::size_t begin, std::size_t end, unsigned slot) {
                 LayerActivations acts;
                 long long w = 0;
                 for (std::size_t i = begin; i < end; ++i) {
                   forward_into(params, test.inputs[i], act, nullptr, acts);
                   if (predict(acts) != test.label_index[i]) ++w;
                 }
                 wrong[slot] += w;
               });
  long long total = 0;
  for (long long w : wrong) total += w;
  return static_cast<double>(total) / static_cast<double>(test.size());
}

MetricsLog run_uniform_variant(const TrainingConfig& cfg, const Dataset& train,
                               const Dataset& test, ThreadPool* pool) {
  return run_variant(cfg, train, test, pool).log;
}

MetricsLog run_oddball(const TrainingConfig& cfg, const Dataset& train,
                       const Dataset& test, ThreadPool* pool) {
  return run_variant(cfg, train, test, pool).log;
}

RunResult run_variant(const TrainingConfig& cfg, const Dataset& train,
                      const Dataset& test, ThreadPool* pool,
                      const ParameterSet* initial) {
  require_trainable(cfg, train, test);

  RunResult result;
  ParameterSet params =
      initial ? *initial : init_params(cfg.seed, shape_for(cfg, train));
  validate_shape(params, shape_for(cfg, train));

  RowRecorder recorder(cfg, train, test, pool);
  recorder.record(result.log, params, 0);

  StepWorkspace ws;
  const std::uint64_t vtag = variant_tag(cfg.variant);

  if (cfg.variant == Variant::oddball) {
    const long long total =
        static_cast<long long>(cfg.sweeps) * static_cast<long long>(train.size());
    const long long cadence =
        cfg.eval_every_steps > 0
            ? cfg.eval_every_steps
            : static_cast<long long>(cfg.eval_every_sweeps) *
                  static_cast<long long>(train.size());
    auto select_stream =
        RngStream::keyed({cfg.seed, vtag, static_cast<std::uint64_t>(Draw::select)});
    Vector probs;
    for (long long step = 0; step < total; ++step) {
      if (step % cfg.novelty_refresh_steps == 0)
        probs = normalize_novelty(
            compute_novelty(params, train, cfg.activation, pool));
      const std::size_t idx = sample_index(probs, select_stream);
      apply_step(params, idx, train, cfg, step, ws, pool);
      if ((step + 1) % cadence == 0) recorder.record(result.log, params, step + 1);
    }
  } else {
    long long step = 0;
    for (int sweep = 1; sweep <= cfg.sweeps; ++sweep) {
      auto shuffle_stream =
          RngStream::keyed({cfg.seed, vtag, static_cast<std::uint64_t>(Draw::shuffle),
                            static_cast<std::uint64_t>(sweep)});
      const auto order = full_sweep_order(train.size(), shuffle_stream);
      for (std::uint32_t idx : order) {
        apply_step(params, idx, train, cfg, step, ws, pool);
        ++step;
      }
      if (sweep % cfg.eval_every_sweeps == 0)
        recorder.record(result.log, params, step);
    }
  }

  result.final_params = std::move(params);
  return result;
}

std::vector<MetricsLog> run_comparison(std::uint64_t base_seed,
                                       std::span<const Variant> variants,
                                       const TrainingConfig& base,
                                       const Dataset& train, const Dataset& test,
                                       ThreadPool* pool) {
  if (variants.empty())
    throw std::invalid_argument("run_comparison: no variants requested");
  TrainingConfig probe = base;
  probe.seed = base_seed;
  const ParameterSet shared_init =
      init_params(base_seed, shape_for(probe, train));
  std::vector<MetricsLog> logs;
  logs.reserve(variants.size());
  for (Variant v : variants) {
    TrainingConfig cfg = base;
    cfg.variant = v;
    cfg.seed = base_seed;
    cfg.regularizer = regularizer_for(v, base.regularizer.replicas,
                                      base.regularizer.dropout_rate,
                                      base.regularizer.dither_half_width);
    logs.push_back(run_variant(cfg, train, test, pool, &shared_init).log);
  }
  return logs;
}

}  // namespace oddball
