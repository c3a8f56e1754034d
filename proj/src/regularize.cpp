#include "oddball/regularize.hpp"

#include <stdexcept>

#include "oddball/rng.hpp"

namespace oddball {

const char* regularizer_mode_name(RegularizerMode m) {
  switch (m) {
    case RegularizerMode::none: return "none";
    case RegularizerMode::dropout: return "dropout";
    case RegularizerMode::dither: return "dither";
    case RegularizerMode::parallel_dither: return "parallel-dither";
    case RegularizerMode::parallel_dither_dropout: return "parallel-dither-dropout";
  }
  return "none";
}

void RegularizerConfig::validate() const {
  if (replicas < 1)
    throw std::invalid_argument("regularizer: replicas must be positive");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
    throw std::invalid_argument("regularizer: dropout_rate must be in [0, 1)");
  if (!(dither_half_width > 0.0))
    throw std::invalid_argument("regularizer: dither_half_width must be positive");
}

void make_parallel_set_into(std::span<const double> input,
                            const RegularizerConfig& cfg,
                            const StreamCoords& coords, std::size_t hidden_units,
                            ParallelSet& out, ThreadPool* pool) {
  cfg.validate();
  const std::size_t n = static_cast<std::size_t>(cfg.effective_replicas());
  out.replicas.resize(n);
  const double hw = cfg.dither_half_width;
  const double keep = 1.0 - cfg.dropout_rate;
  // Each replica draws from its own keyed streams, so the chunking below has
  // no effect on the numbers.
  parallel_for(pool, n, [&](std::size_t begin, std::size_t end, unsigned) {
    for (std::size_t r = begin; r < end; ++r) {
      Replica& rep = out.replicas[r];
      rep.input.assign(input.begin(), input.end());
      if (cfg.uses_dither()) {
        auto s = RngStream::keyed({coords.seed, coords.variant_tag,
                                   static_cast<std::uint64_t>(Draw::dither),
                                   coords.step, static_cast<std::uint64_t>(r)});
        for (double& x : rep.input) x += s.uniform(-hw, hw);
      }
      if (cfg.uses_dropout()) {
        auto s = RngStream::keyed({coords.seed, coords.variant_tag,
                                   static_cast<std::uint64_t>(Draw::dropout),
                                   coords.step, static_cast<std::uint64_t>(r)});
        Vector mask(hidden_units);
        for (double& m : mask) m = s.next_double() < keep ? 1.0 / keep : 0.0;
        rep.hidden_mask = std::move(mask);
      } else {
        rep.hidden_mask.reset();
      }
    }
  });
}

ParallelSet make_parallel_set(std::span<const double> input,
                              const RegularizerConfig& cfg,
                              const StreamCoords& coords,
                              std::size_t hidden_units) {
  ParallelSet out;
  make_parallel_set_into(input, cfg, coords, hidden_units, out);
  return out;
}

void average_gradients_into(std::span<const GradientSet> grads, GradientSet& out,
                            ThreadPool* pool) {
  if (grads.empty())
    throw std::invalid_argument("average_gradients: empty gradient list");
  for (const GradientSet& g : grads)
    if (!g.same_shape(grads[0]))
      throw std::invalid_argument("average_gradients: shape mismatch");

  const NetworkShape shape{grads[0].dw1.cols, grads[0].dw1.rows, grads[0].dw2.rows};
  out.dw1.rows = shape.hidden;
  out.dw1.cols = shape.inputs;
  out.dw1.data.resize(shape.hidden * shape.inputs);
  out.db1.resize(shape.hidden);
  out.dw2.rows = shape.outputs;
  out.dw2.cols = shape.hidden;
  out.dw2.data.resize(shape.outputs * shape.hidden);
  out.db2.resize(shape.outputs);

  const double inv = 1.0 / static_cast<double>(grads.size());
  // Each element accumulates over the replica list in index order, so the
  // result does not depend on the chunking. Replica-major iteration keeps the
  // reads sequential.
  auto reduce = [&](auto select, double* dst, std::size_t count) {
    parallel_for(pool, count, [&](std::size_t begin, std::size_t end, unsigned) {
      for (std::size_t j = begin; j < end; ++j) dst[j] = 0.0;
      for (const GradientSet& g : grads) {
        const double* src = select(g);
        for (std::size_t j = begin; j < end; ++j) dst[j] += src[j];
      }
      for (std::size_t j = begin; j < end; ++j) dst[j] *= inv;
    });
  };
  reduce([](const GradientSet& g) { return g.dw1.data.data(); },
         out.dw1.data.data(), out.dw1.data.size());
  reduce([](const GradientSet& g) { return g.db1.data(); }, out.db1.data(),
         out.db1.size());
  reduce([](const GradientSet& g) { return g.dw2.data.data(); },
         out.dw2.data.data(), out.dw2.data.size());
  reduce([](const GradientSet& g) { return g.db2.data(); }, out.db2.data(),
         out.db2.size());
}

GradientSet average_gradients(std::span<const GradientSet> grads) {
  GradientSet out;
  average_gradients_into(grads, out);
  return out;
}

}  // namespace oddball
