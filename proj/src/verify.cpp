#include "oddball/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "oddball/net.hpp"
#include "oddball/regularize.hpp"
#include "oddball/rng.hpp"
#include "oddball/sampler.hpp"

namespace oddball {

namespace {

std::string fmt(const char* pattern, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), pattern, a, b);
  return buf;
}

// --- gradient check -------------------------------------------------------

double loss_at(const ParameterSet& p, std::span<const double> input,
               std::span<const double> target, const ActivationKind& act,
               LossKind kind, const Vector* mask) {
  return loss(forward(p, input, act, mask), target, kind);
}

// Central finite differences over every parameter of a small net.
CheckResult gradient_check() {
  const NetworkShape shape{6, 4, 3};
  const double h = 1e-5;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    ParameterSet p = init_params(seed, shape);
    auto stream = RngStream::keyed({seed, static_cast<std::uint64_t>(Draw::test)});
    Vector input(shape.inputs);
    for (double& x : input) x = stream.uniform(-1.0, 1.0);
    Vector target(shape.outputs, 0.0);
    target[stream.next_below(shape.outputs)] = 1.0;

    const ActivationKind acts[] = {{Activation::sigmoid, 0.0},
                                   {Activation::biased_sigmoid, 2.0},
                                   {Activation::relu, 0.0}};
    const LossKind losses[] = {LossKind::cross_entropy, LossKind::squared_error};
    Vector mask(shape.hidden);
    for (double& m : mask) m = stream.next_double() < 0.5 ? 2.0 : 0.0;

    for (const auto& act : acts) {
      for (LossKind kind : losses) {
        for (const Vector* mp :
             {static_cast<const Vector*>(nullptr), static_cast<const Vector*>(&mask)}) {
          const GradientSet g =
              backward(p, forward(p, input, act, mp), target, act, kind, mp);
          auto probe = [&](double* theta, double analytic) {
            const double orig = *theta;
            *theta = orig + h;
            const double up = loss_at(p, input, target, act, kind, mp);
            *theta = orig - h;
            const double down = loss_at(p, input, target, act, kind, mp);
            *theta = orig;
            const double numeric = (up - down) / (2.0 * h);
            const double denom =
                std::max({std::fabs(analytic), std::fabs(numeric), 1e-3});
            worst = std::max(worst, std::fabs(analytic - numeric) / denom);
          };
          for (std::size_t i = 0; i < p.w1.data.size(); ++i)
            probe(&p.w1.data[i], g.dw1.data[i]);
          for (std::size_t i = 0; i < p.b1.size(); ++i)
            probe(&p.b1[i], g.db1[i]);
          for (std::size_t i = 0; i < p.w2.data.size(); ++i)
            probe(&p.w2.data[i], g.dw2.data[i]);
          for (std::size_t i = 0; i < p.b2.size(); ++i)
            probe(&p.b2[i], g.db2[i]);
        }
      }
    }
  }
  return {"gradient-check", worst < 1e-4,
          fmt("max relative error %.3g (limit 1e-4)", worst)};
}

// --- softmax ---------------------------------------------------------------

CheckResult softmax_check() {
  auto stream = RngStream::keyed({42, static_cast<std::uint64_t>(Draw::test)});
  double worst_sum = 0.0, worst_shift = 0.0;
  bool in_range = true;
  for (int trial = 0; trial < 200; ++trial) {
    Vector z(10);
    for (double& v : z) v = stream.uniform(-30.0, 30.0);
    Vector p(10), q(10), shifted(10);
    softmax_into(z, p);
    const double c = stream.uniform(-50.0, 50.0);
    for (std::size_t i = 0; i < z.size(); ++i) shifted[i] = z[i] + c;
    softmax_into(shifted, q);
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      sum += p[i];
      if (p[i] < 0.0 || p[i] > 1.0) in_range = false;
      worst_shift = std::max(worst_shift, std::fabs(p[i] - q[i]));
    }
    worst_sum = std::max(worst_sum, std::fabs(sum - 1.0));
  }
  const bool ok = in_range && worst_sum < 1e-9 && worst_shift < 1e-12;
  return {"softmax", ok,
          fmt("sum deviation %.3g (limit 1e-9), shift deviation %.3g", worst_sum,
              worst_shift)};
}

// --- sampler ----------------------------------------------------------------

CheckResult sampler_check() {
  // Deliberately non-uniform target with exact zeros: a sampler that ignores
  // its distribution cannot pass.
  const std::size_t n = 256;
  Vector weights(n);
  auto stream = RngStream::keyed({7, static_cast<std::uint64_t>(Draw::test)});
  for (std::size_t i = 0; i < n; ++i)
    weights[i] = (i % 8 == 0) ? 0.0 : stream.uniform(0.2, 2.0);
  weights[3] = 40.0;  // one heavy element
  const Vector probs = normalize_novelty(weights);

  const int draws = 100000;
  std::vector<int> counts(n, 0);
  auto draw_stream = RngStream::keyed({8, static_cast<std::uint64_t>(Draw::test)});
  for (int d = 0; d < draws; ++d) counts[sample_index(probs, draw_stream)]++;

  double max_dev = 0.0;
  bool zeros_clean = true;
  for (std::size_t i = 0; i < n; ++i) {
    const double freq = static_cast<double>(counts[i]) / draws;
    max_dev = std::max(max_dev, std::fabs(freq - probs[i]));
    if (probs[i] == 0.0 && counts[i] != 0) zeros_clean = false;
  }

  // Uniform distribution: chi-square against the 0.999 quantile for 255 dof.
  Vector uniform(n, 1.0 / static_cast<double>(n));
  std::vector<int> ucounts(n, 0);
  auto ustream = RngStream::keyed({9, static_cast<std::uint64_t>(Draw::test)});
  const int udraws = 1000000;
  for (int d = 0; d < udraws; ++d) ucounts[sample_index(uniform, ustream)]++;
  const double expected = static_cast<double>(udraws) / n;
  double chi2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double diff = ucounts[i] - expected;
    chi2 += diff * diff / expected;
  }
  const double chi2_limit = 330.5;  // 0.999 quantile, 255 dof

  const bool ok = zeros_clean && max_dev < 0.01 && chi2 < chi2_limit;
  std::string detail = fmt("max frequency deviation %.4g (limit 0.01), chi2 %.1f",
                           max_dev, chi2);
  if (!zeros_clean) detail += ", zero-probability element was drawn";
  return {"sampler", ok, detail};
}

// --- dropout ----------------------------------------------------------------

CheckResult dropout_check() {
  RegularizerConfig cfg;
  cfg.mode = RegularizerMode::parallel_dither_dropout;
  cfg.replicas = 100;
  cfg.dropout_rate = 0.5;
  Vector input(784, 0.0);
  const std::size_t hidden = 100;
  long long kept = 0, total = 0;
  bool scaling_exact = true;
  for (std::uint64_t step = 0; step < 10; ++step) {
    const ParallelSet set =
        make_parallel_set(input, cfg, {1234, 1, step}, hidden);
    for (const Replica& r : set.replicas) {
      for (double m : r.hidden_mask.value()) {
        ++total;
        if (m != 0.0) {
          ++kept;
          if (m != 2.0) scaling_exact = false;
        }
      }
    }
  }
  const double frac = static_cast<double>(kept) / static_cast<double>(total);
  const bool ok = scaling_exact && frac >= 0.49 && frac <= 0.51;
  std::string detail = fmt("keep fraction %.4f over %g entries (want 0.49..0.51)",
                           frac, static_cast<double>(total));
  if (!scaling_exact) detail += ", kept entries not exactly 1/(1-rate)";
  return {"dropout", ok, detail};
}

// --- dither -----------------------------------------------------------------

CheckResult dither_check() {
  RegularizerConfig cfg;
  cfg.mode = RegularizerMode::parallel_dither;
  cfg.replicas = 100;
  cfg.dither_half_width = 0.5;
  Vector input(784, 0.25);
  double sum = 0.0, sumsq = 0.0;
  long long n = 0;
  for (std::uint64_t step = 0; step < 13; ++step) {
    const ParallelSet set = make_parallel_set(input, cfg, {99, 1, step}, 100);
    for (const Replica& r : set.replicas) {
      for (std::size_t i = 0; i < r.input.size(); ++i) {
        const double noise = r.input[i] - input[i];
        sum += noise;
        sumsq += noise * noise;
        ++n;
      }
    }
  }
  const double mean = sum / static_cast<double>(n);
  const double var = sumsq / static_cast<double>(n) - mean * mean;
  const double sigma = cfg.dither_half_width / std::sqrt(3.0);
  const double mean_limit = 3.0 * sigma / std::sqrt(static_cast<double>(n));
  const double want_var = cfg.dither_half_width * cfg.dither_half_width / 3.0;
  const bool mean_ok = std::fabs(mean) < mean_limit;
  const bool var_ok = std::fabs(var - want_var) < 0.02 * want_var;
  return {"dither", mean_ok && var_ok,
          fmt("mean %.3g (limit %.3g)", mean, mean_limit) +
              fmt(", variance %.6f (want %.6f +/- 2%%)", var, want_var)};
}

// --- averaging --------------------------------------------------------------

CheckResult averaging_check() {
  const NetworkShape shape{6, 4, 3};
  auto stream = RngStream::keyed({5150, static_cast<std::uint64_t>(Draw::test)});
  auto random_grad = [&] {
    GradientSet g = GradientSet::zeros(shape);
    for (double& v : g.dw1.data) v = stream.uniform(-1.0, 1.0);
    for (double& v : g.db1) v = stream.uniform(-1.0, 1.0);
    for (double& v : g.dw2.data) v = stream.uniform(-1.0, 1.0);
    for (double& v : g.db2) v = stream.uniform(-1.0, 1.0);
    return g;
  };

  std::vector<GradientSet> grads;
  for (int i = 0; i < 100; ++i) grads.push_back(random_grad());
  const GradientSet avg = average_gradients(grads);

  // Scalar-loop mean, written independently of average_gradients.
  double worst = 0.0;
  auto compare = [&](auto select) {
    const std::size_t count = select(grads[0]).size();
    for (std::size_t j = 0; j < count; ++j) {
      double s = 0.0;
      for (const GradientSet& g : grads) s += select(g)[j];
      worst = std::max(worst, std::fabs(s / 100.0 - select(avg)[j]));
    }
  };
  compare([](const GradientSet& g) -> std::span<const double> { return g.dw1.data; });
  compare([](const GradientSet& g) -> std::span<const double> { return g.db1; });
  compare([](const GradientSet& g) -> std::span<const double> { return g.dw2.data; });
  compare([](const GradientSet& g) -> std::span<const double> { return g.db2; });

  // [G, -G] must cancel exactly.
  GradientSet neg = grads[0];
  for (double& v : neg.dw1.data) v = -v;
  for (double& v : neg.db1) v = -v;
  for (double& v : neg.dw2.data) v = -v;
  for (double& v : neg.db2) v = -v;
  std::vector<GradientSet> pair{grads[0], neg};
  const GradientSet zero = average_gradients(pair);
  double cancel = 0.0;
  for (double v : zero.dw1.data) cancel = std::max(cancel, std::fabs(v));
  for (double v : zero.db1) cancel = std::max(cancel, std::fabs(v));
  for (double v : zero.dw2.data) cancel = std::max(cancel, std::fabs(v));
  for (double v : zero.db2) cancel = std::max(cancel, std::fabs(v));

  const bool ok = worst < 1e-12 && cancel == 0.0;
  return {"averaging", ok,
          fmt("max deviation from scalar mean %.3g (limit 1e-12), "
              "cancellation residue %.3g",
              worst, cancel)};
}

}  // namespace

std::vector<std::string> self_check_names() {
  return {"gradient-check", "softmax", "sampler", "dropout", "dither", "averaging"};
}

std::vector<CheckResult> run_self_checks(std::string_view only) {
  const auto names = self_check_names();
  if (!only.empty() &&
      std::find(names.begin(), names.end(), only) == names.end())
    throw std::invalid_argument("unknown check: " + std::string(only));

  std::vector<CheckResult> results;
  auto want = [&](std::string_view name) { return only.empty() || only == name; };
  if (want("gradient-check")) results.push_back(gradient_check());
  if (want("softmax")) results.push_back(softmax_check());
  if (want("sampler")) results.push_back(sampler_check());
  if (want("dropout")) results.push_back(dropout_check());
  if (want("dither")) results.push_back(dither_check());
  if (want("averaging")) results.push_back(averaging_check());
  return results;
}

}  // namespace oddball
