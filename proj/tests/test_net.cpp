#include <doctest.h>

#include <cmath>

#include "oddball/net.hpp"
#include "oddball/rng.hpp"

using namespace oddball;

namespace {

const NetworkShape kTiny{6, 4, 3};

Vector random_vector(std::size_t n, RngStream& s, double lo = -1.0, double hi = 1.0) {
  Vector v(n);
  for (double& x : v) x = s.uniform(lo, hi);
  return v;
}

Vector one_hot_at(std::size_t n, std::size_t idx) {
  Vector v(n, 0.0);
  v[idx] = 1.0;
  return v;
}

// Hand-rolled forward pass, kept deliberately free of the library's matvec
// and softmax helpers.
Vector oracle_forward_probs(const ParameterSet& p, const Vector& x,
                            const ActivationKind& act, const Vector* mask) {
  const std::size_t H = p.b1.size(), K = p.b2.size(), I = x.size();
  Vector h(H), z(K);
  for (std::size_t j = 0; j < H; ++j) {
    double s = p.b1[j];
    for (std::size_t i = 0; i < I; ++i) s += p.w1.at(j, i) * x[i];
    double a;
    if (act.kind == Activation::relu) {
      a = s > 0 ? s : 0.0;
    } else {
      const double arg = s + (act.kind == Activation::biased_sigmoid ? act.bias_offset : 0.0);
      a = 1.0 / (1.0 + std::exp(-arg));
    }
    h[j] = mask ? a * (*mask)[j] : a;
  }
  for (std::size_t k = 0; k < K; ++k) {
    double s = p.b2[k];
    for (std::size_t j = 0; j < H; ++j) s += p.w2.at(k, j) * h[j];
    z[k] = s;
  }
  double mx = z[0];
  for (double v : z) mx = std::max(mx, v);
  double sum = 0.0;
  Vector probs(K);
  for (std::size_t k = 0; k < K; ++k) {
    probs[k] = std::exp(z[k] - mx);
    sum += probs[k];
  }
  for (double& v : probs) v /= sum;
  return probs;
}

}  // namespace

TEST_CASE("init_params is deterministic with zero biases") {
  const ParameterSet a = init_params(7);
  const ParameterSet b = init_params(7);
  CHECK(a.w1.data == b.w1.data);
  CHECK(a.w2.data == b.w2.data);
  for (double v : a.b1) CHECK(v == 0.0);
  for (double v : a.b2) CHECK(v == 0.0);
  const ParameterSet c = init_params(8);
  CHECK(a.w1.data != c.w1.data);
}

TEST_CASE("init_params weights stay inside the fan-in bound, zero mean") {
  const double r1 = 1.0 / std::sqrt(784.0);
  double sum = 0.0;
  long long count = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const ParameterSet p = init_params(seed);
    for (double v : p.w1.data) {
      CHECK(std::fabs(v) <= r1);
      sum += v;
      ++count;
    }
  }
  CHECK(std::fabs(sum / static_cast<double>(count)) < 0.01 * r1);
}

TEST_CASE("forward: zero net gives the uniform softmax") {
  const ParameterSet p = ParameterSet::zeros(kMnistShape);
  const Vector x(784, 0.0);
  const LayerActivations acts = forward(p, x, {Activation::sigmoid, 0.0});
  for (double v : acts.output_prob) CHECK(v == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("forward: relu zeroes negative pre-activations") {
  ParameterSet p = ParameterSet::zeros(kTiny);
  for (double& v : p.b1) v = -0.5;
  const Vector x(6, 0.0);
  const LayerActivations acts = forward(p, x, {Activation::relu, 0.0});
  for (double v : acts.hidden_post) CHECK(v == 0.0);
}

TEST_CASE("forward matches the scalar oracle") {
  auto s = RngStream::keyed({3, 1});
  for (int trial = 0; trial < 20; ++trial) {
    const ParameterSet p = init_params(trial, kTiny);
    const Vector x = random_vector(6, s);
    Vector mask(4);
    for (double& m : mask) m = s.next_double() < 0.5 ? 2.0 : 0.0;
    for (const ActivationKind act : {ActivationKind{Activation::sigmoid, 0.0},
                                     ActivationKind{Activation::biased_sigmoid, 3.0},
                                     ActivationKind{Activation::relu, 0.0}}) {
      const LayerActivations a = forward(p, x, act, &mask);
      const Vector want = oracle_forward_probs(p, x, act, &mask);
      for (std::size_t k = 0; k < want.size(); ++k)
        CHECK(a.output_prob[k] == doctest::Approx(want[k]).epsilon(1e-12));
    }
  }
}

TEST_CASE("forward rejects bad input") {
  const ParameterSet p = init_params(1, kTiny);
  Vector x(6, 0.0);
  x[2] = std::nan("");
  CHECK_THROWS_AS((void)forward(p, x, {}), std::invalid_argument);
  const Vector short_x(5, 0.0);
  CHECK_THROWS_AS((void)forward(p, short_x, {}), std::invalid_argument);
}

TEST_CASE("softmax: normalization, range, shift invariance") {
  auto s = RngStream::keyed({11});
  for (int trial = 0; trial < 100; ++trial) {
    Vector z = random_vector(10, s, -40.0, 40.0);
    Vector p(10), q(10);
    softmax_into(z, p);
    double sum = 0.0;
    for (double v : p) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
      sum += v;
    }
    CHECK(std::fabs(sum - 1.0) < 1e-9);
    const double c = s.uniform(-100.0, 100.0);
    Vector shifted = z;
    for (double& v : shifted) v += c;
    softmax_into(shifted, q);
    for (std::size_t i = 0; i < 10; ++i) CHECK(std::fabs(p[i] - q[i]) < 1e-12);
  }
}

TEST_CASE("backward: zero residual gives zero gradients") {
  const ParameterSet p = init_params(3, kTiny);
  LayerActivations acts;
  acts.input = Vector(6, 0.3);
  acts.hidden_pre = Vector(4, 0.2);
  acts.hidden_post = Vector(4, 0.5);
  acts.output_pre = Vector(3, 0.0);
  acts.output_prob = one_hot_at(3, 1);
  const Vector target = one_hot_at(3, 1);
  for (LossKind kind : {LossKind::cross_entropy, LossKind::squared_error}) {
    const GradientSet g = backward(p, acts, target, {}, kind);
    for (double v : g.dw1.data) CHECK(v == 0.0);
    for (double v : g.db1) CHECK(v == 0.0);
    for (double v : g.dw2.data) CHECK(v == 0.0);
    for (double v : g.db2) CHECK(v == 0.0);
  }
}

TEST_CASE("backward: dropped units block gradient flow") {
  auto s = RngStream::keyed({17});
  const ParameterSet p = init_params(5, kTiny);
  const Vector x = random_vector(6, s);
  Vector mask{2.0, 0.0, 2.0, 0.0};
  const ActivationKind act{Activation::sigmoid, 0.0};
  const LayerActivations acts = forward(p, x, act, &mask);
  const GradientSet g =
      backward(p, acts, one_hot_at(3, 2), act, LossKind::cross_entropy, &mask);
  for (std::size_t j : {std::size_t{1}, std::size_t{3}}) {
    CHECK(g.db1[j] == 0.0);
    for (std::size_t i = 0; i < 6; ++i) CHECK(g.dw1.at(j, i) == 0.0);
  }
}

TEST_CASE("backward rejects non-one-hot targets") {
  const ParameterSet p = init_params(1, kTiny);
  const LayerActivations acts = forward(p, Vector(6, 0.1), {});
  CHECK_THROWS_AS((void)backward(p, acts, Vector{0.5, 0.5, 0.0}, {}),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)backward(p, acts, Vector{1.0, 1.0, 0.0}, {}),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)backward(p, acts, Vector{0.0, 0.0, 0.0}, {}),
                  std::invalid_argument);
}

TEST_CASE("gradients match central finite differences on a 6x4x3 net") {
  const double h = 1e-5;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    ParameterSet p = init_params(seed, kTiny);
    auto s = RngStream::keyed({seed, 1234});
    const Vector x = random_vector(6, s);
    const Vector target = one_hot_at(3, s.next_below(3));
    Vector mask(4);
    for (double& m : mask) m = s.next_double() < 0.5 ? 2.0 : 0.0;

    for (const ActivationKind act : {ActivationKind{Activation::sigmoid, 0.0},
                                     ActivationKind{Activation::biased_sigmoid, 2.0},
                                     ActivationKind{Activation::relu, 0.0}}) {
      for (LossKind kind : {LossKind::cross_entropy, LossKind::squared_error}) {
        for (const Vector* mp :
             {static_cast<const Vector*>(nullptr), static_cast<const Vector*>(&mask)}) {
          const GradientSet g =
              backward(p, forward(p, x, act, mp), target, act, kind, mp);
          auto fd = [&](double* theta, double analytic) {
            const double orig = *theta;
            *theta = orig + h;
            const double up = loss(forward(p, x, act, mp), target, kind);
            *theta = orig - h;
            const double dn = loss(forward(p, x, act, mp), target, kind);
            *theta = orig;
            const double numeric = (up - dn) / (2 * h);
            const double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-3});
            worst = std::max(worst, std::fabs(analytic - numeric) / denom);
          };
          for (std::size_t i = 0; i < p.w1.data.size(); ++i) fd(&p.w1.data[i], g.dw1.data[i]);
          for (std::size_t i = 0; i < p.b1.size(); ++i) fd(&p.b1[i], g.db1[i]);
          for (std::size_t i = 0; i < p.w2.data.size(); ++i) fd(&p.w2.data[i], g.dw2.data[i]);
          for (std::size_t i = 0; i < p.b2.size(); ++i) fd(&p.b2[i], g.db2[i]);
        }
      }
    }
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("predict: argmax with lowest-index ties") {
  LayerActivations acts;
  acts.output_prob = Vector(10, 0.0);
  acts.output_prob[9] = 1.0;
  CHECK(predict(acts) == 9);
  acts.output_prob = Vector(10, 0.1);
  CHECK(predict(acts) == 0);
  auto s = RngStream::keyed({77});
  for (int trial = 0; trial < 50; ++trial) {
    Vector z = random_vector(10, s, -5.0, 5.0);
    acts.output_prob.resize(10);
    softmax_into(z, acts.output_prob);
    int want = 0;
    for (int i = 1; i < 10; ++i)
      if (acts.output_prob[i] > acts.output_prob[want]) want = i;
    CHECK(predict(acts) == want);
  }
}

TEST_CASE("loss values") {
  LayerActivations acts;
  acts.output_prob = one_hot_at(10, 4);
  CHECK(loss(acts, one_hot_at(10, 4)) == 0.0);

  acts.output_prob = Vector(10, 0.1);
  CHECK(loss(acts, one_hot_at(10, 2)) ==
        doctest::Approx(2.302585092994046).epsilon(1e-12));

  // probability floor
  acts.output_prob = Vector(10, 0.0);
  acts.output_prob[0] = 1.0;
  CHECK(loss(acts, one_hot_at(10, 5)) ==
        doctest::Approx(-std::log(1e-12)).epsilon(1e-12));

  // squared error, scalar recomputation
  auto s = RngStream::keyed({5});
  Vector z = random_vector(10, s);
  acts.output_prob.resize(10);
  softmax_into(z, acts.output_prob);
  const Vector t = one_hot_at(10, 3);
  double want = 0.0;
  for (std::size_t i = 0; i < 10; ++i) {
    const double d = acts.output_prob[i] - t[i];
    want += d * d;
  }
  CHECK(loss(acts, t, LossKind::squared_error) ==
        doctest::Approx(0.5 * want).epsilon(1e-12));
}

TEST_CASE("forward and backward are deterministic over repeated calls") {
  const ParameterSet p = init_params(9, kTiny);
  auto s = RngStream::keyed({19});
  const Vector x = random_vector(6, s);
  const Vector t = one_hot_at(3, 1);
  const LayerActivations a1 = forward(p, x, {});
  const LayerActivations a2 = forward(p, x, {});
  CHECK(a1.output_prob == a2.output_prob);
  const GradientSet g1 = backward(p, a1, t, {});
  const GradientSet g2 = backward(p, a2, t, {});
  CHECK(g1.dw1.data == g2.dw1.data);
  CHECK(g1.db2 == g2.db2);
}

TEST_CASE("validate_shape rejects mismatched parameter sets") {
  const ParameterSet p = init_params(1, kTiny);
  CHECK_NOTHROW(validate_shape(p, kTiny));
  CHECK_THROWS_AS(validate_shape(p, kMnistShape), std::invalid_argument);
}
