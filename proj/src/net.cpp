#include "oddball/net.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "oddball/fault.hpp"
#include "oddball/rng.hpp"

namespace oddball {

namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double activate(double x, const ActivationKind& act) {
  switch (act.kind) {
    case Activation::sigmoid: return sigmoid(x);
    case Activation::biased_sigmoid: return sigmoid(x + act.bias_offset);
    case Activation::relu: return x > 0.0 ? x : 0.0;
  }
  return 0.0;
}

double activate_derivative(double x, const ActivationKind& act) {
  switch (act.kind) {
    case Activation::sigmoid: {
      const double s = sigmoid(x);
      return s * (1.0 - s);
    }
    case Activation::biased_sigmoid: {
      const double s = sigmoid(x + act.bias_offset);
      return s * (1.0 - s);
    }
    case Activation::relu: return x > 0.0 ? 1.0 : 0.0;
  }
  return 0.0;
}

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

void check_one_hot(std::span<const double> target, std::size_t outputs) {
  require(target.size() == outputs, "target: wrong length");
  int ones = 0;
  for (double t : target) {
    if (t == 1.0) {
      ++ones;
    } else if (t != 0.0) {
      throw std::invalid_argument("target: not one-hot");
    }
  }
  require(ones == 1, "target: not one-hot");
}

}  // namespace

ParameterSet ParameterSet::zeros(const NetworkShape& s) {
  ParameterSet p;
  p.w1 = Matrix(s.hidden, s.inputs);
  p.b1 = Vector(s.hidden, 0.0);
  p.w2 = Matrix(s.outputs, s.hidden);
  p.b2 = Vector(s.outputs, 0.0);
  return p;
}

void validate_shape(const ParameterSet& p, const NetworkShape& expect) {
  require(p.w1.rows == expect.hidden && p.w1.cols == expect.inputs,
          "ParameterSet: w1 shape mismatch");
  require(p.b1.size() == expect.hidden, "ParameterSet: b1 length mismatch");
  require(p.w2.rows == expect.outputs && p.w2.cols == expect.hidden,
          "ParameterSet: w2 shape mismatch");
  require(p.b2.size() == expect.outputs, "ParameterSet: b2 length mismatch");
}

GradientSet GradientSet::zeros(const NetworkShape& s) {
  GradientSet g;
  g.dw1 = Matrix(s.hidden, s.inputs);
  g.db1 = Vector(s.hidden, 0.0);
  g.dw2 = Matrix(s.outputs, s.hidden);
  g.db2 = Vector(s.outputs, 0.0);
  return g;
}

bool GradientSet::same_shape(const GradientSet& o) const {
  return dw1.same_shape(o.dw1) && db1.size() == o.db1.size() &&
         dw2.same_shape(o.dw2) && db2.size() == o.db2.size();
}

ParameterSet init_params(std::uint64_t seed, const NetworkShape& shape) {
  ParameterSet p = ParameterSet::zeros(shape);
  const double r1 = 1.0 / std::sqrt(static_cast<double>(shape.inputs));
  const double r2 = 1.0 / std::sqrt(static_cast<double>(shape.hidden));
  auto s1 = RngStream::keyed({seed, static_cast<std::uint64_t>(Draw::init_hidden)});
  for (double& w : p.w1.data) w = s1.uniform(-r1, r1);
  auto s2 = RngStream::keyed({seed, static_cast<std::uint64_t>(Draw::init_output)});
  for (double& w : p.w2.data) w = s2.uniform(-r2, r2);
  return p;
}

void softmax_into(std::span<const double> z, std::span<double> out) {
  double mx = z[0];
  for (double v : z) mx = std::max(mx, v);
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    out[i] = std::exp(z[i] - mx);
    sum += out[i];
  }
  if (fault::active() == fault::Kind::softmax_unnormalized) return;
  for (std::size_t i = 0; i < z.size(); ++i) out[i] /= sum;
}

void forward_into(const ParameterSet& p, std::span<const double> input,
                  const ActivationKind& act, const Vector* hidden_mask,
                  LayerActivations& out) {
  const NetworkShape s = p.shape();
  require(input.size() == s.inputs, "forward: input length mismatch");
  require(all_finite(input), "forward: non-finite input");
  if (hidden_mask)
    require(hidden_mask->size() == s.hidden, "forward: mask length mismatch");

  out.input.assign(input.begin(), input.end());
  out.hidden_pre.resize(s.hidden);
  out.hidden_post.resize(s.hidden);
  out.output_pre.resize(s.outputs);
  out.output_prob.resize(s.outputs);

  matvec(p.w1, input.data(), out.hidden_pre.data());
  for (std::size_t i = 0; i < s.hidden; ++i) out.hidden_pre[i] += p.b1[i];

  for (std::size_t i = 0; i < s.hidden; ++i) {
    double h = activate(out.hidden_pre[i], act);
    if (hidden_mask) h *= (*hidden_mask)[i];
    out.hidden_post[i] = h;
  }

  matvec(p.w2, out.hidden_post.data(), out.output_pre.data());
  for (std::size_t i = 0; i < s.outputs; ++i) out.output_pre[i] += p.b2[i];

  softmax_into(out.output_pre, out.output_prob);
}

LayerActivations forward(const ParameterSet& p, std::span<const double> input,
                         const ActivationKind& act, const Vector* hidden_mask) {
  LayerActivations out;
  forward_into(p, input, act, hidden_mask, out);
  return out;
}

void output_delta(std::span<const double> output_prob, std::span<const double> target,
                  LossKind loss_kind, std::span<double> out) {
  const std::size_t K = output_prob.size();
  // Cross-entropy through softmax collapses to p - y; squared error needs
  // the softmax Jacobian.
  if (loss_kind == LossKind::cross_entropy) {
    for (std::size_t k = 0; k < K; ++k) out[k] = output_prob[k] - target[k];
  } else {
    double dot_pp = 0.0;
    for (std::size_t k = 0; k < K; ++k)
      dot_pp += (output_prob[k] - target[k]) * output_prob[k];
    for (std::size_t k = 0; k < K; ++k)
      out[k] = output_prob[k] * ((output_prob[k] - target[k]) - dot_pp);
  }
  if (fault::active() == fault::Kind::backward_sign)
    for (std::size_t k = 0; k < K; ++k) out[k] = -out[k];
}

void hidden_delta(const ParameterSet& p, std::span<const double> delta_out,
                  std::span<const double> hidden_pre, const ActivationKind& act,
                  const Vector* hidden_mask, std::span<double> out) {
  const std::size_t H = hidden_pre.size();
  const std::size_t K = delta_out.size();
  for (std::size_t j = 0; j < H; ++j) {
    double dh = 0.0;
    for (std::size_t k = 0; k < K; ++k) dh += p.w2.at(k, j) * delta_out[k];
    if (hidden_mask) dh *= (*hidden_mask)[j];
    out[j] = dh * activate_derivative(hidden_pre[j], act);
  }
}

void backward_into(const ParameterSet& p, const LayerActivations& acts,
                   std::span<const double> target, const ActivationKind& act,
                   LossKind loss_kind, const Vector* hidden_mask, GradientSet& out) {
  const NetworkShape s = p.shape();
  check_one_hot(target, s.outputs);
  if (hidden_mask)
    require(hidden_mask->size() == s.hidden, "backward: mask length mismatch");

  out.dw1.rows = s.hidden;
  out.dw1.cols = s.inputs;
  out.dw1.data.resize(s.hidden * s.inputs);
  out.db1.resize(s.hidden);
  out.dw2.rows = s.outputs;
  out.dw2.cols = s.hidden;
  out.dw2.data.resize(s.outputs * s.hidden);
  out.db2.resize(s.outputs);

  const std::size_t K = s.outputs;
  Vector delta_out(K);
  output_delta(acts.output_prob, target, loss_kind, delta_out);

  for (std::size_t k = 0; k < K; ++k) {
    out.db2[k] = delta_out[k];
    double* row = out.dw2.row(k);
    const double d = delta_out[k];
    for (std::size_t j = 0; j < s.hidden; ++j) row[j] = d * acts.hidden_post[j];
  }

  hidden_delta(p, delta_out, acts.hidden_pre, act, hidden_mask, out.db1);
  for (std::size_t j = 0; j < s.hidden; ++j) {
    const double dpre = out.db1[j];
    double* row = out.dw1.row(j);
    const double* x = acts.input.data();
    for (std::size_t i = 0; i < s.inputs; ++i) row[i] = dpre * x[i];
  }
}

GradientSet backward(const ParameterSet& p, const LayerActivations& acts,
                     std::span<const double> target, const ActivationKind& act,
                     LossKind loss_kind, const Vector* hidden_mask) {
  GradientSet out;
  backward_into(p, acts, target, act, loss_kind, hidden_mask, out);
  return out;
}

int predict(const LayerActivations& acts) {
  int best = 0;
  for (std::size_t i = 1; i < acts.output_prob.size(); ++i)
    if (acts.output_prob[i] > acts.output_prob[best]) best = static_cast<int>(i);
  return best;
}

double loss(const LayerActivations& acts, std::span<const double> target,
            LossKind kind) {
  check_one_hot(target, acts.output_prob.size());
  if (kind == LossKind::cross_entropy) {
    for (std::size_t i = 0; i < target.size(); ++i)
      if (target[i] == 1.0)
        return -std::log(std::max(acts.output_prob[i], 1e-12));
    return 0.0;  // unreachable: check_one_hot guarantees a 1
  }
  double s = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    const double d = acts.output_prob[i] - target[i];
    s += d * d;
  }
  return 0.5 * s;
}

}  // namespace oddball
