#pragma once

// Central finite differences against the tape's gradients.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "reinflect/autodiff.hpp"
#include "reinflect/model.hpp"
#include "reinflect/rng.hpp"
#include "reinflect/trainer.hpp"

namespace reinflect::testing {

using ScalarFn = std::function<Expr(Graph&, const std::vector<Expr>&)>;

inline double fd_error(double ad, double fd) { return std::abs(ad - fd) / std::max(1.0, std::abs(fd)); }

inline double evaluate_scalar(const ScalarFn& f, const std::vector<Tensor>& inputs) {
  Graph g(false);
  std::vector<Expr> vars;
  for (const Tensor& t : inputs) vars.push_back(g.constant(t));
  return f(g, vars).value().item();
}

// Largest per-element error over every input.
inline double max_gradient_error(const ScalarFn& f, std::vector<Tensor> inputs, double h = 1e-5) {
  std::vector<Tensor> grads;
  {
    Graph g;
    std::vector<Expr> vars;
    for (const Tensor& t : inputs) vars.push_back(g.variable(t));
    g.backward(f(g, vars));
    for (const Expr& v : vars) grads.push_back(v.grad());
  }
  double worst = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    for (std::size_t i = 0; i < inputs[k].size(); ++i) {
      const double x = inputs[k][i];
      inputs[k][i] = x + h;
      const double up = evaluate_scalar(f, inputs);
      inputs[k][i] = x - h;
      const double down = evaluate_scalar(f, inputs);
      inputs[k][i] = x;
      worst = std::max(worst, fd_error(grads[k][i], (up - down) / (2 * h)));
    }
  }
  return worst;
}

inline Tensor random_tensor(Tensor::Shape shape, Rng& rng, double bound = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = rng.uniform(-bound, bound);
  return t;
}

// Reduces any output to a scalar with fixed random weights, so every output
// element contributes a distinct amount to the checked gradient.
inline Expr project(Expr out, std::uint64_t seed) {
  Rng rng(seed);
  Tensor w = random_tensor(out.value().shape(), rng);
  return sum(mul(out, out.graph().constant(std::move(w))));
}

// Worst error over every parameter of a model for batch_loss on `batch`.
inline double max_model_gradient_error(ModelParameters model, const std::vector<EncodedExample>& batch,
                                       double h = 1e-5) {
  const LossAndGradient lg = loss_and_gradient(model, batch);
  const auto loss_at = [&](const ModelParameters& m) {
    Graph g(false);
    return batch_loss(BoundModel::bind(g, m), batch).value().item();
  };
  auto named = model.tensors();
  double worst = 0.0;
  for (std::size_t k = 0; k < named.size(); ++k) {
    Tensor& t = *named[k].tensor;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double x = t[i];
      t[i] = x + h;
      const double up = loss_at(model);
      t[i] = x - h;
      const double down = loss_at(model);
      t[i] = x;
      worst = std::max(worst, fd_error(lg.grads[k][i], (up - down) / (2 * h)));
    }
  }
  return worst;
}

}  // namespace reinflect::testing
