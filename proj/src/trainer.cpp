#include "reinflect/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>

#include <json.hpp>

#include "reinflect/autodiff.hpp"
#include "reinflect/decode.hpp"
#include "reinflect/errors.hpp"
#include "reinflect/metrics.hpp"
#include "reinflect/rng.hpp"

namespace reinflect {

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (!(adadelta_rho > 0.0 && adadelta_rho < 1.0)) throw ConfigError("adadelta rho must lie in (0, 1)");
  if (!(adadelta_eps > 0.0)) throw ConfigError("adadelta eps must be positive");
  if (grad_clip_norm && !(*grad_clip_norm > 0.0)) throw ConfigError("gradient clip norm must be positive");
}

AdaDeltaState AdaDeltaState::zeros_like(const std::vector<Tensor>& params) {
  AdaDeltaState s;
  for (const Tensor& p : params) {
    s.mean_sq_grad.emplace_back(p.shape());
    s.mean_sq_update.emplace_back(p.shape());
  }
  return s;
}

void adadelta_step(AdaDeltaState& state, std::span<Tensor* const> params, std::span<const Tensor> grads, double rho,
                   double eps) {
  if (params.size() != grads.size() || params.size() != state.mean_sq_grad.size() ||
      params.size() != state.mean_sq_update.size()) {
    throw DimensionError("adadelta: parameter, gradient and state counts differ");
  }
  for (std::size_t t = 0; t < params.size(); ++t) {
    Tensor& x = *params[t];
    const Tensor& g = grads[t];
    Tensor& eg = state.mean_sq_grad[t];
    Tensor& ed = state.mean_sq_update[t];
    if (x.shape() != g.shape() || x.shape() != eg.shape() || x.shape() != ed.shape()) {
      throw DimensionError("adadelta: shape mismatch for parameter " + std::to_string(t) + ": " +
                           shape_string(x.shape()) + " vs gradient " + shape_string(g.shape()));
    }
    auto xd = x.data();
    auto gd = g.data();
    auto egd = eg.data();
    auto edd = ed.data();
    for (std::size_t i = 0; i < xd.size(); ++i) {
      egd[i] = rho * egd[i] + (1.0 - rho) * gd[i] * gd[i];
      const double delta = -std::sqrt(edd[i] + eps) / std::sqrt(egd[i] + eps) * gd[i];
      edd[i] = rho * edd[i] + (1.0 - rho) * delta * delta;
      xd[i] += delta;
    }
  }
}

double clip_global_norm(std::span<Tensor> grads, double max_norm) {
  double sq = 0.0;
  for (const Tensor& g : grads)
    for (double v : g.data()) sq += v * v;
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (Tensor& g : grads)
      for (double& v : g.data()) v *= scale;
  }
  return norm;
}

std::size_t epochs_for_fraction(double fraction) {
  constexpr double kTol = 1e-9;
  for (double f : {1.0, 1.0 / 4, 1.0 / 8}) {
    if (std::abs(fraction - f) < kTol) return 200;
  }
  if (std::abs(fraction - 1.0 / 16) < kTol) return 400;
  if (std::abs(fraction - 1.0 / 32) < kTol) return 800;
  throw ConfigError("no epoch schedule for fraction " + std::to_string(fraction) +
                    "; supported: 1, 1/4, 1/8, 1/16, 1/32 (set epochs explicitly otherwise)");
}

double parse_fraction(const std::string& text) {
  try {
    std::size_t used = 0;
    if (const auto slash = text.find('/'); slash != std::string::npos) {
      const double num = std::stod(text.substr(0, slash), &used);
      if (used != slash) throw std::invalid_argument(text);
      const std::string den_text = text.substr(slash + 1);
      const double den = std::stod(den_text, &used);
      if (used != den_text.size() || den == 0.0) throw std::invalid_argument(text);
      return num / den;
    }
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::logic_error&) {
    throw ConfigError("cannot parse fraction '" + text + "'");
  }
}

std::string EpochRecord::to_json() const {
  nlohmann::json j{{"epoch", epoch}, {"train_nll", train_nll}, {"train_nll_per_symbol", train_nll_per_symbol}};
  j["dev_acc"] = dev_accuracy ? nlohmann::json(*dev_accuracy) : nlohmann::json(nullptr);
  j["dev_ed"] = dev_edit_distance ? nlohmann::json(*dev_edit_distance) : nlohmann::json(nullptr);
  return j.dump();
}

LossAndGradient loss_and_gradient(const ModelParameters& model, std::span<const EncodedExample> batch) {
  Graph graph;
  const BoundModel bound = BoundModel::bind(graph, model);
  const Expr loss = batch_loss(bound, batch);
  graph.backward(loss);
  LossAndGradient out;
  out.loss = loss.value().item();
  out.grads.reserve(bound.leaves.size());
  for (const Expr& leaf : bound.leaves) out.grads.push_back(leaf.grad());
  return out;
}

TrainResult train(ModelParameters initial, const std::vector<LabeledExample>& labeled,
                  const std::vector<UnlabeledExample>& unlabeled, const TrainConfig& config,
                  const std::vector<LabeledExample>* dev, const EpochCallback& on_epoch) {
  config.validate();
  if (labeled.empty()) throw ConfigError("training needs at least one labeled example");
  if (config.model_selection == ModelSelection::kBestDev && (!dev || dev->empty())) {
    throw ConfigError("best-dev model selection needs a nonempty dev set");
  }

  std::vector<EncodedExample> data;
  data.reserve(labeled.size() + unlabeled.size());
  for (const LabeledExample& ex : labeled) data.push_back(encode_example(initial.vocab, ex));
  for (const UnlabeledExample& ex : unlabeled) data.push_back(encode_example(initial.vocab, ex));
  return train_encoded(std::move(initial), data, config, dev, on_epoch);
}

TrainResult train_encoded(ModelParameters initial, const std::vector<EncodedExample>& data, const TrainConfig& config,
                          const std::vector<LabeledExample>* dev, const EpochCallback& on_epoch) {
  config.validate();
  if (data.empty()) throw ConfigError("training needs at least one example");
  if (config.model_selection == ModelSelection::kBestDev && (!dev || dev->empty())) {
    throw ConfigError("best-dev model selection needs a nonempty dev set");
  }

  TrainResult result{std::move(initial), {}, 0};
  ModelParameters& model = result.model;
  std::vector<Tensor*> params;
  std::vector<Tensor> shapes;
  for (const auto& t : model.tensors()) {
    params.push_back(t.tensor);
    shapes.emplace_back(t.tensor->shape());
  }
  AdaDeltaState state = AdaDeltaState::zeros_like(shapes);

  std::optional<ModelParameters> best;
  double best_accuracy = -1.0;
  std::vector<Query> dev_queries;
  std::vector<std::string> dev_golds;
  if (dev) {
    dev_queries = queries_of(*dev);
    for (const LabeledExample& ex : *dev) dev_golds.push_back(ex.target_form);
  }

  std::vector<std::size_t> order(data.size());
  std::vector<EncodedExample> batch;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(config.seed, "shuffle", epoch));
    rng.shuffle(std::span<std::size_t>(order));

    double total_loss = 0.0;
    std::size_t total_symbols = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) {
        batch.push_back(data[order[i]]);
        total_symbols += data[order[i]].target.size();
      }
      LossAndGradient lg = loss_and_gradient(model, batch);
      if (!std::isfinite(lg.loss)) {
        throw TrainingError("non-finite training loss at epoch " + std::to_string(epoch) + ", batch starting at " +
                            std::to_string(start));
      }
      total_loss += lg.loss;
      if (config.grad_clip_norm) clip_global_norm(lg.grads, *config.grad_clip_norm);
      adadelta_step(state, params, lg.grads, config.adadelta_rho, config.adadelta_eps);
    }

    EpochRecord record;
    record.epoch = epoch;
    record.train_nll = total_loss / static_cast<double>(data.size());
    record.train_nll_per_symbol = total_loss / static_cast<double>(total_symbols);
    if (dev && !dev->empty()) {
      DecodeOptions opts;
      opts.threads = config.eval_threads;
      std::vector<std::string> preds;
      for (const Prediction& p : predict_all(model, dev_queries, opts)) preds.push_back(p.predicted_form);
      const Evaluation e = evaluate(preds, dev_golds);
      record.dev_accuracy = e.accuracy;
      record.dev_edit_distance = e.mean_edit_distance;
      if (config.model_selection == ModelSelection::kBestDev && e.accuracy > best_accuracy) {
        best_accuracy = e.accuracy;
        best = model;
        result.selected_epoch = epoch;
      }
    }
    result.log.push_back(record);
    if (on_epoch) on_epoch(record);
  }

  if (config.model_selection == ModelSelection::kBestDev && best) {
    result.model = std::move(*best);
  } else {
    result.selected_epoch = config.epochs;
  }
  return result;
}

}  // namespace reinflect
