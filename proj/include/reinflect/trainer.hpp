#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "reinflect/example.hpp"
#include "reinflect/model.hpp"
#include "reinflect/tensor.hpp"

namespace reinflect {

enum class ModelSelection { kLast, kBestDev };

struct TrainConfig {
  std::size_t batch_size = 20;
  std::size_t epochs = 200;
  std::uint64_t seed = 1;
  double adadelta_rho = 0.95;
  double adadelta_eps = 1e-6;
  std::optional<double> grad_clip_norm = 5.0;
  ModelSelection model_selection = ModelSelection::kLast;
  std::size_t eval_threads = 1;

  // Throws ConfigError on an invalid field.
  void validate() const;
};

// Running averages E[g²] and E[Δx²], one pair per parameter tensor.
struct AdaDeltaState {
  std::vector<Tensor> mean_sq_grad;
  std::vector<Tensor> mean_sq_update;

  static AdaDeltaState zeros_like(const std::vector<Tensor>& params);
};

// E[g²] ← ρE[g²] + (1−ρ)g²;  Δ = −√(E[Δx²]+ε)/√(E[g²]+ε)·g;
// E[Δx²] ← ρE[Δx²] + (1−ρ)Δ²;  x ← x + Δ.
void adadelta_step(AdaDeltaState& state, std::span<Tensor* const> params, std::span<const Tensor> grads, double rho,
                   double eps);

// Rescales to at most max_norm in global L2 norm; returns the norm before clipping.
double clip_global_norm(std::span<Tensor> grads, double max_norm);

// 200 epochs for fractions ≥ 1/8, 400 for 1/16, 800 for 1/32.
std::size_t epochs_for_fraction(double fraction);
// Parses "1", "1/4", "0.25", ... into a fraction.
double parse_fraction(const std::string& text);

struct EpochRecord {
  std::size_t epoch = 0;                  // 1-based
  double train_nll = 0.0;                 // mean per example
  double train_nll_per_symbol = 0.0;      // mean per target symbol
  std::optional<double> dev_accuracy;
  std::optional<double> dev_edit_distance;

  // One line-delimited JSON record.
  std::string to_json() const;
};

struct TrainResult {
  ModelParameters model;
  std::vector<EpochRecord> log;
  std::size_t selected_epoch = 0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Minimizes the summed negative log-likelihood of both tasks. Each epoch
// shuffles labeled ∪ unlabeled with a per-epoch seed and cuts the result into
// mixed batches. An empty unlabeled set is purely supervised training.
TrainResult train(ModelParameters initial, const std::vector<LabeledExample>& labeled,
                  const std::vector<UnlabeledExample>& unlabeled, const TrainConfig& config,
                  const std::vector<LabeledExample>* dev = nullptr, const EpochCallback& on_epoch = {});

// The loop behind train() on already encoded examples of either task; `data`
// must be nonempty. Suits pure autoencoding runs.
TrainResult train_encoded(ModelParameters initial, const std::vector<EncodedExample>& data, const TrainConfig& config,
                          const std::vector<LabeledExample>* dev = nullptr, const EpochCallback& on_epoch = {});

// Gradient of batch_loss for every parameter tensor, in ModelParameters::tensors() order.
struct LossAndGradient {
  double loss = 0.0;
  std::vector<Tensor> grads;
};

LossAndGradient loss_and_gradient(const ModelParameters& model, std::span<const EncodedExample> batch);

}  // namespace reinflect
