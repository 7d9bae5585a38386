#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "reinflect/autodiff.hpp"
#include "reinflect/example.hpp"
#include "reinflect/layers.hpp"
#include "reinflect/tensor.hpp"
#include "reinflect/vocabulary.hpp"

namespace reinflect {

struct Hyperparameters {
  std::size_t embed_dim = 300;
  std::size_t hidden_dim = 100;     // per encoder direction
  std::size_t decoder_dim = 100;
  std::size_t attention_dim = 100;

  bool operator==(const Hyperparameters&) const = default;
};

struct NamedTensor {
  std::string_view name;
  Tensor* tensor;
};

struct ConstNamedTensor {
  std::string_view name;
  const Tensor* tensor;
};

// Every trainable weight of the encoder-decoder, shared by the reinflection
// and autoencoding tasks, together with the vocabulary they index.
struct ModelParameters {
  Vocabulary vocab;
  Hyperparameters hyper;

  Tensor embedding;  // [V_in×d_emb], also embeds the previous output symbol
  GruCellParams encoder_fwd;
  GruCellParams encoder_bwd;
  GruCellParams decoder;  // input is concat(y_prev_emb, c_t)
  AttentionParams attention;
  Tensor init_w;  // [d_h×d_dec], s_0 = tanh(←h_1 · init_w + init_b)
  Tensor init_b;  // [d_dec]
  Tensor out_w;   // [(d_dec+2d_h+d_emb)×V_out]
  Tensor out_b;   // [V_out]

  // Weights uniform in [-0.1, 0.1], biases zero.
  static ModelParameters initialize(Vocabulary vocab, Hyperparameters hyper, std::uint64_t seed);
  // Zero-filled parameters with the right shapes.
  static ModelParameters zeros(Vocabulary vocab, Hyperparameters hyper);

  // Fixed-order list of every trainable tensor with a stable name.
  std::vector<NamedTensor> tensors();
  std::vector<ConstNamedTensor> tensors() const;
  std::size_t parameter_count() const;

  bool operator==(const ModelParameters&) const = default;
};

// Model parameters placed on a graph as leaves.
struct BoundModel {
  const ModelParameters* params = nullptr;
  Expr embedding;
  GruCell encoder_fwd, encoder_bwd, decoder;
  Attention attention;
  Expr init_w, init_b, out_w, out_b;
  std::vector<Expr> leaves;  // same order as ModelParameters::tensors()

  static BoundModel bind(Graph& graph, const ModelParameters& params);
};

// B, then the subtags (or A for autoencoding), the word's characters, E.
// Symbols missing from the vocabulary become UNK.
std::vector<std::size_t> encode_input(const Vocabulary& vocab, const LabeledExample& ex);
std::vector<std::size_t> encode_input(const Vocabulary& vocab, const UnlabeledExample& ex);

// Output ids of the form's characters followed by E. Throws DataError on a
// character outside the output vocabulary.
std::vector<std::size_t> target_ids(const Vocabulary& vocab, std::string_view form);

struct EncodedExample {
  std::vector<std::size_t> input;
  std::vector<std::size_t> target;
  bool labeled = true;
};

EncodedExample encode_example(const Vocabulary& vocab, const LabeledExample& ex);
// Autoencoding: the word is both the (A-marked) input and the target.
EncodedExample encode_example(const Vocabulary& vocab, const UnlabeledExample& ex);

// Encoder pass plus the decoder's initial state for one input sequence.
struct EncodedSource {
  EncoderOutput encoder;
  AttentionMemory memory;
  Expr initial_state;
};

EncodedSource encode_source(const BoundModel& model, std::span<const std::size_t> input_ids);

// Decoder step fed with the embedding of input-vocabulary symbol prev_input_id.
DecoderStep decode_step(const BoundModel& model, const EncodedSource& source, Expr s_prev,
                        std::size_t prev_input_id);

// Teacher-forced -Σ log p(y_t | y_<t, x); the first decoder input is B.
Expr example_nll(const BoundModel& model, std::span<const std::size_t> input_ids,
                 std::span<const std::size_t> target_ids);

// Sum of example_nll over a nonempty mixed batch.
Expr batch_loss(const BoundModel& model, std::span<const EncodedExample> batch);

}  // namespace reinflect
