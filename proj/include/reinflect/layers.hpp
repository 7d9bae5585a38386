#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "reinflect/autodiff.hpp"
#include "reinflect/tensor.hpp"

namespace reinflect {

class Rng;

// Weights of one GRU cell. Input matrices are [d_in×d_h], recurrent
// matrices [d_h×d_h], biases [d_h]; inputs multiply from the left.
struct GruCellParams {
  Tensor w_z, w_r, w_h;
  Tensor u_z, u_r, u_h;
  Tensor b_z, b_r, b_h;

  static GruCellParams zeros(std::size_t input_dim, std::size_t hidden_dim);

  std::size_t input_dim() const { return w_z.shape().at(0); }
  std::size_t hidden_dim() const { return u_z.shape().at(0); }
  // Throws DimensionError unless all nine blocks agree.
  void validate() const;

  bool operator==(const GruCellParams&) const = default;
};

// Additive attention: score_i = v · tanh(s W_s + h_i U_h).
struct AttentionParams {
  Tensor w_s;  // [d_dec×d_a]
  Tensor u_h;  // [2d_h×d_a]
  Tensor v;    // [d_a]

  static AttentionParams zeros(std::size_t decoder_dim, std::size_t encoder_dim, std::size_t attention_dim);
  void validate() const;

  bool operator==(const AttentionParams&) const = default;
};

// The same parameters placed on a graph.
struct GruCell {
  Expr w_z, w_r, w_h, u_z, u_r, u_h, b_z, b_r, b_h;

  static GruCell bind(Graph& graph, const GruCellParams& params);
};

struct Attention {
  Expr w_s, u_h, v;

  static Attention bind(Graph& graph, const AttentionParams& params);
};

// z = σ(xW_z + hU_z + b_z), r = σ(xW_r + hU_r + b_r),
// h̃ = tanh(xW_h + (r⊙h)U_h + b_h), h' = (1−z)⊙h + z⊙h̃.
Expr gru_step(const GruCell& cell, Expr h_prev, Expr x);

struct EncoderOutput {
  std::vector<Expr> forward;   // left-to-right states, one per position
  std::vector<Expr> backward;  // right-to-left states, aligned to positions
  std::vector<Expr> states;    // concat(forward[i], backward[i])
};

// Bidirectional GRU over a nonempty sequence, both directions from zero state.
EncoderOutput encode(const GruCell& fwd, const GruCell& bwd, std::span<const Expr> inputs);

// Encoder states stacked once per sequence together with their attention
// projections, so each decoder step only projects its own state.
struct AttentionMemory {
  Expr states;  // [T×2d_h]
  Expr keys;    // [T×d_a] = states · U_h
  std::size_t length = 0;
};

AttentionMemory attention_memory(const Attention& att, std::span<const Expr> encoder_states);

struct AttentionResult {
  Expr context;  // [2d_h]
  Expr weights;  // [T]
};

AttentionResult attend(const Attention& att, Expr s_prev, const AttentionMemory& memory);

struct DecoderStep {
  Expr state;    // s_t
  Expr logits;   // pre-softmax scores over output symbols
  Expr context;  // c_t
  Expr weights;  // attention weights

  Expr distribution() const { return softmax(logits); }
};

// One attentional decoder step. The readout is an affine map of
// concat(s_t, c_t, y_prev_emb) through out_w [(d_dec+2d_h+d_emb)×V_out].
DecoderStep decoder_step(const GruCell& dec, const Attention& att, const AttentionMemory& memory, Expr out_w,
                         Expr out_b, Expr s_prev, Expr y_prev_emb);

void init_uniform(Tensor& t, Rng& rng, double bound);
void init_uniform(GruCellParams& p, Rng& rng, double bound);
void init_uniform(AttentionParams& p, Rng& rng, double bound);

}  // namespace reinflect
