#include "reinflect/layers.hpp"

#include <array>
#include <string>

#include "reinflect/errors.hpp"
#include "reinflect/rng.hpp"

namespace reinflect {

namespace {

void expect_shape(const char* what, const Tensor& t, const Tensor::Shape& shape) {
  if (t.shape() != shape) {
    throw DimensionError(std::string(what) + ": expected " + shape_string(shape) + ", got " +
                         shape_string(t.shape()));
  }
}

Expr gate(Expr x, Expr w, Expr h, Expr u, Expr b) {
  const Expr terms[] = {matmul(x, w), matmul(h, u), b};
  return add_n(terms);
}

}  // namespace

GruCellParams GruCellParams::zeros(std::size_t input_dim, std::size_t hidden_dim) {
  const Tensor w({input_dim, hidden_dim});
  const Tensor u({hidden_dim, hidden_dim});
  const Tensor b({hidden_dim});
  return {w, w, w, u, u, u, b, b, b};
}

void GruCellParams::validate() const {
  if (w_z.rank() != 2 || u_z.rank() != 2) throw DimensionError("GRU weights must be matrices");
  const std::size_t d_in = w_z.shape()[0];
  const std::size_t d_h = w_z.shape()[1];
  for (const Tensor* w : {&w_z, &w_r, &w_h}) expect_shape("GRU input weight", *w, {d_in, d_h});
  for (const Tensor* u : {&u_z, &u_r, &u_h}) expect_shape("GRU recurrent weight", *u, {d_h, d_h});
  for (const Tensor* b : {&b_z, &b_r, &b_h}) expect_shape("GRU bias", *b, {d_h});
}

AttentionParams AttentionParams::zeros(std::size_t decoder_dim, std::size_t encoder_dim,
                                       std::size_t attention_dim) {
  return {Tensor({decoder_dim, attention_dim}), Tensor({encoder_dim, attention_dim}), Tensor({attention_dim})};
}

void AttentionParams::validate() const {
  if (w_s.rank() != 2 || u_h.rank() != 2 || v.rank() != 1) throw DimensionError("attention parameter ranks");
  const std::size_t d_a = v.size();
  if (d_a == 0) throw DimensionError("attention size must be positive");
  expect_shape("attention W_s", w_s, {w_s.shape()[0], d_a});
  expect_shape("attention U_h", u_h, {u_h.shape()[0], d_a});
}

GruCell GruCell::bind(Graph& graph, const GruCellParams& p) {
  p.validate();
  return {graph.parameter(p.w_z), graph.parameter(p.w_r), graph.parameter(p.w_h),
          graph.parameter(p.u_z), graph.parameter(p.u_r), graph.parameter(p.u_h),
          graph.parameter(p.b_z), graph.parameter(p.b_r), graph.parameter(p.b_h)};
}

Attention Attention::bind(Graph& graph, const AttentionParams& p) {
  p.validate();
  return {graph.parameter(p.w_s), graph.parameter(p.u_h), graph.parameter(p.v)};
}

Expr gru_step(const GruCell& cell, Expr h_prev, Expr x) {
  const Expr z = sigmoid(gate(x, cell.w_z, h_prev, cell.u_z, cell.b_z));
  const Expr r = sigmoid(gate(x, cell.w_r, h_prev, cell.u_r, cell.b_r));
  const Expr candidate = tanh(gate(x, cell.w_h, mul(r, h_prev), cell.u_h, cell.b_h));
  return add(mul(one_minus(z), h_prev), mul(z, candidate));
}

EncoderOutput encode(const GruCell& fwd, const GruCell& bwd, std::span<const Expr> inputs) {
  if (inputs.empty()) throw InputError("encode: empty input sequence");
  Graph& g = inputs.front().graph();
  const std::size_t n = inputs.size();
  EncoderOutput out;
  out.forward.reserve(n);
  out.backward.resize(n);
  out.states.reserve(n);

  Expr h = g.constant(Tensor({fwd.u_z.value().shape()[0]}));
  for (const Expr& x : inputs) {
    h = gru_step(fwd, h, x);
    out.forward.push_back(h);
  }
  h = g.constant(Tensor({bwd.u_z.value().shape()[0]}));
  for (std::size_t i = n; i-- > 0;) {
    h = gru_step(bwd, h, inputs[i]);
    out.backward[i] = h;
  }
  for (std::size_t i = 0; i < n; ++i) out.states.push_back(concat(out.forward[i], out.backward[i]));
  return out;
}

AttentionMemory attention_memory(const Attention& att, std::span<const Expr> encoder_states) {
  if (encoder_states.empty()) throw InputError("attend: no encoder states");
  AttentionMemory memory;
  memory.states = stack_rows(encoder_states);
  memory.keys = matmul(memory.states, att.u_h);
  memory.length = encoder_states.size();
  return memory;
}

AttentionResult attend(const Attention& att, Expr s_prev, const AttentionMemory& memory) {
  if (memory.length == 0) throw InputError("attend: no encoder states");
  const Expr query = matmul(s_prev, att.w_s);
  const Expr scores = matmul(tanh(add_row_broadcast(memory.keys, query)), att.v);
  const Expr weights = softmax(scores);
  return {matmul(weights, memory.states), weights};
}

DecoderStep decoder_step(const GruCell& dec, const Attention& att, const AttentionMemory& memory, Expr out_w,
                         Expr out_b, Expr s_prev, Expr y_prev_emb) {
  const AttentionResult a = attend(att, s_prev, memory);
  const Expr state = gru_step(dec, s_prev, concat(y_prev_emb, a.context));
  const Expr readout = concat(concat(state, a.context), y_prev_emb);
  const Expr logits = add(matmul(readout, out_w), out_b);
  return {state, logits, a.context, a.weights};
}

void init_uniform(Tensor& t, Rng& rng, double bound) {
  for (double& v : t.data()) v = rng.uniform(-bound, bound);
}

void init_uniform(GruCellParams& p, Rng& rng, double bound) {
  for (Tensor* t : {&p.w_z, &p.w_r, &p.w_h, &p.u_z, &p.u_r, &p.u_h}) init_uniform(*t, rng, bound);
  for (Tensor* t : {&p.b_z, &p.b_r, &p.b_h}) t->fill(0.0);
}

void init_uniform(AttentionParams& p, Rng& rng, double bound) {
  for (Tensor* t : {&p.w_s, &p.u_h, &p.v}) init_uniform(*t, rng, bound);
}

}  // namespace reinflect
