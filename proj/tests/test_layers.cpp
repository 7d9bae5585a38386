#include <doctest.h>

#include "reinflect/errors.hpp"
#include "reinflect/layers.hpp"
#include "reinflect/rng.hpp"
#include "support/gradcheck.hpp"

using namespace reinflect;
using reinflect::testing::max_gradient_error;
using reinflect::testing::project;
using reinflect::testing::random_tensor;

namespace {

GruCellParams random_gru(std::size_t d_in, std::size_t d_h, Rng& rng, double bound = 0.5) {
  GruCellParams p = GruCellParams::zeros(d_in, d_h);
  for (Tensor* t : {&p.w_z, &p.w_r, &p.w_h, &p.u_z, &p.u_r, &p.u_h, &p.b_z, &p.b_r, &p.b_h}) {
    *t = random_tensor(t->shape(), rng, bound);
  }
  return p;
}

std::vector<Tensor> blocks(const GruCellParams& p) {
  return {p.w_z, p.w_r, p.w_h, p.u_z, p.u_r, p.u_h, p.b_z, p.b_r, p.b_h};
}

GruCell cell_from(const std::vector<Expr>& x, std::size_t at) {
  return GruCell{x[at], x[at + 1], x[at + 2], x[at + 3], x[at + 4], x[at + 5], x[at + 6], x[at + 7], x[at + 8]};
}

}  // namespace

TEST_CASE("GRU step gradient with respect to all nine blocks, state and input") {
  Rng rng(5);
  double worst = 0.0;
  for (int n = 0; n < 50; ++n) {
    std::vector<Tensor> inputs = blocks(random_gru(3, 4, rng));
    inputs.push_back(random_tensor({4}, rng));  // h_prev
    inputs.push_back(random_tensor({3}, rng));  // x
    const auto f = [](Graph&, const std::vector<Expr>& x) { return project(gru_step(cell_from(x, 0), x[9], x[10]), 3); };
    worst = std::max(worst, max_gradient_error(f, inputs));
  }
  CHECK(worst <= 1e-6);
}

TEST_CASE("GRU with zero parameters halves the state") {
  Graph g;
  const GruCellParams p = GruCellParams::zeros(2, 3);
  const GruCell cell = GruCell::bind(g, p);
  const Expr h = gru_step(cell, g.constant(Tensor::vector({0.4, -0.8, 1.0})), g.constant(Tensor::vector({1, 2})));
  CHECK(h.value()[0] == doctest::Approx(0.2));
  CHECK(h.value()[1] == doctest::Approx(-0.4));
  CHECK(h.value()[2] == doctest::Approx(0.5));
}

TEST_CASE("GRU states stay within [-1, 1] from a zero start") {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    Graph g(false);
    const GruCellParams p = random_gru(4, 6, rng, 3.0);
    const GruCell cell = GruCell::bind(g, p);
    Expr h = g.constant(Tensor({6}));
    for (int step = 0; step < 100; ++step) {
      h = gru_step(cell, h, g.constant(random_tensor({4}, rng, 10.0)));
      for (double v : h.value().data()) {
        CHECK(v >= -1.0);
        CHECK(v <= 1.0);
      }
    }
  }
}

TEST_CASE("bidirectional encoder layout") {
  Rng rng(8);
  Graph g(false);
  const GruCellParams fp = random_gru(2, 3, rng), bp = random_gru(2, 3, rng);
  const GruCell fwd = GruCell::bind(g, fp), bwd = GruCell::bind(g, bp);
  std::vector<Expr> xs;
  for (int i = 0; i < 4; ++i) xs.push_back(g.constant(random_tensor({2}, rng)));
  const EncoderOutput enc = encode(fwd, bwd, xs);
  REQUIRE(enc.states.size() == 4);
  CHECK(enc.states[0].value().shape() == Tensor::Shape{6});

  const Expr zero = g.constant(Tensor({3}));
  // The first forward state and the last backward state each see one symbol.
  CHECK(enc.forward[0].value() == gru_step(fwd, zero, xs[0]).value());
  CHECK(enc.backward[3].value() == gru_step(bwd, zero, xs[3]).value());
  CHECK(enc.backward[2].value() == gru_step(bwd, enc.backward[3], xs[2]).value());
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(enc.states[1].value()[i] == enc.forward[1].value()[i]);
    CHECK(enc.states[1].value()[3 + i] == enc.backward[1].value()[i]);
  }
  CHECK_THROWS_AS(encode(fwd, bwd, {}), InputError);
}

TEST_CASE("encoder width with hidden size 100") {
  Graph g(false);
  const GruCellParams p = GruCellParams::zeros(5, 100);
  const GruCell cell = GruCell::bind(g, p);
  const std::vector<Expr> xs{g.constant(Tensor({5}))};
  CHECK(encode(cell, cell, xs).states[0].value().size() == 200);
}

TEST_CASE("attention with zero scoring parameters is uniform") {
  Rng rng(2);
  Graph g(false);
  const AttentionParams p = AttentionParams::zeros(3, 4, 5);
  const Attention att = Attention::bind(g, p);
  std::vector<Expr> states;
  for (int i = 0; i < 4; ++i) states.push_back(g.constant(random_tensor({4}, rng)));
  const AttentionMemory mem = attention_memory(att, states);
  const AttentionResult r = attend(att, g.constant(random_tensor({3}, rng)), mem);
  for (std::size_t i = 0; i < 4; ++i) CHECK(r.weights.value()[i] == doctest::Approx(0.25));
  for (std::size_t j = 0; j < 4; ++j) {
    double mean = 0.0;
    for (const Expr& s : states) mean += s.value()[j] / 4.0;
    CHECK(r.context.value()[j] == doctest::Approx(mean));
  }
}

TEST_CASE("attention weights form a distribution") {
  Rng rng(3);
  for (int n = 0; n < 20; ++n) {
    Graph g(false);
    AttentionParams p = AttentionParams::zeros(3, 4, 5);
    init_uniform(p, rng, 2.0);
    const Attention att = Attention::bind(g, p);
    std::vector<Expr> states;
    const std::size_t len = 1 + rng.below(6);
    for (std::size_t i = 0; i < len; ++i) states.push_back(g.constant(random_tensor({4}, rng)));
    const AttentionResult r = attend(att, g.constant(random_tensor({3}, rng)), attention_memory(att, states));
    double total = 0.0;
    for (double w : r.weights.value().data()) {
      CHECK(w >= 0.0);
      total += w;
    }
    CHECK(total == doctest::Approx(1.0));
  }
}

TEST_CASE("decoder step with zero readout gives a uniform distribution") {
  Rng rng(4);
  Graph g(false);
  GruCellParams dp = random_gru(2 + 4, 3, rng);
  AttentionParams ap = AttentionParams::zeros(3, 4, 2);
  init_uniform(ap, rng, 0.5);
  const GruCell dec = GruCell::bind(g, dp);
  const Attention att = Attention::bind(g, ap);
  const std::vector<Expr> states{g.constant(random_tensor({4}, rng)), g.constant(random_tensor({4}, rng))};
  const AttentionMemory mem = attention_memory(att, states);
  const std::size_t v_out = 7;
  const DecoderStep step = decoder_step(dec, att, mem, g.constant(Tensor({3 + 4 + 2, v_out})),
                                        g.constant(Tensor({v_out})), g.constant(random_tensor({3}, rng)),
                                        g.constant(random_tensor({2}, rng)));
  for (double p : step.distribution().value().data()) CHECK(p == doctest::Approx(1.0 / v_out));
}

TEST_CASE("decoder step gradient of -log p[k] for every block") {
  Rng rng(6);
  const std::size_t d_emb = 2, d_enc = 4, d_dec = 3, d_att = 2, v_out = 5, len = 3;
  double worst = 0.0;
  for (int n = 0; n < 10; ++n) {
    std::vector<Tensor> in = blocks(random_gru(d_emb + d_enc, d_dec, rng));
    in.push_back(random_tensor({d_dec, d_att}, rng));          // 9 w_s
    in.push_back(random_tensor({d_enc, d_att}, rng));          // 10 u_h
    in.push_back(random_tensor({d_att}, rng));                 // 11 v
    in.push_back(random_tensor({d_dec + d_enc + d_emb, v_out}, rng));  // 12 out_w
    in.push_back(random_tensor({v_out}, rng));                 // 13 out_b
    in.push_back(random_tensor({d_dec}, rng));                 // 14 s_prev
    in.push_back(random_tensor({d_emb}, rng));                 // 15 y_prev_emb
    for (std::size_t i = 0; i < len; ++i) in.push_back(random_tensor({d_enc}, rng));
    const std::size_t k = rng.below(v_out);
    const auto f = [&](Graph&, const std::vector<Expr>& x) {
      const Attention att{x[9], x[10], x[11]};
      const std::vector<Expr> states(x.begin() + 16, x.end());
      const DecoderStep step = decoder_step(cell_from(x, 0), att, attention_memory(att, states), x[12], x[13], x[14],
                                            x[15]);
      return neg_log_softmax(step.logits, k);
    };
    worst = std::max(worst, max_gradient_error(f, in));
  }
  CHECK(worst <= 1e-4);
}

TEST_CASE("parameter validation and initialization") {
  GruCellParams p = GruCellParams::zeros(3, 4);
  CHECK_NOTHROW(p.validate());
  p.u_r = Tensor({4, 5});
  CHECK_THROWS_AS(p.validate(), DimensionError);

  AttentionParams a = AttentionParams::zeros(3, 4, 5);
  CHECK_NOTHROW(a.validate());
  a.v = Tensor({4});
  CHECK_THROWS_AS(a.validate(), DimensionError);

  Rng rng(1);
  GruCellParams q = GruCellParams::zeros(3, 4);
  init_uniform(q, rng, 0.1);
  for (const Tensor* t : {&q.w_z, &q.u_h}) {
    bool nonzero = false;
    for (double v : t->data()) {
      CHECK(std::abs(v) <= 0.1);
      nonzero = nonzero || v != 0.0;
    }
    CHECK(nonzero);
  }
  for (const Tensor* t : {&q.b_z, &q.b_r, &q.b_h})
    for (double v : t->data()) CHECK(v == 0.0);
}
