#include "reinflect/model.hpp"

#include "reinflect/errors.hpp"
#include "reinflect/rng.hpp"
#include "reinflect/text.hpp"

namespace reinflect {

namespace {

constexpr double kInitBound = 0.1;

template <typename Model, typename Out>
void collect(Model& m, Out& out) {
  out.push_back({"embedding", &m.embedding});
  const auto gru = [&](auto& p, const char* names[9]) {
    std::size_t i = 0;
    for (auto* t : {&p.w_z, &p.w_r, &p.w_h, &p.u_z, &p.u_r, &p.u_h, &p.b_z, &p.b_r, &p.b_h}) {
      out.push_back({names[i++], t});
    }
  };
  const char* fwd[9] = {"encoder_fwd.w_z", "encoder_fwd.w_r", "encoder_fwd.w_h",
                        "encoder_fwd.u_z", "encoder_fwd.u_r", "encoder_fwd.u_h",
                        "encoder_fwd.b_z", "encoder_fwd.b_r", "encoder_fwd.b_h"};
  const char* bwd[9] = {"encoder_bwd.w_z", "encoder_bwd.w_r", "encoder_bwd.w_h",
                        "encoder_bwd.u_z", "encoder_bwd.u_r", "encoder_bwd.u_h",
                        "encoder_bwd.b_z", "encoder_bwd.b_r", "encoder_bwd.b_h"};
  const char* dec[9] = {"decoder.w_z", "decoder.w_r", "decoder.w_h", "decoder.u_z", "decoder.u_r",
                        "decoder.u_h", "decoder.b_z", "decoder.b_r", "decoder.b_h"};
  gru(m.encoder_fwd, fwd);
  gru(m.encoder_bwd, bwd);
  gru(m.decoder, dec);
  out.push_back({"attention.w_s", &m.attention.w_s});
  out.push_back({"attention.u_h", &m.attention.u_h});
  out.push_back({"attention.v", &m.attention.v});
  out.push_back({"init_w", &m.init_w});
  out.push_back({"init_b", &m.init_b});
  out.push_back({"out_w", &m.out_w});
  out.push_back({"out_b", &m.out_b});
}

}  // namespace

ModelParameters ModelParameters::zeros(Vocabulary vocab, Hyperparameters hyper) {
  if (hyper.embed_dim == 0 || hyper.hidden_dim == 0 || hyper.decoder_dim == 0 || hyper.attention_dim == 0) {
    throw ConfigError("all model dimensions must be positive");
  }
  ModelParameters m;
  const std::size_t enc = 2 * hyper.hidden_dim;
  const std::size_t v_in = vocab.input_size();
  const std::size_t v_out = vocab.output_size();
  m.embedding = Tensor({v_in, hyper.embed_dim});
  m.encoder_fwd = GruCellParams::zeros(hyper.embed_dim, hyper.hidden_dim);
  m.encoder_bwd = GruCellParams::zeros(hyper.embed_dim, hyper.hidden_dim);
  m.decoder = GruCellParams::zeros(hyper.embed_dim + enc, hyper.decoder_dim);
  m.attention = AttentionParams::zeros(hyper.decoder_dim, enc, hyper.attention_dim);
  m.init_w = Tensor({hyper.hidden_dim, hyper.decoder_dim});
  m.init_b = Tensor({hyper.decoder_dim});
  m.out_w = Tensor({hyper.decoder_dim + enc + hyper.embed_dim, v_out});
  m.out_b = Tensor({v_out});
  m.vocab = std::move(vocab);
  m.hyper = hyper;
  return m;
}

ModelParameters ModelParameters::initialize(Vocabulary vocab, Hyperparameters hyper, std::uint64_t seed) {
  ModelParameters m = zeros(std::move(vocab), hyper);
  Rng rng(seed);
  init_uniform(m.embedding, rng, kInitBound);
  init_uniform(m.encoder_fwd, rng, kInitBound);
  init_uniform(m.encoder_bwd, rng, kInitBound);
  init_uniform(m.decoder, rng, kInitBound);
  init_uniform(m.attention, rng, kInitBound);
  init_uniform(m.init_w, rng, kInitBound);
  init_uniform(m.out_w, rng, kInitBound);
  return m;
}

std::vector<NamedTensor> ModelParameters::tensors() {
  std::vector<NamedTensor> out;
  collect(*this, out);
  return out;
}

std::vector<ConstNamedTensor> ModelParameters::tensors() const {
  std::vector<ConstNamedTensor> out;
  collect(*this, out);
  return out;
}

std::size_t ModelParameters::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors()) n += t.tensor->size();
  return n;
}

BoundModel BoundModel::bind(Graph& graph, const ModelParameters& params) {
  BoundModel b;
  b.params = &params;
  b.embedding = graph.parameter(params.embedding);
  b.encoder_fwd = GruCell::bind(graph, params.encoder_fwd);
  b.encoder_bwd = GruCell::bind(graph, params.encoder_bwd);
  b.decoder = GruCell::bind(graph, params.decoder);
  b.attention = Attention::bind(graph, params.attention);
  b.init_w = graph.parameter(params.init_w);
  b.init_b = graph.parameter(params.init_b);
  b.out_w = graph.parameter(params.out_w);
  b.out_b = graph.parameter(params.out_b);

  b.leaves.push_back(b.embedding);
  for (const GruCell* c : {&b.encoder_fwd, &b.encoder_bwd, &b.decoder}) {
    for (const Expr& e : {c->w_z, c->w_r, c->w_h, c->u_z, c->u_r, c->u_h, c->b_z, c->b_r, c->b_h}) {
      b.leaves.push_back(e);
    }
  }
  for (const Expr& e : {b.attention.w_s, b.attention.u_h, b.attention.v, b.init_w, b.init_b, b.out_w, b.out_b}) {
    b.leaves.push_back(e);
  }
  return b;
}

std::vector<std::size_t> encode_input(const Vocabulary& vocab, const LabeledExample& ex) {
  std::vector<std::size_t> ids{Vocabulary::kBegin};
  for (const std::string& subtag : ex.target_tag) ids.push_back(vocab.subtag_id(subtag));
  for (const std::string& ch : code_points(ex.source_form)) ids.push_back(vocab.char_id(ch));
  ids.push_back(Vocabulary::kEnd);
  return ids;
}

std::vector<std::size_t> encode_input(const Vocabulary& vocab, const UnlabeledExample& ex) {
  std::vector<std::size_t> ids{Vocabulary::kBegin, Vocabulary::kAutoencode};
  for (const std::string& ch : code_points(ex.word)) ids.push_back(vocab.char_id(ch));
  ids.push_back(Vocabulary::kEnd);
  return ids;
}

std::vector<std::size_t> target_ids(const Vocabulary& vocab, std::string_view form) {
  std::vector<std::size_t> ids;
  for (const std::string& ch : code_points(form)) {
    const auto id = vocab.output_char_id(ch);
    if (!id) throw DataError("target form '" + std::string(form) + "' contains character '" + ch +
                             "' outside the alphabet");
    ids.push_back(*id);
  }
  ids.push_back(Vocabulary::kOutputEnd);
  return ids;
}

EncodedExample encode_example(const Vocabulary& vocab, const LabeledExample& ex) {
  return {encode_input(vocab, ex), target_ids(vocab, ex.target_form), true};
}

EncodedExample encode_example(const Vocabulary& vocab, const UnlabeledExample& ex) {
  return {encode_input(vocab, ex), target_ids(vocab, ex.word), false};
}

EncodedSource encode_source(const BoundModel& model, std::span<const std::size_t> input_ids) {
  if (input_ids.empty()) throw InputError("empty input sequence");
  std::vector<Expr> embedded;
  embedded.reserve(input_ids.size());
  for (std::size_t id : input_ids) embedded.push_back(lookup(model.embedding, id));
  EncodedSource src;
  src.encoder = encode(model.encoder_fwd, model.encoder_bwd, embedded);
  src.memory = attention_memory(model.attention, src.encoder.states);
  src.initial_state = tanh(add(matmul(src.encoder.backward.front(), model.init_w), model.init_b));
  return src;
}

DecoderStep decode_step(const BoundModel& model, const EncodedSource& source, Expr s_prev,
                        std::size_t prev_input_id) {
  return decoder_step(model.decoder, model.attention, source.memory, model.out_w, model.out_b, s_prev,
                      lookup(model.embedding, prev_input_id));
}

Expr example_nll(const BoundModel& model, std::span<const std::size_t> input_ids,
                 std::span<const std::size_t> target) {
  if (target.empty()) throw InputError("empty target sequence");
  const EncodedSource src = encode_source(model, input_ids);
  std::vector<Expr> terms;
  terms.reserve(target.size());
  Expr state = src.initial_state;
  std::size_t prev = Vocabulary::kBegin;
  for (std::size_t y : target) {
    const DecoderStep step = decode_step(model, src, state, prev);
    terms.push_back(neg_log_softmax(step.logits, y));
    state = step.state;
    prev = model.params->vocab.input_id_of_output(y);
  }
  return add_n(terms);
}

Expr batch_loss(const BoundModel& model, std::span<const EncodedExample> batch) {
  if (batch.empty()) throw InputError("empty batch");
  std::vector<Expr> losses;
  losses.reserve(batch.size());
  for (const EncodedExample& ex : batch) losses.push_back(example_nll(model, ex.input, ex.target));
  return add_n(losses);
}

}  // namespace reinflect
