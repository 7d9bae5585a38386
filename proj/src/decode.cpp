#include "reinflect/decode.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>

#include "reinflect/errors.hpp"
#include "reinflect/text.hpp"

namespace reinflect {

namespace {

std::vector<double> log_softmax_values(const Tensor& logits) {
  auto x = logits.data();
  const double mx = *std::max_element(x.begin(), x.end());
  double z = 0.0;
  for (double v : x) z += std::exp(v - mx);
  const double lse = mx + std::log(z);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - lse;
  return out;
}

std::string render(const Vocabulary& vocab, const std::vector<std::size_t>& ids) {
  std::string s;
  for (std::size_t id : ids) s += vocab.output_text(id);
  return s;
}

struct Hypothesis {
  Expr state;
  std::size_t prev_input = Vocabulary::kBegin;
  std::vector<std::size_t> ids;
  double score = 0.0;
};

struct Candidate {
  std::size_t parent;
  std::size_t symbol;
  double score;
};

}  // namespace

Decoded decode_greedy(const ModelParameters& model, std::span<const std::size_t> input_ids, std::size_t max_len) {
  if (max_len < 1) throw InputError("max_len must be at least 1");
  Graph graph(false);
  const BoundModel bound = BoundModel::bind(graph, model);
  const EncodedSource src = encode_source(bound, input_ids);
  Decoded out;
  Expr state = src.initial_state;
  std::size_t prev = Vocabulary::kBegin;
  while (out.output_ids.size() < max_len) {
    const DecoderStep step = decode_step(bound, src, state, prev);
    const auto lp = log_softmax_values(step.logits.value());
    const std::size_t best = static_cast<std::size_t>(std::max_element(lp.begin(), lp.end()) - lp.begin());
    out.log_prob += lp[best];
    if (best == Vocabulary::kOutputEnd) {
      out.finished = true;
      break;
    }
    out.output_ids.push_back(best);
    state = step.state;
    prev = model.vocab.input_id_of_output(best);
  }
  out.truncated = !out.finished;
  out.text = render(model.vocab, out.output_ids);
  return out;
}

Decoded decode_beam(const ModelParameters& model, std::span<const std::size_t> input_ids, std::size_t width,
                    std::size_t max_len) {
  if (width < 1) throw InputError("beam width must be at least 1");
  if (max_len < 1) throw InputError("max_len must be at least 1");
  Graph graph(false);
  const BoundModel bound = BoundModel::bind(graph, model);
  const EncodedSource src = encode_source(bound, input_ids);

  std::vector<Hypothesis> beam{{src.initial_state, Vocabulary::kBegin, {}, 0.0}};
  std::vector<Hypothesis> finished;
  for (std::size_t t = 0; t < max_len && !beam.empty(); ++t) {
    std::vector<Candidate> candidates;
    std::vector<Expr> states;
    for (std::size_t h = 0; h < beam.size(); ++h) {
      const DecoderStep step = decode_step(bound, src, beam[h].state, beam[h].prev_input);
      const auto lp = log_softmax_values(step.logits.value());
      states.push_back(step.state);
      for (std::size_t y = 0; y < lp.size(); ++y) candidates.push_back({h, y, beam[h].score + lp[y]});
    }
    const std::size_t keep = std::min(width, candidates.size());
    // Candidates are generated in (parent, symbol) order, so a stable partial
    // ordering by score keeps the lowest parent rank and symbol id on ties.
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& a, const Candidate& b) { return a.score > b.score; });
    std::vector<Hypothesis> next;
    for (std::size_t i = 0; i < keep; ++i) {
      const Candidate& c = candidates[i];
      Hypothesis h{states[c.parent], model.vocab.input_id_of_output(c.symbol), beam[c.parent].ids, c.score};
      if (c.symbol == Vocabulary::kOutputEnd) {
        finished.push_back(std::move(h));
      } else {
        h.ids.push_back(c.symbol);
        next.push_back(std::move(h));
      }
    }
    beam = std::move(next);
  }

  Decoded out;
  const Hypothesis* best = nullptr;
  bool best_finished = false;
  for (const Hypothesis& h : finished) {
    if (!best || h.score > best->score) {
      best = &h;
      best_finished = true;
    }
  }
  for (const Hypothesis& h : beam) {
    if (!best || h.score > best->score) {
      best = &h;
      best_finished = false;
    }
  }
  out.output_ids = best->ids;
  out.log_prob = best->score;
  out.finished = best_finished;
  out.truncated = !best_finished;
  out.text = render(model.vocab, out.output_ids);
  return out;
}

double sequence_log_prob(const ModelParameters& model, std::span<const std::size_t> input_ids,
                         std::span<const std::size_t> output_ids, bool terminate) {
  Graph graph(false);
  const BoundModel bound = BoundModel::bind(graph, model);
  const EncodedSource src = encode_source(bound, input_ids);
  std::vector<std::size_t> seq(output_ids.begin(), output_ids.end());
  if (terminate) seq.push_back(Vocabulary::kOutputEnd);
  double total = 0.0;
  Expr state = src.initial_state;
  std::size_t prev = Vocabulary::kBegin;
  for (std::size_t y : seq) {
    const DecoderStep step = decode_step(bound, src, state, prev);
    total += log_softmax_values(step.logits.value()).at(y);
    state = step.state;
    prev = model.vocab.input_id_of_output(y);
  }
  return total;
}

std::size_t default_max_len(const std::string& source_form) { return code_points(source_form).size() + 10; }

Prediction predict(const ModelParameters& model, const Query& query, const DecodeOptions& options) {
  const LabeledExample ex{query.source_form, query.target_tag, {}};
  const auto input = encode_input(model.vocab, ex);
  const std::size_t max_len = options.max_len.value_or(default_max_len(query.source_form));
  const Decoded d = options.beam_width <= 1 ? decode_greedy(model, input, max_len)
                                            : decode_beam(model, input, options.beam_width, max_len);
  return {query.source_form, query.target_tag, d.text, d.truncated};
}

std::vector<Prediction> predict_all(const ModelParameters& model, const std::vector<Query>& queries,
                                    const DecodeOptions& options) {
  std::vector<Prediction> out(queries.size());
  const std::size_t workers = std::max<std::size_t>(1, std::min(options.threads, queries.size()));
  if (workers == 1) {
    for (std::size_t i = 0; i < queries.size(); ++i) out[i] = predict(model, queries[i], options);
    return out;
  }
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < queries.size(); i += workers) out[i] = predict(model, queries[i], options);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

std::vector<Query> queries_of(const std::vector<LabeledExample>& examples) {
  std::vector<Query> out;
  out.reserve(examples.size());
  for (const LabeledExample& ex : examples) out.push_back({ex.source_form, ex.target_tag});
  return out;
}

}  // namespace reinflect
