#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "reinflect/example.hpp"
#include "reinflect/model.hpp"

namespace reinflect {

struct Decoded {
  std::vector<std::size_t> output_ids;  // characters only, E excluded
  std::string text;
  double log_prob = 0.0;   // includes E's log-probability when finished
  bool finished = false;   // E was emitted
  bool truncated = false;  // stopped at max_len without E
};

// Argmax at every step until E or max_len characters; ties go to the lowest id.
Decoded decode_greedy(const ModelParameters& model, std::span<const std::size_t> input_ids, std::size_t max_len);

// Beam search over summed log-probabilities. Hypotheses that emit E leave the
// beam and compete with the others by total score; width 1 is greedy.
Decoded decode_beam(const ModelParameters& model, std::span<const std::size_t> input_ids, std::size_t width,
                    std::size_t max_len);

// Per-step log-probabilities along a fixed character sequence, E appended
// unless `terminate` is false.
double sequence_log_prob(const ModelParameters& model, std::span<const std::size_t> input_ids,
                         std::span<const std::size_t> output_ids, bool terminate = true);

// Source length in characters + 10.
std::size_t default_max_len(const std::string& source_form);

struct DecodeOptions {
  std::size_t beam_width = 1;
  std::optional<std::size_t> max_len;
  std::size_t threads = 1;
};

struct Query {
  std::string source_form;
  std::vector<std::string> target_tag;
};

struct Prediction {
  std::string source_form;
  std::vector<std::string> target_tag;
  std::string predicted_form;
  bool truncated = false;
};

Prediction predict(const ModelParameters& model, const Query& query, const DecodeOptions& options = {});
// Read-only fan-out over options.threads worker threads; output order matches input.
std::vector<Prediction> predict_all(const ModelParameters& model, const std::vector<Query>& queries,
                                    const DecodeOptions& options = {});

std::vector<Query> queries_of(const std::vector<LabeledExample>& examples);

}  // namespace reinflect
