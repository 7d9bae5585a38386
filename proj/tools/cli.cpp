#include "cli.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "reinflect/affix_baseline.hpp"
#include "reinflect/data.hpp"
#include "reinflect/decode.hpp"
#include "reinflect/errors.hpp"
#include "reinflect/metrics.hpp"
#include "reinflect/model.hpp"
#include "reinflect/model_io.hpp"
#include "reinflect/rng.hpp"
#include "reinflect/text.hpp"
#include "reinflect/trainer.hpp"

namespace reinflect::cli {

namespace {

using nlohmann::json;

constexpr const char* kDefaultAlphabet = "abcdefghijklmnopqrstuvwxyz";

struct TrainArgs {
  std::string labeled;
  std::string unlabeled;
  std::optional<std::size_t> random_min;
  std::optional<std::size_t> random_max;
  bool random = false;
  double ratio = 4.0;
  std::uint64_t min_count = 2;
  std::string fraction = "1";
  std::optional<std::size_t> epochs;
  std::string dev;
  std::uint64_t seed = 1;
  std::size_t batch_size = 20;
  std::size_t embed = 300;
  std::size_t hidden = 100;
  std::size_t decoder = 100;
  std::size_t attention = 100;
  double clip = 5.0;
  double rho = 0.95;
  double eps = 1e-6;
  std::string select = "last";
  std::size_t threads = 1;
  std::string out;
  std::string log;
  char delimiter = ',';
  bool verbose = false;
};

struct PredictArgs {
  std::string model;
  std::string input;
  std::string output;
  std::size_t beam = 1;
  std::optional<std::size_t> max_len;
  std::size_t threads = 1;
  char delimiter = ',';
};

struct EvaluateArgs {
  std::string gold;
  std::string predictions;
  char delimiter = ',';
};

struct SampleArgs {
  std::string tokens;
  std::string labeled;
  std::string alphabet;
  std::size_t n = 0;
  std::uint64_t min_count = 2;
  std::uint64_t seed = 1;
  std::string output;
  char delimiter = ',';
};

struct RandomArgs {
  std::string labeled;
  std::string alphabet;
  std::size_t n = 0;
  std::size_t min_len = 3;
  std::size_t max_len = 20;
  std::uint64_t seed = 1;
  std::string output;
  char delimiter = ',';
};

struct BaselineArgs {
  std::string labeled;
  std::string rules;
  std::string input;
  std::string output;
  char delimiter = ',';
};

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path + " for writing");
  return out;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  return in;
}

void write_config(const std::string& output, const json& config) {
  auto out = open_output(output + ".config.json");
  out << config.dump(2) << '\n';
}

// Source form and tag columns; a third column, if present, is ignored.
std::vector<Query> read_queries(const std::string& path, char delimiter) {
  auto in = open_input(path);
  std::vector<Query> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto f = split(line, '\t');
    if (f.size() < 2 || f.size() > 3 || f[0].empty() || f[1].empty()) {
      throw ParseError(path, line_no, "expected source form and target tag columns");
    }
    try {
      out.push_back({nfc(f[0]), split(nfc(f[1]), delimiter)});
    } catch (const DataError& e) {
      throw ParseError(path, line_no, e.what());
    }
  }
  return out;
}

// Like read_labeled, but the predicted form may be empty.
std::vector<LabeledExample> read_predictions(const std::string& path, char delimiter) {
  auto in = open_input(path);
  std::vector<LabeledExample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto f = split(line, '\t');
    if (f.size() != 3 || f[0].empty()) throw ParseError(path, line_no, "expected 3 tab-separated columns");
    try {
      out.push_back({nfc(f[0]), split(nfc(f[1]), delimiter), nfc(f[2])});
    } catch (const DataError& e) {
      throw ParseError(path, line_no, e.what());
    }
  }
  return out;
}

void write_predictions(const std::string& path, const std::vector<Query>& queries,
                       const std::vector<std::string>& forms, char delimiter) {
  auto out = open_output(path);
  const std::string delim(1, delimiter);
  for (std::size_t i = 0; i < queries.size(); ++i) {
    out << queries[i].source_form << '\t' << join(queries[i].target_tag, delim) << '\t' << forms[i] << '\n';
  }
}

std::size_t fraction_denominator(double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("fraction must lie in (0, 1]");
  const double den = std::round(1.0 / fraction);
  if (std::abs(1.0 / den - fraction) > 1e-9) throw ConfigError("fraction must have the form 1/k");
  return static_cast<std::size_t>(den);
}

Alphabet alphabet_for(const std::string& labeled, const std::string& chars, char delimiter) {
  if (!labeled.empty()) return build_alphabet(read_labeled(labeled, LabeledReadOptions{delimiter}));
  return alphabet_from_string(chars.empty() ? kDefaultAlphabet : chars);
}

int cmd_train(const TrainArgs& a, std::ostream& err) {
  if (a.ratio < 0.0) throw ConfigError("ratio must be nonnegative");
  if (a.random && !a.unlabeled.empty()) throw ConfigError("--unlabeled and --random are mutually exclusive");
  if (a.select != "last" && a.select != "best-dev") throw ConfigError("--select must be 'last' or 'best-dev'");

  const LabeledReadOptions read_opts{a.delimiter};
  const double fraction = parse_fraction(a.fraction);
  const std::size_t denominator = fraction_denominator(fraction);
  std::vector<LabeledExample> labeled = read_labeled(a.labeled, read_opts);
  if (denominator > 1) labeled = take_fraction(labeled, denominator, derive_seed(a.seed, "fraction"));
  if (labeled.empty()) throw DataError(a.labeled + " contains no examples");

  const Alphabet sigma = build_alphabet(labeled);
  const auto wanted = static_cast<std::size_t>(std::llround(a.ratio * static_cast<double>(labeled.size())));
  std::vector<UnlabeledExample> unlabeled;
  std::size_t requested = 0;
  if (wanted > 0 && !a.unlabeled.empty()) {
    const Sample s =
        sample_corpus(read_token_counts(a.unlabeled), sigma, wanted, a.min_count, derive_seed(a.seed, "sampling"));
    if (s.short_of_request()) {
      err << "warning: only " << s.words.size() << " of " << s.requested << " unlabeled words pass the filters\n";
    }
    unlabeled = s.words;
    requested = s.requested;
  } else if (wanted > 0 && a.random) {
    unlabeled = gen_random_strings(sigma, wanted, a.random_min.value_or(3), a.random_max.value_or(20),
                                   derive_seed(a.seed, "sampling"));
    requested = wanted;
  }

  std::vector<LabeledExample> dev;
  if (!a.dev.empty()) dev = read_labeled(a.dev, read_opts);

  TrainConfig config;
  config.batch_size = a.batch_size;
  config.epochs = a.epochs ? *a.epochs : epochs_for_fraction(fraction);
  config.seed = a.seed;
  config.adadelta_rho = a.rho;
  config.adadelta_eps = a.eps;
  config.grad_clip_norm = a.clip > 0.0 ? std::optional<double>(a.clip) : std::nullopt;
  config.model_selection = a.select == "best-dev" ? ModelSelection::kBestDev : ModelSelection::kLast;
  config.eval_threads = a.threads;
  config.validate();

  const Hyperparameters hyper{a.embed, a.hidden, a.decoder, a.attention};
  Vocabulary vocab = Vocabulary::build(build_alphabet(labeled, unlabeled).symbols, collect_subtags(labeled));
  ModelParameters initial = ModelParameters::initialize(std::move(vocab), hyper, derive_seed(a.seed, "init"));

  const std::string log_path = a.log.empty() ? a.out + ".log.jsonl" : a.log;
  json echo{{"command", "train"},
            {"labeled", a.labeled},
            {"labeled_used", labeled.size()},
            {"unlabeled", a.unlabeled.empty() ? json(nullptr) : json(a.unlabeled)},
            {"random", a.random},
            {"random_min", a.random_min.value_or(3)},
            {"random_max", a.random_max.value_or(20)},
            {"ratio", a.ratio},
            {"unlabeled_requested", requested},
            {"unlabeled_used", unlabeled.size()},
            {"min_count", a.min_count},
            {"fraction", a.fraction},
            {"epochs", config.epochs},
            {"dev", a.dev.empty() ? json(nullptr) : json(a.dev)},
            {"seed", a.seed},
            {"batch_size", config.batch_size},
            {"embed_dim", hyper.embed_dim},
            {"hidden_dim", hyper.hidden_dim},
            {"decoder_dim", hyper.decoder_dim},
            {"attention_dim", hyper.attention_dim},
            {"grad_clip_norm", config.grad_clip_norm ? json(*config.grad_clip_norm) : json(nullptr)},
            {"adadelta_rho", config.adadelta_rho},
            {"adadelta_eps", config.adadelta_eps},
            {"select", a.select},
            {"threads", a.threads},
            {"tag_delimiter", std::string(1, a.delimiter)},
            {"model", a.out},
            {"log", log_path}};
  write_config(a.out, echo);

  auto log = open_output(log_path);
  const auto on_epoch = [&](const EpochRecord& r) {
    log << r.to_json() << '\n';
    log.flush();
    if (a.verbose) err << r.to_json() << '\n';
  };
  const TrainResult result = train(std::move(initial), labeled, unlabeled, config, dev.empty() ? nullptr : &dev,
                                   on_epoch);
  save_model(result.model, a.out);
  if (a.verbose) err << "selected epoch " << result.selected_epoch << "\n";
  return 0;
}

int cmd_predict(const PredictArgs& a) {
  const ModelParameters model = load_model(a.model);
  const std::vector<Query> queries = read_queries(a.input, a.delimiter);
  DecodeOptions opts;
  opts.beam_width = a.beam;
  opts.max_len = a.max_len;
  opts.threads = a.threads;
  std::vector<std::string> forms;
  for (const Prediction& p : predict_all(model, queries, opts)) forms.push_back(p.predicted_form);
  write_predictions(a.output, queries, forms, a.delimiter);
  write_config(a.output, {{"command", "predict"},
                          {"model", a.model},
                          {"input", a.input},
                          {"output", a.output},
                          {"beam", a.beam},
                          {"max_len", a.max_len ? json(*a.max_len) : json("source length + 10")},
                          {"threads", a.threads},
                          {"tag_delimiter", std::string(1, a.delimiter)}});
  return 0;
}

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
  const auto gold = read_labeled(a.gold, LabeledReadOptions{a.delimiter});
  const auto pred = read_predictions(a.predictions, a.delimiter);
  if (gold.size() != pred.size()) {
    throw DataError("gold has " + std::to_string(gold.size()) + " lines but predictions have " +
                    std::to_string(pred.size()));
  }
  std::vector<std::string> golds, preds;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i].source_form != pred[i].source_form || gold[i].target_tag != pred[i].target_tag) {
      throw DataError("line " + std::to_string(i + 1) + ": gold and prediction refer to different queries");
    }
    golds.push_back(gold[i].target_form);
    preds.push_back(pred[i].target_form);
  }
  out << format_report(evaluate(preds, golds));
  return 0;
}

int cmd_sample(const SampleArgs& a, std::ostream& err) {
  const Alphabet sigma = alphabet_for(a.labeled, a.alphabet, a.delimiter);
  const Sample s = sample_corpus(read_token_counts(a.tokens), sigma, a.n, a.min_count, derive_seed(a.seed, "sampling"));
  if (s.short_of_request()) {
    err << "warning: only " << s.words.size() << " of " << s.requested << " words pass the filters\n";
  }
  auto out = open_output(a.output);
  write_words(out, s.words);
  write_config(a.output, {{"command", "sample-corpus"},
                          {"tokens", a.tokens},
                          {"alphabet", join(sigma.symbols, "")},
                          {"n", a.n},
                          {"written", s.words.size()},
                          {"min_count", a.min_count},
                          {"seed", a.seed},
                          {"output", a.output}});
  return 0;
}

int cmd_random(const RandomArgs& a) {
  const Alphabet sigma = alphabet_for(a.labeled, a.alphabet, a.delimiter);
  const auto words = gen_random_strings(sigma, a.n, a.min_len, a.max_len, derive_seed(a.seed, "sampling"));
  auto out = open_output(a.output);
  write_words(out, words);
  write_config(a.output, {{"command", "gen-random"},
                          {"alphabet", join(sigma.symbols, "")},
                          {"n", a.n},
                          {"min_len", a.min_len},
                          {"max_len", a.max_len},
                          {"seed", a.seed},
                          {"output", a.output}});
  return 0;
}

int cmd_baseline_train(const BaselineArgs& a) {
  const auto table = AffixRuleTable::extract(read_labeled(a.labeled, LabeledReadOptions{a.delimiter}));
  auto out = open_output(a.rules);
  table.write(out);
  write_config(a.rules, {{"command", "baseline train"},
                         {"labeled", a.labeled},
                         {"rules", a.rules},
                         {"rule_count", table.size()},
                         {"tag_delimiter", std::string(1, a.delimiter)}});
  return 0;
}

int cmd_baseline_predict(const BaselineArgs& a) {
  auto in = open_input(a.rules);
  const auto table = AffixRuleTable::read(in, a.rules);
  const auto queries = read_queries(a.input, a.delimiter);
  std::vector<std::string> forms;
  for (const Query& q : queries) forms.push_back(table.apply(q.source_form, q.target_tag));
  write_predictions(a.output, queries, forms, a.delimiter);
  write_config(a.output, {{"command", "baseline predict"},
                          {"rules", a.rules},
                          {"input", a.input},
                          {"output", a.output},
                          {"tag_delimiter", std::string(1, a.delimiter)}});
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Semi-supervised neural morphological reinflection"};
  app.require_subcommand(1);

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "Train an encoder-decoder model");
  train_cmd->add_option("--labeled", ta.labeled, "Labeled TSV: source, tag, target")->required()->check(CLI::ExistingFile);
  auto* unl = train_cmd->add_option("--unlabeled", ta.unlabeled, "Corpus token file: token[TAB count]")
                  ->check(CLI::ExistingFile);
  train_cmd->add_flag("--random", ta.random, "Autoencode random strings over the labeled alphabet")->excludes(unl);
  train_cmd->add_option("--random-min-len", ta.random_min, "Shortest random string")->default_str("3");
  train_cmd->add_option("--random-max-len", ta.random_max, "Longest random string")->default_str("20");
  train_cmd->add_option("--ratio", ta.ratio, "Unlabeled examples per labeled example")->capture_default_str();
  train_cmd->add_option("--min-count", ta.min_count, "Minimum corpus count")->capture_default_str();
  train_cmd->add_option("--fraction", ta.fraction, "Use 1/k of the labeled data; sets the epoch schedule")
      ->capture_default_str();
  train_cmd->add_option("--epochs", ta.epochs, "Override the epoch schedule");
  train_cmd->add_option("--dev", ta.dev, "Development TSV evaluated after every epoch")->check(CLI::ExistingFile);
  train_cmd->add_option("--seed", ta.seed, "Root seed")->capture_default_str();
  train_cmd->add_option("--batch-size", ta.batch_size, "Examples per update")->capture_default_str();
  train_cmd->add_option("--embed-dim", ta.embed, "Embedding size")->capture_default_str();
  train_cmd->add_option("--hidden-dim", ta.hidden, "Encoder state size per direction")->capture_default_str();
  train_cmd->add_option("--decoder-dim", ta.decoder, "Decoder state size")->capture_default_str();
  train_cmd->add_option("--attention-dim", ta.attention, "Attention size")->capture_default_str();
  train_cmd->add_option("--clip", ta.clip, "Global gradient norm limit, 0 disables")->capture_default_str();
  train_cmd->add_option("--rho", ta.rho, "AdaDelta decay")->capture_default_str();
  train_cmd->add_option("--eps", ta.eps, "AdaDelta epsilon")->capture_default_str();
  train_cmd->add_option("--select", ta.select, "Model to keep: last or best-dev")->capture_default_str();
  train_cmd->add_option("--threads", ta.threads, "Threads for dev decoding")->capture_default_str();
  train_cmd->add_option("--out", ta.out, "Model file to write")->required();
  train_cmd->add_option("--log", ta.log, "Per-epoch JSON lines (default <out>.log.jsonl)");
  train_cmd->add_option("--tag-delimiter", ta.delimiter, "Subtag separator")->capture_default_str();
  train_cmd->add_flag("--verbose", ta.verbose, "Echo epoch records to stderr");

  PredictArgs pa;
  auto* predict_cmd = app.add_subcommand("predict", "Inflect source forms with a trained model");
  predict_cmd->add_option("--model", pa.model, "Model file")->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--input", pa.input, "TSV: source, tag[, ignored]")->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--output", pa.output, "Predictions TSV")->required();
  predict_cmd->add_option("--beam", pa.beam, "Beam width, 1 is greedy")->capture_default_str()->check(
      CLI::PositiveNumber);
  predict_cmd->add_option("--max-len", pa.max_len, "Output length limit (default source length + 10)");
  predict_cmd->add_option("--threads", pa.threads, "Decoding threads")->capture_default_str();
  predict_cmd->add_option("--tag-delimiter", pa.delimiter, "Subtag separator")->capture_default_str();

  EvaluateArgs ea;
  auto* eval_cmd = app.add_subcommand("evaluate", "Accuracy and mean edit distance");
  eval_cmd->add_option("--gold", ea.gold, "Gold TSV")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--predictions", ea.predictions, "Predictions TSV")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--tag-delimiter", ea.delimiter, "Subtag separator")->capture_default_str();

  SampleArgs sa;
  auto* sample_cmd = app.add_subcommand("sample-corpus", "Sample unlabeled words from a corpus token list");
  sample_cmd->add_option("--tokens", sa.tokens, "Token file: token[TAB count]")->required()->check(
      CLI::ExistingFile);
  auto* s_lab = sample_cmd->add_option("--labeled", sa.labeled, "Labeled TSV defining the alphabet")
                    ->check(CLI::ExistingFile);
  sample_cmd->add_option("--alphabet", sa.alphabet, "Alphabet as a string of characters")->excludes(s_lab);
  sample_cmd->add_option("--n", sa.n, "Words to sample")->required();
  sample_cmd->add_option("--min-count", sa.min_count, "Minimum corpus count")->capture_default_str();
  sample_cmd->add_option("--seed", sa.seed, "Root seed")->capture_default_str();
  sample_cmd->add_option("--output", sa.output, "Word list to write")->required();
  sample_cmd->add_option("--tag-delimiter", sa.delimiter, "Subtag separator")->capture_default_str();

  RandomArgs ra;
  auto* random_cmd = app.add_subcommand("gen-random", "Generate random strings over an alphabet");
  auto* r_lab = random_cmd->add_option("--labeled", ra.labeled, "Labeled TSV defining the alphabet")
                    ->check(CLI::ExistingFile);
  random_cmd->add_option("--alphabet", ra.alphabet, "Alphabet as a string of characters (default a-z)")
      ->excludes(r_lab);
  random_cmd->add_option("--n", ra.n, "Strings to generate")->required();
  random_cmd->add_option("--min-len", ra.min_len, "Shortest string")->capture_default_str();
  random_cmd->add_option("--max-len", ra.max_len, "Longest string")->capture_default_str();
  random_cmd->add_option("--seed", ra.seed, "Root seed")->capture_default_str();
  random_cmd->add_option("--output", ra.output, "Word list to write")->required();
  random_cmd->add_option("--tag-delimiter", ra.delimiter, "Subtag separator")->capture_default_str();

  BaselineArgs ba;
  auto* baseline_cmd = app.add_subcommand("baseline", "Affix substitution baseline");
  baseline_cmd->require_subcommand(1);
  auto* btrain = baseline_cmd->add_subcommand("train", "Extract rules from labeled data");
  btrain->add_option("--labeled", ba.labeled, "Labeled TSV")->required()->check(CLI::ExistingFile);
  btrain->add_option("--rules", ba.rules, "Rule table to write")->required();
  btrain->add_option("--tag-delimiter", ba.delimiter, "Subtag separator")->capture_default_str();
  auto* bpredict = baseline_cmd->add_subcommand("predict", "Apply a rule table");
  bpredict->add_option("--rules", ba.rules, "Rule table")->required()->check(CLI::ExistingFile);
  bpredict->add_option("--input", ba.input, "TSV: source, tag[, ignored]")->required()->check(CLI::ExistingFile);
  bpredict->add_option("--output", ba.output, "Predictions TSV")->required();
  bpredict->add_option("--tag-delimiter", ba.delimiter, "Subtag separator")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    err << "error: usage: " << e.what() << '\n';
    return e.get_exit_code();
  }

  try {
    if (train_cmd->parsed()) return cmd_train(ta, err);
    if (predict_cmd->parsed()) return cmd_predict(pa);
    if (eval_cmd->parsed()) return cmd_evaluate(ea, out);
    if (sample_cmd->parsed()) return cmd_sample(sa, err);
    if (random_cmd->parsed()) return cmd_random(ra);
    if (btrain->parsed()) return cmd_baseline_train(ba);
    if (bpredict->parsed()) return cmd_baseline_predict(ba);
  } catch (const Error& e) {
    err << "error: " << e.kind() << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: internal: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace reinflect::cli
