// Command-line front-end: declension <split|train|train-ngram|evaluate|predict|gradcheck>

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "declension/app.hpp"

namespace {

using declension::app::RunConfig;

void add_corpus_options(CLI::App* cmd, RunConfig& cfg, std::string& cases) {
  cmd->add_option("inputs", cfg.treebanks, "CoNLL-U treebank files")->required();
  cmd->add_option("--cases", cases, "Comma-separated UD case inventory, e.g. Nom,Gen,Acc,Dat");
}

void add_train_options(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--epochs", cfg.train.epochs, "Maximum training epochs");
  cmd->add_option("--lr", cfg.train.learning_rate, "Adam learning rate");
  cmd->add_option("--d-e", cfg.train.d_e, "Character embedding size");
  cmd->add_option("--d-h", cfg.train.d_h, "LSTM hidden size");
  cmd->add_option("--clip", cfg.train.clip_norm, "Global gradient-norm clip");
  cmd->add_option("--lambda-case", cfg.train.lambda_case, "Weight of the case-classification loss");
  cmd->add_option("--patience", cfg.train.patience, "Epochs without dev improvement before stopping");
  cmd->add_option("--decode-scale", cfg.train.decode_scale, "Decode budget: scale * |lemma| + offset");
  cmd->add_option("--decode-offset", cfg.train.decode_offset, "Decode budget offset");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Noun declension toolkit: treebank splits, n-gram baseline, character LSTM, evaluation"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML/INI configuration file; command-line flags take precedence");

  RunConfig cfg;
  std::string cases;
  app.add_option("--seed", cfg.train.seed, "Random seed for splits, initialization and shuffling");
  app.add_flag("--quiet", cfg.quiet, "Suppress summary output");

  auto* split = app.add_subcommand("split", "Filter and split a treebank into train/dev/test");
  add_corpus_options(split, cfg, cases);
  split->add_option("-o,--out", cfg.output, "Manifest output path")->required();
  split->add_option("--train", cfg.ratios.train, "Training fraction");
  split->add_option("--dev", cfg.ratios.dev, "Validation fraction");
  split->add_option("--test", cfg.ratios.test, "Test fraction");
  split->add_option("--min-len", cfg.bounds.min_tokens, "Minimum sentence length in tokens");
  split->add_option("--max-len", cfg.bounds.max_tokens, "Maximum sentence length in tokens");

  auto* train = app.add_subcommand("train", "Train the character LSTM");
  add_corpus_options(train, cfg, cases);
  train->add_option("--manifest", cfg.manifest, "Split manifest")->required();
  train->add_option("-o,--out", cfg.output, "Model output path (.dcln)")->required();
  train->add_option("--history", cfg.history, "Per-epoch history JSON (default: <out>.history.json)");
  train->add_option("--window", cfg.train.window, "Context words on each side of the noun");
  add_train_options(train, cfg);

  auto* train_ngram = app.add_subcommand("train-ngram", "Train the article-noun n-gram baseline");
  add_corpus_options(train_ngram, cfg, cases);
  train_ngram->add_option("--manifest", cfg.manifest, "Split manifest")->required();
  train_ngram->add_option("-o,--out", cfg.output, "n-gram model output path (.json)")->required();

  auto* evaluate = app.add_subcommand("evaluate", "Score a model on one split");
  add_corpus_options(evaluate, cfg, cases);
  evaluate->add_option("--model", cfg.model, "LSTM (.dcln) or n-gram (.json) model")->required();
  evaluate->add_option("--manifest", cfg.manifest, "Split manifest")->required();
  evaluate->add_option("--split", cfg.split_name, "train, dev or test");
  evaluate->add_option("-o,--out", cfg.output, "Report output path")->required();
  evaluate->add_option("--window", cfg.train.window, "Context window used at training time");
  evaluate->add_option("--decode-scale", cfg.train.decode_scale, "Decode budget: scale * |lemma| + offset");
  evaluate->add_option("--decode-offset", cfg.train.decode_offset, "Decode budget offset");
  evaluate->add_flag("--oracle", cfg.oracle, "Score the gold forms against themselves");

  auto* predict = app.add_subcommand("predict", "Inflect a single lemma");
  predict->add_option("--model", cfg.model, "LSTM (.dcln) or n-gram (.json) model")->required();
  predict->add_option("--lemma", cfg.lemma, "Lemma to inflect")->required();
  predict->add_option("--article", cfg.article, "Preceding article");
  predict->add_option("--left", cfg.left_context, "Words left of the article, in order");
  predict->add_option("--right", cfg.right_context, "Words right of the noun, in order");
  predict->add_option("--window", cfg.train.window, "Context window used at training time");

  auto* gradcheck = app.add_subcommand("gradcheck", "Check BPTT gradients against finite differences");
  gradcheck->add_flag("--inject-fault", cfg.inject_fault, "Corrupt the analytic gradient (harness self-test)")
      ->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : declension::app::kExitUsage;
  }

  try {
    if (!cases.empty()) {
      cfg.cases = declension::CaseInventory::parse(cases);
      cfg.cases_explicit = true;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return declension::app::kExitUsage;
  }

  using namespace declension::app;
  if (*split) return cmd_split(cfg, std::cout, std::cerr);
  if (*train) return cmd_train(cfg, std::cout, std::cerr);
  if (*train_ngram) return cmd_train_ngram(cfg, std::cout, std::cerr);
  if (*evaluate) return cmd_evaluate(cfg, std::cout, std::cerr);
  if (*predict) return cmd_predict(cfg, std::cout, std::cerr);
  if (*gradcheck) return cmd_gradcheck(cfg, std::cout, std::cerr);
  return kExitUsage;
}
