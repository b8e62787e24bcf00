#include "declension/app.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>

#include "declension/json_io.hpp"
#include "declension/utf8.hpp"

namespace declension::app {
namespace {

void require_inputs(const RunConfig& cfg) {
  if (cfg.treebanks.empty()) throw UsageError("at least one CoNLL-U input file is required");
  for (const auto& p : cfg.treebanks) {
    if (!fs::is_regular_file(p)) throw UsageError("input file not found: " + p.string());
  }
}

void require_file(const fs::path& p, const std::string& what) {
  if (p.empty()) throw UsageError(what + " path is required");
  if (!fs::is_regular_file(p)) throw UsageError(what + " not found: " + p.string());
}

void require_output(const fs::path& p, const std::string& what) {
  if (p.empty()) throw UsageError(what + " output path is required");
}

DatasetSplit load_manifest(const fs::path& p) {
  require_file(p, "split manifest");
  return split_from_json(read_file(p));
}

std::string fmt(double x, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

std::span<const std::string> split_ids(const DatasetSplit& split, const std::string& name) {
  if (name == "train") return split.train;
  if (name == "dev") return split.dev;
  if (name == "test") return split.test;
  throw UsageError("unknown split '" + name + "' (expected train, dev or test)");
}

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

}  // namespace

Treebank load_treebanks(std::span<const fs::path> paths) {
  std::vector<Sentence> all;
  for (const auto& p : paths) {
    const std::string prefix = paths.size() > 1 ? p.stem().string() + "-" : std::string{};
    std::vector<Sentence> parsed;
    try {
      parsed = parse_conllu(read_file(p), prefix);
    } catch (const ParseError& e) {
      throw Error(p.string() + ": " + e.what());
    }
    std::move(parsed.begin(), parsed.end(), std::back_inserter(all));
  }
  return Treebank(std::move(all));
}

std::vector<NounInstance> instances_for(const Treebank& treebank, std::span<const std::string> ids,
                                        const CaseInventory& inventory) {
  std::vector<NounInstance> out;
  for (const auto& id : ids) {
    auto found = extract_instances(treebank.at(id), inventory);
    std::move(found.begin(), found.end(), std::back_inserter(out));
  }
  return out;
}

ModelKind detect_model_kind(const fs::path& path) {
  require_file(path, "model");
  std::ifstream in(path, std::ios::binary);
  char magic[4] = {};
  in.read(magic, 4);
  if (in.gcount() == 4 && std::equal(magic, magic + 4, kModelMagic.begin())) return ModelKind::Lstm;
  return ModelKind::Ngram;
}

int cmd_split(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    require_inputs(cfg);
    require_output(cfg.output, "manifest");
    const Treebank tb = load_treebanks(cfg.treebanks);
    const DatasetSplit split = split_corpus(tb.sentences(), cfg.train.seed, cfg.ratios, cfg.bounds, cfg.cases);
    write_file(cfg.output, split_to_json(split));
    if (!cfg.quiet) {
      out << "split seed=" << split.seed << " train=" << split.train.size() << " dev=" << split.dev.size()
          << " test=" << split.test.size() << "\n";
      for (const char* name : {"train", "dev", "test"}) {
        const auto insts = instances_for(tb, split_ids(split, name), cfg.cases);
        std::map<std::string, std::size_t> per_case;
        for (const auto& inst : insts) ++per_case[inst.morph_case.tag];
        out << name << ":";
        for (const auto& c : cfg.cases.cases()) out << " " << c.tag << "=" << per_case[c.tag];
        out << "\n";
      }
    }
    return kExitOk;
  });
}

int cmd_train(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    cfg.train.validate();
    require_inputs(cfg);
    require_output(cfg.output, "model");
    const DatasetSplit split = load_manifest(cfg.manifest);
    const Treebank tb = load_treebanks(cfg.treebanks);
    if (split.train.empty()) {
      throw UsageError("the training split is empty; use a larger corpus or a larger train ratio");
    }
    const auto train_sentences = tb.select(split.train);
    const Alphabet alphabet = build_alphabet(train_sentences);
    const auto train_insts = instances_for(tb, split.train, cfg.cases);
    const auto dev_insts = instances_for(tb, split.dev, cfg.cases);
    if (train_insts.empty()) throw UsageError("the training split contains no noun instances");
    const auto train_set = prepare_examples(train_insts, tb, alphabet, cfg.cases, cfg.train.window);
    const auto dev_set = prepare_examples(dev_insts, tb, alphabet, cfg.cases, cfg.train.window);
    if (dev_set.empty()) err << "warning: dev split is empty; model selection uses the training instances\n";

    const TrainResult result = train(cfg.train, train_set, dev_set, alphabet.size(), cfg.cases.size());
    save_model(ModelBundle{result.params, alphabet, cfg.cases}, cfg.output);
    const fs::path history = cfg.history.empty() ? fs::path(cfg.output.string() + ".history.json") : cfg.history;
    write_file(history, history_to_json(cfg.train, result));
    if (!cfg.quiet) {
      const auto& best = result.history.at(result.best_epoch - 1);
      out << "trained " << result.history.size() << " epochs on " << train_set.size() << " instances; best epoch "
          << result.best_epoch << " dev_accuracy=" << fmt(best.dev_accuracy) << " train_loss="
          << fmt(best.train_loss) << "\n";
    }
    return kExitOk;
  });
}

int cmd_train_ngram(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    require_inputs(cfg);
    require_output(cfg.output, "n-gram model");
    const DatasetSplit split = load_manifest(cfg.manifest);
    const Treebank tb = load_treebanks(cfg.treebanks);
    const auto insts = instances_for(tb, split.train, cfg.cases);
    if (insts.empty()) err << "warning: training split has no noun instances; writing an empty n-gram model\n";
    const BackoffInflector model = train_ngram(insts, cfg.cases);
    write_file(cfg.output, model.to_json());
    if (!cfg.quiet) {
      out << "n-gram model: " << model.pair_counts().size() << " article-lemma pairs, " << model.lemma_counts().size()
          << " lemmas from " << insts.size() << " instances\n";
    }
    return kExitOk;
  });
}

int cmd_evaluate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    require_inputs(cfg);
    require_output(cfg.output, "report");
    const ModelKind kind = detect_model_kind(cfg.model);
    const DatasetSplit split = load_manifest(cfg.manifest);
    const auto ids = split_ids(split, cfg.split_name);
    const Treebank tb = load_treebanks(cfg.treebanks);

    std::optional<ModelBundle> lstm;
    std::optional<BackoffInflector> ngram;
    CaseInventory inventory = cfg.cases;
    if (kind == ModelKind::Lstm) {
      lstm = load_model(cfg.model);
      inventory = lstm->inventory;
    } else {
      ngram = BackoffInflector::from_json(read_file(cfg.model));
      inventory = ngram->inventory();
    }
    if (cfg.cases_explicit && !(cfg.cases == inventory)) {
      throw Error("model was trained for cases " + inventory.to_string() + " but --cases asks for " +
                  cfg.cases.to_string());
    }

    const auto insts = instances_for(tb, ids, inventory);
    if (insts.empty()) throw Error("split '" + cfg.split_name + "' has no noun instances to evaluate");

    std::vector<Prediction> predictions;
    predictions.reserve(insts.size());
    if (cfg.oracle) {
      for (const auto& inst : insts) predictions.push_back({inst.form(), inst.morph_case});
    } else if (lstm) {
      std::size_t known = 0;
      std::size_t total = 0;
      for (const auto& inst : insts) {
        for (char32_t c : inst.lemma_chars) {
          ++total;
          known += lstm->alphabet.contains(c) ? 1 : 0;
        }
      }
      if (total > 0 && known == 0) {
        throw Error("model alphabet shares no characters with the evaluation corpus");
      }
      const auto examples = prepare_examples(insts, tb, lstm->alphabet, inventory, cfg.train.window);
      for (std::size_t k = 0; k < insts.size(); ++k) {
        const auto p = predict(*lstm, examples[k].encoded.input_ids,
                               cfg.train.max_decode_length(examples[k].lemma_length));
        predictions.push_back({p.form, inventory.at(p.case_index)});
      }
    } else {
      for (const auto& inst : insts) {
        const auto form = ngram->predict(inst.article, inst.lemma());
        predictions.push_back({form.form, ngram->predict_case(inst.article, inst.lemma())});
      }
    }

    const EvalReport report = evaluate(tb, insts, predictions, inventory);
    write_file(cfg.output, report_to_json(report));
    if (!cfg.quiet) {
      out << cfg.split_name << ": instances=" << report.n_instances << " sentences=" << report.n_sentences
          << " avg_bleu=" << fmt(report.avg_bleu) << " word_accuracy=" << fmt(report.word_accuracy)
          << " mean_norm_edit=" << fmt(report.mean_norm_edit) << " case_accuracy=" << fmt(report.case_accuracy)
          << "\n";
    }
    return kExitOk;
  });
}

int cmd_predict(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (cfg.lemma.empty()) throw UsageError("--lemma must be a non-empty word");
    const ModelKind kind = detect_model_kind(cfg.model);
    if (kind == ModelKind::Ngram) {
      const BackoffInflector model = BackoffInflector::from_json(read_file(cfg.model));
      const auto form = model.predict(cfg.article, cfg.lemma);
      const auto c = model.predict_case(cfg.article, cfg.lemma);
      out << form.form << "\tbackoff=" << to_string(form.level);
      if (c) out << "\tcase=" << c->tag;
      out << "\n";
      return kExitOk;
    }

    const ModelBundle model = load_model(cfg.model);
    std::vector<std::string> left = cfg.left_context;
    if (cfg.article) left.push_back(*cfg.article);
    if (left.size() > cfg.train.window) left.erase(left.begin(), left.end() - static_cast<std::ptrdiff_t>(cfg.train.window));
    std::vector<std::string> right = cfg.right_context;
    if (right.size() > cfg.train.window) right.resize(cfg.train.window);

    const std::u32string lemma = utf8::decode(cfg.lemma);
    std::size_t unknown = 0;
    for (const auto* words : {&left, &right}) {
      for (const auto& w : *words) {
        for (char32_t c : utf8::decode(w)) unknown += model.alphabet.contains(c) ? 0 : 1;
      }
    }
    for (char32_t c : lemma) unknown += model.alphabet.contains(c) ? 0 : 1;
    if (unknown > 0) {
      err << "warning: " << unknown << " input character(s) are outside the model alphabet and map to UNK\n";
    }

    const auto ids = encode_context(left, lemma, right, model.alphabet);
    const auto p = predict(model, ids, cfg.train.max_decode_length(lemma.size()));
    out << p.form << "\tcase=" << model.inventory.at(p.case_index).tag << "\tp=" << fmt(p.case_probs[p.case_index])
        << "\n";
    return kExitOk;
  });
}

int cmd_gradcheck(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const GradCheckResult r = gradient_check(cfg.train.seed, cfg.inject_fault);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6e", r.max_relative_error);
    const bool ok = r.max_relative_error < kGradCheckTolerance;
    out << "gradcheck seed=" << cfg.train.seed << " params=" << r.parameters_checked << " max_relative_error=" << buf
        << " worst=" << r.worst_tensor << "[" << r.worst_index << "] " << (ok ? "PASS" : "FAIL") << "\n";
    return ok ? kExitOk : kExitFailure;
  });
}

}  // namespace declension::app
