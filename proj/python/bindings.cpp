#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "declension/app.hpp"
#include "declension/corpus.hpp"
#include "declension/error.hpp"
#include "declension/eval.hpp"
#include "declension/model.hpp"
#include "declension/ngram.hpp"
#include "declension/utf8.hpp"

namespace py = pybind11;
using namespace declension;

namespace {

CaseInventory inventory_from(const std::optional<std::string>& cases) {
  return cases ? CaseInventory::parse(*cases) : CaseInventory::default_inventory();
}

std::vector<NounInstance> instances_of(const std::vector<Sentence>& sentences, const CaseInventory& inv) {
  std::vector<NounInstance> out;
  for (const auto& s : sentences) {
    for (auto& i : extract_instances(s, inv)) out.push_back(std::move(i));
  }
  return out;
}

py::dict split_dict(const DatasetSplit& s) {
  py::dict d;
  d["seed"] = s.seed;
  d["train"] = s.train;
  d["dev"] = s.dev;
  d["test"] = s.test;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Noun declension toolkit: corpus handling, n-gram baseline, character LSTM and metrics.";

  // Translators run newest first, so the base class goes first.
  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<FormatError>(m, "FormatError", error.ptr());
  py::register_exception<ParseError>(m, "ParseError", error.ptr());

  py::class_<Sentence>(m, "Sentence")
      .def_readonly("sent_id", &Sentence::sent_id)
      .def_readonly("text", &Sentence::text)
      .def_property_readonly("words", &Sentence::words)
      .def("__len__", [](const Sentence& s) { return s.tokens.size(); })
      .def("__repr__", [](const Sentence& s) { return "<Sentence " + s.sent_id + ">"; });

  py::class_<NounInstance>(m, "NounInstance")
      .def_readonly("sent_id", &NounInstance::sent_id)
      .def_readonly("target_index", &NounInstance::target_index)
      .def_readonly("article", &NounInstance::article)
      .def_property_readonly("case", [](const NounInstance& i) { return i.morph_case.tag; })
      .def_property_readonly("lemma", &NounInstance::lemma)
      .def_property_readonly("form", &NounInstance::form)
      .def("__repr__", [](const NounInstance& i) {
        return "<NounInstance " + i.sent_id + ":" + std::to_string(i.target_index) + " " + i.lemma() + " -> " +
               i.form() + " " + i.morph_case.tag + ">";
      });

  m.def("parse_conllu", [](const std::string& text) { return parse_conllu(text); }, py::arg("text"),
        "Parse CoNLL-U text into sentences.");
  m.def("to_conllu", [](const std::vector<Sentence>& s) { return to_conllu(std::span<const Sentence>(s)); },
        py::arg("sentences"));
  m.def(
      "extract_instances",
      [](const std::vector<Sentence>& sentences, const std::optional<std::string>& cases) {
        return instances_of(sentences, inventory_from(cases));
      },
      py::arg("sentences"), py::arg("cases") = py::none(), "Cased noun instances, e.g. cases='Nom,Gen,Acc,Dat'.");
  m.def(
      "split_corpus",
      [](const std::vector<Sentence>& sentences, std::uint64_t seed, std::tuple<double, double, double> ratios,
         std::tuple<std::size_t, std::size_t> bounds, const std::optional<std::string>& cases) {
        const auto [tr, dv, te] = ratios;
        const auto [lo, hi] = bounds;
        return split_dict(split_corpus(sentences, seed, SplitRatios{tr, dv, te}, LengthBounds{lo, hi},
                                       inventory_from(cases)));
      },
      py::arg("sentences"), py::arg("seed") = 42, py::arg("ratios") = std::make_tuple(0.09, 0.01, 0.90),
      py::arg("bounds") = std::make_tuple(std::size_t{5}, std::size_t{40}), py::arg("cases") = py::none());

  m.def(
      "levenshtein", [](const std::string& a, const std::string& b) { return levenshtein(utf8::decode(a), utf8::decode(b)); },
      py::arg("a"), py::arg("b"), "Character-level edit distance.");
  m.def(
      "sentence_bleu",
      [](const std::vector<std::string>& candidate, const std::vector<std::string>& reference, std::size_t max_order) {
        return sentence_bleu(candidate, reference, max_order);
      },
      py::arg("candidate"), py::arg("reference"), py::arg("max_order") = 4);

  py::class_<BackoffInflector>(m, "NgramModel")
      .def_static(
          "train",
          [](const std::vector<NounInstance>& instances, const std::optional<std::string>& cases) {
            return train_ngram(instances, inventory_from(cases));
          },
          py::arg("instances"), py::arg("cases") = py::none())
      .def_static("from_json", &BackoffInflector::from_json, py::arg("text"))
      .def("to_json", &BackoffInflector::to_json)
      .def(
          "predict",
          [](const BackoffInflector& b, std::optional<std::string> article, const std::string& lemma) {
            const auto p = b.predict(article, lemma);
            return std::make_pair(p.form, to_string(p.level));
          },
          py::arg("article"), py::arg("lemma"), "Returns (form, backoff level).")
      .def(
          "predict_case",
          [](const BackoffInflector& b, std::optional<std::string> article,
             const std::string& lemma) -> std::optional<std::string> {
            const auto c = b.predict_case(article, lemma);
            if (!c) return std::nullopt;
            return c->tag;
          },
          py::arg("article"), py::arg("lemma"));

  py::class_<ModelBundle>(m, "LstmModel")
      .def_static(
          "train",
          [](const std::vector<Sentence>& sentences, const std::vector<std::string>& train_ids,
             const std::vector<std::string>& dev_ids, std::uint64_t seed, std::size_t epochs, std::size_t d_e,
             std::size_t d_h, double learning_rate, std::size_t patience, std::size_t window,
             const std::optional<std::string>& cases) {
            TrainConfig cfg;
            cfg.seed = seed;
            cfg.epochs = epochs;
            cfg.d_e = d_e;
            cfg.d_h = d_h;
            cfg.learning_rate = learning_rate;
            cfg.patience = patience;
            cfg.window = window;
            const CaseInventory inv = inventory_from(cases);
            const Treebank tb(sentences);
            const Alphabet alphabet = build_alphabet(tb.select(train_ids));
            const auto train_insts = app::instances_for(tb, train_ids, inv);
            const auto dev_insts = app::instances_for(tb, dev_ids, inv);
            const auto train_set = prepare_examples(train_insts, tb, alphabet, inv, window);
            const auto dev_set = prepare_examples(dev_insts, tb, alphabet, inv, window);
            TrainResult result;
            {
              py::gil_scoped_release release;
              result = train(cfg, train_set, dev_set, alphabet.size(), inv.size());
            }
            return std::make_pair(ModelBundle{result.params, alphabet, inv}, history_to_json(cfg, result));
          },
          py::arg("sentences"), py::arg("train_ids"), py::arg("dev_ids") = std::vector<std::string>{},
          py::arg("seed") = 42, py::arg("epochs") = 100, py::arg("d_e") = 32, py::arg("d_h") = 128,
          py::arg("learning_rate") = 1e-3, py::arg("patience") = 5, py::arg("window") = 3,
          py::arg("cases") = py::none(), "Returns (model, history JSON).")
      .def_static("load", [](const std::string& path) { return load_model(path); }, py::arg("path"))
      .def("save", [](const ModelBundle& b, const std::string& path) { save_model(b, path); }, py::arg("path"))
      .def_property_readonly("cases", [](const ModelBundle& b) { return b.inventory.to_string(); })
      .def_property_readonly("alphabet_size", [](const ModelBundle& b) { return b.alphabet.size(); })
      .def_property_readonly("parameter_count", [](const ModelBundle& b) { return b.params.parameter_count(); })
      .def(
          "predict",
          [](const ModelBundle& b, std::optional<std::string> article, const std::string& lemma,
             std::vector<std::string> left, std::vector<std::string> right, std::size_t window) {
            if (lemma.empty()) throw Error("lemma must be non-empty");
            if (article) left.push_back(*article);
            if (left.size() > window) left.erase(left.begin(), left.end() - static_cast<std::ptrdiff_t>(window));
            if (right.size() > window) right.resize(window);
            const std::u32string chars = utf8::decode(lemma);
            const auto ids = encode_context(left, chars, right, b.alphabet);
            const auto p = predict(b, ids, TrainConfig{}.max_decode_length(chars.size()));
            return py::make_tuple(p.form, b.inventory.at(p.case_index).tag, p.case_probs[p.case_index]);
          },
          py::arg("article"), py::arg("lemma"), py::arg("left") = std::vector<std::string>{},
          py::arg("right") = std::vector<std::string>{}, py::arg("window") = 3,
          "Returns (form, case, case probability).");

  m.def(
      "gradient_check",
      [](std::uint64_t seed) {
        const auto r = gradient_check(seed);
        py::dict d;
        d["max_relative_error"] = r.max_relative_error;
        d["worst_tensor"] = r.worst_tensor;
        d["worst_index"] = r.worst_index;
        d["parameters_checked"] = r.parameters_checked;
        return d;
      },
      py::arg("seed") = 42);
}
