#include "declension/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "declension/error.hpp"
#include "declension/json_io.hpp"
#include "declension/utf8.hpp"

namespace declension {

std::size_t levenshtein(std::u32string_view a, std::u32string_view b) {
  std::vector<std::size_t> prev(b.size() + 1);
  std::vector<std::size_t> cur(b.size() + 1);
  std::iota(prev.begin(), prev.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double sentence_bleu(std::span<const std::string> candidate, std::span<const std::string> reference,
                     std::size_t max_order) {
  if (reference.empty()) throw Error("sentence_bleu requires a non-empty reference");
  if (candidate.empty()) return 0.0;

  const std::size_t orders = std::min(max_order, candidate.size());
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= orders; ++n) {
    std::map<std::vector<std::string>, std::size_t> ref_counts;
    for (std::size_t i = 0; i + n <= reference.size(); ++i) {
      ++ref_counts[{reference.begin() + static_cast<std::ptrdiff_t>(i),
                    reference.begin() + static_cast<std::ptrdiff_t>(i + n)}];
    }
    std::map<std::vector<std::string>, std::size_t> cand_counts;
    for (std::size_t i = 0; i + n <= candidate.size(); ++i) {
      ++cand_counts[{candidate.begin() + static_cast<std::ptrdiff_t>(i),
                     candidate.begin() + static_cast<std::ptrdiff_t>(i + n)}];
    }
    std::size_t matched = 0;
    for (const auto& [gram, count] : cand_counts) {
      const auto it = ref_counts.find(gram);
      if (it != ref_counts.end()) matched += std::min(count, it->second);
    }
    if (matched == 0) return 0.0;
    const double total = static_cast<double>(candidate.size() - n + 1);
    log_sum += std::log(static_cast<double>(matched) / total);
  }
  const double c = static_cast<double>(candidate.size());
  const double r = static_cast<double>(reference.size());
  const double brevity = c < r ? std::exp(1.0 - r / c) : 1.0;
  return brevity * std::exp(log_sum / static_cast<double>(orders));
}

std::vector<std::string> reconstruct_sentence(const Sentence& s,
                                              const std::map<std::size_t, std::string>& predictions) {
  std::vector<std::string> words = s.words();
  for (const auto& [index, form] : predictions) {
    if (index >= words.size()) {
      throw Error("prediction index " + std::to_string(index) + " is outside sentence '" + s.sent_id + "'");
    }
    words[index] = form;
  }
  return words;
}

EvalReport evaluate(const Treebank& treebank, std::span<const NounInstance> instances,
                    std::span<const Prediction> predictions, const CaseInventory& inventory) {
  if (instances.size() != predictions.size()) {
    throw Error("evaluation misaligned: " + std::to_string(instances.size()) + " instances vs " +
                std::to_string(predictions.size()) + " predictions");
  }
  if (instances.empty()) throw Error("empty evaluation set");

  std::vector<std::size_t> order(instances.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = instances[a];
    const auto& y = instances[b];
    return std::tie(x.sent_id, x.target_index) < std::tie(y.sent_id, y.target_index);
  });

  EvalReport report;
  const std::size_t n_cases = inventory.size();
  for (const auto& c : inventory.cases()) {
    report.per_case[c.tag] = {};
    report.confusion_labels.push_back(c.tag);
  }
  report.confusion_labels.push_back("none");
  report.case_confusion.assign(n_cases, std::vector<std::size_t>(n_cases + 1, 0));

  std::map<std::string, std::size_t> exact_by_case;
  std::map<std::string, double> edit_by_case;
  std::size_t exact = 0;
  std::size_t case_hits = 0;
  double edit_sum = 0.0;
  double bleu_sum = 0.0;

  std::map<std::size_t, std::string> sentence_predictions;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const NounInstance& inst = instances[order[k]];
    const Prediction& pred = predictions[order[k]];
    const auto gold_row = inventory.index_of(inst.morph_case.tag);
    if (!gold_row) throw Error("instance case '" + inst.morph_case.tag + "' is not in the inventory");

    const std::u32string predicted = utf8::decode(pred.form);
    const std::size_t dist = levenshtein(predicted, inst.form_chars);
    const std::size_t denom = std::max({predicted.size(), inst.form_chars.size(), std::size_t{1}});
    const double norm_edit = static_cast<double>(dist) / static_cast<double>(denom);
    const bool is_exact = predicted == inst.form_chars;

    exact += is_exact ? 1 : 0;
    edit_sum += norm_edit;
    auto& stats = report.per_case[inst.morph_case.tag];
    ++stats.count;
    exact_by_case[inst.morph_case.tag] += is_exact ? 1 : 0;
    edit_by_case[inst.morph_case.tag] += norm_edit;

    std::size_t col = n_cases;
    if (pred.morph_case) {
      const auto idx = inventory.index_of(pred.morph_case->tag);
      if (idx) col = *idx;
    }
    ++report.case_confusion[*gold_row][col];
    case_hits += col == *gold_row ? 1 : 0;

    sentence_predictions[inst.target_index] = pred.form;
    const bool last_of_sentence = k + 1 == order.size() || instances[order[k + 1]].sent_id != inst.sent_id;
    if (last_of_sentence) {
      const Sentence& s = treebank.at(inst.sent_id);
      const auto candidate = reconstruct_sentence(s, sentence_predictions);
      bleu_sum += sentence_bleu(candidate, s.words());
      ++report.n_sentences;
      sentence_predictions.clear();
    }
  }

  const auto n = static_cast<double>(instances.size());
  report.n_instances = instances.size();
  report.word_accuracy = static_cast<double>(exact) / n;
  report.mean_norm_edit = edit_sum / n;
  report.char_accuracy = 1.0 - report.mean_norm_edit;
  report.case_accuracy = static_cast<double>(case_hits) / n;
  report.avg_bleu = bleu_sum / static_cast<double>(report.n_sentences);
  for (auto& [tag, stats] : report.per_case) {
    if (stats.count == 0) continue;
    stats.word_accuracy = static_cast<double>(exact_by_case[tag]) / static_cast<double>(stats.count);
    stats.mean_norm_edit = edit_by_case[tag] / static_cast<double>(stats.count);
  }
  return report;
}

std::string report_to_json(const EvalReport& report) {
  Json j;
  j["avg_bleu"] = report.avg_bleu;
  j["word_accuracy"] = report.word_accuracy;
  j["mean_norm_edit"] = report.mean_norm_edit;
  j["char_accuracy"] = report.char_accuracy;
  j["case_accuracy"] = report.case_accuracy;
  Json per_case = Json::object();
  for (const auto& [tag, stats] : report.per_case) {
    per_case[tag] = {{"count", stats.count},
                     {"word_accuracy", stats.word_accuracy},
                     {"mean_norm_edit", stats.mean_norm_edit}};
  }
  j["per_case"] = per_case;
  j["confusion_labels"] = report.confusion_labels;
  j["case_confusion"] = report.case_confusion;
  j["n_instances"] = report.n_instances;
  j["n_sentences"] = report.n_sentences;
  return dump_canonical(j);
}

}  // namespace declension
