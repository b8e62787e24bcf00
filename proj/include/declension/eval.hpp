#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "declension/corpus.hpp"

namespace declension {

/// Unit-cost edit distance over Unicode scalar values.
std::size_t levenshtein(std::u32string_view a, std::u32string_view b);

/// Sentence-level BLEU with clipped n-gram precisions up to
/// min(max_order, |candidate|), no smoothing, and the usual brevity penalty.
double sentence_bleu(std::span<const std::string> candidate, std::span<const std::string> reference,
                     std::size_t max_order = 4);

/// Token forms of `s` with the given target positions (0-based) replaced.
std::vector<std::string> reconstruct_sentence(const Sentence& s, const std::map<std::size_t, std::string>& predictions);

/// What a system produced for one NounInstance.
struct Prediction {
  std::string form;
  std::optional<MorphCase> morph_case;
};

struct CaseStats {
  std::size_t count = 0;
  double word_accuracy = 0.0;
  double mean_norm_edit = 0.0;
};

struct EvalReport {
  double avg_bleu = 0.0;
  double word_accuracy = 0.0;
  double mean_norm_edit = 0.0;
  double char_accuracy = 0.0;
  double case_accuracy = 0.0;
  std::map<std::string, CaseStats> per_case;  // keyed by case tag; every inventory case present
  std::vector<std::string> confusion_labels;   // inventory tags, then "none" (column only)
  std::vector<std::vector<std::size_t>> case_confusion;  // rows gold, cols predicted
  std::size_t n_instances = 0;
  std::size_t n_sentences = 0;
};

/// Aggregates metrics over `instances` (aligned one-to-one with `predictions`).
/// Sums run in (sent_id, target_index) order, so the result does not depend on
/// instance order.
EvalReport evaluate(const Treebank& treebank, std::span<const NounInstance> instances,
                    std::span<const Prediction> predictions, const CaseInventory& inventory);

std::string report_to_json(const EvalReport& report);

}  // namespace declension
