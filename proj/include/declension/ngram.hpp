#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>

#include "declension/corpus.hpp"

namespace declension {

enum class BackoffLevel { Pair, Lemma, Identity };
std::string_view to_string(BackoffLevel level) noexcept;

/// Count-based article+noun baseline. Predicts the most frequent form seen
/// with (article, lemma), backing off to the lemma alone and finally to the
/// lemma itself.
class BackoffInflector {
 public:
  using Counts = std::map<std::string, std::uint64_t>;
  using PairKey = std::pair<std::string, std::string>;  // (lowercased article, lemma)

  struct FormPrediction {
    std::string form;
    BackoffLevel level = BackoffLevel::Identity;
  };

  explicit BackoffInflector(CaseInventory inventory = CaseInventory::default_inventory())
      : inventory_(std::move(inventory)) {}

  void observe(const NounInstance& inst);

  FormPrediction predict(const std::optional<std::string>& article, std::string_view lemma) const;
  std::optional<MorphCase> predict_case(const std::optional<std::string>& article, std::string_view lemma) const;

  const CaseInventory& inventory() const noexcept { return inventory_; }
  const std::map<PairKey, Counts>& pair_counts() const noexcept { return pair_counts_; }
  const std::map<std::string, Counts>& lemma_counts() const noexcept { return lemma_counts_; }
  const std::map<PairKey, Counts>& case_pair_counts() const noexcept { return case_pair_counts_; }
  bool empty() const noexcept { return lemma_counts_.empty(); }

  /// Sorted-key JSON; identical models give identical bytes.
  std::string to_json() const;
  static BackoffInflector from_json(std::string_view text);

 private:
  CaseInventory inventory_;
  std::map<PairKey, Counts> pair_counts_;
  std::map<std::string, Counts> lemma_counts_;
  std::map<PairKey, Counts> case_pair_counts_;
};

BackoffInflector train_ngram(std::span<const NounInstance> instances,
                             const CaseInventory& inventory = CaseInventory::default_inventory());

}  // namespace declension
