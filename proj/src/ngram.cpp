#include "declension/ngram.hpp"

#include "declension/error.hpp"
#include "declension/json_io.hpp"
#include "declension/utf8.hpp"

namespace declension {
namespace {

constexpr std::string_view kFormatTag = "declension-ngram";
constexpr int kFormatVersion = 1;

// Highest count wins; std::map order makes the first maximum the
// lexicographically smallest form.
const std::string& argmax(const BackoffInflector::Counts& counts) {
  auto best = counts.begin();
  for (auto it = counts.begin(); it != counts.end(); ++it) {
    if (it->second > best->second) best = it;
  }
  return best->first;
}

Json nested_to_json(const std::map<BackoffInflector::PairKey, BackoffInflector::Counts>& table) {
  Json out = Json::object();
  for (const auto& [key, counts] : table) out[key.first][key.second] = counts;
  return out;
}

std::map<BackoffInflector::PairKey, BackoffInflector::Counts> nested_from_json(const Json& j) {
  std::map<BackoffInflector::PairKey, BackoffInflector::Counts> out;
  for (auto art = j.begin(); art != j.end(); ++art) {
    for (auto lem = art.value().begin(); lem != art.value().end(); ++lem) {
      out[{art.key(), lem.key()}] = lem.value().get<BackoffInflector::Counts>();
    }
  }
  return out;
}

}  // namespace

std::string_view to_string(BackoffLevel level) noexcept {
  switch (level) {
    case BackoffLevel::Pair: return "Pair";
    case BackoffLevel::Lemma: return "Lemma";
    case BackoffLevel::Identity: break;
  }
  return "Identity";
}

void BackoffInflector::observe(const NounInstance& inst) {
  const std::string lemma = inst.lemma();
  const std::string form = inst.form();
  ++lemma_counts_[lemma][form];
  if (inst.article) {
    const PairKey key{utf8::to_lower(*inst.article), lemma};
    ++pair_counts_[key][form];
    ++case_pair_counts_[key][inst.morph_case.tag];
  }
}

BackoffInflector::FormPrediction BackoffInflector::predict(const std::optional<std::string>& article,
                                                           std::string_view lemma) const {
  if (lemma.empty()) throw Error("predict requires a non-empty lemma");
  if (article) {
    const auto it = pair_counts_.find(PairKey{utf8::to_lower(*article), std::string(lemma)});
    if (it != pair_counts_.end()) return {argmax(it->second), BackoffLevel::Pair};
  }
  const auto it = lemma_counts_.find(std::string(lemma));
  if (it != lemma_counts_.end()) return {argmax(it->second), BackoffLevel::Lemma};
  return {std::string(lemma), BackoffLevel::Identity};
}

std::optional<MorphCase> BackoffInflector::predict_case(const std::optional<std::string>& article,
                                                        std::string_view lemma) const {
  if (lemma.empty()) throw Error("predict_case requires a non-empty lemma");
  if (!article) return std::nullopt;
  const auto it = case_pair_counts_.find(PairKey{utf8::to_lower(*article), std::string(lemma)});
  if (it == case_pair_counts_.end()) return std::nullopt;
  std::optional<MorphCase> best;
  std::uint64_t best_count = 0;
  for (const auto& c : inventory_.cases()) {
    const auto found = it->second.find(c.tag);
    if (found != it->second.end() && found->second > best_count) {
      best = c;
      best_count = found->second;
    }
  }
  return best;
}

std::string BackoffInflector::to_json() const {
  Json j;
  j["format"] = kFormatTag;
  j["version"] = kFormatVersion;
  Json cases = Json::array();
  for (const auto& c : inventory_.cases()) cases.push_back(c.tag);
  j["inventory"] = cases;
  j["pair_counts"] = nested_to_json(pair_counts_);
  j["lemma_counts"] = lemma_counts_;
  j["case_pair_counts"] = nested_to_json(case_pair_counts_);
  return dump_canonical(j);
}

BackoffInflector BackoffInflector::from_json(std::string_view text) {
  const Json j = parse_json(text);
  try {
    if (!j.is_object() || j.value("format", "") != kFormatTag) throw FormatError("not an n-gram model file");
    const int version = j.at("version").get<int>();
    if (version != kFormatVersion) {
      throw FormatError("unsupported n-gram model version " + std::to_string(version) + " (supported: " +
                        std::to_string(kFormatVersion) + ")");
    }
    std::vector<MorphCase> cases;
    for (const auto& tag : j.at("inventory")) cases.push_back({tag.get<std::string>()});
    BackoffInflector model{CaseInventory(std::move(cases))};
    model.pair_counts_ = nested_from_json(j.at("pair_counts"));
    model.lemma_counts_ = j.at("lemma_counts").get<std::map<std::string, Counts>>();
    model.case_pair_counts_ = nested_from_json(j.at("case_pair_counts"));
    return model;
  } catch (const Json::exception& e) {
    throw FormatError(std::string("malformed n-gram model: ") + e.what());
  }
}

BackoffInflector train_ngram(std::span<const NounInstance> instances, const CaseInventory& inventory) {
  BackoffInflector model(inventory);
  for (const auto& inst : instances) model.observe(inst);
  return model;
}

}  // namespace declension
