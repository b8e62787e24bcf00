#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace declension {

/// A grammatical case, identified by its Universal Dependencies value (`Nom`, `Gen`, ...).
struct MorphCase {
  std::string tag;

  friend auto operator<=>(const MorphCase&, const MorphCase&) = default;
};

/// Human-readable name for a UD case tag ("Nom" -> "Nominative"); unknown tags echo.
std::string case_display_name(std::string_view tag);

/// Ordered, duplicate-free set of cases the pipeline works with.
class CaseInventory {
 public:
  /// Nominative, Genitive, Accusative, Dative.
  static CaseInventory default_inventory();
  /// Parses a comma-separated tag list such as "Nom,Gen,Acc".
  static CaseInventory parse(std::string_view list);

  explicit CaseInventory(std::vector<MorphCase> cases);

  std::size_t size() const noexcept { return cases_.size(); }
  const std::vector<MorphCase>& cases() const noexcept { return cases_; }
  const MorphCase& at(std::size_t i) const { return cases_.at(i); }
  bool contains(std::string_view tag) const noexcept { return index_of(tag).has_value(); }
  std::optional<std::size_t> index_of(std::string_view tag) const noexcept;
  std::string to_string() const;

  friend bool operator==(const CaseInventory&, const CaseInventory&) = default;

 private:
  std::vector<MorphCase> cases_;
};

enum class GrammaticalNumber { Sing, Plur, Unknown };
enum class Gender { Masc, Fem, Neut, Unknown };

std::string_view to_string(GrammaticalNumber n) noexcept;
std::string_view to_string(Gender g) noexcept;

struct Token {
  int id = 0;  // 1-based position
  std::string form;
  std::string lemma;
  std::string upos;
  std::map<std::string, std::string> feats;
  int head = 0;  // 0 = root
  std::string deprel;

  std::optional<std::string> feature(const std::string& name) const;
  friend bool operator==(const Token&, const Token&) = default;
};

struct Sentence {
  std::string sent_id;
  std::vector<Token> tokens;
  std::optional<std::string> text;

  std::vector<std::string> words() const;
  friend bool operator==(const Sentence&, const Sentence&) = default;
};

/// Parses CoNLL-U text. Multi-word ranges (`1-2`) and empty nodes (`1.1`) are
/// skipped. Sentences without a `# sent_id` comment get `id_prefix` followed by
/// their 1-based ordinal within the input. Throws ParseError on malformed lines.
std::vector<Sentence> parse_conllu(std::string_view text, std::string_view id_prefix = {});

/// Serializes the supported column subset (XPOS, DEPS and MISC written as `_`).
std::string to_conllu(const Sentence& s);
std::string to_conllu(std::span<const Sentence> sentences);

struct NounInstance {
  std::string sent_id;
  std::size_t target_index = 0;                 // 0-based position in Sentence::tokens
  std::optional<std::size_t> article_index;     // 0-based, always < target_index
  std::optional<std::string> article;           // article surface form, when present
  MorphCase morph_case;
  GrammaticalNumber number = GrammaticalNumber::Unknown;
  Gender gender = Gender::Unknown;
  std::u32string lemma_chars;
  std::u32string form_chars;

  std::string lemma() const;
  std::string form() const;
};

std::vector<NounInstance> extract_instances(const Sentence& s, const CaseInventory& inventory);

struct LengthBounds {
  std::size_t min_tokens = 5;
  std::size_t max_tokens = 40;
};

struct SplitRatios {
  double train = 0.09;
  double dev = 0.01;
  double test = 0.90;
};

struct DatasetSplit {
  std::uint64_t seed = 0;
  SplitRatios ratios;
  LengthBounds bounds;
  std::vector<std::string> train;
  std::vector<std::string> dev;
  std::vector<std::string> test;
};

/// Filters by length and presence of a qualifying noun, shuffles the surviving
/// ids with SplitMix64, and cuts floor(train*N), floor(dev*N), remainder.
DatasetSplit split_corpus(std::span<const Sentence> sentences, std::uint64_t seed, SplitRatios ratios,
                          LengthBounds bounds, const CaseInventory& inventory);

/// Split manifest as canonical JSON (sorted keys, 17-digit floats).
std::string split_to_json(const DatasetSplit& split);
DatasetSplit split_from_json(std::string_view text);

using SymbolId = std::uint32_t;

/// Character vocabulary with five reserved symbols in front.
class Alphabet {
 public:
  static constexpr SymbolId kPad = 0;
  static constexpr SymbolId kBos = 1;
  static constexpr SymbolId kEos = 2;
  static constexpr SymbolId kUnk = 3;
  static constexpr SymbolId kSep = 4;
  static constexpr std::size_t kReserved = 5;

  Alphabet() = default;
  /// Characters are deduplicated and sorted by code point.
  explicit Alphabet(std::vector<char32_t> chars);

  std::size_t size() const noexcept { return kReserved + chars_.size(); }
  const std::vector<char32_t>& chars() const noexcept { return chars_; }

  SymbolId encode(char32_t c) const noexcept;
  bool contains(char32_t c) const noexcept { return index_.count(c) != 0; }
  /// Inverse of encode for non-reserved ids; throws for reserved or out-of-range ids.
  char32_t decode(SymbolId id) const;
  std::string decode(std::span<const SymbolId> ids) const;

  friend bool operator==(const Alphabet& a, const Alphabet& b) { return a.chars_ == b.chars_; }

 private:
  std::vector<char32_t> chars_;
  std::unordered_map<char32_t, SymbolId> index_;
};

Alphabet build_alphabet(std::span<const Sentence> train_sentences);

struct EncodedInstance {
  std::vector<SymbolId> input_ids;
  std::vector<SymbolId> target_ids;
};

/// BOS, left words (SEP-separated), SEP, lemma, SEP, right words, EOS.
std::vector<SymbolId> encode_context(std::span<const std::string> left_words, std::u32string_view lemma,
                                     std::span<const std::string> right_words, const Alphabet& alphabet);

/// Gold form followed by EOS.
std::vector<SymbolId> encode_target(std::u32string_view form, const Alphabet& alphabet);

EncodedInstance encode_instance(const NounInstance& inst, const Sentence& s, const Alphabet& alphabet,
                                std::size_t window);

/// Sentences indexed by id; throws on duplicate ids.
class Treebank {
 public:
  Treebank() = default;
  explicit Treebank(std::vector<Sentence> sentences);

  const std::vector<Sentence>& sentences() const noexcept { return sentences_; }
  const Sentence& at(const std::string& sent_id) const;
  bool contains(const std::string& sent_id) const noexcept { return by_id_.count(sent_id) != 0; }
  std::vector<Sentence> select(std::span<const std::string> ids) const;

 private:
  std::vector<Sentence> sentences_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

}  // namespace declension
