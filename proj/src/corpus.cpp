#include "declension/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include "declension/error.hpp"
#include "declension/json_io.hpp"
#include "declension/numerics.hpp"
#include "declension/utf8.hpp"

namespace declension {
namespace {

std::vector<std::string_view> split_on(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.push_back(text.substr(start));
      return parts;
    }
    parts.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r'; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::optional<int> parse_int(std::string_view s) {
  int value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

// Token plus the source line it came from, for sentence-level diagnostics.
struct PendingToken {
  Token token;
  std::size_t line_no;
  std::string line;
};

struct SentenceBuilder {
  std::optional<std::string> sent_id;
  std::optional<std::string> text;
  std::vector<PendingToken> tokens;

  bool empty() const { return tokens.empty(); }

  Sentence finish(std::string fallback_id) {
    Sentence s;
    s.sent_id = sent_id.value_or(std::move(fallback_id));
    s.text = text;
    const int n = static_cast<int>(tokens.size());
    for (int k = 0; k < n; ++k) {
      const PendingToken& p = tokens[static_cast<std::size_t>(k)];
      if (p.token.id != k + 1) {
        throw ParseError(p.line_no, p.line, "token id " + std::to_string(p.token.id) + " breaks the 1..n sequence");
      }
      if (p.token.head > n) {
        throw ParseError(p.line_no, p.line, "head " + std::to_string(p.token.head) + " is not a token of this sentence");
      }
      s.tokens.push_back(p.token);
    }
    *this = SentenceBuilder{};
    return s;
  }
};

}  // namespace

std::string case_display_name(std::string_view tag) {
  static const std::map<std::string, std::string, std::less<>> kNames = {
      {"Nom", "Nominative"}, {"Gen", "Genitive"},     {"Acc", "Accusative"}, {"Dat", "Dative"},
      {"Voc", "Vocative"},   {"Ins", "Instrumental"}, {"Loc", "Locative"},   {"Abl", "Ablative"}};
  const auto it = kNames.find(tag);
  return it == kNames.end() ? std::string(tag) : it->second;
}

CaseInventory CaseInventory::default_inventory() {
  return CaseInventory({{"Nom"}, {"Gen"}, {"Acc"}, {"Dat"}});
}

CaseInventory CaseInventory::parse(std::string_view list) {
  std::vector<MorphCase> cases;
  for (std::string_view part : split_on(list, ',')) {
    part = trim(part);
    if (!part.empty()) cases.push_back({std::string(part)});
  }
  return CaseInventory(std::move(cases));
}

CaseInventory::CaseInventory(std::vector<MorphCase> cases) : cases_(std::move(cases)) {
  if (cases_.empty()) throw Error("case inventory must not be empty");
  std::set<std::string> seen;
  for (const auto& c : cases_) {
    if (c.tag.empty()) throw Error("case inventory contains an empty tag");
    if (!seen.insert(c.tag).second) throw Error("case inventory lists '" + c.tag + "' twice");
  }
}

std::optional<std::size_t> CaseInventory::index_of(std::string_view tag) const noexcept {
  for (std::size_t i = 0; i < cases_.size(); ++i) {
    if (cases_[i].tag == tag) return i;
  }
  return std::nullopt;
}

std::string CaseInventory::to_string() const {
  std::string out;
  for (const auto& c : cases_) {
    if (!out.empty()) out += ',';
    out += c.tag;
  }
  return out;
}

std::string_view to_string(GrammaticalNumber n) noexcept {
  switch (n) {
    case GrammaticalNumber::Sing: return "Sing";
    case GrammaticalNumber::Plur: return "Plur";
    case GrammaticalNumber::Unknown: break;
  }
  return "Unknown";
}

std::string_view to_string(Gender g) noexcept {
  switch (g) {
    case Gender::Masc: return "Masc";
    case Gender::Fem: return "Fem";
    case Gender::Neut: return "Neut";
    case Gender::Unknown: break;
  }
  return "Unknown";
}

std::optional<std::string> Token::feature(const std::string& name) const {
  const auto it = feats.find(name);
  if (it == feats.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> Sentence::words() const {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(t.form);
  return out;
}

std::vector<Sentence> parse_conllu(std::string_view text, std::string_view id_prefix) {
  std::vector<Sentence> sentences;
  SentenceBuilder current;
  std::size_t line_no = 0;

  const auto flush = [&] {
    if (!current.empty()) {
      sentences.push_back(current.finish(std::string(id_prefix) + std::to_string(sentences.size() + 1)));
    } else {
      current = SentenceBuilder{};
    }
  };

  for (std::string_view raw : split_on(text, '\n')) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
    if (trim(raw).empty()) {
      flush();
      continue;
    }
    if (raw.front() == '#') {
      const std::string_view body = trim(raw.substr(1));
      const std::size_t eq = body.find('=');
      if (eq != std::string_view::npos) {
        const std::string_view key = trim(body.substr(0, eq));
        const std::string value(trim(body.substr(eq + 1)));
        if (key == "sent_id") current.sent_id = value;
        else if (key == "text") current.text = value;
      }
      continue;
    }

    const auto cols = split_on(raw, '\t');
    if (cols.size() != 10) {
      throw ParseError(line_no, std::string(raw),
                       "expected 10 tab-separated columns, found " + std::to_string(cols.size()));
    }
    if (cols[0].find('-') != std::string_view::npos || cols[0].find('.') != std::string_view::npos) {
      continue;  // multi-word token range or empty node
    }
    Token tok;
    const auto id = parse_int(cols[0]);
    if (!id || *id < 1) throw ParseError(line_no, std::string(raw), "unparseable token id '" + std::string(cols[0]) + "'");
    const auto head = parse_int(cols[6]);
    if (!head || *head < 0) throw ParseError(line_no, std::string(raw), "unparseable head '" + std::string(cols[6]) + "'");
    if (*head == *id) throw ParseError(line_no, std::string(raw), "token is its own head");
    if (cols[1].empty() || cols[2].empty()) throw ParseError(line_no, std::string(raw), "empty form or lemma");
    try {
      utf8::decode(cols[1]);
      utf8::decode(cols[2]);
    } catch (const Error& e) {
      throw ParseError(line_no, std::string(raw), e.what());
    }
    tok.id = *id;
    tok.form = std::string(cols[1]);
    tok.lemma = std::string(cols[2]);
    tok.upos = std::string(cols[3]);
    if (cols[5] != "_") {
      for (std::string_view feat : split_on(cols[5], '|')) {
        const std::size_t eq = feat.find('=');
        if (eq == std::string_view::npos || eq == 0 || eq + 1 == feat.size()) {
          throw ParseError(line_no, std::string(raw), "malformed feature '" + std::string(feat) + "'");
        }
        tok.feats[std::string(feat.substr(0, eq))] = std::string(feat.substr(eq + 1));
      }
    }
    tok.head = *head;
    tok.deprel = std::string(cols[7]);
    current.tokens.push_back({std::move(tok), line_no, std::string(raw)});
  }
  flush();
  return sentences;
}

std::string to_conllu(const Sentence& s) {
  std::string out = "# sent_id = " + s.sent_id + "\n";
  if (s.text) out += "# text = " + *s.text + "\n";
  for (const auto& t : s.tokens) {
    std::string feats;
    for (const auto& [k, v] : t.feats) {
      if (!feats.empty()) feats += '|';
      feats += k + "=" + v;
    }
    if (feats.empty()) feats = "_";
    out += std::to_string(t.id) + "\t" + t.form + "\t" + t.lemma + "\t" + t.upos + "\t_\t" + feats + "\t" +
           std::to_string(t.head) + "\t" + t.deprel + "\t_\t_\n";
  }
  out += "\n";
  return out;
}

std::string to_conllu(std::span<const Sentence> sentences) {
  std::string out;
  for (const auto& s : sentences) out += to_conllu(s);
  return out;
}

std::string NounInstance::lemma() const { return utf8::encode(lemma_chars); }
std::string NounInstance::form() const { return utf8::encode(form_chars); }

std::vector<NounInstance> extract_instances(const Sentence& s, const CaseInventory& inventory) {
  std::vector<NounInstance> out;
  for (std::size_t i = 0; i < s.tokens.size(); ++i) {
    const Token& tok = s.tokens[i];
    if (tok.upos != "NOUN") continue;
    const auto case_tag = tok.feature("Case");
    if (!case_tag || !inventory.contains(*case_tag)) continue;

    NounInstance inst;
    inst.sent_id = s.sent_id;
    inst.target_index = i;
    inst.morph_case = MorphCase{*case_tag};
    for (std::size_t j = i; j-- > 0;) {
      const Token& cand = s.tokens[j];
      if (cand.deprel == "det" && cand.head == tok.id) {
        inst.article_index = j;
        inst.article = cand.form;
        break;
      }
    }
    if (const auto num = tok.feature("Number")) {
      if (*num == "Sing") inst.number = GrammaticalNumber::Sing;
      else if (*num == "Plur") inst.number = GrammaticalNumber::Plur;
    }
    if (const auto gen = tok.feature("Gender")) {
      if (*gen == "Masc") inst.gender = Gender::Masc;
      else if (*gen == "Fem") inst.gender = Gender::Fem;
      else if (*gen == "Neut") inst.gender = Gender::Neut;
    }
    inst.lemma_chars = utf8::decode(tok.lemma);
    inst.form_chars = utf8::decode(tok.form);
    out.push_back(std::move(inst));
  }
  return out;
}

DatasetSplit split_corpus(std::span<const Sentence> sentences, std::uint64_t seed, SplitRatios ratios,
                          LengthBounds bounds, const CaseInventory& inventory) {
  if (ratios.train < 0.0 || ratios.dev < 0.0 || ratios.test < 0.0) throw Error("split ratios must be non-negative");
  if (std::abs(ratios.train + ratios.dev + ratios.test - 1.0) > 1e-9) {
    throw Error("split ratios must sum to 1.0");
  }
  if (bounds.min_tokens > bounds.max_tokens) throw Error("length bounds require min <= max");

  std::vector<std::string> ids;
  for (const auto& s : sentences) {
    if (s.tokens.size() < bounds.min_tokens || s.tokens.size() > bounds.max_tokens) continue;
    if (extract_instances(s, inventory).empty()) continue;
    ids.push_back(s.sent_id);
  }
  if (ids.empty()) throw Error("empty corpus after filtering");

  Prng prng(seed);
  shuffle(ids, prng);

  // The epsilon keeps products such as 0.29 * 100 from flooring to 28.
  const double n = static_cast<double>(ids.size());
  const auto n_train = static_cast<std::size_t>(std::floor(ratios.train * n + 1e-9));
  const auto n_dev = std::min(static_cast<std::size_t>(std::floor(ratios.dev * n + 1e-9)), ids.size() - n_train);

  DatasetSplit split;
  split.seed = seed;
  split.ratios = ratios;
  split.bounds = bounds;
  split.train.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.dev.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_train),
                   ids.begin() + static_cast<std::ptrdiff_t>(n_train + n_dev));
  split.test.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_train + n_dev), ids.end());
  return split;
}

std::string split_to_json(const DatasetSplit& split) {
  Json j;
  j["seed"] = split.seed;
  j["ratios"] = Json::array({split.ratios.train, split.ratios.dev, split.ratios.test});
  j["bounds"] = Json::array({split.bounds.min_tokens, split.bounds.max_tokens});
  j["train"] = split.train;
  j["dev"] = split.dev;
  j["test"] = split.test;
  return dump_canonical(j);
}

DatasetSplit split_from_json(std::string_view text) {
  const Json j = parse_json(text);
  try {
    DatasetSplit split;
    split.seed = j.at("seed").get<std::uint64_t>();
    const auto& r = j.at("ratios");
    split.ratios = {r.at(0).get<double>(), r.at(1).get<double>(), r.at(2).get<double>()};
    const auto& b = j.at("bounds");
    split.bounds = {b.at(0).get<std::size_t>(), b.at(1).get<std::size_t>()};
    split.train = j.at("train").get<std::vector<std::string>>();
    split.dev = j.at("dev").get<std::vector<std::string>>();
    split.test = j.at("test").get<std::vector<std::string>>();
    return split;
  } catch (const Json::exception& e) {
    throw Error(std::string("malformed split manifest: ") + e.what());
  }
}

Alphabet::Alphabet(std::vector<char32_t> chars) : chars_(std::move(chars)) {
  std::sort(chars_.begin(), chars_.end());
  chars_.erase(std::unique(chars_.begin(), chars_.end()), chars_.end());
  for (std::size_t i = 0; i < chars_.size(); ++i) {
    index_.emplace(chars_[i], static_cast<SymbolId>(kReserved + i));
  }
}

SymbolId Alphabet::encode(char32_t c) const noexcept {
  const auto it = index_.find(c);
  return it == index_.end() ? kUnk : it->second;
}

char32_t Alphabet::decode(SymbolId id) const {
  if (id < kReserved || id >= size()) {
    throw Error("symbol id " + std::to_string(id) + " is not a character of this alphabet");
  }
  return chars_[id - kReserved];
}

std::string Alphabet::decode(std::span<const SymbolId> ids) const {
  std::u32string chars;
  for (SymbolId id : ids) {
    if (id == kUnk) chars.push_back(U'\uFFFD');
    else chars.push_back(decode(id));
  }
  return utf8::encode(chars);
}

Alphabet build_alphabet(std::span<const Sentence> train_sentences) {
  std::set<char32_t> seen;
  for (const auto& s : train_sentences) {
    for (const auto& t : s.tokens) {
      for (char32_t c : utf8::decode(t.form)) seen.insert(c);
      for (char32_t c : utf8::decode(t.lemma)) seen.insert(c);
    }
  }
  if (seen.empty()) throw Error("cannot build an alphabet from an empty training split");
  return Alphabet(std::vector<char32_t>(seen.begin(), seen.end()));
}

std::vector<SymbolId> encode_context(std::span<const std::string> left_words, std::u32string_view lemma,
                                     std::span<const std::string> right_words, const Alphabet& alphabet) {
  std::vector<SymbolId> ids{Alphabet::kBos};
  for (const auto& w : left_words) {
    for (char32_t c : utf8::decode(w)) ids.push_back(alphabet.encode(c));
    ids.push_back(Alphabet::kSep);
  }
  if (left_words.empty()) ids.push_back(Alphabet::kSep);
  for (char32_t c : lemma) ids.push_back(alphabet.encode(c));
  ids.push_back(Alphabet::kSep);
  for (std::size_t k = 0; k < right_words.size(); ++k) {
    if (k > 0) ids.push_back(Alphabet::kSep);
    for (char32_t c : utf8::decode(right_words[k])) ids.push_back(alphabet.encode(c));
  }
  ids.push_back(Alphabet::kEos);
  return ids;
}

std::vector<SymbolId> encode_target(std::u32string_view form, const Alphabet& alphabet) {
  std::vector<SymbolId> ids;
  ids.reserve(form.size() + 1);
  for (char32_t c : form) ids.push_back(alphabet.encode(c));
  ids.push_back(Alphabet::kEos);
  return ids;
}

EncodedInstance encode_instance(const NounInstance& inst, const Sentence& s, const Alphabet& alphabet,
                                std::size_t window) {
  const std::size_t t = inst.target_index;
  const std::size_t left_begin = t > window ? t - window : 0;
  const std::size_t right_end = std::min(s.tokens.size(), t + 1 + window);
  std::vector<std::string> left;
  std::vector<std::string> right;
  for (std::size_t k = left_begin; k < t; ++k) left.push_back(s.tokens[k].form);
  for (std::size_t k = t + 1; k < right_end; ++k) right.push_back(s.tokens[k].form);
  return {encode_context(left, inst.lemma_chars, right, alphabet), encode_target(inst.form_chars, alphabet)};
}

Treebank::Treebank(std::vector<Sentence> sentences) : sentences_(std::move(sentences)) {
  for (std::size_t i = 0; i < sentences_.size(); ++i) {
    if (!by_id_.emplace(sentences_[i].sent_id, i).second) {
      throw Error("duplicate sent_id '" + sentences_[i].sent_id + "'");
    }
  }
}

const Sentence& Treebank::at(const std::string& sent_id) const {
  const auto it = by_id_.find(sent_id);
  if (it == by_id_.end()) throw Error("unknown sent_id '" + sent_id + "'");
  return sentences_[it->second];
}

std::vector<Sentence> Treebank::select(std::span<const std::string> ids) const {
  std::vector<Sentence> out;
  out.reserve(ids.size());
  for (const auto& id : ids) out.push_back(at(id));
  return out;
}

}  // namespace declension
