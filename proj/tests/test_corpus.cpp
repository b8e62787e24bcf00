#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "declension/corpus.hpp"
#include "declension/error.hpp"
#include "declension/utf8.hpp"
#include "test_support.hpp"

using namespace declension;
using declension::testing::token_line;

namespace {

const std::string kKentro =
    "# sent_id = s1\n"
    "# text = Πού βρίσκεται αυτό το κέντρο .\n" +
    token_line(1, "Πού", "πού", "ADV", "_", 2, "advmod") +
    token_line(2, "βρίσκεται", "βρίσκομαι", "VERB", "_", 0, "root") +
    token_line(3, "αυτό", "αυτός", "DET", "PronType=Dem", 5, "det") +
    token_line(4, "το", "ο", "DET", "Case=Nom|Gender=Neut|Number=Sing|PronType=Art", 5, "det") +
    token_line(5, "κέντρο", "κέντρο", "NOUN", "Case=Nom|Gender=Neut|Number=Sing", 2, "nsubj") +
    token_line(6, ".", ".", "PUNCT", "_", 2, "punct") + "\n";

std::vector<SymbolId> ids_of(const Alphabet& a, std::u32string_view chars) {
  std::vector<SymbolId> out;
  for (char32_t c : chars) out.push_back(a.encode(c));
  return out;
}

}  // namespace

TEST_CASE("utf8 round trip and lowercasing") {
  const std::string greek = "Πού βρίσκεται ΆΈΉ";
  CHECK(utf8::encode(utf8::decode(greek)) == greek);
  CHECK(utf8::to_lower("Το") == "το");
  CHECK(utf8::to_lower("ΤΗΣ") == "της");
  CHECK(utf8::to_lower("Άλφα") == "άλφα");
  CHECK_THROWS_AS(utf8::decode("\xC3"), Error);
  CHECK_THROWS_AS(utf8::decode("\xC0\xAF"), Error);
}

TEST_CASE("parse_conllu reads tokens, features and metadata") {
  const auto sentences = parse_conllu(kKentro);
  REQUIRE(sentences.size() == 1);
  const Sentence& s = sentences[0];
  CHECK(s.sent_id == "s1");
  CHECK(s.text == "Πού βρίσκεται αυτό το κέντρο .");
  REQUIRE(s.tokens.size() == 6);
  const Token& noun = s.tokens[4];
  CHECK(noun.form == "κέντρο");
  CHECK(noun.feats.size() == 3);
  CHECK(noun.feature("Case") == "Nom");
  CHECK(noun.feature("Gender") == "Neut");
  CHECK(noun.feature("Number") == "Sing");
  CHECK(s.tokens[0].feats.empty());
}

TEST_CASE("parse_conllu edge cases") {
  CHECK(parse_conllu("").empty());
  CHECK(parse_conllu("# sent_id = a\n# text = nothing\n\n\n# another\n").empty());

  SUBCASE("multi-word ranges and empty nodes are skipped") {
    const std::string text = "1-2\tστην\t_\t_\t_\t_\t_\t_\t_\t_\n" + token_line(1, "σε", "σε", "ADP", "_", 3, "case") +
                             token_line(2, "την", "ο", "DET", "_", 3, "det") +
                             "2.1\tx\tx\tX\t_\t_\t_\t_\t_\t_\n" +
                             token_line(3, "τάξη", "τάξη", "NOUN", "Case=Acc", 0, "root");
    const auto s = parse_conllu(text);
    REQUIRE(s.size() == 1);
    CHECK(s[0].tokens.size() == 3);
    CHECK(s[0].sent_id == "1");
  }

  SUBCASE("bad head reports its line") {
    const std::string text = "# sent_id = x\n" + token_line(1, "a", "a", "NOUN", "_", 0, "root") +
                             "2\tb\tb\tNOUN\t_\t_\tx\tdep\t_\t_\n";
    try {
      parse_conllu(text);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
      CHECK(e.content().find("\tx\t") != std::string::npos);
    }
  }

  SUBCASE("wrong column count") {
    CHECK_THROWS_AS(parse_conllu("1\tonly\tthree\n"), ParseError);
  }
  SUBCASE("non-consecutive ids") {
    const std::string text = token_line(1, "a", "a", "X", "_", 0, "root") + token_line(3, "b", "b", "X", "_", 1, "dep");
    CHECK_THROWS_AS(parse_conllu(text), ParseError);
  }
  SUBCASE("head outside the sentence") {
    CHECK_THROWS_AS(parse_conllu(token_line(1, "a", "a", "X", "_", 4, "dep")), ParseError);
  }
  SUBCASE("self-headed token") {
    CHECK_THROWS_AS(parse_conllu(token_line(1, "a", "a", "X", "_", 1, "dep")), ParseError);
  }
  SUBCASE("malformed feature") {
    CHECK_THROWS_AS(parse_conllu(token_line(1, "a", "a", "X", "Case", 0, "root")), ParseError);
  }
  SUBCASE("missing sent_id gets the prefix and ordinal") {
    const std::string one = token_line(1, "a", "a", "X", "_", 0, "root") + "\n";
    const auto s = parse_conllu(one + one, "f-");
    REQUIRE(s.size() == 2);
    CHECK(s[1].sent_id == "f-2");
  }
}

TEST_CASE("the bundled fixture parses") {
  const auto sentences = testing::fixture_sentences();
  CHECK(sentences.size() == 31);
  std::set<std::string> cases;
  for (const auto& s : sentences) {
    for (const auto& inst : extract_instances(s, CaseInventory::default_inventory())) cases.insert(inst.morph_case.tag);
  }
  CHECK(cases == std::set<std::string>{"Nom", "Gen", "Acc", "Dat"});
}

TEST_CASE("serialization round trip on random sentences") {
  Prng prng(2024);
  const std::vector<std::string> words = {"κέντρο", "το", "βουνού", "a", "b_c", "Ωμέγα"};
  const std::vector<std::string> feats = {"Case", "Gender", "Number", "Definite"};
  for (int trial = 0; trial < 100; ++trial) {
    Sentence s;
    s.sent_id = "r" + std::to_string(trial);
    if (prng.below(2) == 0) s.text = "some text " + std::to_string(trial);
    const int n = 1 + static_cast<int>(prng.below(8));
    for (int id = 1; id <= n; ++id) {
      Token t;
      t.id = id;
      t.form = words[prng.below(words.size())];
      t.lemma = words[prng.below(words.size())];
      t.upos = prng.below(2) == 0 ? "NOUN" : "DET";
      for (const auto& f : feats) {
        if (prng.below(2) == 0) t.feats[f] = "V" + std::to_string(prng.below(3));
      }
      do {
        t.head = static_cast<int>(prng.below(static_cast<std::uint64_t>(n) + 1));
      } while (t.head == id);
      t.deprel = prng.below(2) == 0 ? "det" : "nsubj";
      s.tokens.push_back(t);
    }
    const auto reparsed = parse_conllu(to_conllu(s));
    REQUIRE(reparsed.size() == 1);
    CHECK(reparsed[0] == s);
  }
}

TEST_CASE("extract_instances") {
  const Sentence s = parse_conllu(kKentro).at(0);
  const auto insts = extract_instances(s, CaseInventory::default_inventory());
  REQUIRE(insts.size() == 1);
  const NounInstance& inst = insts[0];
  CHECK(inst.target_index == 4);
  REQUIRE(inst.article_index.has_value());
  CHECK(*inst.article_index == 3);  // nearest preceding det is "το", not "αυτό"
  CHECK(inst.article == "το");
  CHECK(inst.morph_case.tag == "Nom");
  CHECK(inst.number == GrammaticalNumber::Sing);
  CHECK(inst.gender == Gender::Neut);
  CHECK(inst.form() == "κέντρο");

  SUBCASE("no nouns") {
    const auto none = parse_conllu(token_line(1, "τρέχει", "τρέχω", "VERB", "_", 0, "root")).at(0);
    CHECK(extract_instances(none, CaseInventory::default_inventory()).empty());
  }
  SUBCASE("vocative is outside the default inventory") {
    const auto voc = parse_conllu(token_line(1, "φίλε", "φίλος", "NOUN", "Case=Voc", 0, "root")).at(0);
    CHECK(extract_instances(voc, CaseInventory::default_inventory()).empty());
    CHECK(extract_instances(voc, CaseInventory::parse("Nom,Voc")).size() == 1);
  }
  SUBCASE("missing gender and following det") {
    const auto text = token_line(1, "σπίτι", "σπίτι", "NOUN", "Case=Acc", 0, "root") +
                      token_line(2, "το", "ο", "DET", "_", 1, "det");
    const auto i = extract_instances(parse_conllu(text).at(0), CaseInventory::default_inventory());
    REQUIRE(i.size() == 1);
    CHECK(i[0].gender == Gender::Unknown);
    CHECK_FALSE(i[0].article_index.has_value());
  }
}

TEST_CASE("every fixture instance satisfies the instance invariants") {
  const auto inv = CaseInventory::default_inventory();
  for (const auto& s : testing::fixture_sentences()) {
    for (const auto& inst : extract_instances(s, inv)) {
      CHECK(s.tokens[inst.target_index].upos == "NOUN");
      CHECK(inv.contains(inst.morph_case.tag));
      if (inst.article_index) CHECK(*inst.article_index < inst.target_index);
    }
  }
}

TEST_CASE("case inventory validation") {
  CHECK_THROWS_AS(CaseInventory(std::vector<MorphCase>{}), Error);
  CHECK_THROWS_AS(CaseInventory::parse("Nom,Gen,Nom"), Error);
  CHECK(CaseInventory::default_inventory().to_string() == "Nom,Gen,Acc,Dat");
  CHECK(case_display_name("Gen") == "Genitive");
}

TEST_CASE("split_corpus sizes and errors") {
  const auto inv = CaseInventory::default_inventory();
  const auto hundred = parse_conllu(testing::synthetic_treebank(100));
  const DatasetSplit split = split_corpus(hundred, 42, {}, {}, inv);
  CHECK(split.train.size() == 9);
  CHECK(split.dev.size() == 1);
  CHECK(split.test.size() == 90);

  const auto one = parse_conllu(testing::synthetic_treebank(1));
  const DatasetSplit tiny = split_corpus(one, 42, {}, {}, inv);
  CHECK(tiny.train.empty());
  CHECK(tiny.dev.empty());
  CHECK(tiny.test.size() == 1);

  CHECK(split_corpus(hundred, 1, {0.29, 0.01, 0.70}, {}, inv).train.size() == 29);
  CHECK_THROWS_AS(split_corpus(hundred, 1, {0.5, 0.5, 0.5}, {}, inv), Error);
  CHECK_THROWS_AS(split_corpus(hundred, 1, {}, {10, 5}, inv), Error);
  try {
    split_corpus(hundred, 1, {}, {7, 9}, inv);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()) == "empty corpus after filtering");
  }
  // min == max selects an exact length.
  CHECK(split_corpus(hundred, 1, {}, {6, 6}, inv).test.size() == 90);
}

TEST_CASE("split_corpus partitions and is deterministic") {
  const auto inv = CaseInventory::default_inventory();
  auto sentences = parse_conllu(testing::synthetic_treebank(57, 3));
  // Out-of-bounds and noun-less sentences must be filtered out.
  sentences.push_back(parse_conllu("# sent_id = short\n" + token_line(1, "x", "x", "NOUN", "Case=Nom", 0, "root")).at(0));
  for (std::uint64_t seed : {0ull, 1ull, 99ull, 123456789ull, ~0ull}) {
    const DatasetSplit a = split_corpus(sentences, seed, {0.5, 0.2, 0.3}, {}, inv);
    const DatasetSplit b = split_corpus(sentences, seed, {0.5, 0.2, 0.3}, {}, inv);
    CHECK(split_to_json(a) == split_to_json(b));
    std::set<std::string> all;
    for (const auto* part : {&a.train, &a.dev, &a.test}) all.insert(part->begin(), part->end());
    CHECK(all.size() == a.train.size() + a.dev.size() + a.test.size());
    CHECK(all.size() == 57);
    CHECK(all.count("short") == 0);
  }
}

TEST_CASE("split manifest JSON round trip") {
  const auto sentences = parse_conllu(testing::synthetic_treebank(30));
  const DatasetSplit a = split_corpus(sentences, 5, {0.5, 0.25, 0.25}, {5, 40}, CaseInventory::default_inventory());
  const std::string json = split_to_json(a);
  CHECK(json.find("\"seed\": 5") != std::string::npos);
  const DatasetSplit b = split_from_json(json);
  CHECK(split_to_json(b) == json);
  CHECK_THROWS_AS(split_from_json("{\"seed\": 1}"), Error);
}

TEST_CASE("build_alphabet") {
  const auto s = parse_conllu(token_line(1, "αβ", "β", "NOUN", "_", 0, "root"));
  const Alphabet a = build_alphabet(s);
  CHECK(a.size() == 7);
  CHECK(a.encode(U'α') == 5);
  CHECK(a.encode(U'β') == 6);
  CHECK(a.encode(U'γ') == Alphabet::kUnk);
  CHECK(Alphabet::kPad == 0);
  CHECK(Alphabet::kBos == 1);
  CHECK(Alphabet::kEos == 2);
  CHECK(Alphabet::kUnk == 3);
  CHECK(Alphabet::kSep == 4);
  CHECK_THROWS_AS(build_alphabet(std::vector<Sentence>{}), Error);
  CHECK_THROWS_AS(a.decode(Alphabet::kSep), Error);
}

TEST_CASE("alphabet decode inverts encode") {
  const Alphabet a = build_alphabet(testing::fixture_sentences());
  for (char32_t c : a.chars()) CHECK(a.decode(a.encode(c)) == c);
  std::set<SymbolId> ids;
  for (char32_t c : a.chars()) ids.insert(a.encode(c));
  CHECK(ids.size() == a.chars().size());
  CHECK(*ids.begin() == Alphabet::kReserved);
}

TEST_CASE("encode_instance layout") {
  const Alphabet a(std::vector<char32_t>{U'α', U'β', U'γ'});
  SUBCASE("window 0") {
    const auto s = parse_conllu(token_line(1, "αγ", "αβ", "NOUN", "Case=Nom", 0, "root")).at(0);
    const auto inst = extract_instances(s, CaseInventory::default_inventory()).at(0);
    const auto enc = encode_instance(inst, s, a, 0);
    const std::vector<SymbolId> input = {Alphabet::kBos, Alphabet::kSep, a.encode(U'α'), a.encode(U'β'),
                                         Alphabet::kSep, Alphabet::kEos};
    const std::vector<SymbolId> target = {a.encode(U'α'), a.encode(U'γ'), Alphabet::kEos};
    CHECK(enc.input_ids == input);
    CHECK(enc.target_ids == target);
    // No context on either side behaves like window 0.
    CHECK(encode_instance(inst, s, a, 3).input_ids == input);
  }
  SUBCASE("window 1 on the article fragment") {
    const Sentence s = parse_conllu(kKentro).at(0);
    const Alphabet greek = build_alphabet(std::vector<Sentence>{s});
    const auto inst = extract_instances(s, CaseInventory::default_inventory()).at(0);
    const auto enc = encode_instance(inst, s, greek, 1);
    std::vector<SymbolId> expected = {Alphabet::kBos};
    for (SymbolId id : ids_of(greek, U"το")) expected.push_back(id);
    expected.push_back(Alphabet::kSep);
    for (SymbolId id : ids_of(greek, U"κέντρο")) expected.push_back(id);
    expected.push_back(Alphabet::kSep);
    expected.push_back(greek.encode(U'.'));
    expected.push_back(Alphabet::kEos);
    CHECK(enc.input_ids == expected);
  }
  SUBCASE("multiple context words are SEP-separated") {
    const std::vector<std::string> left = {"α", "β"};
    const std::vector<std::string> right = {"γ", "α"};
    const auto ids = encode_context(left, U"β", right, a);
    const std::vector<SymbolId> expected = {Alphabet::kBos, 5, Alphabet::kSep, 6, Alphabet::kSep, 6,
                                            Alphabet::kSep, 7, Alphabet::kSep, 5, Alphabet::kEos};
    CHECK(ids == expected);
  }
}

TEST_CASE("treebank lookups") {
  const Treebank tb(testing::fixture_sentences());
  CHECK(tb.at("gr-01").tokens.size() == 6);
  CHECK_THROWS_AS(tb.at("missing"), Error);
  const auto dup = parse_conllu(kKentro + kKentro);
  CHECK_THROWS_AS(Treebank{dup}, Error);
}
