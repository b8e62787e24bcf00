#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "declension/error.hpp"
#include "declension/eval.hpp"
#include "declension/numerics.hpp"
#include "declension/utf8.hpp"
#include "test_support.hpp"

using namespace declension;

namespace {

// Exponential recursion straight from the edit-distance definition.
std::size_t naive_levenshtein(std::u32string_view a, std::u32string_view b) {
  if (a.empty()) return b.size();
  if (b.empty()) return a.size();
  const std::size_t sub = naive_levenshtein(a.substr(1), b.substr(1)) + (a[0] == b[0] ? 0 : 1);
  const std::size_t del = naive_levenshtein(a.substr(1), b) + 1;
  const std::size_t ins = naive_levenshtein(a, b.substr(1)) + 1;
  return std::min({sub, del, ins});
}

std::u32string random_word(Prng& prng, std::size_t max_len) {
  static const std::u32string kPool = U"abκλμ";
  std::u32string w;
  const std::size_t n = prng.below(max_len + 1);
  for (std::size_t i = 0; i < n; ++i) w.push_back(kPool[prng.below(kPool.size())]);
  return w;
}

std::vector<std::string> words(std::initializer_list<const char*> list) { return {list.begin(), list.end()}; }

}  // namespace

TEST_CASE("levenshtein examples") {
  CHECK(levenshtein(U"κέντρο", U"κέντρο") == 0);
  CHECK(levenshtein(U"kitten", U"sitting") == 3);
  CHECK(levenshtein(U"κέντρο", U"κέντρα") == 1);
  CHECK(levenshtein(U"", U"abc") == 3);
  CHECK(levenshtein(U"", U"") == 0);
}

TEST_CASE("levenshtein matches the naive recursion and is a metric") {
  Prng prng(31);
  for (int trial = 0; trial < 400; ++trial) {
    const auto a = random_word(prng, 7);
    const auto b = random_word(prng, 7);
    const auto c = random_word(prng, 7);
    const std::size_t ab = levenshtein(a, b);
    CHECK(ab == naive_levenshtein(a, b));
    CHECK(ab == levenshtein(b, a));
    CHECK((ab == 0) == (a == b));
    CHECK(levenshtein(a, c) <= ab + levenshtein(b, c));
    CHECK(ab <= std::max(a.size(), b.size()));
    CHECK(ab >= (a.size() > b.size() ? a.size() - b.size() : b.size() - a.size()));
  }
}

TEST_CASE("sentence_bleu examples") {
  const auto ref = words({"the", "cat", "sat", "down"});
  CHECK(sentence_bleu(ref, ref) == 1.0);
  CHECK(sentence_bleu(std::vector<std::string>{}, ref) == 0.0);
  // p1 = p2 = p3 = 1, BP = exp(1 - 4/3)
  CHECK(std::abs(sentence_bleu(words({"the", "cat", "sat"}), ref) - std::exp(1.0 - 4.0 / 3.0)) < 1e-12);
  CHECK(std::abs(sentence_bleu(words({"the", "cat", "sat"}), ref) - 0.7165) < 1e-4);
  CHECK(sentence_bleu(words({"dog"}), ref) == 0.0);
  CHECK_THROWS_AS(sentence_bleu(ref, std::vector<std::string>{}), Error);
}

TEST_CASE("sentence_bleu with one substituted word") {
  const auto ref = words({"a", "b", "c", "d", "e", "f", "g", "h", "i", "j"});
  auto cand = ref;
  cand[4] = "x";
  // Clipped matches per order: 9/10, 7/9, 5/8, 3/7; brevity penalty 1.
  const double expected = std::exp((std::log(9.0 / 10) + std::log(7.0 / 9) + std::log(5.0 / 8) + std::log(3.0 / 7)) / 4);
  const double got = sentence_bleu(cand, ref);
  CHECK(got < 1.0);
  CHECK(std::abs(got - expected) < 1e-12);
}

TEST_CASE("sentence_bleu properties") {
  Prng prng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + prng.below(10);
    std::vector<std::string> ref;
    for (std::size_t i = 0; i < n; ++i) ref.push_back("w" + std::to_string(i));
    std::vector<std::string> cand = ref;
    for (auto& w : cand) {
      if (prng.below(3) == 0) w = "z" + std::to_string(prng.below(4));
    }
    if (prng.below(2) == 0) cand.resize(1 + prng.below(n));
    const double b = sentence_bleu(cand, ref);
    CHECK(b >= 0.0);
    CHECK(b <= 1.0);
    if (cand.size() >= 4) CHECK((b == 1.0) == (cand == ref));
    std::vector<std::string> reversed(ref.rbegin(), ref.rend());
    CHECK(sentence_bleu(reversed, ref) < 1.0);
  }
}

TEST_CASE("reconstruct_sentence") {
  const auto s = testing::fixture_sentences().at(0);
  CHECK(reconstruct_sentence(s, {}) == s.words());
  CHECK(sentence_bleu(reconstruct_sentence(s, {}), s.words()) == 1.0);
  const auto replaced = reconstruct_sentence(s, {{4, "κέντρα"}});
  CHECK(replaced[4] == "κέντρα");
  CHECK(sentence_bleu(replaced, s.words()) < 1.0);
  CHECK_THROWS_AS(reconstruct_sentence(s, {{99, "x"}}), Error);
}

TEST_CASE("evaluate") {
  const auto inv = CaseInventory::default_inventory();
  const Treebank tb(testing::fixture_sentences());
  std::vector<NounInstance> insts;
  for (const auto& s : tb.sentences()) {
    for (auto& i : extract_instances(s, inv)) insts.push_back(std::move(i));
  }

  SUBCASE("gold predictions are perfect") {
    std::vector<Prediction> gold;
    for (const auto& i : insts) gold.push_back({i.form(), i.morph_case});
    const EvalReport r = evaluate(tb, insts, gold, inv);
    CHECK(r.word_accuracy == 1.0);
    CHECK(r.mean_norm_edit == 0.0);
    CHECK(r.avg_bleu == 1.0);
    CHECK(r.case_accuracy == 1.0);
    CHECK(r.n_instances == insts.size());
    std::size_t per_case_total = 0;
    for (std::size_t row = 0; row < inv.size(); ++row) {
      const auto& stats = r.per_case.at(inv.at(row).tag);
      per_case_total += stats.count;
      std::size_t row_sum = 0;
      for (std::size_t x : r.case_confusion[row]) row_sum += x;
      CHECK(row_sum == stats.count);
    }
    CHECK(per_case_total == r.n_instances);
  }

  SUBCASE("one exact and one at distance one") {
    // gr-01 "κέντρο" and gr-03 "κολύμπι" are both six characters? use two six-letter forms.
    std::vector<NounInstance> two;
    for (const auto& i : insts) {
      if (i.form_chars.size() == 6 && two.size() < 2) two.push_back(i);
    }
    REQUIRE(two.size() == 2);
    std::u32string wrong = two[1].form_chars;
    wrong[5] = wrong[5] == U'x' ? U'y' : U'x';
    const std::vector<Prediction> preds = {{two[0].form(), std::nullopt}, {utf8::encode(wrong), two[1].morph_case}};
    const EvalReport r = evaluate(tb, two, preds, inv);
    CHECK(r.word_accuracy == 0.5);
    CHECK(std::abs(r.mean_norm_edit - (0.0 + 1.0 / 6.0) / 2.0) < 1e-15);
    CHECK(std::abs(r.mean_norm_edit - 0.0833) < 1e-4);
    CHECK(r.case_accuracy == 0.5);
    const auto gold_row = *inv.index_of(two[0].morph_case.tag);
    CHECK(r.case_confusion[gold_row][inv.size()] == 1);  // "none" column
  }

  SUBCASE("errors") {
    CHECK_THROWS_AS(evaluate(tb, {}, {}, inv), Error);
    std::vector<Prediction> short_preds(insts.size() - 1);
    CHECK_THROWS_AS(evaluate(tb, insts, short_preds, inv), Error);
  }

  SUBCASE("permutation invariance") {
    Prng prng(10);
    std::vector<Prediction> preds;
    for (const auto& i : insts) {
      std::u32string f = i.form_chars;
      if (prng.below(2) == 0) f.pop_back();
      preds.push_back({utf8::encode(f), inv.at(prng.below(inv.size()))});
    }
    const std::string base = report_to_json(evaluate(tb, insts, preds, inv));
    std::vector<std::size_t> order(insts.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    for (int trial = 0; trial < 5; ++trial) {
      shuffle(order, prng);
      std::vector<NounInstance> pi;
      std::vector<Prediction> pp;
      for (std::size_t k : order) {
        pi.push_back(insts[k]);
        pp.push_back(preds[k]);
      }
      CHECK(report_to_json(evaluate(tb, pi, pp, inv)) == base);
    }
  }
}

TEST_CASE("report JSON uses the report field names") {
  const auto inv = CaseInventory::default_inventory();
  const Treebank tb(testing::fixture_sentences());
  const auto insts = extract_instances(tb.sentences()[0], inv);
  const std::vector<Prediction> preds = {{"κέντρα", MorphCase{"Acc"}}};
  const std::string json = report_to_json(evaluate(tb, insts, preds, inv));
  for (const char* key : {"avg_bleu", "word_accuracy", "mean_norm_edit", "char_accuracy", "per_case", "case_confusion",
                          "n_instances", "n_sentences"}) {
    CHECK(json.find(std::string("\"") + key + "\"") != std::string::npos);
  }
  // 17 significant digits
  CHECK(json.find("0.83333333333333337") != std::string::npos);
}
