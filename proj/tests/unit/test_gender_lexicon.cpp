#include <random>

#include "cocogb/error.hpp"
#include "cocogb/gender_lexicon.hpp"
#include "doctest.h"

using namespace cocogb;

namespace {
const GenderLexicon& lex() { return GenderLexicon::default_lexicon(); }

std::vector<std::string> fuzz_vocab() {
  std::vector<std::string> v = {"a", "the", "on", "with", "riding", "horse", "table", "surf",
                                "boards", "two", "of", "in", "and", "Manhattan", "womanly",
                                "mens", "human", "people", "person", "baby", "x2", "42"};
  for (const auto& w : lex().female()) v.push_back(w);
  for (const auto& w : lex().male()) v.push_back(w);
  return v;
}

std::string fuzz_caption(std::mt19937_64& rng, const std::vector<std::string>& vocab) {
  static const char* seps[] = {" ", "  ", ", ", "-", "'s ", ". ", "!", "\t", "/"};
  const int n = 1 + static_cast<int>(rng() % 12);
  std::string s;
  for (int i = 0; i < n; ++i) {
    std::string w = vocab[rng() % vocab.size()];
    switch (rng() % 4) {
      case 0: for (auto& ch : w) ch = static_cast<char>(std::toupper(ch)); break;
      case 1: w[0] = static_cast<char>(std::toupper(w[0])); break;
      default: break;
    }
    s += w;
    s += seps[rng() % std::size(seps)];
  }
  return s;
}
}  // namespace

TEST_CASE("classify examples") {
  CHECK(classify_caption("A woman riding a horse", lex()) == CaptionGender::kFemale);
  CHECK(classify_caption("A man and a woman at a table", lex()) == CaptionGender::kBoth);
  CHECK(classify_caption("Two people surfing", lex()) == CaptionGender::kNone);
  CHECK(classify_caption("Boys playing soccer", lex()) == CaptionGender::kMale);
  CHECK(classify_caption("A snowman in Manhattan", lex()) == CaptionGender::kNone);
  CHECK(classify_caption("", lex()) == CaptionGender::kNone);
}

TEST_CASE("tokenize lowercases alphanumeric runs") {
  CHECK(tokenize("A Man's hat, 2 dogs!") ==
        std::vector<std::string>{"a", "man", "s", "hat", "2", "dogs"});
}

TEST_CASE("image labeling rules") {
  const std::vector<std::string> women = {"A woman on a bench", "a person sitting", "someone",
                                          "Woman with a dog", "a bench in a park"};
  CHECK(label_image(women, 1, lex()) == GenderLabel::kWomen);
  const std::vector<std::string> conflict = {"a man walking", "a woman walking", "a person",
                                             "a person", "a person"};
  CHECK(label_image(conflict, 1, lex()) == GenderLabel::kDiscard);
  const std::vector<std::string> both = {"a man and a woman", "people", "people", "people",
                                         "people"};
  CHECK(label_image(both, 1, lex()) == GenderLabel::kDiscard);
  CHECK(label_image(women, 3, lex()) == GenderLabel::kDiscard);
  CHECK(label_image(women, 0, lex()) == GenderLabel::kDiscard);
  const std::vector<std::string> none = {"a dog", "a cat", "a person", "a bench", "grass"};
  CHECK(label_image(none, 1, lex()) == GenderLabel::kDiscard);
  const std::vector<std::string> men = {"A boy with a kite", "a kid", "a child", "a kite", "a boy"};
  CHECK(label_image(men, 1, lex()) == GenderLabel::kMen);
  CHECK_THROWS_AS(label_image(std::vector<std::string>{}, 1, lex()), Error);
}

TEST_CASE("neutralize examples") {
  CHECK(neutralize("a man in a suit", lex()) == "a person in a suit");
  CHECK(neutralize("two girls playing", lex()) == "two children playing");
  CHECK(neutralize("Women at the market", lex()) == "People at the market");
  CHECK(neutralize("A MAN", lex()) == "A PERSON");
  CHECK(neutralize("a snowman, a dog", lex()) == "a snowman, a dog");
  CHECK(neutralize("a baby and her sister", lex()) == "a baby and her person");
}

TEST_CASE("neutralize fuzz: idempotent and gender free") {
  std::mt19937_64 rng(2024);
  const auto vocab = fuzz_vocab();
  for (int i = 0; i < 10000; ++i) {
    const std::string c = fuzz_caption(rng, vocab);
    const std::string n = neutralize(c, lex());
    REQUIRE(neutralize(n, lex()) == n);
    REQUIRE(classify_caption(n, lex()) == CaptionGender::kNone);
  }
}

TEST_CASE("custom lexicon validation") {
  CHECK_THROWS_AS(GenderLexicon({"queen"}, {"queen"}, {}, {{"queen", "ruler"}}), Error);
  CHECK_THROWS_AS(GenderLexicon({"queen"}, {"king"}, {}, {{"queen", "ruler"}}), Error);
  CHECK_THROWS_AS(GenderLexicon({"queen"}, {"king"}, {}, {{"queen", "king"}, {"king", "ruler"}}),
                  Error);
  const GenderLexicon l = GenderLexicon::from_json(
      R"({"female": ["queen"], "male": ["king"], "neutral": ["ruler"],
          "replace": {"queen": "ruler", "king": "ruler"}})");
  CHECK(classify_caption("the queen", l) == CaptionGender::kFemale);
  CHECK(neutralize("The King", l) == "The Ruler");
}
