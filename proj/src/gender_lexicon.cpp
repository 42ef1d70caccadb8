#include "cocogb/gender_lexicon.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "cocogb/error.hpp"
#include "json.hpp"

namespace cocogb {

namespace {

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

WordSet lowered(const WordSet& in) {
  WordSet out;
  for (const auto& w : in) out.insert(lower(w));
  return out;
}

std::string match_case(std::string_view original, std::string_view replacement) {
  std::string out(replacement);
  const bool all_upper =
      original.size() > 1 && std::all_of(original.begin(), original.end(), [](char c) {
        return !std::isalpha(static_cast<unsigned char>(c)) ||
               std::isupper(static_cast<unsigned char>(c));
      });
  if (all_upper) {
    for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  } else if (!original.empty() && std::isupper(static_cast<unsigned char>(original[0])) &&
             !out.empty()) {
    out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  }
  return out;
}

}  // namespace

std::string_view to_string(CaptionGender g) {
  switch (g) {
    case CaptionGender::kFemale: return "female";
    case CaptionGender::kMale: return "male";
    case CaptionGender::kBoth: return "both";
    case CaptionGender::kNone: return "none";
  }
  return "none";
}

std::string_view to_string(GenderLabel g) {
  switch (g) {
    case GenderLabel::kWomen: return "women";
    case GenderLabel::kMen: return "men";
    case GenderLabel::kDiscard: return "discard";
  }
  return "discard";
}

GenderLabel parse_gender_label(std::string_view s) {
  const std::string l = lower(s);
  if (l == "women") return GenderLabel::kWomen;
  if (l == "men") return GenderLabel::kMen;
  if (l == "discard") return GenderLabel::kDiscard;
  throw Error(ErrorKind::kParse, "unknown gender label \"" + std::string(s) + "\"");
}

GenderLexicon::GenderLexicon(WordSet female, WordSet male, WordSet neutral, WordMap replace)
    : female_(lowered(female)), male_(lowered(male)), neutral_(lowered(neutral)) {
  for (const auto& [from, to] : replace) replace_[lower(from)] = lower(to);

  auto overlap = [](const WordSet& a, const WordSet& b, const char* what) {
    for (const auto& w : a) {
      if (b.count(w)) {
        throw Error(ErrorKind::kConfig, std::string("lexicon word \"") + w + "\" is both " + what);
      }
    }
  };
  overlap(female_, male_, "female and male");
  overlap(female_, neutral_, "female and neutral");
  overlap(male_, neutral_, "male and neutral");

  for (const WordSet* set : {&female_, &male_}) {
    for (const auto& w : *set) {
      if (!replace_.count(w)) {
        throw Error(ErrorKind::kConfig, "gendered word \"" + w + "\" has no replacement");
      }
    }
  }
  for (const auto& [from, to] : replace_) {
    if (is_gendered(to) || replace_.count(to)) {
      throw Error(ErrorKind::kConfig,
                  "replacement \"" + to + "\" for \"" + from + "\" would be replaced again");
    }
    if (to.empty() || !std::all_of(to.begin(), to.end(), is_word_char)) {
      throw Error(ErrorKind::kConfig, "replacement for \"" + from + "\" must be a single word");
    }
  }
}

const GenderLexicon& GenderLexicon::default_lexicon() {
  static const GenderLexicon lex = [] {
    WordSet female = {"woman",  "women",   "girl",      "girls",      "sister", "sisters",
                      "daughter", "daughters", "wife", "wives", "girlfriend", "girlfriends"};
    WordSet male = {"man",     "men",   "boy",     "boys",      "brother",  "brothers",
                    "son",     "sons",  "husband", "husbands",  "boyfriend", "boyfriends"};
    WordSet neutral = {"people", "person", "human", "baby"};
    WordMap replace = {
        {"woman", "person"},     {"man", "person"},       {"women", "people"},
        {"men", "people"},       {"girl", "child"},       {"boy", "child"},
        {"girls", "children"},   {"boys", "children"},    {"sister", "person"},
        {"brother", "person"},   {"daughter", "person"},  {"son", "person"},
        {"wife", "person"},      {"husband", "person"},   {"girlfriend", "person"},
        {"boyfriend", "person"}, {"sisters", "people"},   {"brothers", "people"},
        {"daughters", "people"}, {"sons", "people"},      {"wives", "people"},
        {"husbands", "people"},  {"girlfriends", "people"}, {"boyfriends", "people"},
    };
    return GenderLexicon(std::move(female), std::move(male), std::move(neutral),
                         std::move(replace));
  }();
  return lex;
}

GenderLexicon GenderLexicon::from_json(std::string_view json_text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(json_text.begin(), json_text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed lexicon JSON: ") + e.what(), e.byte);
  }
  try {
    auto words = [&](const char* key) {
      WordSet out;
      if (doc.contains(key)) {
        for (const auto& w : doc.at(key)) out.insert(w.get<std::string>());
      }
      return out;
    };
    WordMap replace;
    if (doc.contains("replace")) {
      for (const auto& [k, v] : doc.at("replace").items()) replace[k] = v.get<std::string>();
    }
    return GenderLexicon(words("female"), words("male"), words("neutral"), std::move(replace));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kConfig, std::string("bad lexicon: ") + e.what());
  }
}

GenderLexicon GenderLexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kInput, "cannot open lexicon " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

std::string_view GenderLexicon::replacement(std::string_view w) const {
  auto it = replace_.find(w);
  if (it == replace_.end()) return {};
  return it->second;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && !is_word_char(text[i])) ++i;
    const std::size_t start = i;
    while (i < text.size() && is_word_char(text[i])) ++i;
    if (i > start) tokens.push_back(lower(text.substr(start, i - start)));
  }
  return tokens;
}

CaptionGender classify_caption(std::string_view caption, const GenderLexicon& lexicon) {
  bool female = false;
  bool male = false;
  for (const auto& tok : tokenize(caption)) {
    female = female || lexicon.is_female(tok);
    male = male || lexicon.is_male(tok);
  }
  if (female && male) return CaptionGender::kBoth;
  if (female) return CaptionGender::kFemale;
  if (male) return CaptionGender::kMale;
  return CaptionGender::kNone;
}

GenderLabel label_image(std::span<const std::string> captions, int person_instance_count,
                        const GenderLexicon& lexicon) {
  if (captions.empty()) {
    throw Error(ErrorKind::kInput, "label_image needs at least one caption");
  }
  if (person_instance_count != 1) return GenderLabel::kDiscard;
  int female = 0;
  int male = 0;
  for (const auto& c : captions) {
    switch (classify_caption(c, lexicon)) {
      case CaptionGender::kBoth: return GenderLabel::kDiscard;
      case CaptionGender::kFemale: ++female; break;
      case CaptionGender::kMale: ++male; break;
      case CaptionGender::kNone: break;
    }
  }
  if (female > 0 && male == 0) return GenderLabel::kWomen;
  if (male > 0 && female == 0) return GenderLabel::kMen;
  return GenderLabel::kDiscard;
}

std::string neutralize(std::string_view caption, const GenderLexicon& lexicon) {
  std::string out;
  out.reserve(caption.size() + 8);
  std::size_t i = 0;
  while (i < caption.size()) {
    if (!is_word_char(caption[i])) {
      out.push_back(caption[i++]);
      continue;
    }
    const std::size_t start = i;
    while (i < caption.size() && is_word_char(caption[i])) ++i;
    const std::string_view word = caption.substr(start, i - start);
    const std::string_view repl = lexicon.replacement(lower(word));
    if (repl.empty()) {
      out.append(word);
    } else {
      out.append(match_case(word, repl));
    }
  }
  return out;
}

}  // namespace cocogb
