#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cocogb {

enum class CaptionGender { kFemale, kMale, kBoth, kNone };
enum class GenderLabel { kWomen, kMen, kDiscard };

std::string_view to_string(CaptionGender g);
// "women" | "men" | "discard"
std::string_view to_string(GenderLabel g);
GenderLabel parse_gender_label(std::string_view s);

using WordSet = std::set<std::string, std::less<>>;
using WordMap = std::map<std::string, std::string, std::less<>>;

// Female, male and neutral word sets plus the neutralization map. All words
// are stored lowercase.
class GenderLexicon {
 public:
  // Throws kConfig unless the three sets are pairwise disjoint, every gendered
  // word has a replacement, and no replacement is itself gendered.
  GenderLexicon(WordSet female, WordSet male, WordSet neutral, WordMap replace);

  // Gender word list of the benchmark, with the regular plural of every
  // listed singular added.
  static const GenderLexicon& default_lexicon();

  // {"female": [...], "male": [...], "neutral": [...], "replace": {...}}
  static GenderLexicon from_json(std::string_view json_text);
  static GenderLexicon load(const std::filesystem::path& path);

  const WordSet& female() const { return female_; }
  const WordSet& male() const { return male_; }
  const WordSet& neutral() const { return neutral_; }
  const WordMap& replacements() const { return replace_; }

  bool is_female(std::string_view w) const { return female_.find(w) != female_.end(); }
  bool is_male(std::string_view w) const { return male_.find(w) != male_.end(); }
  bool is_gendered(std::string_view w) const { return is_female(w) || is_male(w); }

  // Neutral replacement for a gendered word; empty when `w` is not replaced.
  std::string_view replacement(std::string_view w) const;

 private:
  WordSet female_;
  WordSet male_;
  WordSet neutral_;
  WordMap replace_;
};

// Lowercased maximal runs of ASCII alphanumerics.
std::vector<std::string> tokenize(std::string_view text);

CaptionGender classify_caption(std::string_view caption, const GenderLexicon& lexicon);

// Labels an image from its human captions. Only single-person images can be
// labeled; conflicting or absent gender evidence yields kDiscard.
GenderLabel label_image(std::span<const std::string> captions, int person_instance_count,
                        const GenderLexicon& lexicon);

// Replaces every gendered word with its neutral counterpart, leaving all other
// characters untouched. Capitalisation of the replaced word is carried over.
std::string neutralize(std::string_view caption, const GenderLexicon& lexicon);

}  // namespace cocogb
