#pragma once

// Gender outcome scoring of generated captions plus BLEU-4 and CIDEr.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cocogb/coco_ingest.hpp"
#include "cocogb/gender_lexicon.hpp"

namespace cocogb {

struct GeneratedCaption {
  ImageId image_id = 0;
  std::string caption;
};

// [{"image_id": int, "caption": str}, ...]; throws kInput on duplicate ids.
std::vector<GeneratedCaption> parse_generated_captions(std::string_view json_text);
std::vector<GeneratedCaption> load_generated_captions(const std::filesystem::path& path);

enum class Outcome { kCorrect, kWrong, kNeutral };
std::string_view to_string(Outcome o);

// Captions naming both genders count as wrong. Throws kEvaluationInput when
// `gold` is kDiscard.
Outcome outcome(std::string_view generated, GenderLabel gold, const GenderLexicon& lexicon);

// Percentages; correct + wrong + neutral = 100 when count > 0.
struct OutcomeRates {
  std::int64_t count = 0;
  double correct = 0.0;
  double wrong = 0.0;
  double neutral = 0.0;

  std::array<double, 3> as_vector() const { return {correct, wrong, neutral}; }
};

struct OutcomeTable {
  OutcomeRates women;
  OutcomeRates men;
  double gender_error = 0.0;         // mean of the two per-gender wrong rates
  double gender_error_pooled = 0.0;  // all wrong / all evaluated
  std::optional<double> divergence;
  bool partial = false;              // a gender had no outcomes
};

OutcomeTable aggregate(std::span<const std::pair<GenderLabel, Outcome>> outcomes);

// Builds the table from already-aggregated rate triples (correct, wrong,
// neutral) as published per gender.
OutcomeTable table_from_rates(const std::array<double, 3>& women,
                              const std::array<double, 3>& men);

// Cosine distance 1 - w.m / (|w||m|). Throws kUndefinedScore on a zero vector
// and kInput on a negative component.
double divergence(const std::array<double, 3>& w, const std::array<double, 3>& m);

// Sentence BLEU-4: uniform weights, clipped n-gram precision, brevity penalty
// against the closest reference length. Zero precisions are replaced by 1e-9.
double bleu4(std::string_view candidate, std::span<const std::string> references);

// Corpus BLEU-4 with clipped counts and lengths pooled over all images.
double corpus_bleu4(std::span<const std::string> candidates,
                    std::span<const std::vector<std::string>> references);

// Reference document frequencies for CIDEr: df(g) counts images whose
// reference set contains the n-gram g.
struct DocumentFrequencies {
  std::size_t num_images = 0;
  std::unordered_map<std::string, std::int64_t> df;
};

DocumentFrequencies document_frequencies(std::span<const std::vector<std::string>> references);

// Plain CIDEr (no length penalty, no clipping) scaled by 10. IDF uses
// log((N + 1) / max(df, 1)) so that a singleton corpus still weights its
// n-grams. Throws kConfig when `stats` is empty.
double cider(std::string_view candidate, std::span<const std::string> references,
             const DocumentFrequencies& stats);

struct QualityScores {
  double bleu4 = 0.0;
  double cider = 0.0;
};

QualityScores corpus_quality(std::span<const std::string> candidates,
                             std::span<const std::vector<std::string>> references);

std::string outcome_table_to_json(const OutcomeTable& t, int indent = 2);
// Laid out like the published result tables: correct / wrong / neutral per
// gender, then divergence.
std::string outcome_table_to_text(const OutcomeTable& t,
                                  const std::optional<QualityScores>& quality = std::nullopt);

}  // namespace cocogb
