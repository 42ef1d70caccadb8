#pragma once

// Gender-context co-occurrence counting and per-category bias ratios.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cocogb/coco_ingest.hpp"
#include "cocogb/gender_lexicon.hpp"

namespace cocogb {

// An image reduced to what the audit needs: its gender label and the set of
// object categories present in it (sorted, unique).
struct LabeledImage {
  ImageId image_id = 0;
  GenderLabel label = GenderLabel::kDiscard;
  std::vector<int> categories;
};

// Joins caption and instance annotations and labels every image. Images
// without captions are labeled kDiscard. A crowd person annotation counts as
// more than one person.
std::vector<LabeledImage> label_dataset(std::span<const ImageCaptions> captions,
                                        const InstanceDataset& instances,
                                        const GenderLexicon& lexicon);

struct CooccurrenceCell {
  std::int64_t women = 0;
  std::int64_t men = 0;

  std::int64_t support() const { return women + men; }
  friend bool operator==(const CooccurrenceCell&, const CooccurrenceCell&) = default;
};

struct CooccurrenceTable {
  std::map<int, CooccurrenceCell> cells;
  std::int64_t women_images = 0;
  std::int64_t men_images = 0;

  void merge(const CooccurrenceTable& other);
  friend bool operator==(const CooccurrenceTable&, const CooccurrenceTable&) = default;
};

// Cell (c, g) counts images labeled g in which category c is present at least
// once. kDiscard images contribute nothing. Categories listed in `categories`
// get a row even when their counts are zero.
CooccurrenceTable cooccurrence(std::span<const LabeledImage> images,
                               std::span<const Category> categories = {});

// men / (men + women); nullopt when support is below `min_support` or zero.
std::optional<double> bias_ratio(const CooccurrenceCell& cell, std::int64_t min_support = 1);

struct BiasRow {
  int category_id = 0;
  std::string name;
  CooccurrenceCell cell;
  std::optional<double> ratio;
};

struct BiasAggregate {
  std::size_t categories = 0;         // number of defined ratios averaged
  std::optional<double> average_bias_ratio;
  double pct_male_skewed = 0.0;       // fraction with ratio > 0.5, in [0,1]
};

struct BiasReport {
  std::int64_t min_support = 10;
  std::vector<BiasRow> rows;          // ordered by ratio, highest first
  BiasAggregate all;                  // every category with a defined ratio
  BiasAggregate top_view;             // the `top_k` best-supported of those
  std::size_t top_k = 63;
  std::int64_t women_images = 0;
  std::int64_t men_images = 0;
};

// Throws kEmptyReport when no category has any co-occurrence.
BiasReport build_report(const CooccurrenceTable& table, std::int64_t min_support = 10,
                        std::span<const Category> categories = {}, std::size_t top_k = 63);

std::string report_to_json(const BiasReport& report, int indent = 2);
// Aligned table ordered by bias ratio.
std::string report_to_text(const BiasReport& report);

}  // namespace cocogb
