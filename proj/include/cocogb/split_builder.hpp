#pragma once

// Construction and verification of the gender-balanced secret test set (V1)
// and the anti-stereotypical train/val/test split (V2).

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cocogb/bias_metrics.hpp"

namespace cocogb {

struct ConstructionStep {
  int step = 0;
  ImageId image_id = 0;
  double objective_delta = 0.0;

  friend bool operator==(const ConstructionStep&, const ConstructionStep&) = default;
};

struct SplitSpec {
  std::string name;
  std::uint64_t seed = 0;
  std::vector<ImageId> train;
  std::vector<ImageId> val;
  std::vector<ImageId> test;
  std::vector<ConstructionStep> construction_log;
  // Construction parameters, recorded so a spec can be re-verified.
  std::map<std::string, std::int64_t> params;

  friend bool operator==(const SplitSpec&, const SplitSpec&) = default;
};

inline constexpr std::string_view kV1Name = "coco-gb-v1";
inline constexpr std::string_view kV2Name = "coco-gb-v2";

// Sum over categories present in the selection of |men / support - 0.5|.
double balance_deviation(const std::map<int, CooccurrenceCell>& cells);

// Greedy balanced selection of `per_gender` women and `per_gender` men images.
// Genders alternate (women first); each step adds the candidate whose
// inclusion gives the lowest balance deviation, ties going to the smallest
// image id. Images labeled kDiscard never enter. Throws kCapacity when either
// gender has fewer than `per_gender` candidates.
SplitSpec build_v1_secret(std::span<const LabeledImage> pool, int per_gender = 500);

struct V2Options {
  int val_quota = 5000;
  int test_quota = 10000;
  int min_train_per_category = 50;
  std::int64_t min_support = 10;
  std::uint64_t seed = 0;
};

// Anti-stereotypical split. Categories are visited from the most to the least
// biased; the minority-gender images of each are moved into test until the
// quota fills, never letting a category drop below `min_train_per_category`
// train images. Remaining quota is filled from the other labeled images, then
// from unlabeled ones, in id order. Val is a seeded uniform sample of what is
// left under the same coverage constraint; train is the rest. Throws
// kConstraint naming the binding category when a quota cannot be met.
SplitSpec build_v2(std::span<const LabeledImage> dataset, const V2Options& options = {},
                   std::span<const Category> categories = {});

struct PartitionSummary {
  std::string name;
  std::size_t size = 0;
  std::int64_t women = 0;
  std::int64_t men = 0;
  std::int64_t discard = 0;
  std::optional<BiasReport> report;
};

struct CategoryShift {
  int category_id = 0;
  std::optional<double> train_ratio;
  std::optional<double> test_ratio;
  std::optional<double> abs_difference;
};

struct SplitVerification {
  bool passed = true;
  std::vector<std::string> failures;
  std::vector<PartitionSummary> partitions;
  std::vector<CategoryShift> shifts;  // test vs train, when both are non-empty
};

SplitVerification verify_split(const SplitSpec& spec, std::span<const LabeledImage> dataset,
                               std::span<const Category> categories = {},
                               std::int64_t min_support = 10);

// {"name", "seed", "params", "train", "val", "test", "construction_log"}
std::string split_to_json(const SplitSpec& spec, int indent = -1);
SplitSpec split_from_json(std::string_view json_text);

std::string verification_to_json(const SplitVerification& v, int indent = 2);
std::string verification_to_text(const SplitVerification& v);

}  // namespace cocogb
