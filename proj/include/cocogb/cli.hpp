#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace cocogb::cli {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // evaluation or constraint failure
inline constexpr int kExitUsage = 2;    // usage or input error

struct RunConfig {
  // Repeatable: COCO ships train and val annotations as separate files.
  std::vector<std::filesystem::path> captions_ann;
  std::vector<std::filesystem::path> instances_ann;
  std::filesystem::path labels;
  std::filesystem::path split;
  std::filesystem::path lexicon;
  std::filesystem::path results;
  std::filesystem::path attention;
  std::filesystem::path vectors;
  std::filesystem::path rates;
  std::filesystem::path out_dir = "cocogb_out";
  std::string variant;
  int per_gender = 500;
  int val_quota = 5000;
  int test_quota = 10000;
  int min_train = 50;
  std::int64_t min_support = 10;
  std::uint64_t seed = 0;
  bool quality = true;
  bool attention_metrics = true;
};

// Runs `cocogb <subcommand> [flags]`; `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cocogb::cli
