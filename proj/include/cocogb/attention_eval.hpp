#pragma once

// Attention correctness: Pointing Game and Attention Sum of gender-word
// attention maps against person segmentation masks.

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cocogb/coco_ingest.hpp"
#include "cocogb/gender_lexicon.hpp"
#include "cocogb/grid.hpp"

namespace cocogb {

struct AttentionRecord {
  ImageId image_id = 0;
  std::string token;
  Grid grid;
};

// One record per line: {"image_id": int, "token": str, "grid": [[...], ...]}.
// Blank lines are skipped. Throws ParseError (offset = line start) on a bad
// line and kInput on a negative or all-zero grid.
std::vector<AttentionRecord> parse_attention_jsonl(std::string_view text);
std::vector<AttentionRecord> load_attention_jsonl(const std::filesystem::path& path);

// Corner-aligned bilinear resampling to target_h x target_w. With
// `preserve_mass` the output is rescaled to the input's total.
Grid upsample_bilinear(const Grid& grid, int target_w, int target_h, bool preserve_mass = true);

// Argmax of the attention upsampled to the mask; ties go to the smallest
// row-major index. An empty mask is always a miss.
bool pointing_game(const Grid& attention, const SegMask& mask);

// Share of the (upsampled, unit-sum) attention that falls inside the mask.
// Throws kUndefinedScore for an all-zero grid.
double attention_sum(const Grid& attention, const SegMask& mask);

struct AttentionScore {
  bool pointing_hit = false;
  double attention_sum = 0.0;
};

AttentionScore score_attention(const Grid& attention, const SegMask& mask);

struct AttentionAccuracy {
  std::size_t count = 0;
  double pointing = 0.0;       // hit rate x 100
  double attention_sum = 0.0;  // mean x 100
};

struct AttentionTable {
  AttentionAccuracy women;
  AttentionAccuracy men;
  AttentionAccuracy average;  // mean of the per-gender columns
};

// kDiscard entries are ignored. A gender without records is left at zero and
// excluded from the average.
AttentionTable aggregate_attention(std::span<const std::pair<GenderLabel, AttentionScore>> scores);

std::string attention_table_to_json(const AttentionTable& t, int indent = 2);
std::string attention_table_to_text(const AttentionTable& t);

}  // namespace cocogb
