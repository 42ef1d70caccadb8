#pragma once

// Reference kernel for the guided-attention captioning losses: soft attention
// masking, the masked input image, caption NLL, the gender attention loss and
// their combination, with analytic gradients.
//
// The kernel never runs a captioning model. Token distributions and attention
// grids come from the model under test; the kernel only defines what the loss
// values and gradients must be.

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cocogb/coco_ingest.hpp"
#include "cocogb/gender_lexicon.hpp"
#include "cocogb/grid.hpp"

namespace cocogb::gaic {

// How the attention grid is scaled before thresholding.
enum class MaskScale {
  kRaw,             // sigmoid(w (a - threshold))
  kMaxNormalized,   // sigmoid(w (a / max(a) - threshold))
};

// Defaults threshold the max-normalized grid at 0.5. Setting kRaw with
// threshold 10 gives the literal published configuration.
struct MaskParams {
  double threshold = 0.5;
  double sharpness = 10.0;
  MaskScale scale = MaskScale::kMaxNormalized;
};

// Channels x height x width, channel-major.
struct ImageTensor {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> data;

  double at(int c, int y, int x) const {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
};

struct TokenProbSeq {
  std::vector<std::vector<double>> probs;  // one distribution per step
  std::vector<int> targets;
};

struct LossBundle {
  double l_lq = 0.0;
  double l_ge = 0.0;
  double l_self = 0.0;
  double l_ga = 0.0;
  double l_es = 0.0;
  double mu = 0.0;
  double eta = 0.0;
};

// Elementwise sigmoid mask T(a), strictly inside (0, 1) for finite input.
Grid soft_mask(const Grid& attention, const MaskParams& params = {});

// dT_i / da_i. Under kMaxNormalized the maximum is a function of the grid
// too; its entry is constant (a_max / a_max) and gets derivative 0.
Grid grad_soft_mask(const Grid& attention, const MaskParams& params = {});

// I* = I - I * T(a), with `attention` upsampled (bilinear, mass preserving) to
// the image and broadcast over channels. Throws kShape on an inconsistent
// tensor.
ImageTensor masked_image(const ImageTensor& image, const Grid& attention,
                         const MaskParams& params = {});

// I - I * T for a mask already at image resolution.
ImageTensor apply_soft_mask(const ImageTensor& image, const Grid& mask);

// -sum_t log p_t[y_t]. Throws kInput on malformed distributions or targets and
// kInfiniteLoss when a target has probability 0.
double token_nll(const TokenProbSeq& seq);

// Person mask reduced to the attention resolution by area-majority vote: a
// cell is set when more than half of its area is covered.
SegMask downsample_mask_majority(const SegMask& mask, int cols, int rows);

// Attention mass outside the person: sum(a * (1 - M)). Throws kNormalization
// unless `attention` sums to 1, kShape unless the mask matches its size.
double gender_attention_loss(const Grid& attention, const SegMask& mask);

// Gradient of sum(normalize(a) * (1 - M)) with respect to the raw grid.
Grid grad_gender_attention_loss(const Grid& attention, const SegMask& mask);

// Sum of gender_attention_loss over every gendered token's attention grid.
double gender_attention_loss_sum(std::span<const Grid> attentions, const SegMask& mask);

// l_self = l_lq + mu l_ge; l_es = l_self + eta l_ga. Throws kInput on a
// negative weight.
LossBundle combine_losses(double l_lq, double l_ge, double l_ga, double mu = 0.1,
                          double eta = 0.05);

// Word <-> id mapping of the captioner's output vocabulary.
class Vocabulary {
 public:
  explicit Vocabulary(std::vector<std::string> words);

  int id(std::string_view word) const;  // -1 when absent
  const std::string& word(int id) const { return words_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return words_.size(); }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> ids_;
};

// Target ids with every gendered word swapped for its neutral replacement.
// Throws kConfig when a replacement is missing from the vocabulary.
std::vector<int> neutralize_targets(std::span<const int> targets, const Vocabulary& vocab,
                                    const GenderLexicon& lexicon);

}  // namespace cocogb::gaic
