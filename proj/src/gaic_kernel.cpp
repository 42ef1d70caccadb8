#include "cocogb/gaic_kernel.hpp"

#include <algorithm>
#include <cmath>

#include "cocogb/attention_eval.hpp"
#include "cocogb/error.hpp"

namespace cocogb::gaic {

namespace {

constexpr double kSimplexTolerance = 1e-9;
constexpr double kDistributionTolerance = 1e-6;

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double input_scale(const Grid& a, const MaskParams& p) {
  if (p.scale == MaskScale::kRaw) return 1.0;
  const double m = a.max();
  return m > 0.0 ? 1.0 / m : 1.0;
}

void check_params(const MaskParams& p) {
  if (!(p.sharpness > 0.0)) throw Error(ErrorKind::kInput, "mask sharpness must be positive");
}

void check_mask_matches(const Grid& a, const SegMask& m) {
  if (m.width != a.cols || m.height != a.rows ||
      m.bits.size() != static_cast<std::size_t>(a.rows) * a.cols) {
    throw Error(ErrorKind::kShape, "mask " + std::to_string(m.width) + "x" +
                                       std::to_string(m.height) + " does not match attention " +
                                       std::to_string(a.cols) + "x" + std::to_string(a.rows));
  }
}

void check_tensor(const ImageTensor& t) {
  if (t.channels <= 0 || t.height <= 0 || t.width <= 0 ||
      t.data.size() != static_cast<std::size_t>(t.channels) * t.height * t.width) {
    throw Error(ErrorKind::kShape, "image tensor dimensions do not match its data");
  }
}

}  // namespace

Grid soft_mask(const Grid& attention, const MaskParams& params) {
  check_params(params);
  const double k = input_scale(attention, params);
  Grid out(attention.rows, attention.cols);
  for (std::size_t i = 0; i < attention.values.size(); ++i) {
    out.values[i] = sigmoid(params.sharpness * (attention.values[i] * k - params.threshold));
  }
  return out;
}

Grid grad_soft_mask(const Grid& attention, const MaskParams& params) {
  check_params(params);
  const double k = input_scale(attention, params);
  const double m = attention.max();
  Grid out(attention.rows, attention.cols);
  for (std::size_t i = 0; i < attention.values.size(); ++i) {
    const double a = attention.values[i];
    if (params.scale == MaskScale::kMaxNormalized && m > 0.0 && a == m) {
      out.values[i] = 0.0;
      continue;
    }
    const double t = sigmoid(params.sharpness * (a * k - params.threshold));
    out.values[i] = params.sharpness * t * (1.0 - t) * k;
  }
  return out;
}

ImageTensor apply_soft_mask(const ImageTensor& image, const Grid& mask) {
  check_tensor(image);
  if (mask.rows != image.height || mask.cols != image.width) {
    throw Error(ErrorKind::kShape, "soft mask does not match image size");
  }
  ImageTensor out = image;
  const std::size_t plane = static_cast<std::size_t>(image.height) * image.width;
  for (int c = 0; c < image.channels; ++c) {
    for (std::size_t i = 0; i < plane; ++i) {
      const double v = image.data[c * plane + i];
      out.data[c * plane + i] = v - v * mask.values[i];
    }
  }
  return out;
}

ImageTensor masked_image(const ImageTensor& image, const Grid& attention,
                         const MaskParams& params) {
  check_tensor(image);
  if (attention.rows <= 0 || attention.cols <= 0) {
    throw Error(ErrorKind::kShape, "empty attention grid");
  }
  const Grid up = upsample_bilinear(attention, image.width, image.height);
  return apply_soft_mask(image, soft_mask(up, params));
}

double token_nll(const TokenProbSeq& seq) {
  if (seq.probs.size() != seq.targets.size()) {
    throw Error(ErrorKind::kInput, "one target per time step expected");
  }
  double nll = 0.0;
  for (std::size_t t = 0; t < seq.probs.size(); ++t) {
    const auto& p = seq.probs[t];
    double s = 0.0;
    for (double v : p) {
      if (!(v >= 0.0) || !std::isfinite(v)) {
        throw Error(ErrorKind::kInput, "step " + std::to_string(t) + " has an invalid probability");
      }
      s += v;
    }
    if (p.empty() || std::abs(s - 1.0) > kDistributionTolerance) {
      throw Error(ErrorKind::kInput, "step " + std::to_string(t) + " does not sum to 1");
    }
    const int y = seq.targets[t];
    if (y < 0 || static_cast<std::size_t>(y) >= p.size()) {
      throw Error(ErrorKind::kInput, "target " + std::to_string(y) + " outside the vocabulary");
    }
    if (p[y] == 0.0) {
      throw Error(ErrorKind::kInfiniteLoss,
                  "target " + std::to_string(y) + " has zero probability at step " +
                      std::to_string(t));
    }
    nll -= std::log(p[y]);
  }
  return nll;
}

SegMask downsample_mask_majority(const SegMask& mask, int cols, int rows) {
  if (cols <= 0 || rows <= 0 || mask.width <= 0 || mask.height <= 0) {
    throw Error(ErrorKind::kShape, "downsample needs positive dimensions");
  }
  SegMask out(cols, rows);
  const double cw = static_cast<double>(mask.width) / cols;
  const double ch = static_cast<double>(mask.height) / rows;
  for (int r = 0; r < rows; ++r) {
    const double y0 = r * ch, y1 = (r + 1) * ch;
    for (int c = 0; c < cols; ++c) {
      const double x0 = c * cw, x1 = (c + 1) * cw;
      double covered = 0.0;
      for (int y = static_cast<int>(y0); y < std::min(mask.height, static_cast<int>(std::ceil(y1))); ++y) {
        const double oy = std::min<double>(y + 1, y1) - std::max<double>(y, y0);
        if (oy <= 0.0) continue;
        for (int x = static_cast<int>(x0); x < std::min(mask.width, static_cast<int>(std::ceil(x1))); ++x) {
          if (!mask.at(x, y)) continue;
          const double ox = std::min<double>(x + 1, x1) - std::max<double>(x, x0);
          if (ox > 0.0) covered += ox * oy;
        }
      }
      if (covered > 0.5 * cw * ch) out.set(c, r);
    }
  }
  return out;
}

double gender_attention_loss(const Grid& attention, const SegMask& mask) {
  check_mask_matches(attention, mask);
  double total = 0.0;
  double outside = 0.0;
  for (std::size_t i = 0; i < attention.values.size(); ++i) {
    const double a = attention.values[i];
    if (!(a >= 0.0)) throw Error(ErrorKind::kInput, "attention must be non-negative");
    total += a;
    if (!mask.bits[i]) outside += a;
  }
  if (std::abs(total - 1.0) > kSimplexTolerance) {
    throw Error(ErrorKind::kNormalization,
                "attention sums to " + std::to_string(total) + ", expected 1");
  }
  return outside;
}

Grid grad_gender_attention_loss(const Grid& attention, const SegMask& mask) {
  check_mask_matches(attention, mask);
  const double s = attention.sum();
  if (!(s > 0.0)) throw Error(ErrorKind::kUndefinedScore, "attention has no positive mass");
  double outside = 0.0;
  for (std::size_t i = 0; i < attention.values.size(); ++i) {
    if (!mask.bits[i]) outside += attention.values[i];
  }
  const double loss = outside / s;
  Grid g(attention.rows, attention.cols);
  for (std::size_t i = 0; i < g.values.size(); ++i) {
    g.values[i] = ((mask.bits[i] ? 0.0 : 1.0) - loss) / s;
  }
  return g;
}

double gender_attention_loss_sum(std::span<const Grid> attentions, const SegMask& mask) {
  double s = 0.0;
  for (const auto& a : attentions) s += gender_attention_loss(a, mask);
  return s;
}

LossBundle combine_losses(double l_lq, double l_ge, double l_ga, double mu, double eta) {
  if (mu < 0.0 || eta < 0.0) throw Error(ErrorKind::kInput, "loss weights must be non-negative");
  LossBundle b;
  b.l_lq = l_lq;
  b.l_ge = l_ge;
  b.l_ga = l_ga;
  b.mu = mu;
  b.eta = eta;
  b.l_self = l_lq + mu * l_ge;
  b.l_es = b.l_self + eta * l_ga;
  return b;
}

Vocabulary::Vocabulary(std::vector<std::string> words) : words_(std::move(words)) {
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if (!ids_.emplace(words_[i], static_cast<int>(i)).second) {
      throw Error(ErrorKind::kConfig, "duplicate vocabulary word \"" + words_[i] + "\"");
    }
  }
}

int Vocabulary::id(std::string_view word) const {
  auto it = ids_.find(std::string(word));
  return it == ids_.end() ? -1 : it->second;
}

std::vector<int> neutralize_targets(std::span<const int> targets, const Vocabulary& vocab,
                                    const GenderLexicon& lexicon) {
  std::vector<int> out(targets.begin(), targets.end());
  for (int& t : out) {
    if (t < 0 || static_cast<std::size_t>(t) >= vocab.size()) {
      throw Error(ErrorKind::kInput, "target id " + std::to_string(t) + " outside vocabulary");
    }
    const std::string& w = vocab.word(t);
    if (!lexicon.is_gendered(w)) continue;
    const std::string_view repl = lexicon.replacement(w);
    const int id = vocab.id(repl);
    if (id < 0) {
      throw Error(ErrorKind::kConfig,
                  "replacement \"" + std::string(repl) + "\" for \"" + w + "\" not in vocabulary");
    }
    t = id;
  }
  return out;
}

}  // namespace cocogb::gaic
