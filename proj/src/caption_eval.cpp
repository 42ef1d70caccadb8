#include "cocogb/caption_eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include "cocogb/error.hpp"
#include "json.hpp"

namespace cocogb {

namespace {

constexpr int kMaxN = 4;
constexpr double kZeroPrecision = 1e-9;

using NgramCounts = std::unordered_map<std::string, int>;

NgramCounts ngrams(const std::vector<std::string>& toks, int n) {
  NgramCounts out;
  if (static_cast<int>(toks.size()) < n) return out;
  for (std::size_t i = 0; i + n <= toks.size(); ++i) {
    std::string key = toks[i];
    for (int k = 1; k < n; ++k) {
      key += ' ';
      key += toks[i + k];
    }
    ++out[key];
  }
  return out;
}

struct BleuStats {
  std::array<double, kMaxN> matches{};
  std::array<double, kMaxN> totals{};
  double cand_len = 0.0;
  double ref_len = 0.0;
};

void accumulate_bleu(const std::vector<std::string>& cand,
                     const std::vector<std::vector<std::string>>& refs, BleuStats& s) {
  s.cand_len += static_cast<double>(cand.size());
  // closest reference length, ties to the shorter one
  std::size_t best = refs.front().size();
  for (const auto& r : refs) {
    const auto d = [&](std::size_t len) {
      return len > cand.size() ? len - cand.size() : cand.size() - len;
    };
    if (d(r.size()) < d(best) || (d(r.size()) == d(best) && r.size() < best)) best = r.size();
  }
  s.ref_len += static_cast<double>(best);
  for (int n = 1; n <= kMaxN; ++n) {
    const NgramCounts c = ngrams(cand, n);
    NgramCounts max_ref;
    for (const auto& r : refs) {
      for (const auto& [g, k] : ngrams(r, n)) max_ref[g] = std::max(max_ref[g], k);
    }
    for (const auto& [g, k] : c) {
      auto it = max_ref.find(g);
      if (it != max_ref.end()) s.matches[n - 1] += std::min(k, it->second);
      s.totals[n - 1] += k;
    }
  }
}

double bleu_from(const BleuStats& s) {
  if (s.cand_len == 0.0) return 0.0;
  double log_sum = 0.0;
  for (int n = 0; n < kMaxN; ++n) {
    const double p = s.matches[n] > 0.0 ? s.matches[n] / s.totals[n] : kZeroPrecision;
    log_sum += std::log(p);
  }
  const double bp = s.cand_len < s.ref_len ? std::exp(1.0 - s.ref_len / s.cand_len) : 1.0;
  return bp * std::exp(log_sum / kMaxN);
}

std::vector<std::vector<std::string>> tokenize_all(std::span<const std::string> texts) {
  std::vector<std::vector<std::string>> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(tokenize(t));
  return out;
}

OutcomeRates rates(std::int64_t correct, std::int64_t wrong, std::int64_t neutral) {
  OutcomeRates r;
  r.count = correct + wrong + neutral;
  if (r.count > 0) {
    const double n = static_cast<double>(r.count);
    r.correct = 100.0 * static_cast<double>(correct) / n;
    r.wrong = 100.0 * static_cast<double>(wrong) / n;
    r.neutral = 100.0 * static_cast<double>(neutral) / n;
  }
  return r;
}

}  // namespace

std::vector<GeneratedCaption> parse_generated_captions(std::string_view json_text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(json_text.begin(), json_text.end());
  } catch (const json::parse_error& e) {
    throw ParseError("malformed captions JSON at byte " + std::to_string(e.byte) + ": " +
                         e.what(),
                     e.byte);
  }
  if (!doc.is_array()) throw ParseError("captions file must be a JSON array", 0);
  std::vector<GeneratedCaption> out;
  std::set<ImageId> seen;
  for (const auto& j : doc) {
    GeneratedCaption g;
    try {
      g.image_id = j.at("image_id").get<ImageId>();
      g.caption = j.at("caption").get<std::string>();
    } catch (const json::exception& e) {
      throw ParseError(std::string("bad caption record: ") + e.what(), 0);
    }
    if (!seen.insert(g.image_id).second) {
      throw Error(ErrorKind::kInput,
                  "more than one caption for image " + std::to_string(g.image_id));
    }
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<GeneratedCaption> load_generated_captions(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kInput, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_generated_captions(ss.str());
}

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::kCorrect: return "correct";
    case Outcome::kWrong: return "wrong";
    case Outcome::kNeutral: return "neutral";
  }
  return "neutral";
}

Outcome outcome(std::string_view generated, GenderLabel gold, const GenderLexicon& lexicon) {
  if (gold == GenderLabel::kDiscard) {
    throw Error(ErrorKind::kEvaluationInput, "cannot score against a discarded gold label");
  }
  switch (classify_caption(generated, lexicon)) {
    case CaptionGender::kNone: return Outcome::kNeutral;
    case CaptionGender::kBoth: return Outcome::kWrong;
    case CaptionGender::kFemale:
      return gold == GenderLabel::kWomen ? Outcome::kCorrect : Outcome::kWrong;
    case CaptionGender::kMale:
      return gold == GenderLabel::kMen ? Outcome::kCorrect : Outcome::kWrong;
  }
  return Outcome::kNeutral;
}

double divergence(const std::array<double, 3>& w, const std::array<double, 3>& m) {
  double dot = 0.0, nw = 0.0, nm = 0.0;
  for (int i = 0; i < 3; ++i) {
    if (w[i] < 0.0 || m[i] < 0.0) {
      throw Error(ErrorKind::kInput, "outcome rates must be non-negative");
    }
    dot += w[i] * m[i];
    nw += w[i] * w[i];
    nm += m[i] * m[i];
  }
  if (nw == 0.0 || nm == 0.0) {
    throw Error(ErrorKind::kUndefinedScore, "divergence of a zero outcome vector");
  }
  const double d = 1.0 - dot / (std::sqrt(nw) * std::sqrt(nm));
  return std::clamp(d, 0.0, 1.0);
}

namespace {

void finish(OutcomeTable& t) {
  const bool hw = t.women.count > 0;
  const bool hm = t.men.count > 0;
  t.partial = !(hw && hm);
  if (hw && hm) {
    t.gender_error = 0.5 * (t.women.wrong + t.men.wrong);
  } else if (hw) {
    t.gender_error = t.women.wrong;
  } else if (hm) {
    t.gender_error = t.men.wrong;
  }
  if (hw && hm) t.divergence = divergence(t.women.as_vector(), t.men.as_vector());
}

}  // namespace

OutcomeTable aggregate(std::span<const std::pair<GenderLabel, Outcome>> outcomes) {
  std::array<std::array<std::int64_t, 3>, 2> counts{};
  for (const auto& [gold, o] : outcomes) {
    if (gold == GenderLabel::kDiscard) {
      throw Error(ErrorKind::kEvaluationInput, "outcome recorded against a discarded label");
    }
    ++counts[gold == GenderLabel::kWomen ? 0 : 1][static_cast<int>(o)];
  }
  OutcomeTable t;
  t.women = rates(counts[0][0], counts[0][1], counts[0][2]);
  t.men = rates(counts[1][0], counts[1][1], counts[1][2]);
  const std::int64_t total = t.women.count + t.men.count;
  if (total > 0) {
    t.gender_error_pooled =
        100.0 * static_cast<double>(counts[0][1] + counts[1][1]) / static_cast<double>(total);
  }
  finish(t);
  return t;
}

OutcomeTable table_from_rates(const std::array<double, 3>& women,
                              const std::array<double, 3>& men) {
  OutcomeTable t;
  auto fill = [](OutcomeRates& r, const std::array<double, 3>& v) {
    r.count = 1;
    r.correct = v[0];
    r.wrong = v[1];
    r.neutral = v[2];
  };
  fill(t.women, women);
  fill(t.men, men);
  // no sample counts available, so pooled equals the per-gender mean
  t.gender_error_pooled = 0.5 * (women[1] + men[1]);
  finish(t);
  return t;
}

double bleu4(std::string_view candidate, std::span<const std::string> references) {
  const auto refs = tokenize_all(references);
  if (refs.empty() || std::all_of(refs.begin(), refs.end(), [](const auto& r) { return r.empty(); })) {
    throw Error(ErrorKind::kInput, "bleu4 needs at least one non-empty reference");
  }
  const auto cand = tokenize(candidate);
  if (cand.empty()) return 0.0;
  BleuStats s;
  accumulate_bleu(cand, refs, s);
  return bleu_from(s);
}

double corpus_bleu4(std::span<const std::string> candidates,
                    std::span<const std::vector<std::string>> references) {
  if (candidates.size() != references.size()) {
    throw Error(ErrorKind::kInput, "candidate and reference counts differ");
  }
  BleuStats s;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto refs = tokenize_all(references[i]);
    if (refs.empty()) throw Error(ErrorKind::kInput, "image without references");
    accumulate_bleu(tokenize(candidates[i]), refs, s);
  }
  return bleu_from(s);
}

DocumentFrequencies document_frequencies(std::span<const std::vector<std::string>> references) {
  DocumentFrequencies stats;
  stats.num_images = references.size();
  for (const auto& refs : references) {
    std::set<std::string> seen;
    for (const auto& r : refs) {
      const auto toks = tokenize(r);
      for (int n = 1; n <= kMaxN; ++n) {
        for (auto& [g, k] : ngrams(toks, n)) seen.insert(g);
      }
    }
    for (const auto& g : seen) ++stats.df[g];
  }
  return stats;
}

double cider(std::string_view candidate, std::span<const std::string> references,
             const DocumentFrequencies& stats) {
  if (stats.num_images == 0 || stats.df.empty()) {
    throw Error(ErrorKind::kConfig, "CIDEr needs corpus document frequencies");
  }
  if (references.empty()) throw Error(ErrorKind::kInput, "cider needs at least one reference");
  const double log_n1 = std::log(static_cast<double>(stats.num_images) + 1.0);
  auto idf = [&](const std::string& g) {
    auto it = stats.df.find(g);
    const double df = it == stats.df.end() ? 1.0 : std::max<double>(1.0, it->second);
    return log_n1 - std::log(df);
  };
  auto vec = [&](const NgramCounts& c) {
    std::unordered_map<std::string, double> v;
    for (const auto& [g, k] : c) v[g] = k * idf(g);
    return v;
  };
  auto norm = [](const std::unordered_map<std::string, double>& v) {
    double s = 0.0;
    for (const auto& [g, x] : v) s += x * x;
    return std::sqrt(s);
  };

  const auto cand = tokenize(candidate);
  const auto refs = tokenize_all(references);
  double total = 0.0;
  for (int n = 1; n <= kMaxN; ++n) {
    const auto cv = vec(ngrams(cand, n));
    const double cn = norm(cv);
    double per_n = 0.0;
    for (const auto& r : refs) {
      const auto rv = vec(ngrams(r, n));
      const double rn = norm(rv);
      if (cn == 0.0 || rn == 0.0) continue;
      double dot = 0.0;
      for (const auto& [g, x] : cv) {
        auto it = rv.find(g);
        if (it != rv.end()) dot += x * it->second;
      }
      per_n += dot / (cn * rn);
    }
    total += per_n / static_cast<double>(refs.size());
  }
  return 10.0 * total / kMaxN;
}

QualityScores corpus_quality(std::span<const std::string> candidates,
                             std::span<const std::vector<std::string>> references) {
  QualityScores q;
  if (candidates.empty()) return q;
  q.bleu4 = corpus_bleu4(candidates, references);
  const DocumentFrequencies stats = document_frequencies(references);
  double sum = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    sum += cider(candidates[i], references[i], stats);
  }
  q.cider = sum / static_cast<double>(candidates.size());
  return q;
}

std::string outcome_table_to_json(const OutcomeTable& t, int indent) {
  using oj = nlohmann::ordered_json;
  auto r = [](const OutcomeRates& x) {
    return oj{{"count", x.count}, {"correct", x.correct}, {"wrong", x.wrong}, {"neutral", x.neutral}};
  };
  oj j;
  j["women"] = r(t.women);
  j["men"] = r(t.men);
  j["gender_error"] = t.gender_error;
  j["gender_error_pooled"] = t.gender_error_pooled;
  j["divergence"] = t.divergence ? oj(*t.divergence) : oj(nullptr);
  j["partial"] = t.partial;
  return j.dump(indent);
}

std::string outcome_table_to_text(const OutcomeTable& t,
                                  const std::optional<QualityScores>& quality) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(1);
  if (quality) os << std::setw(8) << "B-4" << std::setw(8) << "CIDEr";
  os << std::setw(24) << "Women" << std::setw(24) << "Men" << std::setw(12) << "Divergence"
     << std::setw(12) << "Error" << "\n";
  if (quality) os << std::setw(16) << "";
  for (int g = 0; g < 2; ++g) {
    os << std::setw(8) << "correct" << std::setw(8) << "wrong" << std::setw(8) << "neutral";
  }
  os << std::setw(12) << "" << std::setw(6) << "mean" << std::setw(6) << "pool" << "\n";
  if (quality) {
    os << std::setw(8) << 100.0 * quality->bleu4 << std::setw(8) << 100.0 * quality->cider;
  }
  for (const auto* r : {&t.women, &t.men}) {
    os << std::setw(8) << r->correct << std::setw(8) << r->wrong << std::setw(8) << r->neutral;
  }
  os << std::setw(12);
  if (t.divergence) {
    os << std::setprecision(3) << *t.divergence << std::setprecision(1);
  } else {
    os << "-";
  }
  os << std::setw(6) << t.gender_error << std::setw(6) << t.gender_error_pooled << "\n";
  if (t.partial) os << "warning: one gender has no evaluated images\n";
  return os.str();
}

}  // namespace cocogb
