#include "cocogb/attention_eval.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "cocogb/error.hpp"
#include "json.hpp"

namespace cocogb {

namespace {

void check_attention(const Grid& g) {
  if (g.rows <= 0 || g.cols <= 0 ||
      g.values.size() != static_cast<std::size_t>(g.rows) * g.cols) {
    throw Error(ErrorKind::kShape, "attention grid has invalid dimensions");
  }
  bool positive = false;
  for (double v : g.values) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw Error(ErrorKind::kInput, "attention values must be finite and non-negative");
    }
    positive = positive || v > 0.0;
  }
  if (!positive) throw Error(ErrorKind::kUndefinedScore, "attention grid is all zero");
}

Grid to_mask_resolution(const Grid& attention, const SegMask& mask) {
  check_attention(attention);
  if (mask.width <= 0 || mask.height <= 0) {
    throw Error(ErrorKind::kShape, "mask has invalid dimensions");
  }
  return upsample_bilinear(attention, mask.width, mask.height);
}

Grid grid_from_json(const nlohmann::json& rows) {
  Grid g;
  g.rows = static_cast<int>(rows.size());
  for (const auto& row : rows) {
    const auto values = row.get<std::vector<double>>();
    if (g.cols == 0) g.cols = static_cast<int>(values.size());
    if (static_cast<int>(values.size()) != g.cols) {
      throw Error(ErrorKind::kShape, "ragged attention grid");
    }
    g.values.insert(g.values.end(), values.begin(), values.end());
  }
  return g;
}

}  // namespace

std::vector<AttentionRecord> parse_attention_jsonl(std::string_view text) {
  std::vector<AttentionRecord> out;
  std::size_t pos = 0;
  int line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    ++line_no;
    if (line.find_first_not_of(" \t\r") != std::string_view::npos) {
      try {
        const auto j = nlohmann::json::parse(line.begin(), line.end());
        AttentionRecord rec;
        rec.image_id = j.at("image_id").get<ImageId>();
        rec.token = j.value("token", std::string());
        rec.grid = grid_from_json(j.at("grid"));
        check_attention(rec.grid);
        out.push_back(std::move(rec));
      } catch (const nlohmann::json::exception& e) {
        throw ParseError("attention line " + std::to_string(line_no) + ": " + e.what(), pos);
      } catch (const Error& e) {
        throw Error(e.kind(), "attention line " + std::to_string(line_no) + ": " + e.what());
      }
    }
    pos = end + 1;
  }
  return out;
}

std::vector<AttentionRecord> load_attention_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kInput, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_attention_jsonl(ss.str());
}

Grid upsample_bilinear(const Grid& grid, int target_w, int target_h, bool preserve_mass) {
  if (grid.rows <= 0 || grid.cols <= 0 || target_w <= 0 || target_h <= 0) {
    throw Error(ErrorKind::kShape, "upsample_bilinear needs non-empty source and target");
  }
  Grid out(target_h, target_w);
  const double sy = target_h > 1 ? static_cast<double>(grid.rows - 1) / (target_h - 1) : 0.0;
  const double sx = target_w > 1 ? static_cast<double>(grid.cols - 1) / (target_w - 1) : 0.0;
  for (int y = 0; y < target_h; ++y) {
    const double fy = y * sy;
    const int y0 = std::min(static_cast<int>(fy), grid.rows - 1);
    const int y1 = std::min(y0 + 1, grid.rows - 1);
    const double ty = fy - y0;
    for (int x = 0; x < target_w; ++x) {
      const double fx = x * sx;
      const int x0 = std::min(static_cast<int>(fx), grid.cols - 1);
      const int x1 = std::min(x0 + 1, grid.cols - 1);
      const double tx = fx - x0;
      const double top = (1.0 - tx) * grid.at(y0, x0) + tx * grid.at(y0, x1);
      const double bottom = (1.0 - tx) * grid.at(y1, x0) + tx * grid.at(y1, x1);
      out.at(y, x) = std::max(0.0, (1.0 - ty) * top + ty * bottom);
    }
  }
  if (preserve_mass) {
    const double in_sum = grid.sum();
    const double out_sum = out.sum();
    if (out_sum > 0.0) {
      const double k = in_sum / out_sum;
      for (double& v : out.values) v *= k;
    }
  }
  return out;
}

bool pointing_game(const Grid& attention, const SegMask& mask) {
  const Grid up = to_mask_resolution(attention, mask);
  std::size_t best = 0;
  for (std::size_t i = 1; i < up.values.size(); ++i) {
    if (up.values[i] > up.values[best]) best = i;
  }
  return mask.bits[best] != 0;
}

double attention_sum(const Grid& attention, const SegMask& mask) {
  const Grid up = normalized(to_mask_resolution(attention, mask));
  double s = 0.0;
  for (std::size_t i = 0; i < up.values.size(); ++i) {
    if (mask.bits[i]) s += up.values[i];
  }
  return std::clamp(s, 0.0, 1.0);
}

AttentionScore score_attention(const Grid& attention, const SegMask& mask) {
  const Grid up = normalized(to_mask_resolution(attention, mask));
  AttentionScore score;
  std::size_t best = 0;
  double s = 0.0;
  for (std::size_t i = 0; i < up.values.size(); ++i) {
    if (up.values[i] > up.values[best]) best = i;
    if (mask.bits[i]) s += up.values[i];
  }
  score.pointing_hit = mask.bits[best] != 0;
  score.attention_sum = std::clamp(s, 0.0, 1.0);
  return score;
}

AttentionTable aggregate_attention(std::span<const std::pair<GenderLabel, AttentionScore>> scores) {
  AttentionTable t;
  std::array<double, 2> hits{}, sums{};
  for (const auto& [g, s] : scores) {
    if (g == GenderLabel::kDiscard) continue;
    const int k = g == GenderLabel::kWomen ? 0 : 1;
    AttentionAccuracy& acc = k == 0 ? t.women : t.men;
    ++acc.count;
    hits[k] += s.pointing_hit ? 1.0 : 0.0;
    sums[k] += s.attention_sum;
  }
  int groups = 0;
  for (int k = 0; k < 2; ++k) {
    AttentionAccuracy& acc = k == 0 ? t.women : t.men;
    if (acc.count == 0) continue;
    acc.pointing = 100.0 * hits[k] / static_cast<double>(acc.count);
    acc.attention_sum = 100.0 * sums[k] / static_cast<double>(acc.count);
    t.average.pointing += acc.pointing;
    t.average.attention_sum += acc.attention_sum;
    t.average.count += acc.count;
    ++groups;
  }
  if (groups > 0) {
    t.average.pointing /= groups;
    t.average.attention_sum /= groups;
  }
  return t;
}

std::string attention_table_to_json(const AttentionTable& t, int indent) {
  using oj = nlohmann::ordered_json;
  auto a = [](const AttentionAccuracy& x) {
    return oj{{"count", x.count}, {"pointing_game", x.pointing}, {"attention_sum", x.attention_sum}};
  };
  oj j;
  j["women"] = a(t.women);
  j["men"] = a(t.men);
  j["average"] = a(t.average);
  return j.dump(indent);
}

std::string attention_table_to_text(const AttentionTable& t) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(1);
  os << std::left << std::setw(16) << "Accuracy" << std::right << std::setw(8) << "Women"
     << std::setw(8) << "Men" << std::setw(9) << "Average" << "\n";
  os << std::left << std::setw(16) << "Attention Sum" << std::right << std::setw(8)
     << t.women.attention_sum << std::setw(8) << t.men.attention_sum << std::setw(9)
     << t.average.attention_sum << "\n";
  os << std::left << std::setw(16) << "Pointing Game" << std::right << std::setw(8)
     << t.women.pointing << std::setw(8) << t.men.pointing << std::setw(9) << t.average.pointing
     << "\n";
  return os.str();
}

}  // namespace cocogb
