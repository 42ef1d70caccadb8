#include "cocogb/kernel_check.hpp"

#include <cmath>
#include <sstream>

#include "cocogb/error.hpp"
#include "cocogb/gaic_kernel.hpp"
#include "json.hpp"

namespace cocogb {

namespace {

using nlohmann::json;

Grid grid_in(const json& rows) {
  Grid g;
  g.rows = static_cast<int>(rows.size());
  for (const auto& row : rows) {
    const auto v = row.get<std::vector<double>>();
    if (g.cols == 0) g.cols = static_cast<int>(v.size());
    if (static_cast<int>(v.size()) != g.cols) throw Error(ErrorKind::kShape, "ragged grid");
    g.values.insert(g.values.end(), v.begin(), v.end());
  }
  return g;
}

SegMask mask_in(const json& rows) {
  const Grid g = grid_in(rows);
  SegMask m(g.cols, g.rows);
  for (std::size_t i = 0; i < g.values.size(); ++i) m.bits[i] = g.values[i] != 0.0 ? 1 : 0;
  return m;
}

gaic::MaskParams params_in(const json& in) {
  gaic::MaskParams p;
  p.threshold = in.value("threshold", p.threshold);
  p.sharpness = in.value("sharpness", p.sharpness);
  const std::string scale = in.value("scale", std::string("max"));
  if (scale == "raw") {
    p.scale = gaic::MaskScale::kRaw;
  } else if (scale == "max") {
    p.scale = gaic::MaskScale::kMaxNormalized;
  } else {
    throw Error(ErrorKind::kInput, "unknown scale \"" + scale + "\"");
  }
  return p;
}

json grid_out(const Grid& g) {
  json rows = json::array();
  for (int r = 0; r < g.rows; ++r) {
    rows.push_back(std::vector<double>(g.values.begin() + static_cast<std::ptrdiff_t>(r) * g.cols,
                                       g.values.begin() + static_cast<std::ptrdiff_t>(r + 1) * g.cols));
  }
  return rows;
}

gaic::ImageTensor tensor_in(const json& j) {
  gaic::ImageTensor t;
  t.channels = static_cast<int>(j.size());
  for (const auto& plane : j) {
    const Grid g = grid_in(plane);
    if (t.height == 0) {
      t.height = g.rows;
      t.width = g.cols;
    }
    if (g.rows != t.height || g.cols != t.width) throw Error(ErrorKind::kShape, "ragged image");
    t.data.insert(t.data.end(), g.values.begin(), g.values.end());
  }
  return t;
}

json tensor_out(const gaic::ImageTensor& t) {
  json out = json::array();
  const std::size_t plane = static_cast<std::size_t>(t.height) * t.width;
  for (int c = 0; c < t.channels; ++c) {
    Grid g(t.height, t.width,
           std::vector<double>(t.data.begin() + static_cast<std::ptrdiff_t>(c * plane),
                               t.data.begin() + static_cast<std::ptrdiff_t>((c + 1) * plane)));
    out.push_back(grid_out(g));
  }
  return out;
}

json run_op(const std::string& op, const json& in) {
  if (op == "soft_mask") return grid_out(gaic::soft_mask(grid_in(in.at("alpha")), params_in(in)));
  if (op == "grad_soft_mask") {
    return grid_out(gaic::grad_soft_mask(grid_in(in.at("alpha")), params_in(in)));
  }
  if (op == "masked_image") {
    return tensor_out(
        gaic::masked_image(tensor_in(in.at("image")), grid_in(in.at("alpha")), params_in(in)));
  }
  if (op == "token_nll") {
    gaic::TokenProbSeq seq;
    seq.probs = in.at("probs").get<std::vector<std::vector<double>>>();
    seq.targets = in.at("targets").get<std::vector<int>>();
    return gaic::token_nll(seq);
  }
  if (op == "gender_attention_loss") {
    return gaic::gender_attention_loss(grid_in(in.at("alpha")), mask_in(in.at("mask")));
  }
  if (op == "grad_gender_attention_loss") {
    return grid_out(gaic::grad_gender_attention_loss(grid_in(in.at("alpha")), mask_in(in.at("mask"))));
  }
  if (op == "combine_losses") {
    const auto b = gaic::combine_losses(in.at("l_lq").get<double>(), in.at("l_ge").get<double>(),
                                        in.at("l_ga").get<double>(), in.value("mu", 0.1),
                                        in.value("eta", 0.05));
    return json{{"l_lq", b.l_lq}, {"l_ge", b.l_ge}, {"l_ga", b.l_ga},
                {"l_self", b.l_self}, {"l_es", b.l_es}};
  }
  throw Error(ErrorKind::kInput, "unknown op \"" + op + "\"");
}

// Empty string on agreement, otherwise the first discrepancy.
std::string compare(const json& actual, const json& expected, double tol, const std::string& path) {
  if (expected.is_number()) {
    if (!actual.is_number()) return path + ": expected a number";
    const double a = actual.get<double>();
    const double e = expected.get<double>();
    if (!(std::abs(a - e) <= tol * std::max(1.0, std::abs(e)))) {
      std::ostringstream os;
      os.precision(17);
      os << path << ": got " << a << ", expected " << e;
      return os.str();
    }
    return {};
  }
  if (expected.is_array()) {
    if (!actual.is_array() || actual.size() != expected.size()) {
      return path + ": shape mismatch";
    }
    for (std::size_t i = 0; i < expected.size(); ++i) {
      auto r = compare(actual[i], expected[i], tol, path + "[" + std::to_string(i) + "]");
      if (!r.empty()) return r;
    }
    return {};
  }
  if (expected.is_object()) {
    for (const auto& [k, v] : expected.items()) {
      if (!actual.is_object() || !actual.contains(k)) return path + "." + k + ": missing";
      auto r = compare(actual.at(k), v, tol, path + "." + k);
      if (!r.empty()) return r;
    }
    return {};
  }
  return path + ": unsupported expected value";
}

}  // namespace

std::vector<VectorVerdict> check_kernel_vectors(std::string_view jsonl) {
  std::vector<VectorVerdict> verdicts;
  std::size_t pos = 0;
  int line_no = 0;
  while (pos < jsonl.size()) {
    std::size_t end = jsonl.find('\n', pos);
    if (end == std::string_view::npos) end = jsonl.size();
    const std::string_view line = jsonl.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;

    VectorVerdict v;
    v.line = line_no;
    try {
      const json j = json::parse(line.begin(), line.end());
      v.op = j.at("op").get<std::string>();
      if (j.contains("expect_error")) {
        const std::string want = j.at("expect_error").get<std::string>();
        try {
          run_op(v.op, j.at("inputs"));
          v.message = v.op + ": expected " + want + ", got a result";
        } catch (const Error& e) {
          if (to_string(e.kind()) != want) {
            v.message = v.op + ": expected " + want + ", got " + std::string(to_string(e.kind()));
          }
        }
      } else {
        const double tol = j.value("tol", kDefaultVectorTolerance);
        const json actual = run_op(v.op, j.at("inputs"));
        v.message = compare(actual, j.at("expected"), tol, v.op);
      }
      v.passed = v.message.empty();
    } catch (const std::exception& e) {
      v.passed = false;
      v.message = e.what();
    }
    verdicts.push_back(std::move(v));
  }
  return verdicts;
}

}  // namespace cocogb
