#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "cocogb/attention_eval.hpp"
#include "cocogb/bias_metrics.hpp"
#include "cocogb/caption_eval.hpp"
#include "cocogb/cli.hpp"
#include "cocogb/coco_ingest.hpp"
#include "cocogb/error.hpp"
#include "cocogb/gaic_kernel.hpp"
#include "cocogb/gender_lexicon.hpp"
#include "cocogb/kernel_check.hpp"
#include "cocogb/split_builder.hpp"

namespace py = pybind11;
using namespace cocogb;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;
using Bits = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

Grid to_grid(const Array& a) {
  if (a.ndim() != 2) throw py::value_error("expected a 2-D array");
  const auto r = static_cast<int>(a.shape(0)), c = static_cast<int>(a.shape(1));
  return Grid(r, c, std::vector<double>(a.data(), a.data() + a.size()));
}

Array from_grid(const Grid& g) {
  Array out({g.rows, g.cols});
  std::copy(g.values.begin(), g.values.end(), out.mutable_data());
  return out;
}

SegMask to_mask(const Bits& b) {
  if (b.ndim() != 2) throw py::value_error("expected a 2-D mask");
  SegMask m(static_cast<int>(b.shape(1)), static_cast<int>(b.shape(0)));
  for (py::ssize_t i = 0; i < b.size(); ++i) m.bits[static_cast<std::size_t>(i)] = b.data()[i] != 0;
  return m;
}

py::array_t<std::uint8_t> from_mask(const SegMask& m) {
  py::array_t<std::uint8_t> out({m.height, m.width});
  std::copy(m.bits.begin(), m.bits.end(), out.mutable_data());
  return out;
}

GenderLabel label_from(const std::string& s) { return parse_gender_label(s); }

std::vector<LabeledImage> labeled_from(
    const std::vector<std::tuple<ImageId, std::string, std::vector<int>>>& rows) {
  std::vector<LabeledImage> out;
  out.reserve(rows.size());
  for (const auto& [id, label, cats] : rows) out.push_back({id, label_from(label), cats});
  return out;
}

py::dict split_dict(const SplitSpec& s) {
  py::dict d;
  d["name"] = s.name;
  d["seed"] = s.seed;
  d["train"] = s.train;
  d["val"] = s.val;
  d["test"] = s.test;
  d["params"] = s.params;
  d["json"] = split_to_json(s);
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Gender bias audit toolkit for image captioning corpora";

  static py::exception<Error> error_type(m, "CocogbError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const std::string msg = std::string(to_string(e.kind())) + ": " + e.what();
      PyErr_SetString(error_type.ptr(), msg.c_str());
    }
  });

  // lexicon
  m.def("tokenize", &tokenize, py::arg("text"));
  m.def("classify_caption", [](const std::string& c) {
    return std::string(to_string(classify_caption(c, GenderLexicon::default_lexicon())));
  }, py::arg("caption"), "\"female\", \"male\", \"both\" or \"none\"");
  m.def("neutralize", [](const std::string& c) {
    return neutralize(c, GenderLexicon::default_lexicon());
  }, py::arg("caption"));
  m.def("label_image", [](const std::vector<std::string>& captions, int persons) {
    return std::string(to_string(label_image(captions, persons, GenderLexicon::default_lexicon())));
  }, py::arg("captions"), py::arg("person_count"));

  // geometry
  m.def("decode_rle", [](const std::vector<std::uint32_t>& counts, int w, int h) {
    return from_mask(decode_rle(counts, w, h));
  }, py::arg("counts"), py::arg("width"), py::arg("height"));
  m.def("encode_rle", [](const Bits& mask) { return encode_rle(to_mask(mask)).counts; },
        py::arg("mask"));
  m.def("rasterize_polygon", [](const std::vector<Polygon>& polys, int w, int h) {
    return from_mask(rasterize_polygon(polys, w, h));
  }, py::arg("polygons"), py::arg("width"), py::arg("height"));

  // bias and splits
  m.def("bias_ratio", [](std::int64_t women, std::int64_t men, std::int64_t min_support) {
    return bias_ratio({women, men}, min_support);
  }, py::arg("women"), py::arg("men"), py::arg("min_support") = 1);
  m.def("average_bias_ratio",
        [](const std::vector<std::tuple<ImageId, std::string, std::vector<int>>>& images,
           std::int64_t min_support) {
          const auto imgs = labeled_from(images);
          return build_report(cooccurrence(imgs), min_support).all.average_bias_ratio;
        },
        py::arg("images"), py::arg("min_support") = 10,
        "images: [(image_id, label, [category ids])]");
  m.def("build_v1_secret",
        [](const std::vector<std::tuple<ImageId, std::string, std::vector<int>>>& pool,
           int per_gender) { return split_dict(build_v1_secret(labeled_from(pool), per_gender)); },
        py::arg("pool"), py::arg("per_gender") = 500);
  m.def("build_v2",
        [](const std::vector<std::tuple<ImageId, std::string, std::vector<int>>>& dataset,
           int val_quota, int test_quota, int min_train, std::uint64_t seed) {
          V2Options o;
          o.val_quota = val_quota;
          o.test_quota = test_quota;
          o.min_train_per_category = min_train;
          o.seed = seed;
          return split_dict(build_v2(labeled_from(dataset), o));
        },
        py::arg("dataset"), py::arg("val_quota") = 5000, py::arg("test_quota") = 10000,
        py::arg("min_train") = 50, py::arg("seed") = 0);

  // caption metrics
  m.def("outcome", [](const std::string& caption, const std::string& gold) {
    return std::string(to_string(outcome(caption, label_from(gold), GenderLexicon::default_lexicon())));
  }, py::arg("caption"), py::arg("gold"));
  m.def("divergence", &divergence, py::arg("women"), py::arg("men"));
  m.def("bleu4", [](const std::string& cand, const std::vector<std::string>& refs) {
    return bleu4(cand, refs);
  }, py::arg("candidate"), py::arg("references"));
  m.def("corpus_quality",
        [](const std::vector<std::string>& cands, const std::vector<std::vector<std::string>>& refs) {
          const QualityScores q = corpus_quality(cands, refs);
          return py::make_tuple(q.bleu4, q.cider);
        },
        py::arg("candidates"), py::arg("references"), "(BLEU-4, CIDEr)");
  m.def("cider",
        [](const std::string& cand, const std::vector<std::string>& refs,
           const std::vector<std::vector<std::string>>& corpus) {
          return cider(cand, refs, document_frequencies(corpus));
        },
        py::arg("candidate"), py::arg("references"), py::arg("corpus"));

  // attention
  m.def("pointing_game", [](const Array& a, const Bits& mask) {
    return pointing_game(to_grid(a), to_mask(mask));
  }, py::arg("attention"), py::arg("mask"));
  m.def("attention_sum", [](const Array& a, const Bits& mask) {
    return attention_sum(to_grid(a), to_mask(mask));
  }, py::arg("attention"), py::arg("mask"));

  // kernel
  auto params = [](double threshold, double sharpness, const std::string& scale) {
    gaic::MaskParams p;
    p.threshold = threshold;
    p.sharpness = sharpness;
    if (scale == "raw") {
      p.scale = gaic::MaskScale::kRaw;
    } else if (scale == "max") {
      p.scale = gaic::MaskScale::kMaxNormalized;
    } else {
      throw py::value_error("scale must be \"raw\" or \"max\"");
    }
    return p;
  };
  m.def("soft_mask", [params](const Array& a, double threshold, double sharpness, const std::string& scale) {
    return from_grid(gaic::soft_mask(to_grid(a), params(threshold, sharpness, scale)));
  }, py::arg("attention"), py::arg("threshold") = 0.5, py::arg("sharpness") = 10.0, py::arg("scale") = "max");
  m.def("grad_soft_mask", [params](const Array& a, double threshold, double sharpness, const std::string& scale) {
    return from_grid(gaic::grad_soft_mask(to_grid(a), params(threshold, sharpness, scale)));
  }, py::arg("attention"), py::arg("threshold") = 0.5, py::arg("sharpness") = 10.0, py::arg("scale") = "max");
  m.def("gender_attention_loss", [](const Array& a, const Bits& mask) {
    return gaic::gender_attention_loss(to_grid(a), to_mask(mask));
  }, py::arg("attention"), py::arg("mask"));
  m.def("grad_gender_attention_loss", [](const Array& a, const Bits& mask) {
    return from_grid(gaic::grad_gender_attention_loss(to_grid(a), to_mask(mask)));
  }, py::arg("attention"), py::arg("mask"));
  m.def("token_nll", [](const std::vector<std::vector<double>>& probs, const std::vector<int>& targets) {
    return gaic::token_nll({probs, targets});
  }, py::arg("probs"), py::arg("targets"));
  m.def("combine_losses", [](double l_lq, double l_ge, double l_ga, double mu, double eta) {
    const auto b = gaic::combine_losses(l_lq, l_ge, l_ga, mu, eta);
    py::dict d;
    d["l_lq"] = b.l_lq;
    d["l_ge"] = b.l_ge;
    d["l_ga"] = b.l_ga;
    d["l_self"] = b.l_self;
    d["l_es"] = b.l_es;
    return d;
  }, py::arg("l_lq"), py::arg("l_ge"), py::arg("l_ga"), py::arg("mu") = 0.1, py::arg("eta") = 0.05);
  m.def("check_kernel_vectors", [](const std::string& jsonl) {
    py::list out;
    for (const auto& v : check_kernel_vectors(jsonl)) {
      out.append(py::make_tuple(v.line, v.op, v.passed, v.message));
    }
    return out;
  }, py::arg("jsonl"), "[(line, op, passed, message)]");

  m.def("run_cli", [](const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return py::make_tuple(code, out.str(), err.str());
  }, py::arg("args"), "Runs a cocogb subcommand in-process: (exit code, stdout, stderr).");
}
