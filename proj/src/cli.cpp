#include "cocogb/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <unordered_map>

#include "CLI11.hpp"
#include "cocogb/attention_eval.hpp"
#include "cocogb/bias_metrics.hpp"
#include "cocogb/caption_eval.hpp"
#include "cocogb/coco_ingest.hpp"
#include "cocogb/error.hpp"
#include "cocogb/gender_lexicon.hpp"
#include "cocogb/kernel_check.hpp"
#include "cocogb/parallel.hpp"
#include "cocogb/split_builder.hpp"
#include "json.hpp"

namespace cocogb::cli {

namespace {

namespace fs = std::filesystem;
using oj = nlohmann::ordered_json;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kInput, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kInput, "cannot write " + path.string());
  out << content;
  if (!content.empty() && content.back() != '\n') out << '\n';
}

std::string seed_line(const RunConfig& cfg) { return "# seed " + std::to_string(cfg.seed) + "\n"; }

void require(bool ok, const std::string& what) {
  if (!ok) throw UsageError(what);
}

void require_exists(const fs::path& p, const char* flag) {
  if (!fs::exists(p)) throw UsageError(std::string(flag) + ": no such file " + p.string());
}

GenderLexicon lexicon_for(const RunConfig& cfg) {
  if (cfg.lexicon.empty()) return GenderLexicon::default_lexicon();
  require_exists(cfg.lexicon, "--lexicon");
  return GenderLexicon::load(cfg.lexicon);
}

std::vector<ImageCaptions> load_all_captions(const RunConfig& cfg) {
  std::vector<ImageCaptions> all;
  for (const auto& p : cfg.captions_ann) {
    require_exists(p, "--captions-ann");
    auto part = load_captions(p);
    all.insert(all.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  std::sort(all.begin(), all.end(), [](const ImageCaptions& a, const ImageCaptions& b) {
    return a.image.image_id < b.image.image_id;
  });
  return all;
}

InstanceDataset load_all_instances(const RunConfig& cfg) {
  InstanceDataset all;
  std::set<int> cat_ids;
  for (const auto& p : cfg.instances_ann) {
    require_exists(p, "--instances-ann");
    InstanceDataset part = load_instances(p);
    all.images.insert(all.images.end(), part.images.begin(), part.images.end());
    all.annotations.insert(all.annotations.end(), std::make_move_iterator(part.annotations.begin()),
                           std::make_move_iterator(part.annotations.end()));
    for (auto& c : part.categories) {
      if (cat_ids.insert(c.category_id).second) all.categories.push_back(std::move(c));
    }
  }
  std::sort(all.categories.begin(), all.categories.end(),
            [](const Category& a, const Category& b) { return a.category_id < b.category_id; });
  return all;
}

std::map<ImageId, GenderLabel> read_labels(const fs::path& path) {
  require_exists(path, "--labels");
  const std::string text = read_text(path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed labels file: ") + e.what(), e.byte);
  }
  const auto& m = doc.contains("labels") ? doc.at("labels") : doc;
  std::map<ImageId, GenderLabel> out;
  for (const auto& [k, v] : m.items()) {
    out[std::stoll(k)] = parse_gender_label(v.get<std::string>());
  }
  return out;
}

struct Dataset {
  InstanceDataset instances;
  std::vector<LabeledImage> images;
  std::map<ImageId, GenderLabel> labels;
};

// Labeled images from --labels (joined with instance categories) or, without
// a labels file, by labeling the caption annotations on the fly.
Dataset load_dataset(const RunConfig& cfg, const GenderLexicon& lexicon) {
  require(!cfg.instances_ann.empty(), "--instances-ann is required");
  require(!cfg.labels.empty() || !cfg.captions_ann.empty(),
          "--labels (or --captions-ann to label on the fly) is required");
  Dataset ds;
  ds.instances = load_all_instances(cfg);
  if (!cfg.labels.empty()) {
    ds.labels = read_labels(cfg.labels);
    std::unordered_map<ImageId, std::vector<int>> cats;
    for (const auto& a : ds.instances.annotations) cats[a.image_id].push_back(a.category_id);
    std::vector<ImageRecord> images = ds.instances.images;
    std::sort(images.begin(), images.end(),
              [](const ImageRecord& a, const ImageRecord& b) { return a.image_id < b.image_id; });
    for (const auto& img : images) {
      LabeledImage li;
      li.image_id = img.image_id;
      auto it = ds.labels.find(img.image_id);
      li.label = it == ds.labels.end() ? GenderLabel::kDiscard : it->second;
      auto c = cats.find(img.image_id);
      if (c != cats.end()) {
        li.categories = c->second;
        std::sort(li.categories.begin(), li.categories.end());
        li.categories.erase(std::unique(li.categories.begin(), li.categories.end()),
                            li.categories.end());
      }
      ds.images.push_back(std::move(li));
    }
  } else {
    const auto captions = load_all_captions(cfg);
    ds.images = label_dataset(captions, ds.instances, lexicon);
    for (const auto& li : ds.images) ds.labels[li.image_id] = li.label;
  }
  return ds;
}

std::vector<LabeledImage> subset(const std::vector<LabeledImage>& images,
                                 const std::vector<ImageId>& ids) {
  std::unordered_map<ImageId, const LabeledImage*> by_id;
  for (const auto& li : images) by_id[li.image_id] = &li;
  std::vector<LabeledImage> out;
  for (ImageId id : ids) {
    auto it = by_id.find(id);
    if (it != by_id.end()) out.push_back(*it->second);
  }
  return out;
}

// ---------------------------------------------------------------- label

int cmd_label(const RunConfig& cfg, std::ostream& out) {
  require(!cfg.captions_ann.empty(), "--captions-ann is required");
  require(!cfg.instances_ann.empty(), "--instances-ann is required");
  const GenderLexicon lexicon = lexicon_for(cfg);
  const auto captions = load_all_captions(cfg);
  std::size_t caption_count = 0;
  for (const auto& c : captions) caption_count += c.captions.size();
  if (captions.empty() || caption_count == 0) {
    throw Error(ErrorKind::kInput, "caption annotations contain no images or captions");
  }
  const InstanceDataset instances = load_all_instances(cfg);
  const auto labeled = label_dataset(captions, instances, lexicon);

  std::int64_t women = 0, men = 0, discard = 0;
  oj labels = oj::object();
  for (const auto& li : labeled) {
    labels[std::to_string(li.image_id)] = std::string(to_string(li.label));
    switch (li.label) {
      case GenderLabel::kWomen: ++women; break;
      case GenderLabel::kMen: ++men; break;
      case GenderLabel::kDiscard: ++discard; break;
    }
  }
  oj summary{{"images", labeled.size()}, {"women", women}, {"men", men}, {"discard", discard},
             {"men_per_woman", women > 0 ? oj(static_cast<double>(men) / women) : oj(nullptr)}};
  oj doc;
  doc["seed"] = cfg.seed;
  doc["summary"] = summary;
  doc["labels"] = std::move(labels);
  write_text(cfg.out_dir / "labels.json", doc.dump(1));

  std::ostringstream text;
  text << seed_line(cfg) << "images  " << labeled.size() << "\nwomen   " << women << "\nmen     "
       << men << "\ndiscard " << discard << "\n";
  if (women > 0) text << "women:men 1:" << static_cast<double>(men) / women << "\n";
  write_text(cfg.out_dir / "labels.txt", text.str());
  out << text.str();
  return kExitOk;
}

// ---------------------------------------------------------------- bias-report

int cmd_bias_report(const RunConfig& cfg, std::ostream& out) {
  const GenderLexicon lexicon = lexicon_for(cfg);
  const Dataset ds = load_dataset(cfg, lexicon);

  std::vector<std::pair<std::string, std::vector<LabeledImage>>> partitions;
  if (!cfg.split.empty()) {
    require_exists(cfg.split, "--split");
    const SplitSpec spec = split_from_json(read_text(cfg.split));
    for (const auto& [name, ids] : {std::pair{"train", &spec.train}, std::pair{"val", &spec.val},
                                    std::pair{"test", &spec.test}}) {
      if (!ids->empty()) partitions.emplace_back(name, subset(ds.images, *ids));
    }
  } else {
    partitions.emplace_back("all", ds.images);
  }

  oj doc;
  doc["seed"] = cfg.seed;
  doc["partitions"] = oj::object();
  std::ostringstream text;
  text << seed_line(cfg);
  for (const auto& [name, images] : partitions) {
    const auto table = cooccurrence(images, ds.instances.categories);
    const BiasReport report = build_report(table, cfg.min_support, ds.instances.categories);
    doc["partitions"][name] = oj::parse(report_to_json(report, -1));
    text << "== " << name << " ==\n" << report_to_text(report) << "\n";
  }
  write_text(cfg.out_dir / "bias_report.json", doc.dump(2));
  write_text(cfg.out_dir / "bias_report.txt", text.str());
  out << text.str();
  return kExitOk;
}

// ---------------------------------------------------------------- build-split

int cmd_build_split(const RunConfig& cfg, std::ostream& out) {
  require(cfg.variant == "v1" || cfg.variant == "v2", "--variant must be v1 or v2");
  const GenderLexicon lexicon = lexicon_for(cfg);
  const Dataset ds = load_dataset(cfg, lexicon);

  SplitSpec spec;
  std::vector<LabeledImage> scope = ds.images;
  if (cfg.variant == "v1") {
    if (!cfg.split.empty()) {
      require_exists(cfg.split, "--split");
      const SplitSpec source = split_from_json(read_text(cfg.split));
      scope = subset(ds.images, source.test);
    }
    spec = build_v1_secret(scope, cfg.per_gender);
    spec.seed = cfg.seed;
  } else {
    V2Options opt;
    opt.val_quota = cfg.val_quota;
    opt.test_quota = cfg.test_quota;
    opt.min_train_per_category = cfg.min_train;
    opt.min_support = cfg.min_support;
    opt.seed = cfg.seed;
    spec = build_v2(ds.images, opt, ds.instances.categories);
  }
  const SplitVerification v = verify_split(spec, scope, ds.instances.categories, cfg.min_support);

  const std::string stem = "split_" + cfg.variant;
  write_text(cfg.out_dir / (stem + ".json"), split_to_json(spec));
  oj vj = oj::parse(verification_to_json(v, -1));
  vj["seed"] = cfg.seed;
  write_text(cfg.out_dir / (stem + "_verify.json"), vj.dump(2));
  const std::string text = seed_line(cfg) + "split " + spec.name + ": train " +
                           std::to_string(spec.train.size()) + ", val " +
                           std::to_string(spec.val.size()) + ", test " +
                           std::to_string(spec.test.size()) + "\n" + verification_to_text(v);
  write_text(cfg.out_dir / (stem + "_verify.txt"), text);
  out << text;
  return v.passed ? kExitOk : kExitFailure;
}

// ---------------------------------------------------------------- eval

std::array<double, 3> triple(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 3) throw Error(ErrorKind::kInput, "outcome rates need (correct, wrong, neutral)");
  return {v[0], v[1], v[2]};
}

int cmd_eval(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  oj doc;
  doc["seed"] = cfg.seed;
  std::ostringstream text;
  text << seed_line(cfg);

  if (!cfg.rates.empty()) {
    require_exists(cfg.rates, "--rates");
    nlohmann::json r;
    try {
      r = nlohmann::json::parse(read_text(cfg.rates));
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("malformed rates file: ") + e.what(), e.byte);
    }
    const OutcomeTable t = table_from_rates(triple(r.at("women")), triple(r.at("men")));
    doc["outcomes"] = oj::parse(outcome_table_to_json(t, -1));
    text << outcome_table_to_text(t);
    write_text(cfg.out_dir / "eval.json", doc.dump(2));
    write_text(cfg.out_dir / "eval.txt", text.str());
    out << text.str();
    return kExitOk;
  }

  require(!cfg.results.empty(), "--results (or --rates) is required");
  require(!cfg.labels.empty() || !cfg.captions_ann.empty(), "--labels is required");
  require_exists(cfg.results, "--results");
  const GenderLexicon lexicon = lexicon_for(cfg);
  const auto generated = load_generated_captions(cfg.results);

  std::vector<ImageCaptions> references;
  if (!cfg.captions_ann.empty()) references = load_all_captions(cfg);

  std::map<ImageId, GenderLabel> labels;
  if (!cfg.labels.empty()) {
    labels = read_labels(cfg.labels);
  } else {
    require(!cfg.instances_ann.empty(), "--labels or --instances-ann is required");
    for (const auto& li : label_dataset(references, load_all_instances(cfg), lexicon)) {
      labels[li.image_id] = li.label;
    }
  }

  std::unordered_map<ImageId, const std::string*> by_id;
  for (const auto& g : generated) by_id[g.image_id] = &g.caption;

  std::vector<ImageId> scope;
  if (!cfg.split.empty()) {
    require_exists(cfg.split, "--split");
    scope = split_from_json(read_text(cfg.split)).test;
  } else {
    for (const auto& g : generated) scope.push_back(g.image_id);
  }
  std::sort(scope.begin(), scope.end());
  scope.erase(std::unique(scope.begin(), scope.end()), scope.end());

  std::vector<std::pair<GenderLabel, Outcome>> outcomes;
  std::vector<ImageId> evaluated, missing, labeled_scope;
  std::int64_t unlabeled = 0;
  for (ImageId id : scope) {
    auto l = labels.find(id);
    if (l == labels.end() || l->second == GenderLabel::kDiscard) {
      ++unlabeled;
      continue;
    }
    labeled_scope.push_back(id);
    auto g = by_id.find(id);
    if (g == by_id.end()) {
      missing.push_back(id);
      continue;
    }
    outcomes.emplace_back(l->second, outcome(*g->second, l->second, lexicon));
    evaluated.push_back(id);
  }
  if (!missing.empty()) {
    err << "warning: " << missing.size() << " evaluated images have no generated caption\n";
  }
  const OutcomeTable table = aggregate(outcomes);
  doc["coverage"] = {{"evaluated", evaluated.size()},
                     {"skipped_unlabeled", unlabeled},
                     {"missing_captions", missing}};
  doc["outcomes"] = oj::parse(outcome_table_to_json(table, -1));

  std::optional<QualityScores> quality;
  if (cfg.quality && !references.empty()) {
    std::unordered_map<ImageId, const ImageCaptions*> refs_by_id;
    for (const auto& r : references) refs_by_id[r.image.image_id] = &r;
    std::vector<std::string> cands;
    std::vector<std::vector<std::string>> refs;
    for (ImageId id : evaluated) {
      auto r = refs_by_id.find(id);
      if (r == refs_by_id.end() || r->second->captions.empty()) continue;
      cands.push_back(*by_id.at(id));
      std::vector<std::string> texts;
      for (const auto& c : r->second->captions) texts.push_back(c.caption);
      refs.push_back(std::move(texts));
    }
    if (!cands.empty()) {
      quality = corpus_quality(cands, refs);
      doc["quality"] = {{"images", cands.size()},
                        {"bleu4", quality->bleu4},
                        {"cider", quality->cider},
                        {"cider_variant", "plain"}};
    }
  }
  text << outcome_table_to_text(table, quality);

  if (!cfg.attention.empty() && cfg.attention_metrics) {
    require_exists(cfg.attention, "--attention");
    require(!cfg.instances_ann.empty(), "--attention needs --instances-ann for person masks");
    const auto records = load_attention_jsonl(cfg.attention);
    const InstanceDataset instances = load_all_instances(cfg);
    const int person = instances.person_category_id();
    std::unordered_map<ImageId, const ImageRecord*> images;
    for (const auto& img : instances.images) images[img.image_id] = &img;
    std::unordered_map<ImageId, std::vector<InstanceAnnotation>> persons;
    for (const auto& a : instances.annotations) {
      if (a.category_id == person) persons[a.image_id].push_back(a);
    }
    // Attention needs only the gold label, not a generated caption.
    const std::set<ImageId> in_scope(labeled_scope.begin(), labeled_scope.end());
    std::vector<const AttentionRecord*> usable;
    for (const auto& r : records) {
      if (in_scope.count(r.image_id) && images.count(r.image_id)) usable.push_back(&r);
    }
    std::vector<std::pair<GenderLabel, AttentionScore>> scores(usable.size());
    parallel_for(usable.size(), thread_cap(), [&](std::size_t i) {
      const AttentionRecord& r = *usable[i];
      const auto& img = *images.at(r.image_id);
      auto p = persons.find(r.image_id);
      const SegMask mask =
          p == persons.end() ? SegMask(img.width, img.height)
                             : person_mask(img, p->second, person);
      scores[i] = {labels.at(r.image_id), score_attention(r.grid, mask)};
    });
    const AttentionTable at = aggregate_attention(scores);
    doc["attention"] = oj::parse(attention_table_to_json(at, -1));
    doc["attention"]["records_used"] = usable.size();
    doc["attention"]["records_skipped"] = records.size() - usable.size();
    text << "\n" << attention_table_to_text(at);
  }

  write_text(cfg.out_dir / "eval.json", doc.dump(2));
  write_text(cfg.out_dir / "eval.txt", text.str());
  out << text.str();
  return kExitOk;
}

// ---------------------------------------------------------------- check-kernel

int cmd_check_kernel(const RunConfig& cfg, std::ostream& out) {
  require(!cfg.vectors.empty(), "--vectors is required");
  require_exists(cfg.vectors, "--vectors");
  const auto verdicts = check_kernel_vectors(read_text(cfg.vectors));
  std::size_t passed = 0;
  std::ostringstream text;
  oj doc;
  doc["seed"] = cfg.seed;
  auto& arr = doc["vectors"] = oj::array();
  for (const auto& v : verdicts) {
    passed += v.passed ? 1 : 0;
    text << (v.passed ? "PASS" : "FAIL") << " line " << v.line << " " << v.op;
    if (!v.passed) text << ": " << v.message;
    text << "\n";
    arr.push_back({{"line", v.line}, {"op", v.op}, {"passed", v.passed}, {"message", v.message}});
  }
  text << passed << "/" << verdicts.size() << " vectors passed\n";
  doc["passed"] = passed;
  doc["total"] = verdicts.size();
  write_text(cfg.out_dir / "kernel_check.json", doc.dump(2));
  write_text(cfg.out_dir / "kernel_check.txt", seed_line(cfg) + text.str());
  out << text.str();
  return passed == verdicts.size() && !verdicts.empty() ? kExitOk : kExitFailure;
}

// Fills every field whose flag was not given on the command line from the
// JSON config file.
void apply_config_file(RunConfig& cfg, const fs::path& path, const CLI::App& app) {
  require_exists(path, "--config");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed config file: ") + e.what(), e.byte);
  }
  auto given = [&](const char* flag) { return app.get_option(flag)->count() > 0; };
  auto path_field = [&](const char* key, const char* flag, fs::path& dst) {
    if (j.contains(key) && !given(flag)) dst = j.at(key).get<std::string>();
  };
  auto paths_field = [&](const char* key, const char* flag, std::vector<fs::path>& dst) {
    if (!j.contains(key) || given(flag)) return;
    dst.clear();
    if (j.at(key).is_array()) {
      for (const auto& p : j.at(key)) dst.emplace_back(p.get<std::string>());
    } else {
      dst.emplace_back(j.at(key).get<std::string>());
    }
  };
  auto value_field = [&](const char* key, const char* flag, auto& dst) {
    if (j.contains(key) && !given(flag)) dst = j.at(key).get<std::decay_t<decltype(dst)>>();
  };
  paths_field("captions_ann", "--captions-ann", cfg.captions_ann);
  paths_field("instances_ann", "--instances-ann", cfg.instances_ann);
  path_field("labels", "--labels", cfg.labels);
  path_field("split", "--split", cfg.split);
  path_field("lexicon", "--lexicon", cfg.lexicon);
  path_field("results", "--results", cfg.results);
  path_field("attention", "--attention", cfg.attention);
  path_field("vectors", "--vectors", cfg.vectors);
  path_field("rates", "--rates", cfg.rates);
  path_field("out_dir", "--out-dir", cfg.out_dir);
  value_field("variant", "--variant", cfg.variant);
  value_field("per_gender", "--per-gender", cfg.per_gender);
  value_field("val_quota", "--val-quota", cfg.val_quota);
  value_field("test_quota", "--test-quota", cfg.test_quota);
  value_field("min_train", "--min-train", cfg.min_train);
  value_field("min_support", "--min-support", cfg.min_support);
  value_field("seed", "--seed", cfg.seed);
  if (j.contains("quality") && !given("--no-quality")) cfg.quality = j.at("quality").get<bool>();
  if (j.contains("attention_metrics") && !given("--no-attention")) {
    cfg.attention_metrics = j.at("attention_metrics").get<bool>();
  }
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kCapacity:
    case ErrorKind::kConstraint:
    case ErrorKind::kEvaluationInput:
    case ErrorKind::kUndefinedScore:
    case ErrorKind::kEmptyReport:
      return kExitFailure;
    default:
      return kExitUsage;
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  fs::path config_file;

  CLI::App app{"Gender bias audit toolkit for captioning corpora", "cocogb"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--config", config_file, "JSON config file; flags take precedence");
  app.add_option("--captions-ann", cfg.captions_ann, "COCO caption annotation file (repeatable)")->expected(1);
  app.add_option("--instances-ann", cfg.instances_ann, "COCO instance annotation file (repeatable)")->expected(1);
  app.add_option("--labels", cfg.labels, "labels.json written by `label`");
  app.add_option("--split", cfg.split, "split spec JSON (or a Karpathy dataset file)");
  app.add_option("--variant", cfg.variant, "split variant: v1 | v2");
  app.add_option("--per-gender", cfg.per_gender, "V1 images per gender");
  app.add_option("--val-quota", cfg.val_quota, "V2 validation size");
  app.add_option("--test-quota", cfg.test_quota, "V2 test size");
  app.add_option("--min-train", cfg.min_train, "V2 minimum train images per category");
  app.add_option("--min-support", cfg.min_support, "minimum images for a defined bias ratio");
  app.add_option("--seed", cfg.seed, "random seed");
  app.add_option("--lexicon", cfg.lexicon, "gender lexicon JSON override");
  app.add_option("--out-dir", cfg.out_dir, "output directory");
  app.add_option("--results", cfg.results, "generated captions JSON");
  app.add_option("--attention", cfg.attention, "attention maps JSON-lines");
  app.add_option("--vectors", cfg.vectors, "kernel test vectors JSON-lines");
  app.add_option("--rates", cfg.rates, "pre-aggregated outcome rates JSON");
  app.add_flag("--no-quality", "skip BLEU-4 / CIDEr");
  app.add_flag("--no-attention", "skip attention metrics");

  auto* label = app.add_subcommand("label", "derive per-image gender labels");
  auto* bias = app.add_subcommand("bias-report", "gender-context co-occurrence report");
  auto* split = app.add_subcommand("build-split", "build the V1 or V2 split");
  auto* eval = app.add_subcommand("eval", "score generated captions and attention maps");
  auto* kernel = app.add_subcommand("check-kernel", "run kernel conformance vectors");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  try {
    if (!config_file.empty()) apply_config_file(cfg, config_file, app);
    if (app.get_option("--no-quality")->count() > 0) cfg.quality = false;
    if (app.get_option("--no-attention")->count() > 0) cfg.attention_metrics = false;

    if (label->parsed()) return cmd_label(cfg, out);
    if (bias->parsed()) return cmd_bias_report(cfg, out);
    if (split->parsed()) return cmd_build_split(cfg, out);
    if (eval->parsed()) return cmd_eval(cfg, out, err);
    if (kernel->parsed()) return cmd_check_kernel(cfg, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << to_string(e.kind()) << ": " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace cocogb::cli
