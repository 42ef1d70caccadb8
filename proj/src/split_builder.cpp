#include "cocogb/split_builder.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

#include "cocogb/error.hpp"
#include "json.hpp"

namespace cocogb {

namespace {

constexpr double kTieTolerance = 1e-12;

double term(const CooccurrenceCell& c) {
  const std::int64_t s = c.support();
  if (s == 0) return 0.0;
  return std::abs(static_cast<double>(c.men) / static_cast<double>(s) - 0.5);
}

CooccurrenceCell with(CooccurrenceCell c, GenderLabel g, int sign) {
  if (g == GenderLabel::kWomen) c.women += sign;
  if (g == GenderLabel::kMen) c.men += sign;
  return c;
}

std::vector<int> unique_sorted(std::vector<int> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

// Unbiased draw in [0, bound) from a 64-bit engine; independent of the
// standard library's distribution implementation so splits are portable.
std::uint64_t draw_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

std::string category_label(int id, std::span<const Category> categories) {
  for (const auto& c : categories) {
    if (c.category_id == id) return std::to_string(id) + " (" + c.name + ")";
  }
  return std::to_string(id);
}

}  // namespace

double balance_deviation(const std::map<int, CooccurrenceCell>& cells) {
  double d = 0.0;
  for (const auto& [id, cell] : cells) d += term(cell);
  return d;
}

SplitSpec build_v1_secret(std::span<const LabeledImage> pool, int per_gender) {
  if (per_gender < 0) throw Error(ErrorKind::kInput, "per_gender must be non-negative");

  struct Candidate {
    ImageId id;
    std::vector<int> cats;
    bool taken = false;
  };
  std::vector<Candidate> women, men;
  for (const auto& img : pool) {
    if (img.label == GenderLabel::kWomen) women.push_back({img.image_id, unique_sorted(img.categories)});
    if (img.label == GenderLabel::kMen) men.push_back({img.image_id, unique_sorted(img.categories)});
  }
  auto by_id = [](const Candidate& a, const Candidate& b) { return a.id < b.id; };
  std::sort(women.begin(), women.end(), by_id);
  std::sort(men.begin(), men.end(), by_id);

  const auto short_w = std::max<std::int64_t>(0, per_gender - static_cast<std::int64_t>(women.size()));
  const auto short_m = std::max<std::int64_t>(0, per_gender - static_cast<std::int64_t>(men.size()));
  if (short_w > 0 || short_m > 0) {
    throw Error(ErrorKind::kCapacity,
                "pool too small for " + std::to_string(per_gender) +
                    " images per gender: short by " + std::to_string(short_w) + " women and " +
                    std::to_string(short_m) + " men");
  }

  std::map<int, CooccurrenceCell> cells;
  SplitSpec spec;
  spec.name = std::string(kV1Name);
  spec.params["per_gender"] = per_gender;

  for (int step = 0; step < 2 * per_gender; ++step) {
    const GenderLabel g = step % 2 == 0 ? GenderLabel::kWomen : GenderLabel::kMen;
    auto& cands = g == GenderLabel::kWomen ? women : men;
    Candidate* best = nullptr;
    double best_delta = 0.0;
    for (auto& c : cands) {
      if (c.taken) continue;
      double delta = 0.0;
      for (int cat : c.cats) {
        auto it = cells.find(cat);
        const CooccurrenceCell cur = it == cells.end() ? CooccurrenceCell{} : it->second;
        delta += term(with(cur, g, +1)) - term(cur);
      }
      // candidates are visited in id order, so the first of a tie wins
      if (best == nullptr || delta < best_delta - kTieTolerance) {
        best = &c;
        best_delta = delta;
      }
    }
    best->taken = true;
    for (int cat : best->cats) cells[cat] = with(cells[cat], g, +1);
    spec.construction_log.push_back({step, best->id, best_delta});
    spec.test.push_back(best->id);
  }
  std::sort(spec.test.begin(), spec.test.end());
  return spec;
}

SplitSpec build_v2(std::span<const LabeledImage> dataset, const V2Options& options,
                   std::span<const Category> categories) {
  if (options.val_quota < 0 || options.test_quota < 0 || options.min_train_per_category < 0) {
    throw Error(ErrorKind::kInput, "quotas and min_train_per_category must be non-negative");
  }
  const std::size_t wanted =
      static_cast<std::size_t>(options.val_quota) + static_cast<std::size_t>(options.test_quota);
  if (dataset.size() < wanted) {
    throw Error(ErrorKind::kConstraint,
                "dataset has " + std::to_string(dataset.size()) + " images, quotas need " +
                    std::to_string(wanted));
  }

  std::vector<const LabeledImage*> images;
  images.reserve(dataset.size());
  for (const auto& img : dataset) images.push_back(&img);
  std::sort(images.begin(), images.end(),
            [](const LabeledImage* a, const LabeledImage* b) { return a->image_id < b->image_id; });
  for (std::size_t i = 1; i < images.size(); ++i) {
    if (images[i]->image_id == images[i - 1]->image_id) {
      throw Error(ErrorKind::kIntegrity,
                  "duplicate image id " + std::to_string(images[i]->image_id));
    }
  }
  std::vector<std::vector<int>> cats(images.size());
  std::map<int, std::int64_t> remaining;  // images per category still in train
  for (std::size_t i = 0; i < images.size(); ++i) {
    cats[i] = unique_sorted(images[i]->categories);
    for (int c : cats[i]) ++remaining[c];
  }

  const CooccurrenceTable table = cooccurrence(dataset);
  std::map<int, CooccurrenceCell> train_cells = table.cells;

  struct Ranked {
    int category;
    double ratio;
  };
  std::vector<Ranked> order;
  for (const auto& [id, cell] : table.cells) {
    if (auto r = bias_ratio(cell, options.min_support)) order.push_back({id, *r});
  }
  std::stable_sort(order.begin(), order.end(), [](const Ranked& a, const Ranked& b) {
    const double da = std::abs(a.ratio - 0.5);
    const double db = std::abs(b.ratio - 0.5);
    if (da != db) return da > db;
    return a.category < b.category;
  });

  const auto min_train = static_cast<std::int64_t>(options.min_train_per_category);
  std::map<int, std::int64_t> blocked;
  std::vector<char> placed(images.size(), 0);

  auto can_remove = [&](std::size_t i) {
    for (int c : cats[i]) {
      if (remaining[c] - 1 < min_train) {
        ++blocked[c];
        return false;
      }
    }
    return true;
  };
  // Moves image i out of train and returns the change of the train-set
  // balance deviation.
  auto remove = [&](std::size_t i) {
    placed[i] = 1;
    double delta = 0.0;
    const GenderLabel g = images[i]->label;
    for (int c : cats[i]) {
      --remaining[c];
      if (g != GenderLabel::kDiscard) {
        auto& cell = train_cells[c];
        const double before = term(cell);
        cell = with(cell, g, -1);
        delta += term(cell) - before;
      }
    }
    return delta;
  };

  SplitSpec spec;
  spec.name = std::string(kV2Name);
  spec.seed = options.seed;
  spec.params["val_quota"] = options.val_quota;
  spec.params["test_quota"] = options.test_quota;
  spec.params["min_train_per_category"] = options.min_train_per_category;
  spec.params["min_support"] = options.min_support;

  int step = 0;
  auto take_test = [&](std::size_t i) {
    const double delta = remove(i);
    spec.test.push_back(images[i]->image_id);
    spec.construction_log.push_back({step++, images[i]->image_id, delta});
  };
  const auto test_quota = static_cast<std::size_t>(options.test_quota);

  for (const auto& rc : order) {
    if (spec.test.size() >= test_quota) break;
    if (rc.ratio == 0.5) continue;
    const GenderLabel minority = rc.ratio > 0.5 ? GenderLabel::kWomen : GenderLabel::kMen;
    for (std::size_t i = 0; i < images.size() && spec.test.size() < test_quota; ++i) {
      if (placed[i] || images[i]->label != minority) continue;
      if (!std::binary_search(cats[i].begin(), cats[i].end(), rc.category)) continue;
      if (can_remove(i)) take_test(i);
    }
  }
  // Fallback: other labeled images, then unlabeled ones.
  for (int pass = 0; pass < 2 && spec.test.size() < test_quota; ++pass) {
    for (std::size_t i = 0; i < images.size() && spec.test.size() < test_quota; ++i) {
      if (placed[i]) continue;
      const bool labeled = images[i]->label != GenderLabel::kDiscard;
      if (labeled != (pass == 0)) continue;
      if (can_remove(i)) take_test(i);
    }
  }

  auto binding = [&]() {
    int worst = -1;
    std::int64_t count = 0;
    for (const auto& [c, n] : blocked) {
      if (n > count) {
        worst = c;
        count = n;
      }
    }
    return worst < 0 ? std::string("none") : category_label(worst, categories);
  };

  if (spec.test.size() < test_quota) {
    throw Error(ErrorKind::kConstraint,
                "test quota " + std::to_string(test_quota) + " unsatisfiable (filled " +
                    std::to_string(spec.test.size()) + ") with min_train_per_category " +
                    std::to_string(min_train) + "; binding category " + binding());
  }

  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (!placed[i]) rest.push_back(i);
  }
  std::mt19937_64 rng(options.seed);
  for (std::size_t k = rest.size(); k > 1; --k) {
    std::swap(rest[k - 1], rest[draw_below(rng, k)]);
  }
  const auto val_quota = static_cast<std::size_t>(options.val_quota);
  for (std::size_t i : rest) {
    if (spec.val.size() >= val_quota) break;
    if (can_remove(i)) {
      remove(i);
      spec.val.push_back(images[i]->image_id);
    }
  }
  if (spec.val.size() < val_quota) {
    throw Error(ErrorKind::kConstraint,
                "val quota " + std::to_string(val_quota) + " unsatisfiable (filled " +
                    std::to_string(spec.val.size()) + "); binding category " + binding());
  }
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (!placed[i]) spec.train.push_back(images[i]->image_id);
  }
  std::sort(spec.val.begin(), spec.val.end());
  std::sort(spec.test.begin(), spec.test.end());
  return spec;
}

SplitVerification verify_split(const SplitSpec& spec, std::span<const LabeledImage> dataset,
                               std::span<const Category> categories,
                               std::int64_t min_support) {
  SplitVerification v;
  auto fail = [&](std::string msg) {
    v.passed = false;
    v.failures.push_back(std::move(msg));
  };

  std::unordered_map<ImageId, const LabeledImage*> by_id;
  for (const auto& img : dataset) by_id[img.image_id] = &img;

  const std::pair<const char*, const std::vector<ImageId>*> parts[] = {
      {"train", &spec.train}, {"val", &spec.val}, {"test", &spec.test}};

  std::unordered_map<ImageId, const char*> owner;
  std::vector<CooccurrenceTable> tables;
  for (const auto& [pname, ids] : parts) {
    PartitionSummary s;
    s.name = pname;
    s.size = ids->size();
    std::vector<LabeledImage> members;
    std::size_t unknown = 0;
    for (ImageId id : *ids) {
      auto [it, fresh] = owner.emplace(id, pname);
      if (!fresh) {
        fail("image " + std::to_string(id) + " appears in both " + it->second + " and " + pname);
      }
      auto found = by_id.find(id);
      if (found == by_id.end()) {
        ++unknown;
        continue;
      }
      members.push_back(*found->second);
      switch (found->second->label) {
        case GenderLabel::kWomen: ++s.women; break;
        case GenderLabel::kMen: ++s.men; break;
        case GenderLabel::kDiscard: ++s.discard; break;
      }
    }
    if (unknown > 0) {
      fail(std::to_string(unknown) + " " + pname + " ids are not in the dataset");
    }
    tables.push_back(cooccurrence(members, categories));
    try {
      s.report = build_report(tables.back(), min_support, categories);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kEmptyReport) throw;
    }
    v.partitions.push_back(std::move(s));
  }

  auto param = [&](const char* key) -> std::optional<std::int64_t> {
    auto it = spec.params.find(key);
    if (it == spec.params.end()) return std::nullopt;
    return it->second;
  };

  if (spec.name == kV1Name) {
    const auto& test = v.partitions[2];
    if (auto pg = param("per_gender")) {
      if (test.women != *pg || test.men != *pg) {
        fail("test holds " + std::to_string(test.women) + " women / " +
             std::to_string(test.men) + " men images, expected " + std::to_string(*pg) +
             " each");
      }
    }
    if (test.discard > 0) fail("secret test contains unlabeled images");
  } else if (spec.name == kV2Name) {
    if (auto q = param("val_quota"); q && static_cast<std::int64_t>(spec.val.size()) != *q) {
      fail("val has " + std::to_string(spec.val.size()) + " images, quota " + std::to_string(*q));
    }
    if (auto q = param("test_quota"); q && static_cast<std::int64_t>(spec.test.size()) != *q) {
      fail("test has " + std::to_string(spec.test.size()) + " images, quota " +
           std::to_string(*q));
    }
    if (auto mt = param("min_train_per_category")) {
      std::map<int, std::int64_t> total, train;
      for (const auto& img : dataset) {
        for (int c : unique_sorted(img.categories)) ++total[c];
      }
      for (ImageId id : spec.train) {
        auto found = by_id.find(id);
        if (found == by_id.end()) continue;
        for (int c : unique_sorted(found->second->categories)) ++train[c];
      }
      for (const auto& [c, n] : total) {
        if (train[c] < std::min(*mt, n)) {
          fail("category " + category_label(c, categories) + " keeps " +
               std::to_string(train[c]) + " train images, needs " +
               std::to_string(std::min(*mt, n)));
        }
      }
    }
  }
  if (const auto expected = static_cast<std::size_t>(dataset.size());
      spec.name == kV2Name && spec.train.size() + spec.val.size() + spec.test.size() != expected) {
    fail("partitions cover " +
         std::to_string(spec.train.size() + spec.val.size() + spec.test.size()) + " of " +
         std::to_string(expected) + " images");
  }

  if (!spec.train.empty() && !spec.test.empty()) {
    std::set<int> ids;
    for (const auto& t : {tables[0], tables[2]}) {
      for (const auto& [c, cell] : t.cells) ids.insert(c);
    }
    for (int c : ids) {
      CategoryShift s;
      s.category_id = c;
      auto get = [&](const CooccurrenceTable& t) -> std::optional<double> {
        auto it = t.cells.find(c);
        if (it == t.cells.end()) return std::nullopt;
        return bias_ratio(it->second, 1);
      };
      s.train_ratio = get(tables[0]);
      s.test_ratio = get(tables[2]);
      if (s.train_ratio && s.test_ratio) s.abs_difference = std::abs(*s.test_ratio - *s.train_ratio);
      v.shifts.push_back(s);
    }
  }
  return v;
}

std::string split_to_json(const SplitSpec& spec, int indent) {
  nlohmann::ordered_json j;
  j["name"] = spec.name;
  j["seed"] = spec.seed;
  j["params"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : spec.params) j["params"][k] = v;
  j["train"] = spec.train;
  j["val"] = spec.val;
  j["test"] = spec.test;
  auto& log = j["construction_log"] = nlohmann::ordered_json::array();
  for (const auto& s : spec.construction_log) {
    log.push_back(nlohmann::ordered_json::array({s.step, s.image_id, s.objective_delta}));
  }
  return j.dump(indent);
}

SplitSpec split_from_json(std::string_view json_text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(json_text.begin(), json_text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed split JSON: ") + e.what(), e.byte);
  }
  SplitSpec spec;
  try {
    if (doc.contains("images") && !doc.contains("test")) {
      // Karpathy-style dataset file: {"images": [{"cocoid", "split"}]}
      spec.name = "karpathy";
      for (const auto& img : doc.at("images")) {
        const ImageId id = img.at("cocoid").get<ImageId>();
        const std::string s = img.at("split").get<std::string>();
        if (s == "test") {
          spec.test.push_back(id);
        } else if (s == "val") {
          spec.val.push_back(id);
        } else {
          spec.train.push_back(id);
        }
      }
      return spec;
    }
    spec.name = doc.value("name", std::string());
    spec.seed = doc.value("seed", std::uint64_t{0});
    if (doc.contains("params")) {
      for (const auto& [k, v] : doc.at("params").items()) spec.params[k] = v.get<std::int64_t>();
    }
    auto ids = [&](const char* key) {
      return doc.contains(key) ? doc.at(key).get<std::vector<ImageId>>() : std::vector<ImageId>{};
    };
    spec.train = ids("train");
    spec.val = ids("val");
    spec.test = ids("test");
    if (doc.contains("construction_log")) {
      for (const auto& e : doc.at("construction_log")) {
        spec.construction_log.push_back(
            {e.at(0).get<int>(), e.at(1).get<ImageId>(), e.at(2).get<double>()});
      }
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad split spec: ") + e.what(), 0);
  }
  return spec;
}

std::string verification_to_json(const SplitVerification& v, int indent) {
  using oj = nlohmann::ordered_json;
  oj j;
  j["passed"] = v.passed;
  j["failures"] = v.failures;
  auto& parts = j["partitions"] = oj::array();
  for (const auto& p : v.partitions) {
    oj pj;
    pj["name"] = p.name;
    pj["size"] = p.size;
    pj["women"] = p.women;
    pj["men"] = p.men;
    pj["discard"] = p.discard;
    pj["report"] = p.report ? oj::parse(report_to_json(*p.report, -1)) : oj(nullptr);
    parts.push_back(std::move(pj));
  }
  auto& shifts = j["shifts"] = oj::array();
  auto opt = [](const std::optional<double>& x) { return x ? oj(*x) : oj(nullptr); };
  for (const auto& s : v.shifts) {
    shifts.push_back({{"category_id", s.category_id},
                      {"train_ratio", opt(s.train_ratio)},
                      {"test_ratio", opt(s.test_ratio)},
                      {"abs_difference", opt(s.abs_difference)}});
  }
  return j.dump(indent);
}

std::string verification_to_text(const SplitVerification& v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(3);
  os << (v.passed ? "PASS" : "FAIL") << "\n";
  for (const auto& f : v.failures) os << "  failure: " << f << "\n";
  os << std::left << std::setw(8) << "split" << std::right << std::setw(9) << "images"
     << std::setw(9) << "women" << std::setw(9) << "men" << std::setw(9) << "discard"
     << std::setw(10) << "avg bias" << "\n";
  for (const auto& p : v.partitions) {
    os << std::left << std::setw(8) << p.name << std::right << std::setw(9) << p.size
       << std::setw(9) << p.women << std::setw(9) << p.men << std::setw(9) << p.discard
       << std::setw(10);
    if (p.report && p.report->all.average_bias_ratio) {
      os << *p.report->all.average_bias_ratio;
    } else {
      os << "-";
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace cocogb
