#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "cocogb/error.hpp"
#include "cocogb/split_builder.hpp"
#include "doctest.h"

using namespace cocogb;

namespace {
constexpr auto W = GenderLabel::kWomen;
constexpr auto M = GenderLabel::kMen;
constexpr auto D = GenderLabel::kDiscard;

// Deviation recomputed from scratch for a chosen set of images.
double deviation_of(const std::vector<const LabeledImage*>& chosen) {
  std::map<int, std::pair<int, int>> counts;  // women, men
  for (const auto* img : chosen) {
    std::set<int> cats(img->categories.begin(), img->categories.end());
    for (int c : cats) (img->label == W ? counts[c].first : counts[c].second)++;
  }
  double d = 0;
  for (const auto& [c, wm] : counts) {
    d += std::abs(static_cast<double>(wm.second) / (wm.first + wm.second) - 0.5);
  }
  return d;
}

void combos(int n, int k, int start, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  if (static_cast<int>(cur.size()) == k) {
    out.push_back(cur);
    return;
  }
  for (int i = start; i < n; ++i) {
    cur.push_back(i);
    combos(n, k, i + 1, cur, out);
    cur.pop_back();
  }
}

std::vector<LabeledImage> skewed_pool(std::uint64_t seed, int per_gender, int ncat, double skew) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<LabeledImage> pool;
  ImageId id = 1;
  for (GenderLabel g : {W, M}) {
    for (int i = 0; i < per_gender; ++i) {
      LabeledImage img{id++, g, {}};
      for (int c = 1; c <= ncat; ++c) {
        const double p = g == M ? skew : 1 - skew;
        if (u(rng) < p * 0.6) img.categories.push_back(c);
      }
      pool.push_back(img);
    }
  }
  return pool;
}
}  // namespace

TEST_CASE("balance deviation") {
  std::map<int, CooccurrenceCell> cells = {{1, {5, 5}}, {2, {0, 4}}, {3, {3, 1}}};
  CHECK(balance_deviation(cells) == doctest::Approx(0 + 0.5 + 0.25));
  CHECK(balance_deviation({}) == 0.0);
}

TEST_CASE("v1 with a flat objective picks ids in order") {
  std::vector<LabeledImage> pool;
  for (ImageId id = 20; id >= 1; --id) pool.push_back({id, id % 2 ? W : M, {7}});
  pool.push_back({100, D, {7}});
  const SplitSpec s = build_v1_secret(pool, 3);
  CHECK(s.name == kV1Name);
  CHECK(s.test == std::vector<ImageId>{1, 2, 3, 4, 5, 6});
  CHECK(s.train.empty());
  CHECK(s.val.empty());
  REQUIRE(s.construction_log.size() == 6);
  CHECK(s.construction_log[0].image_id == 1);
  CHECK(s.construction_log[1].image_id == 2);
}

TEST_CASE("v1 capacity error") {
  std::vector<LabeledImage> pool = {{1, W, {}}, {2, M, {}}, {3, M, {}}};
  try {
    build_v1_secret(pool, 2);
    FAIL("expected capacity error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kCapacity);
    CHECK(std::string(e.what()).find("1 women") != std::string::npos);
  }
}

TEST_CASE("v1 greedy against exhaustive search on a small pool") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto pool = skewed_pool(seed, 10, 4, 0.75);
    const SplitSpec s = build_v1_secret(pool, 3);
    std::vector<const LabeledImage*> chosen;
    for (const auto& img : pool) {
      if (std::binary_search(s.test.begin(), s.test.end(), img.image_id)) chosen.push_back(&img);
    }
    const double greedy = deviation_of(chosen);

    std::vector<std::vector<int>> cs;
    std::vector<int> cur;
    combos(10, 3, 0, cur, cs);
    double best = 1e300;
    for (const auto& a : cs) {
      for (const auto& b : cs) {
        std::vector<const LabeledImage*> sel;
        for (int i : a) sel.push_back(&pool[i]);
        for (int i : b) sel.push_back(&pool[10 + i]);
        best = std::min(best, deviation_of(sel));
      }
    }
    CHECK(greedy >= best - 1e-12);
    // Logged deltas telescope to the final deviation.
    double sum = 0;
    for (const auto& st : s.construction_log) sum += st.objective_delta;
    CHECK(sum == doctest::Approx(greedy));
    MESSAGE("seed " << seed << ": greedy " << greedy << ", optimum " << best);
  }
}

TEST_CASE("v2 single category all men falls back to men") {
  std::vector<LabeledImage> ds;
  for (ImageId id = 1; id <= 30; ++id) ds.push_back({id, M, {1}});
  V2Options o;
  o.val_quota = 5;
  o.test_quota = 10;
  o.min_train_per_category = 0;
  const SplitSpec s = build_v2(ds, o);
  CHECK(s.test == std::vector<ImageId>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
  CHECK(s.val.size() == 5);
  CHECK(s.train.size() == 15);
}

TEST_CASE("v2 three category fixture flips the skew") {
  std::vector<LabeledImage> ds;
  ImageId id = 1;
  auto add = [&](GenderLabel g, int cat, int n) {
    for (int i = 0; i < n; ++i) ds.push_back({id++, g, {cat}});
  };
  add(M, 1, 30);  // skis
  add(W, 1, 10);
  add(W, 2, 30);  // oven
  add(M, 2, 10);
  add(M, 3, 20);  // car
  add(W, 3, 20);
  V2Options o;
  o.val_quota = 0;
  o.test_quota = 20;
  o.min_train_per_category = 0;
  const SplitSpec s = build_v2(ds, o);
  const auto v = verify_split(s, ds, {}, 1);
  CHECK(v.passed);
  REQUIRE(v.shifts.size() == 3);
  // Hand count: test holds the 10 women skis and the 10 men oven images.
  CHECK(*v.shifts[0].train_ratio == 1.0);
  CHECK(*v.shifts[0].test_ratio == 0.0);
  CHECK(*v.shifts[1].train_ratio == 0.0);
  CHECK(*v.shifts[1].test_ratio == 1.0);
  CHECK_FALSE(v.shifts[2].test_ratio.has_value());
  CHECK(v.partitions[2].women == 10);
  CHECK(v.partitions[2].men == 10);
}

TEST_CASE("v2 min train constraint and diagnostics") {
  std::vector<LabeledImage> ds;
  for (ImageId id = 1; id <= 20; ++id) ds.push_back({id, id <= 15 ? M : W, {1}});
  V2Options o;
  o.val_quota = 0;
  o.test_quota = 12;
  o.min_train_per_category = 10;
  try {
    build_v2(ds, o, std::vector<Category>{{1, "skis"}});
    FAIL("expected constraint error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kConstraint);
    CHECK(std::string(e.what()).find("skis") != std::string::npos);
  }
  o.test_quota = 10;
  const SplitSpec s = build_v2(ds, o);
  CHECK(s.train.size() == 10);
  CHECK(verify_split(s, ds).passed);
}

TEST_CASE("v2 determinism and seed sensitivity") {
  const auto ds = skewed_pool(5, 300, 6, 0.7);
  V2Options o;
  o.val_quota = 60;
  o.test_quota = 120;
  o.min_train_per_category = 5;
  o.seed = 9;
  const std::string a = split_to_json(build_v2(ds, o));
  CHECK(a == split_to_json(build_v2(ds, o)));
  o.seed = 10;
  const SplitSpec other = build_v2(ds, o);
  CHECK(a != split_to_json(other));
  CHECK(other.val.size() == 60);
}

TEST_CASE("verification flags overlap and wrong v1 counts") {
  std::vector<LabeledImage> ds = {{1, W, {1}}, {2, M, {1}}, {3, M, {2}}};
  SplitSpec s;
  s.name = std::string(kV2Name);
  s.train = {1, 2};
  s.test = {2, 3};
  const auto v = verify_split(s, ds);
  CHECK_FALSE(v.passed);
  bool overlap = false;
  for (const auto& f : v.failures) overlap |= f.find("both") != std::string::npos;
  CHECK(overlap);

  SplitSpec v1;
  v1.name = std::string(kV1Name);
  v1.params["per_gender"] = 1;
  v1.test = {1, 2};
  CHECK(verify_split(v1, ds).passed);
  v1.test = {1, 2, 3};
  CHECK_FALSE(verify_split(v1, ds).passed);
}

TEST_CASE("split json round trip and karpathy input") {
  SplitSpec s;
  s.name = "x";
  s.seed = 42;
  s.train = {3, 1};
  s.test = {2};
  s.params["k"] = 7;
  s.construction_log = {{0, 2, -0.25}};
  CHECK(split_from_json(split_to_json(s)) == s);

  const SplitSpec k = split_from_json(
      R"({"images": [{"cocoid": 5, "split": "test"}, {"cocoid": 6, "split": "restval"},
                     {"cocoid": 7, "split": "val"}, {"cocoid": 8, "split": "train"}]})");
  CHECK(k.test == std::vector<ImageId>{5});
  CHECK(k.val == std::vector<ImageId>{7});
  CHECK(k.train == std::vector<ImageId>{6, 8});
  CHECK_THROWS_AS(split_from_json("{"), ParseError);
}
