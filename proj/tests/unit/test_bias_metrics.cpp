#include "cocogb/bias_metrics.hpp"
#include "cocogb/error.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace cocogb;

namespace {
constexpr auto W = GenderLabel::kWomen;
constexpr auto M = GenderLabel::kMen;
constexpr auto D = GenderLabel::kDiscard;
}  // namespace

TEST_CASE("presence counting") {
  // Two motorcycles in one image count once.
  const std::vector<LabeledImage> imgs = {{1, W, {4, 4}}};
  const auto t = cooccurrence(imgs);
  CHECK(t.cells.at(4).women == 1);
  CHECK(t.cells.at(4).men == 0);
  CHECK(t.women_images == 1);
}

TEST_CASE("discard images contribute nothing") {
  const std::vector<LabeledImage> imgs = {{1, D, {4, 5}}};
  const auto t = cooccurrence(imgs);
  CHECK(t.cells.empty());
  CHECK(t.women_images + t.men_images == 0);
}

TEST_CASE("ten image fixture matches a hand count") {
  // categories: 1 person, 2 bicycle, 3 car, 4 motorcycle
  const std::vector<LabeledImage> imgs = {
      {1, W, {1, 2}},    {2, W, {1, 3}},       {3, W, {1}},    {4, M, {1, 4}},
      {5, M, {1, 4, 3}}, {6, M, {1, 2, 3, 4}}, {7, M, {1, 3}}, {8, D, {1, 2, 3, 4}},
      {9, M, {1}},       {10, W, {1, 2, 2}}};
  const auto t = cooccurrence(imgs);
  CHECK(t.women_images == 4);
  CHECK(t.men_images == 5);
  CHECK(t.cells.at(1) == CooccurrenceCell{4, 5});
  CHECK(t.cells.at(2) == CooccurrenceCell{2, 1});
  CHECK(t.cells.at(3) == CooccurrenceCell{1, 3});
  CHECK(t.cells.at(4) == CooccurrenceCell{0, 3});

  const std::vector<Category> cats = {{1, "person"}, {2, "bicycle"}, {3, "car"},
                                      {4, "motorcycle"}, {5, "airplane"}};
  const auto r = build_report(cooccurrence(imgs, cats), 1, cats);
  REQUIRE(r.rows.size() == 5);
  CHECK(r.rows[0].name == "motorcycle");
  CHECK(*r.rows[0].ratio == doctest::Approx(1.0));
  CHECK(r.rows[1].name == "car");
  CHECK(r.rows.back().name == "airplane");
  CHECK_FALSE(r.rows.back().ratio.has_value());
  CHECK(r.all.categories == 4);
  // (5/9 + 1/3 + 3/4 + 1) / 4
  CHECK(*r.all.average_bias_ratio == doctest::Approx((5.0 / 9 + 1.0 / 3 + 0.75 + 1.0) / 4));
  CHECK(r.all.pct_male_skewed == doctest::Approx(0.75));
}

TEST_CASE("bias ratio") {
  CHECK(*bias_ratio({5, 5}) == 0.5);
  CHECK(*bias_ratio({1, 9}) == doctest::Approx(0.9));
  CHECK(*bias_ratio({0, 7}) == 1.0);
  CHECK_FALSE(bias_ratio({0, 0}).has_value());
  CHECK_FALSE(bias_ratio({2, 3}, 10).has_value());
}

TEST_CASE("symmetric corpus averages one half") {
  CooccurrenceTable t;
  for (int c = 1; c <= 20; ++c) t.cells[c] = {c + 10, c + 10};
  const auto r = build_report(t);
  CHECK(*r.all.average_bias_ratio == 0.5);
  CHECK(r.all.pct_male_skewed == 0.0);
  CHECK(r.top_view.categories == 20);
}

TEST_CASE("top view keeps the best supported categories") {
  CooccurrenceTable t;
  for (int c = 1; c <= 80; ++c) t.cells[c] = {10, 10 + c};
  const auto r = build_report(t, 10, {}, 63);
  CHECK(r.all.categories == 80);
  CHECK(r.top_view.categories == 63);
  double sum = 0;
  for (int c = 18; c <= 80; ++c) sum += (10.0 + c) / (20.0 + c);
  CHECK(*r.top_view.average_bias_ratio == doctest::Approx(sum / 63));
}

TEST_CASE("empty table is an error") {
  CHECK_THROWS_AS(build_report(CooccurrenceTable{}), Error);
}

TEST_CASE("report json is well formed and stable") {
  CooccurrenceTable t;
  t.cells[3] = {20, 30};
  const auto r = build_report(t);
  const auto j = nlohmann::json::parse(report_to_json(r));
  CHECK(j.is_object());
  CHECK(report_to_json(r) == report_to_json(build_report(t)));
  CHECK(report_to_text(r).find("0.6") != std::string::npos);
}
