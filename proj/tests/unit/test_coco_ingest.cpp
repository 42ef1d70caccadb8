#include <random>

#include "cocogb/coco_ingest.hpp"
#include "cocogb/error.hpp"
#include "doctest.h"

using namespace cocogb;

namespace {

// Even-odd point-in-polygon at the pixel centre (PNPOLY).
bool pnpoly(const Polygon& p, double x, double y) {
  const std::size_t n = p.size() / 2;
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const double xi = p[2 * i], yi = p[2 * i + 1], xj = p[2 * j], yj = p[2 * j + 1];
    if ((yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi) inside = !inside;
  }
  return inside;
}

// Sign-of-area test, used only where no pixel centre sits on an edge.
bool in_triangle(const Polygon& t, double x, double y) {
  auto cross = [](double ax, double ay, double bx, double by, double px, double py) {
    return (bx - ax) * (py - ay) - (by - ay) * (px - ax);
  };
  const double d1 = cross(t[0], t[1], t[2], t[3], x, y);
  const double d2 = cross(t[2], t[3], t[4], t[5], x, y);
  const double d3 = cross(t[4], t[5], t[0], t[1], x, y);
  return (d1 > 0 && d2 > 0 && d3 > 0) || (d1 < 0 && d2 < 0 && d3 < 0);
}

SegMask random_mask(std::mt19937_64& rng, int w, int h, double p) {
  std::bernoulli_distribution bit(p);
  SegMask m(w, h);
  for (auto& b : m.bits) b = bit(rng) ? 1 : 0;
  return m;
}

}  // namespace

TEST_CASE("captions fixture groups captions per image") {
  const char* text = R"({
    "images": [{"id": 2, "file_name": "b.jpg", "width": 4, "height": 3},
               {"id": 1, "file_name": "a.jpg", "width": 8, "height": 6}],
    "annotations": [
      {"id": 10, "image_id": 1, "caption": "a"}, {"id": 11, "image_id": 2, "caption": "b"},
      {"id": 12, "image_id": 1, "caption": "c"}, {"id": 13, "image_id": 2, "caption": "d"},
      {"id": 14, "image_id": 1, "caption": "e"}, {"id": 15, "image_id": 2, "caption": "f"},
      {"id": 16, "image_id": 1, "caption": "g"}, {"id": 17, "image_id": 2, "caption": "h"},
      {"id": 18, "image_id": 1, "caption": "i"}, {"id": 19, "image_id": 2, "caption": "j"}]})";
  const auto recs = parse_captions(text);
  REQUIRE(recs.size() == 2);
  CHECK(recs[0].image.image_id == 1);
  CHECK(recs[0].image.width == 8);
  CHECK(recs[0].captions.size() == 5);
  CHECK(recs[1].captions.size() == 5);
  CHECK(recs[0].captions[1].caption == "c");
}

TEST_CASE("caption annotation pointing at a missing image") {
  const char* text = R"({"images": [{"id": 1, "file_name": "a", "width": 1, "height": 1}],
    "annotations": [{"id": 1, "image_id": 999, "caption": "x"}]})";
  try {
    parse_captions(text);
    FAIL("expected an integrity error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kIntegrity);
    CHECK(std::string(e.what()).find("999") != std::string::npos);
  }
}

TEST_CASE("malformed json carries a byte offset") {
  try {
    parse_captions(R"({"images": [}")");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.kind() == ErrorKind::kParse);
    CHECK(e.byte_offset() > 0);
  }
}

TEST_CASE("rle decode hand cases") {
  const std::uint32_t c1[] = {1, 3};
  const SegMask m = decode_rle(c1, 2, 2);
  CHECK(m.at(0, 0) == 0);
  CHECK(m.at(1, 0) == 1);
  CHECK(m.at(0, 1) == 1);
  CHECK(m.at(1, 1) == 1);

  const std::uint32_t c2[] = {4};
  CHECK(decode_rle(c2, 2, 2).area() == 0);

  // Column-major: counts {2, 1} on a 2x2 sets (x=1, y=0).
  const std::uint32_t c3[] = {2, 1, 1};
  const SegMask m3 = decode_rle(c3, 2, 2);
  CHECK(m3.at(1, 0) == 1);
  CHECK(m3.area() == 1);

  const std::uint32_t bad[] = {1, 1};
  CHECK_THROWS_AS(decode_rle(bad, 2, 2), Error);
}

TEST_CASE("rle round trip on random counts and masks") {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 200; ++t) {
    const int w = 1 + static_cast<int>(rng() % 12), h = 1 + static_cast<int>(rng() % 12);
    const std::uint32_t total = static_cast<std::uint32_t>(w * h);
    std::vector<std::uint32_t> counts;
    std::uint32_t used = 0;
    bool first = true;
    while (used < total) {
      std::uint32_t run = 1 + static_cast<std::uint32_t>(rng() % 5);
      if (first && rng() % 3 == 0) run = 0;  // mask starting with foreground
      first = false;
      run = std::min(run, total - used);
      counts.push_back(run);
      used += run;
    }
    const RleCounts back = encode_rle(decode_rle(counts, w, h));
    CHECK(back.counts == counts);
    CHECK(rle_counts_from_string(rle_counts_to_string(counts)) == counts);
  }
  for (int t = 0; t < 200; ++t) {
    const SegMask m = random_mask(rng, 1 + static_cast<int>(rng() % 30), 1 + static_cast<int>(rng() % 30), 0.4);
    const RleCounts r = encode_rle(m);
    CHECK(decode_rle(r.counts, r.width, r.height) == m);
  }
}

TEST_CASE("compressed rle string matches the reference codec") {
  // Produced by pycocotools.mask.encode on a 5x4 mask.
  const std::vector<std::uint32_t> counts = {3, 2, 6, 4, 5};
  CHECK(rle_counts_to_string(counts) == "3262O");
  CHECK(rle_counts_from_string("3262O") == counts);
}

TEST_CASE("polygon rasterization") {
  SUBCASE("left half of a 4x4 image") {
    const std::vector<Polygon> polys = {{0, 0, 2, 0, 2, 4, 0, 4}};
    const SegMask m = rasterize_polygon(polys, 4, 4);
    CHECK(m.area() == 8);
    CHECK(m.at(1, 3) == 1);
    CHECK(m.at(2, 0) == 0);
  }
  SUBCASE("empty list") {
    CHECK(rasterize_polygon(std::vector<Polygon>{}, 5, 5).area() == 0);
  }
  SUBCASE("degenerate polygon") {
    const std::vector<Polygon> polys = {{0, 0, 1, 1}};
    CHECK_THROWS_AS(rasterize_polygon(polys, 4, 4), Error);
  }
  SUBCASE("random triangles vs point-in-polygon oracle") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 40.0);
    for (int t = 0; t < 200; ++t) {
      const Polygon tri = {u(rng), u(rng), u(rng), u(rng), u(rng), u(rng)};
      const std::vector<Polygon> polys = {tri};
      const SegMask m = rasterize_polygon(polys, 40, 40);
      for (int y = 0; y < 40; ++y) {
        for (int x = 0; x < 40; ++x) {
          REQUIRE(m.at(x, y) == (pnpoly(tri, x + 0.5, y + 0.5) ? 1 : 0));
          // Random real vertices put no centre exactly on an edge.
          REQUIRE(m.at(x, y) == (in_triangle(tri, x + 0.5, y + 0.5) ? 1 : 0));
        }
      }
    }
  }
}

TEST_CASE("person mask is the union of person instances") {
  const ImageRecord img{1, "a", 10, 10};
  InstanceAnnotation a{1, 1, std::vector<Polygon>{{0, 0, 3, 0, 3, 3, 0, 3}}, false};
  InstanceAnnotation b{1, 1, std::vector<Polygon>{{5, 5, 9, 5, 9, 9, 5, 9}}, false};
  InstanceAnnotation c{1, 1, std::vector<Polygon>{{2, 2, 6, 2, 6, 6, 2, 6}}, false};
  InstanceAnnotation dog{1, 18, std::vector<Polygon>{{0, 0, 10, 0, 10, 10, 0, 10}}, false};
  InstanceAnnotation other_image{2, 1, std::vector<Polygon>{{0, 0, 10, 0, 10, 10, 0, 10}}, false};

  SUBCASE("disjoint") {
    const std::vector<InstanceAnnotation> inst = {a, b, dog, other_image};
    CHECK(person_mask(img, inst).area() == 9 + 16);
  }
  SUBCASE("none") {
    const std::vector<InstanceAnnotation> inst = {dog};
    CHECK(person_mask(img, inst).area() == 0);
  }
  SUBCASE("overlapping vs per-pixel or") {
    const std::vector<InstanceAnnotation> inst = {a, b, c};
    const SegMask ma = instance_mask(a, 10, 10), mb = instance_mask(b, 10, 10),
                  mc = instance_mask(c, 10, 10);
    std::size_t expected = 0;
    for (std::size_t i = 0; i < ma.bits.size(); ++i) expected += (ma.bits[i] | mb.bits[i] | mc.bits[i]);
    CHECK(person_mask(img, inst).area() == expected);
  }
  SUBCASE("rle instance") {
    SegMask m(10, 10);
    m.set(4, 4);
    m.set(4, 5);
    InstanceAnnotation r{1, 1, encode_rle(m), true};
    const std::vector<InstanceAnnotation> inst = {r};
    CHECK(person_mask(img, inst) == m);
  }
}

TEST_CASE("instances file with polygon and rle segmentations") {
  const char* text = R"({
    "images": [{"id": 3, "file_name": "c.jpg", "width": 4, "height": 4}],
    "categories": [{"id": 1, "name": "person"}, {"id": 4, "name": "motorcycle"}],
    "annotations": [
      {"id": 1, "image_id": 3, "category_id": 1, "iscrowd": 0,
       "segmentation": [[0, 0, 2, 0, 2, 4, 0, 4]]},
      {"id": 2, "image_id": 3, "category_id": 4, "iscrowd": 1,
       "segmentation": {"size": [4, 4], "counts": [8, 8]}},
      {"id": 3, "image_id": 3, "category_id": 4, "iscrowd": 1,
       "segmentation": {"size": [4, 4], "counts": "88"}}]})";
  const InstanceDataset ds = parse_instances(text);
  CHECK(ds.person_category_id() == 1);
  REQUIRE(ds.annotations.size() == 3);
  CHECK(instance_mask(ds.annotations[0], 4, 4).area() == 8);
  const SegMask right = instance_mask(ds.annotations[1], 4, 4);
  CHECK(right.area() == 8);
  CHECK(right.at(3, 0) == 1);
  CHECK(instance_mask(ds.annotations[2], 4, 4) == right);
}
