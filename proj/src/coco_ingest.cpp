#include "cocogb/coco_ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "cocogb/error.hpp"
#include "json.hpp"

namespace cocogb {

namespace {

using nlohmann::json;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::kInput, "cannot open " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError("malformed JSON at byte " + std::to_string(e.byte) + ": " + e.what(),
                     e.byte);
  }
}

const json& require_array(const json& doc, const char* key) {
  if (!doc.is_object() || !doc.contains(key) || !doc.at(key).is_array()) {
    throw ParseError(std::string("expected top-level \"") + key + "\" array", 0);
  }
  return doc.at(key);
}

std::vector<ImageRecord> parse_images(const json& doc) {
  std::vector<ImageRecord> images;
  std::set<ImageId> seen;
  for (const auto& j : require_array(doc, "images")) {
    ImageRecord rec;
    try {
      rec.image_id = j.at("id").get<ImageId>();
      rec.file_name = j.value("file_name", std::string());
      rec.width = j.at("width").get<int>();
      rec.height = j.at("height").get<int>();
    } catch (const json::exception& e) {
      throw ParseError(std::string("bad image record: ") + e.what(), 0);
    }
    if (rec.width <= 0 || rec.height <= 0) {
      throw Error(ErrorKind::kInput,
                  "image " + std::to_string(rec.image_id) + " has non-positive size");
    }
    if (!seen.insert(rec.image_id).second) {
      throw Error(ErrorKind::kIntegrity,
                  "duplicate image id " + std::to_string(rec.image_id));
    }
    images.push_back(std::move(rec));
  }
  return images;
}

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(),
                     [](unsigned char c) { return std::isspace(c) != 0; });
}

[[noreturn]] void throw_dangling(const std::set<ImageId>& missing) {
  std::string msg = "annotations reference unknown image ids:";
  int shown = 0;
  for (ImageId id : missing) {
    if (shown++ == 20) {
      msg += " ...";
      break;
    }
    msg += " " + std::to_string(id);
  }
  throw Error(ErrorKind::kIntegrity, msg);
}

std::vector<std::uint32_t> counts_from_json(const json& counts) {
  if (counts.is_string()) return rle_counts_from_string(counts.get<std::string>());
  return counts.get<std::vector<std::uint32_t>>();
}

SegGeometry parse_segmentation(const json& seg) {
  if (seg.is_array()) {
    std::vector<Polygon> polys;
    for (const auto& p : seg) polys.push_back(p.get<Polygon>());
    return polys;
  }
  RleCounts rle;
  const auto& size = seg.at("size");
  rle.height = size.at(0).get<int>();
  rle.width = size.at(1).get<int>();
  rle.counts = counts_from_json(seg.at("counts"));
  return rle;
}

}  // namespace

std::size_t SegMask::area() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), 1));
}

int InstanceDataset::person_category_id() const {
  for (const auto& c : categories) {
    if (c.name == "person") return c.category_id;
  }
  return -1;
}

std::vector<ImageCaptions> parse_captions(std::string_view json_text) {
  const json doc = parse_json(json_text);
  std::vector<ImageRecord> images = parse_images(doc);

  std::map<ImageId, ImageCaptions> by_id;
  for (auto& img : images) by_id[img.image_id].image = std::move(img);

  std::set<ImageId> missing;
  for (const auto& j : require_array(doc, "annotations")) {
    CaptionAnnotation ann;
    try {
      ann.annotation_id = j.value("id", std::int64_t{0});
      ann.image_id = j.at("image_id").get<ImageId>();
      ann.caption = j.at("caption").get<std::string>();
    } catch (const json::exception& e) {
      throw ParseError(std::string("bad caption annotation: ") + e.what(), 0);
    }
    auto it = by_id.find(ann.image_id);
    if (it == by_id.end()) {
      missing.insert(ann.image_id);
      continue;
    }
    if (blank(ann.caption)) {
      throw Error(ErrorKind::kInput,
                  "empty caption in annotation " + std::to_string(ann.annotation_id));
    }
    it->second.captions.push_back(std::move(ann));
  }
  if (!missing.empty()) throw_dangling(missing);

  std::vector<ImageCaptions> out;
  out.reserve(by_id.size());
  for (auto& [id, rec] : by_id) out.push_back(std::move(rec));
  return out;
}

std::vector<ImageCaptions> load_captions(const std::filesystem::path& path) {
  return parse_captions(read_file(path));
}

InstanceDataset parse_instances(std::string_view json_text) {
  const json doc = parse_json(json_text);
  InstanceDataset ds;
  ds.images = parse_images(doc);

  if (doc.contains("categories")) {
    std::set<int> ids;
    std::set<std::string> names;
    for (const auto& j : doc.at("categories")) {
      Category c{j.at("id").get<int>(), j.at("name").get<std::string>()};
      if (!ids.insert(c.category_id).second || !names.insert(c.name).second) {
        throw Error(ErrorKind::kIntegrity, "duplicate category " + c.name);
      }
      ds.categories.push_back(std::move(c));
    }
    std::sort(ds.categories.begin(), ds.categories.end(),
              [](const Category& a, const Category& b) { return a.category_id < b.category_id; });
  }

  std::set<ImageId> known;
  for (const auto& img : ds.images) known.insert(img.image_id);
  std::set<ImageId> missing;
  for (const auto& j : require_array(doc, "annotations")) {
    InstanceAnnotation ann;
    try {
      ann.image_id = j.at("image_id").get<ImageId>();
      ann.category_id = j.at("category_id").get<int>();
      ann.iscrowd = j.value("iscrowd", 0) != 0;
      if (j.contains("segmentation")) {
        ann.segmentation = parse_segmentation(j.at("segmentation"));
      } else {
        ann.segmentation = std::vector<Polygon>{};
      }
    } catch (const json::exception& e) {
      throw ParseError(std::string("bad instance annotation: ") + e.what(), 0);
    }
    if (!known.count(ann.image_id)) {
      missing.insert(ann.image_id);
      continue;
    }
    ds.annotations.push_back(std::move(ann));
  }
  if (!missing.empty()) throw_dangling(missing);
  return ds;
}

InstanceDataset load_instances(const std::filesystem::path& path) {
  return parse_instances(read_file(path));
}

SegMask decode_rle(std::span<const std::uint32_t> counts, int width, int height) {
  const std::uint64_t total =
      std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
  const std::uint64_t expected = static_cast<std::uint64_t>(width) * height;
  if (total != expected) {
    throw Error(ErrorKind::kSizeMismatch,
                "RLE counts sum to " + std::to_string(total) + ", expected " +
                    std::to_string(expected));
  }
  SegMask mask(width, height);
  std::uint64_t pos = 0;
  bool fg = false;
  for (std::uint32_t run : counts) {
    if (fg) {
      for (std::uint64_t k = pos; k < pos + run; ++k) {
        // column-major index k -> (x, y)
        const int x = static_cast<int>(k / height);
        const int y = static_cast<int>(k % height);
        mask.set(x, y);
      }
    }
    pos += run;
    fg = !fg;
  }
  return mask;
}

RleCounts encode_rle(const SegMask& mask) {
  RleCounts rle;
  rle.width = mask.width;
  rle.height = mask.height;
  std::uint8_t current = 0;
  std::uint32_t run = 0;
  for (int x = 0; x < mask.width; ++x) {
    for (int y = 0; y < mask.height; ++y) {
      const std::uint8_t b = mask.at(x, y) ? 1 : 0;
      if (b != current) {
        rle.counts.push_back(run);
        run = 0;
        current = b;
      }
      ++run;
    }
  }
  rle.counts.push_back(run);
  return rle;
}

std::vector<std::uint32_t> rle_counts_from_string(std::string_view s) {
  std::vector<std::uint32_t> counts;
  std::size_t p = 0;
  while (p < s.size()) {
    std::int64_t x = 0;
    int k = 0;
    bool more = true;
    while (more) {
      if (p >= s.size()) throw ParseError("truncated compressed RLE string", p);
      const std::int64_t c = static_cast<std::int64_t>(s[p]) - 48;
      x |= (c & 0x1f) << (5 * k);
      more = (c & 0x20) != 0;
      ++p;
      ++k;
      if (!more && (c & 0x10)) x |= static_cast<std::int64_t>(-1) << (5 * k);
    }
    if (counts.size() > 2) x += static_cast<std::int64_t>(counts[counts.size() - 2]);
    if (x < 0) throw ParseError("negative run in compressed RLE string", p);
    counts.push_back(static_cast<std::uint32_t>(x));
  }
  return counts;
}

std::string rle_counts_to_string(std::span<const std::uint32_t> counts) {
  std::string out;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    std::int64_t x = counts[i];
    if (i > 2) x -= static_cast<std::int64_t>(counts[i - 2]);
    bool more = true;
    while (more) {
      std::int64_t c = x & 0x1f;
      x >>= 5;
      more = (c & 0x10) ? x != -1 : x != 0;
      if (more) c |= 0x20;
      out.push_back(static_cast<char>(c + 48));
    }
  }
  return out;
}

SegMask rasterize_polygon(std::span<const Polygon> polygons, int width, int height) {
  SegMask mask(width, height);
  std::vector<double> crossings;
  for (const Polygon& poly : polygons) {
    if (poly.size() < 6 || poly.size() % 2 != 0) {
      throw Error(ErrorKind::kGeometry,
                  "polygon needs an even vertex list with at least 3 points, got " +
                      std::to_string(poly.size()) + " values");
    }
    const std::size_t n = poly.size() / 2;
    std::vector<double> xs(n), ys(n);
    for (std::size_t i = 0; i < n; ++i) {
      xs[i] = std::clamp(poly[2 * i], 0.0, static_cast<double>(width));
      ys[i] = std::clamp(poly[2 * i + 1], 0.0, static_cast<double>(height));
    }
    for (int y = 0; y < height; ++y) {
      const double yc = y + 0.5;
      crossings.clear();
      for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        if ((ys[i] > yc) != (ys[j] > yc)) {
          crossings.push_back((xs[j] - xs[i]) * (yc - ys[i]) / (ys[j] - ys[i]) + xs[i]);
        }
      }
      std::sort(crossings.begin(), crossings.end());
      // Even-odd: centre xc is inside iff lo <= xc < hi for a crossing pair.
      for (std::size_t k = 0; k + 1 < crossings.size(); k += 2) {
        const double lo = crossings[k];
        const double hi = crossings[k + 1];
        int x = std::max(0, static_cast<int>(std::ceil(lo - 0.5)));
        while (x > 0 && (x - 1) + 0.5 >= lo) --x;
        while (x < width && x + 0.5 < lo) ++x;
        for (; x < width && x + 0.5 < hi; ++x) mask.set(x, y);
      }
    }
  }
  return mask;
}

SegMask instance_mask(const InstanceAnnotation& instance, int width, int height) {
  if (const auto* rle = std::get_if<RleCounts>(&instance.segmentation)) {
    if (rle->width != width || rle->height != height) {
      throw Error(ErrorKind::kSizeMismatch,
                  "RLE size " + std::to_string(rle->width) + "x" +
                      std::to_string(rle->height) + " differs from image size " +
                      std::to_string(width) + "x" + std::to_string(height));
    }
    return decode_rle(rle->counts, width, height);
  }
  return rasterize_polygon(std::get<std::vector<Polygon>>(instance.segmentation), width,
                           height);
}

SegMask person_mask(const ImageRecord& image,
                    std::span<const InstanceAnnotation> instances,
                    int person_category_id) {
  SegMask out(image.width, image.height);
  for (const auto& inst : instances) {
    if (inst.image_id != image.image_id || inst.category_id != person_category_id) continue;
    const SegMask m = instance_mask(inst, image.width, image.height);
    for (std::size_t i = 0; i < out.bits.size(); ++i) out.bits[i] |= m.bits[i];
  }
  return out;
}

}  // namespace cocogb
