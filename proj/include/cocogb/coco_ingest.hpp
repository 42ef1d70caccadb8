#pragma once

// Parsing of COCO caption / instance annotation files and decoding of their
// segmentation geometry into binary masks.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace cocogb {

using ImageId = std::int64_t;

struct ImageRecord {
  ImageId image_id = 0;
  std::string file_name;
  int width = 0;
  int height = 0;
};

struct CaptionAnnotation {
  std::int64_t annotation_id = 0;
  ImageId image_id = 0;
  std::string caption;
};

struct Category {
  int category_id = 0;
  std::string name;
};

// Uncompressed COCO run-length encoding. Runs alternate background and
// foreground in column-major order, starting with background.
struct RleCounts {
  std::vector<std::uint32_t> counts;
  int width = 0;
  int height = 0;
};

// Flat vertex list x0,y0,x1,y1,... in pixel coordinates.
using Polygon = std::vector<double>;

using SegGeometry = std::variant<RleCounts, std::vector<Polygon>>;

struct InstanceAnnotation {
  ImageId image_id = 0;
  int category_id = 0;
  SegGeometry segmentation;
  bool iscrowd = false;
};

// Row-major binary grid.
struct SegMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;

  SegMask() = default;
  SegMask(int w, int h) : width(w), height(h), bits(static_cast<std::size_t>(w) * h, 0) {}

  std::uint8_t at(int x, int y) const {
    return bits[static_cast<std::size_t>(y) * width + x];
  }
  void set(int x, int y, std::uint8_t v = 1) {
    bits[static_cast<std::size_t>(y) * width + x] = v;
  }
  std::size_t area() const;

  friend bool operator==(const SegMask&, const SegMask&) = default;
};

struct ImageCaptions {
  ImageRecord image;
  std::vector<CaptionAnnotation> captions;
};

struct InstanceDataset {
  std::vector<ImageRecord> images;
  std::vector<Category> categories;
  std::vector<InstanceAnnotation> annotations;

  // Id of the category named "person"; -1 when absent.
  int person_category_id() const;
};

// Caption annotation file. Records come back sorted by image id, each with its
// captions in file order. Throws ParseError on malformed JSON and kIntegrity
// when an annotation references an unknown image.
std::vector<ImageCaptions> parse_captions(std::string_view json_text);
std::vector<ImageCaptions> load_captions(const std::filesystem::path& path);

InstanceDataset parse_instances(std::string_view json_text);
InstanceDataset load_instances(const std::filesystem::path& path);

SegMask decode_rle(std::span<const std::uint32_t> counts, int width, int height);
RleCounts encode_rle(const SegMask& mask);

// The compact string form used by pycocotools ("counts": "<ascii>").
std::vector<std::uint32_t> rle_counts_from_string(std::string_view s);
std::string rle_counts_to_string(std::span<const std::uint32_t> counts);

// Union of polygons; a pixel is set iff its centre lies inside some polygon
// under the even-odd rule. Vertices are clamped to the image rectangle.
SegMask rasterize_polygon(std::span<const Polygon> polygons, int width, int height);

SegMask instance_mask(const InstanceAnnotation& instance, int width, int height);

// Union of every instance of `person_category_id` belonging to `image`.
// Returns an empty mask when the image has no such instance.
SegMask person_mask(const ImageRecord& image,
                    std::span<const InstanceAnnotation> instances,
                    int person_category_id = 1);

}  // namespace cocogb
