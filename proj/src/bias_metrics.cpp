#include "cocogb/bias_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <unordered_map>

#include "cocogb/error.hpp"
#include "json.hpp"

namespace cocogb {

std::vector<LabeledImage> label_dataset(std::span<const ImageCaptions> captions,
                                        const InstanceDataset& instances,
                                        const GenderLexicon& lexicon) {
  const int person_id = instances.person_category_id();
  std::unordered_map<ImageId, int> persons;
  std::unordered_map<ImageId, std::vector<int>> cats;
  for (const auto& a : instances.annotations) {
    cats[a.image_id].push_back(a.category_id);
    if (a.category_id == person_id) persons[a.image_id] += a.iscrowd ? 2 : 1;
  }

  std::vector<LabeledImage> out;
  out.reserve(captions.size());
  for (const auto& rec : captions) {
    LabeledImage li;
    li.image_id = rec.image.image_id;
    auto it = cats.find(li.image_id);
    if (it != cats.end()) {
      li.categories = it->second;
      std::sort(li.categories.begin(), li.categories.end());
      li.categories.erase(std::unique(li.categories.begin(), li.categories.end()),
                          li.categories.end());
    }
    if (!rec.captions.empty()) {
      std::vector<std::string> texts;
      texts.reserve(rec.captions.size());
      for (const auto& c : rec.captions) texts.push_back(c.caption);
      const auto pc = persons.find(li.image_id);
      li.label = label_image(texts, pc == persons.end() ? 0 : pc->second, lexicon);
    }
    out.push_back(std::move(li));
  }
  return out;
}

void CooccurrenceTable::merge(const CooccurrenceTable& other) {
  for (const auto& [id, cell] : other.cells) {
    auto& mine = cells[id];
    mine.women += cell.women;
    mine.men += cell.men;
  }
  women_images += other.women_images;
  men_images += other.men_images;
}

CooccurrenceTable cooccurrence(std::span<const LabeledImage> images,
                               std::span<const Category> categories) {
  CooccurrenceTable table;
  for (const auto& c : categories) table.cells[c.category_id];
  for (const auto& img : images) {
    if (img.label == GenderLabel::kDiscard) continue;
    const bool women = img.label == GenderLabel::kWomen;
    (women ? table.women_images : table.men_images) += 1;
    // presence, not instance count
    std::vector<int> uniq = img.categories;
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    for (int c : uniq) {
      auto& cell = table.cells[c];
      (women ? cell.women : cell.men) += 1;
    }
  }
  return table;
}

std::optional<double> bias_ratio(const CooccurrenceCell& cell, std::int64_t min_support) {
  const std::int64_t support = cell.support();
  if (support == 0 || support < min_support) return std::nullopt;
  return static_cast<double>(cell.men) / static_cast<double>(support);
}

namespace {

BiasAggregate aggregate(const std::vector<const BiasRow*>& rows) {
  BiasAggregate agg;
  double sum = 0.0;
  std::size_t skewed = 0;
  for (const BiasRow* r : rows) {
    if (!r->ratio) continue;
    ++agg.categories;
    sum += *r->ratio;
    if (*r->ratio > 0.5) ++skewed;
  }
  if (agg.categories > 0) {
    agg.average_bias_ratio = sum / static_cast<double>(agg.categories);
    agg.pct_male_skewed = static_cast<double>(skewed) / static_cast<double>(agg.categories);
  }
  return agg;
}

nlohmann::ordered_json aggregate_json(const BiasAggregate& a) {
  nlohmann::ordered_json j;
  j["categories"] = a.categories;
  j["average_bias_ratio"] =
      a.average_bias_ratio ? nlohmann::ordered_json(*a.average_bias_ratio) : nullptr;
  j["pct_male_skewed"] = a.pct_male_skewed;
  return j;
}

}  // namespace

BiasReport build_report(const CooccurrenceTable& table, std::int64_t min_support,
                        std::span<const Category> categories, std::size_t top_k) {
  const bool any = std::any_of(table.cells.begin(), table.cells.end(),
                               [](const auto& kv) { return kv.second.support() > 0; });
  if (!any) throw Error(ErrorKind::kEmptyReport, "co-occurrence table is empty");

  std::unordered_map<int, std::string> names;
  for (const auto& c : categories) names[c.category_id] = c.name;

  BiasReport report;
  report.min_support = min_support;
  report.top_k = top_k;
  report.women_images = table.women_images;
  report.men_images = table.men_images;
  for (const auto& [id, cell] : table.cells) {
    BiasRow row;
    row.category_id = id;
    auto it = names.find(id);
    row.name = it != names.end() ? it->second : std::to_string(id);
    row.cell = cell;
    row.ratio = bias_ratio(cell, min_support);
    report.rows.push_back(std::move(row));
  }
  std::stable_sort(report.rows.begin(), report.rows.end(),
                   [](const BiasRow& a, const BiasRow& b) {
                     if (a.ratio.has_value() != b.ratio.has_value()) return a.ratio.has_value();
                     if (a.ratio && *a.ratio != *b.ratio) return *a.ratio > *b.ratio;
                     return a.category_id < b.category_id;
                   });

  std::vector<const BiasRow*> all;
  for (const auto& r : report.rows) all.push_back(&r);
  report.all = aggregate(all);

  std::vector<const BiasRow*> top;
  for (const auto& r : report.rows) {
    if (r.ratio) top.push_back(&r);
  }
  std::stable_sort(top.begin(), top.end(), [](const BiasRow* a, const BiasRow* b) {
    if (a->cell.support() != b->cell.support()) return a->cell.support() > b->cell.support();
    return a->category_id < b->category_id;
  });
  if (top.size() > top_k) top.resize(top_k);
  report.top_view = aggregate(top);
  return report;
}

std::string report_to_json(const BiasReport& report, int indent) {
  nlohmann::ordered_json j;
  j["min_support"] = report.min_support;
  j["women_images"] = report.women_images;
  j["men_images"] = report.men_images;
  j["women_to_men"] = report.women_images > 0
                          ? nlohmann::ordered_json(static_cast<double>(report.men_images) /
                                                   static_cast<double>(report.women_images))
                          : nlohmann::ordered_json(nullptr);
  j["all"] = aggregate_json(report.all);
  j["top_view"] = aggregate_json(report.top_view);
  j["top_view"]["top_k"] = report.top_k;
  auto& rows = j["categories"] = nlohmann::ordered_json::array();
  for (const auto& r : report.rows) {
    nlohmann::ordered_json row;
    row["category_id"] = r.category_id;
    row["name"] = r.name;
    row["women"] = r.cell.women;
    row["men"] = r.cell.men;
    row["bias_ratio"] = r.ratio ? nlohmann::ordered_json(*r.ratio) : nullptr;
    rows.push_back(std::move(row));
  }
  return j.dump(indent);
}

std::string report_to_text(const BiasReport& report) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(3);
  os << "images: women " << report.women_images << ", men " << report.men_images;
  if (report.women_images > 0) {
    os << " (1:" << static_cast<double>(report.men_images) / report.women_images << ")";
  }
  os << "\n";
  auto agg = [&](const char* label, const BiasAggregate& a) {
    os << label << ": " << a.categories << " categories, average bias ratio ";
    if (a.average_bias_ratio) {
      os << *a.average_bias_ratio;
    } else {
      os << "n/a";
    }
    os << ", male-skewed " << 100.0 * a.pct_male_skewed << "%\n";
  };
  agg("all supported", report.all);
  agg("top view", report.top_view);
  os << "min support: " << report.min_support << "\n\n";

  std::size_t name_w = 8;
  for (const auto& r : report.rows) name_w = std::max(name_w, r.name.size());
  os << std::left << std::setw(static_cast<int>(name_w)) << "category" << std::right
     << std::setw(8) << "women" << std::setw(8) << "men" << std::setw(8) << "ratio" << "\n";
  for (const auto& r : report.rows) {
    os << std::left << std::setw(static_cast<int>(name_w)) << r.name << std::right
       << std::setw(8) << r.cell.women << std::setw(8) << r.cell.men << std::setw(8);
    if (r.ratio) {
      os << *r.ratio;
    } else {
      os << "-";
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace cocogb
