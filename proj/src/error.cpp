#include "cocogb/error.hpp"

#include <algorithm>

#include "cocogb/grid.hpp"

namespace cocogb {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kParse: return "parse error";
    case ErrorKind::kIntegrity: return "referential-integrity error";
    case ErrorKind::kSizeMismatch: return "size-mismatch error";
    case ErrorKind::kGeometry: return "geometry error";
    case ErrorKind::kInput: return "input error";
    case ErrorKind::kConfig: return "configuration error";
    case ErrorKind::kEmptyReport: return "empty-report error";
    case ErrorKind::kCapacity: return "capacity error";
    case ErrorKind::kConstraint: return "constraint error";
    case ErrorKind::kEvaluationInput: return "evaluation-input error";
    case ErrorKind::kUndefinedScore: return "undefined-score error";
    case ErrorKind::kNormalization: return "normalization error";
    case ErrorKind::kShape: return "shape error";
    case ErrorKind::kInfiniteLoss: return "infinite-loss error";
  }
  return "error";
}

double Grid::sum() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s;
}

double Grid::max() const {
  if (values.empty()) return 0.0;
  return *std::max_element(values.begin(), values.end());
}

Grid normalized(const Grid& g) {
  const double s = g.sum();
  if (!(s > 0.0)) {
    throw Error(ErrorKind::kUndefinedScore, "grid has no positive mass");
  }
  Grid out = g;
  for (double& v : out.values) v /= s;
  return out;
}

}  // namespace cocogb
