#pragma once

#include <cstddef>
#include <utility>
#include <vector>

namespace cocogb {

// Dense row-major real matrix used for attention maps and soft masks.
struct Grid {
  int rows = 0;
  int cols = 0;
  std::vector<double> values;

  Grid() = default;
  Grid(int r, int c, double fill = 0.0)
      : rows(r), cols(c), values(static_cast<std::size_t>(r) * c, fill) {}
  Grid(int r, int c, std::vector<double> v)
      : rows(r), cols(c), values(std::move(v)) {}

  std::size_t size() const { return values.size(); }
  double& at(int r, int c) { return values[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const {
    return values[static_cast<std::size_t>(r) * cols + c];
  }

  double sum() const;
  double max() const;

  friend bool operator==(const Grid&, const Grid&) = default;
};

// Returns g scaled to unit sum. Throws kUndefinedScore when the sum is not
// strictly positive.
Grid normalized(const Grid& g);

}  // namespace cocogb
