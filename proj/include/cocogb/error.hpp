#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cocogb {

// Broad failure classes. The CLI maps these onto exit codes, the Python
// bindings onto exception types.
enum class ErrorKind {
  kParse,             // malformed input document
  kIntegrity,         // dangling references between records
  kSizeMismatch,      // RLE counts do not cover width x height
  kGeometry,          // degenerate polygon
  kInput,             // precondition on caller-supplied data violated
  kConfig,            // invalid lexicon / corpus statistics / parameters
  kEmptyReport,       // nothing to aggregate
  kCapacity,          // pool too small for the requested selection
  kConstraint,        // quotas unsatisfiable under coverage constraints
  kEvaluationInput,   // gold label unusable for scoring
  kUndefinedScore,    // metric undefined for the given input
  kNormalization,     // attention grid expected on the simplex
  kShape,             // tensor dimensions inconsistent
  kInfiniteLoss,      // zero probability assigned to a target token
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Malformed JSON; carries the byte offset reported by the parser.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t byte_offset)
      : Error(ErrorKind::kParse, what), byte_offset_(byte_offset) {}

  std::size_t byte_offset() const noexcept { return byte_offset_; }

 private:
  std::size_t byte_offset_;
};

}  // namespace cocogb
