#pragma once

// Conformance runner for the loss kernel. Each JSON line is one test vector:
//   {"op": "...", "inputs": {...}, "expected": ..., "tol": 1e-9}
// Ops: soft_mask, grad_soft_mask, masked_image, token_nll,
// gender_attention_loss, grad_gender_attention_loss, combine_losses.
// A vector may instead carry "expect_error": "<error kind>" (see to_string(ErrorKind)).
// A value passes when |actual - expected| <= tol * max(1, |expected|).

#include <string>
#include <string_view>
#include <vector>

namespace cocogb {

struct VectorVerdict {
  int line = 0;
  std::string op;
  bool passed = false;
  std::string message;
};

inline constexpr double kDefaultVectorTolerance = 1e-9;

// Never throws for a bad vector; failures are reported per line.
std::vector<VectorVerdict> check_kernel_vectors(std::string_view jsonl);

}  // namespace cocogb
