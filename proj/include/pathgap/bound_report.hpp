#pragma once

#include <string_view>

#include "pathgap/error.hpp"

namespace pathgap {

/// Constant two-sided curvature pinching k1 <= Ric^Z <= k2.
struct ConstantPinching {
  double k1 = 0.0;
  double k2 = 0.0;

  ConstantPinching() = default;
  ConstantPinching(double lower, double upper);
};

/// Which of the two competing estimates realises the minimum in H.
enum class BoundBranch { FangWu, Product };

std::string_view to_string(BoundBranch branch);

struct BoundReport {
  double T = 0.0;
  double fang_wu = 1.0;  ///< S or C at (k1, |k1| v |k2|)
  double product = 1.0;  ///< S(k1,(k2-k1)/2) * S((k1+k2)/2,|k1+k2|/2)
  double h = 1.0;        ///< min(fang_wu, product)
  BoundBranch branch = BoundBranch::FangWu;
  double c_star = 0.0;   ///< optimising rate c of the winning branch (first factor)
};

/// Raised when the numerical inf over c fails; carries the closed-form report.
class OptimizationFailure : public Error {
 public:
  OptimizationFailure(const std::string& what, BoundReport fallback)
      : Error(what), fallback_(fallback) {}
  const BoundReport& fallback() const noexcept { return fallback_; }

 private:
  BoundReport fallback_;
};

}  // namespace pathgap
