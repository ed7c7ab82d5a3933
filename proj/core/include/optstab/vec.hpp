#pragma once

#include <span>
#include <vector>

namespace optstab {

/// Dense vector of 64-bit floats. All public operations in this library
/// reject or refuse to emit non-finite entries.
using Vec64 = std::vector<double>;

bool all_finite(std::span<const double> v);

/// Throws std::invalid_argument naming `what` if any entry is NaN or Inf.
void require_finite(std::span<const double> v, const char* what);

/// Euclidean norm. Empty input is a usage error.
double l2_norm(std::span<const double> v);

double dot(std::span<const double> a, std::span<const double> b);

/// a - b, elementwise. Lengths must match.
Vec64 sub(std::span<const double> a, std::span<const double> b);

/// y += a * x in place. Lengths must match.
void axpy(double a, std::span<const double> x, std::span<double> y);

/// Numerically safe softmax (max-subtraction). Output sums to 1 and every
/// entry lies in (0,1); invariant under adding a constant to all logits.
Vec64 softmax(std::span<const double> logits);

}  // namespace optstab
