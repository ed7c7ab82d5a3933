#pragma once

#include <span>

#include "optstab/vec.hpp"

namespace optstab {

double mean(std::span<const double> v);

/// Median by sorting a copy; lower-middle average for even counts.
double median(std::span<const double> v);

/// Spearman rank correlation with average ranks for ties.
/// Returns NaN when either side has fewer than two distinct values.
double spearman_rho(std::span<const double> x, std::span<const double> y);

}  // namespace optstab
