#pragma once

#include <functional>

#include "optstab/vec.hpp"

namespace optstab {

/// Central finite differences: g_i = (f(x + h e_i) - f(x - h e_i)) / (2h).
/// h must be positive; a non-finite f value anywhere is reported as an
/// evaluation error.
Vec64 finite_diff_grad(const std::function<double(const Vec64&)>& f,
                       const Vec64& x, double h);

}  // namespace optstab
