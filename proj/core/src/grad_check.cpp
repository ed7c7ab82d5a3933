#include "optstab/grad_check.hpp"

#include <cmath>
#include <stdexcept>

namespace optstab {

Vec64 finite_diff_grad(const std::function<double(const Vec64&)>& f,
                       const Vec64& x, double h) {
  if (!(h > 0.0)) {
    throw std::invalid_argument("finite_diff_grad: h must be positive");
  }
  Vec64 g(x.size());
  Vec64 probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double fp = f(probe);
    probe[i] = x[i] - h;
    const double fm = f(probe);
    probe[i] = x[i];
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw std::domain_error("finite_diff_grad: non-finite f evaluation");
    }
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

}  // namespace optstab
