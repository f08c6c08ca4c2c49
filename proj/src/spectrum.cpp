#include "attotip/spectrum.hpp"

#include <cmath>

namespace attotip {

std::vector<double> energy_bin_centres(double width, double energy_max) {
  if (!(width > 0.0) || !(energy_max > width))
    throw std::invalid_argument("energy grid: need 0 < width < energy_max");
  const auto n = static_cast<std::size_t>(std::llround(energy_max / width));
  std::vector<double> e(n);
  for (std::size_t k = 0; k < n; ++k) e[k] = (static_cast<double>(k) + 0.5) * width;
  return e;
}

}  // namespace attotip
