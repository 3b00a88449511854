#include "fpca/data.hpp"

#include <stdexcept>
#include <string>

namespace fpca {

std::size_t SparseDataset::observation_count() const {
  std::size_t n = 0;
  for (const auto& c : curves) n += c.size();
  return n;
}

void SparseDataset::validate() const {
  for (std::size_t n = 0; n < curves.size(); ++n) {
    const auto& c = curves[n];
    if (c.times.empty()) {
      throw std::invalid_argument("curve " + std::to_string(n) + " is empty");
    }
    if (c.times.size() != c.values.size()) {
      throw std::invalid_argument("curve " + std::to_string(n) +
                                  ": times and values differ in length");
    }
    for (double u : c.times) {
      if (!(u >= 0.0 && u <= 1.0)) {
        throw std::invalid_argument("curve " + std::to_string(n) +
                                    ": time outside [0, 1]");
      }
    }
  }
}

}  // namespace fpca
