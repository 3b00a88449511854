#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace fpca {

/// One sparsely observed curve: values y_j at times u_j in [0, 1].
struct Curve {
  std::vector<double> times;
  std::vector<double> values;

  std::size_t size() const { return times.size(); }
};

/// N independent curves and the seed that generated them (0 if unknown).
struct SparseDataset {
  std::vector<Curve> curves;
  std::uint64_t seed = 0;

  std::size_t observation_count() const;

  /// Throws std::invalid_argument if a curve is empty, has mismatched
  /// lengths, or has a time outside [0, 1].
  void validate() const;
};

}  // namespace fpca
