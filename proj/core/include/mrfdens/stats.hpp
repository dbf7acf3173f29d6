#pragma once

#include <algorithm>
#include <stdexcept>
#include <vector>

namespace mrfdens {

// Lower median: element at index (n-1)/2 of the sorted values.
inline double lower_median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("lower_median: empty input");
  const std::size_t k = (values.size() - 1) / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k), values.end());
  return values[k];
}

}  // namespace mrfdens
