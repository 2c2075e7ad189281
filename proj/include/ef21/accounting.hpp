#pragma once

#include "ef21/compressors.hpp"

#include <cstddef>

namespace ef21 {

// Bits one client uploads per round, following the payload representation:
// sparse payloads cost k (value + index) pairs, dense ones d values. Top-k
// with k = d is still logged as sparse.
inline double bits_per_round(const Compressor& comp, std::size_t d) {
  const double value_bits = comp.value_bits();
  if (comp.sparse_payload()) {
    unsigned index_bits = 0;
    while ((std::size_t{1} << index_bits) < d) ++index_bits;
    return static_cast<double>(comp.k()) * (value_bits + index_bits);
  }
  return static_cast<double>(d) * value_bits;
}

}  // namespace ef21
