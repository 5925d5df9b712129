#pragma once

#include <algorithm>
#include <string>

#include "pstergm/error.hpp"
#include "pstergm/network.hpp"

namespace pstergm {

// Augmentation (elementwise max) and diminution (elementwise min) networks of
// one transition. `prev` is borrowed: the caller keeps y^{t-1} alive.
struct TransitionPair {
  ValuedNetwork aug;
  ValuedNetwork dim;
  const ValuedNetwork* prev = nullptr;
};

inline void require_compatible(const ValuedNetwork& a, const ValuedNetwork& b) {
  if (a.size() != b.size()) {
    throw DataError("networks differ in size: " + std::to_string(a.size()) + " vs " +
                    std::to_string(b.size()));
  }
  if (a.orientation() != b.orientation()) throw DataError("networks differ in orientation");
}

inline TransitionPair decompose(const ValuedNetwork& prev, const ValuedNetwork& cur) {
  require_compatible(prev, cur);
  const auto n = prev.size();
  const auto p = prev.values();
  const auto c = cur.values();
  std::vector<Count> hi(p.size());
  std::vector<Count> lo(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) {
    hi[k] = std::max(p[k], c[k]);
    lo[k] = std::min(p[k], c[k]);
  }
  return {ValuedNetwork(n, prev.orientation(), std::move(hi)),
          ValuedNetwork(n, prev.orientation(), std::move(lo)), &prev};
}

// Inverse of decompose(). A dyad where both sides moved away from prev has no
// unique y^t and is rejected rather than repaired.
inline ValuedNetwork recompose(const TransitionPair& pair) {
  if (pair.prev == nullptr) throw DataError("transition pair has no predecessor network");
  const auto& prev = *pair.prev;
  require_compatible(prev, pair.aug);
  require_compatible(prev, pair.dim);
  const auto n = prev.size();
  std::vector<Count> cur(n * n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const Count p = prev(i, j);
      const Count a = pair.aug(i, j);
      const Count d = pair.dim(i, j);
      if (a < p || d > p) {
        throw DataError("transition pair violates aug >= prev >= dim at (" + std::to_string(i) +
                        "," + std::to_string(j) + ")");
      }
      if (a != p && d != p) {
        throw UnidentifiableDyad(i, j,
                                 "unidentifiable dyad (" + std::to_string(i) + "," +
                                     std::to_string(j) + "): prev=" + std::to_string(p) +
                                     ", aug=" + std::to_string(a) + ", dim=" + std::to_string(d));
      }
      cur[i * n + j] = a + d - p;
    }
  }
  return ValuedNetwork(n, prev.orientation(), std::move(cur));
}

}  // namespace pstergm
