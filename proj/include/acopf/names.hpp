#pragma once

#include <string>
#include <utility>
#include <vector>

#include "acopf/grid.hpp"

namespace acopf {

// Structured variable names, AMPL-style: VR[4], SR[1,2,1], c[1,2].
inline std::string vn(const std::string& base, int i) {
    return base + "[" + std::to_string(i) + "]";
}
inline std::string vn(const std::string& base, int i, int j) {
    return base + "[" + std::to_string(i) + "," + std::to_string(j) + "]";
}
inline std::string vn(const std::string& base, int i, int j, int k) {
    return base + "[" + std::to_string(i) + "," + std::to_string(j) + "," +
           std::to_string(k) + "]";
}

// Unordered adjacent bus pairs in stored (L0) orientation, deduplicated,
// in branch order; only active branches contribute.
std::vector<std::pair<int, int>> adjacent_pairs(const Grid& grid);

// Maps (b, a) to the stored orientation of the pair plus a sign: +1 when
// (b, a) is stored as-is, -1 when the pair is stored as (a, b). The sign is
// the factor picked up by antisymmetric pair quantities (s, Im X).
std::pair<std::pair<int, int>, int> canonical_pair(
    const std::vector<std::pair<int, int>>& pairs, int b, int a);

}  // namespace acopf
