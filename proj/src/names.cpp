#include "acopf/names.hpp"

#include <algorithm>
#include <stdexcept>

namespace acopf {

std::vector<std::pair<int, int>> adjacent_pairs(const Grid& grid) {
    std::vector<std::pair<int, int>> pairs;
    for (const Branch* br : grid.active_branches()) {
        std::pair<int, int> p{br->from_bus, br->to_bus};
        if (std::find(pairs.begin(), pairs.end(), p) == pairs.end()) pairs.push_back(p);
    }
    return pairs;
}

std::pair<std::pair<int, int>, int> canonical_pair(
    const std::vector<std::pair<int, int>>& pairs, int b, int a) {
    std::pair<int, int> fwd{b, a};
    if (std::find(pairs.begin(), pairs.end(), fwd) != pairs.end()) return {fwd, 1};
    std::pair<int, int> rev{a, b};
    if (std::find(pairs.begin(), pairs.end(), rev) != pairs.end()) return {rev, -1};
    throw std::logic_error("no adjacent pair between buses " + std::to_string(b) + " and " +
                           std::to_string(a));
}

}  // namespace acopf
