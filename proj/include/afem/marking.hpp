#pragma once

#include <span>
#include <vector>

namespace afem {

struct MarkResult
{
    /// Ascending element ids.
    std::vector<int> marked;
    /// Marked share of the total indicator.
    double achieved_fraction = 0.0;
    /// Set when the total indicator is zero; nothing is marked.
    bool converged = false;
};

/**
 * Minimal-cardinality Doerfler marking: elements sorted by indicator
 * (descending, ties by ascending id), shortest prefix with sum >= theta *
 * total.
 */
MarkResult dorfler_mark(std::span<const double> eta2, double theta);

} // namespace afem
