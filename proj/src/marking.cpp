#include "afem/marking.hpp"

#include "afem/common.hpp"

#include <algorithm>
#include <numeric>

namespace afem {

MarkResult dorfler_mark(std::span<const double> eta2, double theta)
{
    if (!(theta > 0.0 && theta < 1.0)) throw Error("dorfler_mark: theta must lie in (0, 1)");
    double total = 0.0;
    for (double v : eta2) {
        if (!std::isfinite(v) || v < 0.0) throw Error("dorfler_mark: indicators must be finite and nonnegative");
        total += v;
    }
    MarkResult out;
    if (total == 0.0) {
        out.converged = true;
        return out;
    }

    std::vector<int> order(eta2.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return eta2[a] > eta2[b]; });

    const double target = theta * total;
    double sum = 0.0;
    std::size_t count = 0;
    while (count < order.size() && sum < target) sum += eta2[order[count++]];

    out.marked.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count));
    std::sort(out.marked.begin(), out.marked.end());
    out.achieved_fraction = std::min(sum / total, 1.0);
    return out;
}

} // namespace afem
