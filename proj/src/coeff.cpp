#include "rumour/coeff.hpp"

namespace rumour {

Cco cco_from_coeffs(std::span<const std::uint8_t> coeffs, std::size_t pair_count,
                    std::size_t cols) {
    Cco out;
    out.pair_count = pair_count;
    out.cols = cols;
    out.snapshot_coeffs.assign(coeffs.begin(), coeffs.end());

    // Integer cell tallies first; the 1/|M^2| share is applied once at the
    // end so the result carries no accumulated rounding.
    std::array<std::uint64_t, 101> cells{};
    for (std::uint8_t c : out.snapshot_coeffs) ++cells[c];
    const double share = pair_count == 0 ? 0.0 : 1.0 / static_cast<double>(pair_count);
    double running = 0.0;
    for (std::size_t pi = 0; pi <= 100; ++pi) {
        out.omega[pi] = static_cast<double>(cells[pi]) * share;
        running += out.omega[pi];
        out.cumulative[pi] = running;
    }
    return out;
}

Cco build_cco(const CoefficientMatrix& cm) {
    return cco_from_coeffs(cm.coeffs(), cm.rows(), cm.cols());
}

ThresholdLookup invert_cco(const Cco& cco, double k) {
    constexpr double kEps = 1e-9;
    if (k > cco.total() + kEps) return ThresholdLookup{100, true};
    for (int pi = 0; pi <= 100; ++pi)
        if (cco.cumulative[static_cast<std::size_t>(pi)] >= k - kEps)
            return ThresholdLookup{pi, false};
    return ThresholdLookup{100, true};
}

}  // namespace rumour
