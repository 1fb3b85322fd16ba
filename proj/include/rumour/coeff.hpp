#ifndef RUMOUR_COEFF_HPP
#define RUMOUR_COEFF_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

namespace rumour {

/// One confirmed-rumour contribution: the second-order modality row and the
/// 1-based window position of the contributing element.
struct Contribution {
    std::uint32_t pair_index;
    std::uint32_t position;
};

class PositionOutOfRange : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

/// Utility statistics per (second-order modality, window position): raw
/// occurrence counts plus their normalisation to integer coefficients in
/// [0,100]. The global maximum count maps to 100, zero stays zero, other
/// cells floor-scale. Counts never decrease; columns can widen when the
/// estimated window size grows.
class CoefficientMatrix {
public:
    CoefficientMatrix(std::size_t pair_count, std::size_t window_size)
        : rows_(pair_count), cols_(window_size), counts_(pair_count * window_size, 0),
          coeffs_(pair_count * window_size, 0) {}

    /// Increment one cell; returns the new raw count.
    std::uint64_t increment(std::uint32_t pair_index, std::uint32_t position) {
        if (position < 1 || position > cols_)
            throw PositionOutOfRange("coefficient position out of range");
        auto& c = counts_[idx(pair_index, position - 1)];
        ++c;
        if (c > max_count_) max_count_ = c;
        dirty_ = true;
        return c;
    }

    void record(std::span<const Contribution> contributions) {
        for (const auto& c : contributions) increment(c.pair_index, c.position);
    }

    std::uint64_t count(std::uint32_t pair_index, std::uint32_t col) const {
        return counts_[idx(pair_index, col)];
    }

    /// Normalised coefficient of a cell (column is 0-based here).
    std::uint8_t coeff(std::uint32_t pair_index, std::uint32_t col) const {
        renormalize();
        return coeffs_[idx(pair_index, col)];
    }

    std::span<const std::uint8_t> coeffs() const {
        renormalize();
        return coeffs_;
    }

    /// Widen to a larger estimated window size; existing columns keep their
    /// counts, new columns start at zero.
    void widen(std::size_t new_cols) {
        if (new_cols <= cols_) return;
        std::vector<std::uint64_t> counts(rows_ * new_cols, 0);
        for (std::size_t r = 0; r < rows_; ++r)
            for (std::size_t c = 0; c < cols_; ++c)
                counts[r * new_cols + c] = counts_[r * cols_ + c];
        counts_ = std::move(counts);
        coeffs_.assign(rows_ * new_cols, 0);
        cols_ = new_cols;
        dirty_ = true;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::uint64_t max_count() const { return max_count_; }
    bool empty() const { return max_count_ == 0; }

private:
    std::size_t idx(std::uint32_t pair_index, std::uint32_t col) const {
        return static_cast<std::size_t>(pair_index) * cols_ + col;
    }

    void renormalize() const {
        if (!dirty_) return;
        if (max_count_ == 0) {
            std::fill(coeffs_.begin(), coeffs_.end(), 0);
        } else {
            for (std::size_t i = 0; i < counts_.size(); ++i)
                coeffs_[i] = static_cast<std::uint8_t>(counts_[i] * 100 / max_count_);
        }
        dirty_ = false;
    }

    std::size_t rows_;
    std::size_t cols_;
    std::vector<std::uint64_t> counts_;
    mutable std::vector<std::uint8_t> coeffs_;
    mutable bool dirty_ = false;
    std::uint64_t max_count_ = 0;
};

/// Cumulative coefficient occurrence. omega[pi] is the number of matrix
/// cells holding coefficient pi, shared across the second-order modalities
/// (each cell contributes 1/|M^2|); cumulative[pi] accumulates them, so
/// cumulative[100] equals the estimated window size. The snapshot of the
/// normalised matrix it was built from rides along for threshold lookups.
struct Cco {
    std::array<double, 101> omega{};
    std::array<double, 101> cumulative{};
    std::vector<std::uint8_t> snapshot_coeffs;
    std::size_t pair_count = 0;
    std::size_t cols = 0;

    double total() const { return cumulative[100]; }

    std::uint8_t snapshot_coeff(std::uint32_t pair_index, std::uint32_t col) const {
        return snapshot_coeffs[static_cast<std::size_t>(pair_index) * cols + col];
    }
};

Cco build_cco(const CoefficientMatrix& cm);

/// Core of the CCO construction, usable on a bare coefficient vector.
Cco cco_from_coeffs(std::span<const std::uint8_t> coeffs, std::size_t pair_count,
                    std::size_t cols);

struct ThresholdLookup {
    int pi_min = 0;
    bool saturated = false;
};

/// Smallest pi with cumulative occurrence >= k. Saturates at 100 when k
/// exceeds the total mass (everything eligible must go).
ThresholdLookup invert_cco(const Cco& cco, double k);

/// Mean relative error between the live raw counts and the snapshot the
/// current CCO was built from, over cells with a positive snapshot value.
/// Updated in constant time per increment.
class DriftMonitor {
public:
    explicit DriftMonitor(double threshold = 0.10) : threshold_(threshold) {}

    /// Take the current matrix as the new baseline.
    void rebase(const CoefficientMatrix& cm) {
        snapshot_.assign(cm.rows() * cm.cols(), 0);
        cols_ = cm.cols();
        positive_cells_ = 0;
        sum_rel_err_ = 0;
        for (std::size_t r = 0; r < cm.rows(); ++r)
            for (std::size_t c = 0; c < cm.cols(); ++c) {
                const auto v = cm.count(static_cast<std::uint32_t>(r),
                                        static_cast<std::uint32_t>(c));
                snapshot_[r * cols_ + c] = v;
                if (v > 0) ++positive_cells_;
            }
        has_snapshot_ = true;
    }

    /// Note a single increment of a cell (new_value = value after increment).
    void on_increment(std::uint32_t pair_index, std::uint32_t col, std::uint64_t new_value) {
        if (!has_snapshot_) return;
        if (col >= cols_) return;  // column born after the snapshot widened
        const std::size_t i = static_cast<std::size_t>(pair_index) * cols_ + col;
        if (i >= snapshot_.size()) return;
        const std::uint64_t snap = snapshot_[i];
        if (snap == 0) return;
        const double old_err =
            std::abs(static_cast<double>(new_value - 1) - static_cast<double>(snap)) / snap;
        const double new_err =
            std::abs(static_cast<double>(new_value) - static_cast<double>(snap)) / snap;
        sum_rel_err_ += new_err - old_err;
    }

    double mre() const {
        if (positive_cells_ == 0) return 0.0;
        return sum_rel_err_ / static_cast<double>(positive_cells_);
    }

    bool drift_check() const { return has_snapshot_ && mre() > threshold_; }
    bool has_snapshot() const { return has_snapshot_; }
    double threshold() const { return threshold_; }

private:
    double threshold_;
    std::vector<std::uint64_t> snapshot_;
    std::size_t cols_ = 0;
    std::size_t positive_cells_ = 0;
    double sum_rel_err_ = 0;
    bool has_snapshot_ = false;
};

}  // namespace rumour

#endif  // RUMOUR_COEFF_HPP
