#ifndef RUMOUR_CM_SKETCH_HPP
#define RUMOUR_CM_SKETCH_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "rumour/types.hpp"

namespace rumour {

/// Count-min sketch over 64-bit keys with non-negative integer increments.
/// width = ceil(e / eps), depth = ceil(ln(1 / delta)). Point queries never
/// underestimate; the overestimate stays within eps times the total mass
/// with probability at least 1 - delta.
class CmSketch {
public:
    CmSketch(double eps, double delta, std::uint64_t seed) {
        if (eps <= 0 || eps >= 1 || delta <= 0 || delta >= 1)
            throw std::invalid_argument("cm sketch: eps and delta must be in (0,1)");
        eps_ = eps;
        delta_ = delta;
        width_ = static_cast<std::size_t>(std::ceil(std::numbers::e / eps));
        depth_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(std::log(1.0 / delta))));
        cells_.assign(width_ * depth_, 0);
        std::mt19937_64 rng(seed);
        std::uniform_int_distribution<std::uint64_t> dist(1, kPrime - 1);
        rows_.reserve(depth_);
        for (std::size_t i = 0; i < depth_; ++i) rows_.push_back({dist(rng), dist(rng)});
    }

    void update(std::uint64_t key, std::uint64_t delta) {
        for (std::size_t r = 0; r < depth_; ++r) cells_[slot(r, key)] += delta;
        mass_ += delta;
    }

    std::uint64_t estimate(std::uint64_t key) const {
        std::uint64_t best = std::numeric_limits<std::uint64_t>::max();
        for (std::size_t r = 0; r < depth_; ++r) best = std::min(best, cells_[slot(r, key)]);
        return best;
    }

    std::size_t width() const { return width_; }
    std::size_t depth() const { return depth_; }
    double eps() const { return eps_; }
    double delta() const { return delta_; }
    std::uint64_t mass() const { return mass_; }

private:
    friend class EpochCmSketch;

    static constexpr std::uint64_t kPrime = (1ULL << 61) - 1;  // Mersenne prime

    std::size_t slot(std::size_t row, std::uint64_t key) const {
        const auto& [a, b] = rows_[row];
        unsigned __int128 v = static_cast<unsigned __int128>(a) * key + b;
        std::uint64_t h = static_cast<std::uint64_t>(v % kPrime);
        return row * width_ + static_cast<std::size_t>(h % width_);
    }

    double eps_ = 0;
    double delta_ = 0;
    std::size_t width_ = 0;
    std::size_t depth_ = 0;
    std::uint64_t mass_ = 0;
    std::vector<std::uint64_t> cells_;
    std::vector<std::pair<std::uint64_t, std::uint64_t>> rows_;
};

/// Count-min sketch whose contents logically reset at every epoch boundary.
/// Cells are tagged with the epoch they were last written in; stale cells
/// read as zero, so no per-epoch clearing pass is needed.
class EpochCmSketch {
public:
    EpochCmSketch(double eps, double delta, std::uint64_t seed) : base_(eps, delta, seed) {
        epochs_.assign(base_.width_ * base_.depth_, 0);
    }

    void update(std::uint64_t key, std::uint64_t delta, std::uint64_t epoch) {
        for (std::size_t r = 0; r < base_.depth_; ++r) {
            std::size_t s = base_.slot(r, key);
            if (epochs_[s] != epoch) {
                epochs_[s] = epoch;
                base_.cells_[s] = 0;
            }
            base_.cells_[s] += delta;
        }
    }

    std::uint64_t estimate(std::uint64_t key, std::uint64_t epoch) const {
        std::uint64_t best = std::numeric_limits<std::uint64_t>::max();
        for (std::size_t r = 0; r < base_.depth_; ++r) {
            std::size_t s = base_.slot(r, key);
            best = std::min(best, epochs_[s] == epoch ? base_.cells_[s] : 0);
        }
        return best;
    }

private:
    CmSketch base_;
    std::vector<std::uint64_t> epochs_;
};

/// Exact counterpart used in oracle mode and for sketch-vs-exact checks.
class ExactCounter {
public:
    void update(std::uint64_t key, std::uint64_t delta) { counts_[key] += delta; }
    std::uint64_t estimate(std::uint64_t key) const {
        auto it = counts_.find(key);
        return it == counts_.end() ? 0 : it->second;
    }

private:
    std::unordered_map<std::uint64_t, std::uint64_t> counts_;
};

class EpochExactCounter {
public:
    void update(std::uint64_t key, std::uint64_t delta, std::uint64_t epoch) {
        auto& cell = counts_[key];
        if (cell.first != epoch) cell = {epoch, 0};
        cell.second += delta;
    }
    std::uint64_t estimate(std::uint64_t key, std::uint64_t epoch) const {
        auto it = counts_.find(key);
        if (it == counts_.end() || it->second.first != epoch) return 0;
        return it->second.second;
    }

private:
    std::unordered_map<std::uint64_t, std::pair<std::uint64_t, std::uint64_t>> counts_;
};

}  // namespace rumour

#endif  // RUMOUR_CM_SKETCH_HPP
