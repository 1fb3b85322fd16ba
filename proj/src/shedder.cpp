#include "rumour/shedder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace rumour {

ShedStrategy shed_strategy_from_string(const std::string& name) {
    if (name == "coefficient") return ShedStrategy::coefficient;
    if (name == "random") return ShedStrategy::random;
    if (name == "weighted") return ShedStrategy::weighted;
    if (name == "sort") return ShedStrategy::sort;
    if (name == "none") return ShedStrategy::none;
    throw std::invalid_argument("unknown shedding strategy: " + name);
}

const char* to_string(ShedStrategy s) {
    switch (s) {
        case ShedStrategy::coefficient: return "coefficient";
        case ShedStrategy::random: return "random";
        case ShedStrategy::weighted: return "weighted";
        case ShedStrategy::sort: return "sort";
        case ShedStrategy::none: return "none";
    }
    return "?";
}

double compute_k(double r, double r_match, std::size_t window_size, std::size_t b,
                 std::size_t b_max) {
    const double w = static_cast<double>(window_size);
    double rate_term = 0.0;
    if (r > 0) rate_term = (r - r_match) / r * w;
    const double buffer_term =
        static_cast<double>(b) - static_cast<double>(b_max) + w;
    double k = std::max(rate_term, buffer_term);
    return std::clamp(k, 0.0, w);
}

bool should_shed(std::size_t b, double alpha, double theta_ms, double t_match_ms) {
    return static_cast<double>(b) > alpha * theta_ms / t_match_ms;
}

bool keep_element(const SheddingState& st, const Cco& cco, std::uint32_t pair_index,
                  std::uint32_t position) {
    if (!st.shedding) return true;
    const std::uint32_t col = position - 1;
    return cco.snapshot_coeff(pair_index, col) > st.pi_min;
}

SheddingState run_window_boundary(SheddingState st, const Cco* cco, std::size_t b,
                                  const SheddingConfig& cfg, std::size_t effective_window) {
    if (st.t_match_ms <= 0 || cco == nullptr) {
        st.shedding = false;
        return st;
    }
    if (should_shed(b, st.alpha, cfg.theta_ms, st.t_match_ms)) {
        const auto lookup = invert_cco(*cco, st.k);
        st.pi_min = lookup.pi_min;
        st.saturated = lookup.saturated;
        if (st.k >= static_cast<double>(effective_window)) ++st.starvation;
        st.shedding = true;
    } else {
        st.shedding = false;
    }
    return st;
}

double spare_space(double theta_ms, double t_match_ms, double alpha) {
    const double budget = theta_ms / t_match_ms;
    return budget - alpha * budget;
}

std::size_t variable_part_size(const SheddingState& st, double theta_ms) {
    if (st.t_match_ms <= 0) return 0;
    const double z = spare_space(theta_ms, st.t_match_ms, st.alpha);
    // Degenerate spare space still decides at least per element.
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::max(0.0, z))));
}

std::vector<std::size_t> baseline_shed(ShedStrategy strategy,
                                       std::span<const std::uint8_t> window_coeffs,
                                       std::size_t k, std::mt19937_64& rng) {
    const std::size_t n = window_coeffs.size();
    k = std::min(k, n);
    std::vector<std::size_t> dropped;
    if (k == 0) return dropped;

    switch (strategy) {
        case ShedStrategy::random: {
            // Partial Fisher-Yates over index positions.
            std::vector<std::size_t> idx(n);
            std::iota(idx.begin(), idx.end(), 0);
            for (std::size_t i = 0; i < k; ++i) {
                std::uniform_int_distribution<std::size_t> pick(i, n - 1);
                std::swap(idx[i], idx[pick(rng)]);
            }
            dropped.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k));
            break;
        }
        case ShedStrategy::weighted: {
            std::vector<std::size_t> alive(n);
            std::iota(alive.begin(), alive.end(), 0);
            for (std::size_t draw = 0; draw < k; ++draw) {
                double total = 0;
                for (std::size_t i : alive) total += 101.0 - window_coeffs[i];
                std::uniform_real_distribution<double> u(0.0, total);
                double x = u(rng);
                std::size_t chosen = alive.size() - 1;
                for (std::size_t j = 0; j < alive.size(); ++j) {
                    x -= 101.0 - window_coeffs[alive[j]];
                    if (x <= 0) {
                        chosen = j;
                        break;
                    }
                }
                dropped.push_back(alive[chosen]);
                alive.erase(alive.begin() + static_cast<std::ptrdiff_t>(chosen));
            }
            break;
        }
        case ShedStrategy::sort: {
            std::vector<std::size_t> idx(n);
            std::iota(idx.begin(), idx.end(), 0);
            std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
                return window_coeffs[a] < window_coeffs[b];
            });
            dropped.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k));
            break;
        }
        case ShedStrategy::coefficient:
        case ShedStrategy::none:
            throw std::invalid_argument("baseline_shed: not a baseline strategy");
    }
    std::sort(dropped.begin(), dropped.end());
    return dropped;
}

}  // namespace rumour
