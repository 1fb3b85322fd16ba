#ifndef RUMOUR_SHEDDER_HPP
#define RUMOUR_SHEDDER_HPP

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "rumour/coeff.hpp"

namespace rumour {

enum class ShedStrategy : std::uint8_t { coefficient, random, weighted, sort, none };
enum class IntervalMode : std::uint8_t { whole_window, variable_parts };

ShedStrategy shed_strategy_from_string(const std::string& name);
const char* to_string(ShedStrategy s);

struct SheddingConfig {
    double theta_ms = 1000.0;          // latency threshold
    std::size_t b_max = 1000;          // input buffer capacity
    std::size_t window_size = 100;
    ShedStrategy strategy = ShedStrategy::coefficient;
    IntervalMode interval_mode = IntervalMode::whole_window;
    double measure_interval_ms = 1000.0;
    std::uint64_t seed = 42;
    double rate_ewma = 0.5;            // smoothing for rate measurements

    void validate() const {
        if (theta_ms <= 0) throw std::invalid_argument("theta must be positive");
        if (b_max < window_size)
            throw std::invalid_argument("buffer capacity must cover one window");
    }
};

/// Live shedding state; rates are elements per second.
struct SheddingState {
    bool shedding = false;
    int pi_min = 0;
    double k = 0.0;
    double alpha = 0.0;
    double r = 0.0;
    double r_match = 0.0;
    double t_match_ms = 0.0;
    bool saturated = false;
    std::uint64_t starvation = 0;  // windows where everything had to go
};

/// Number of elements to drop in the current window: enough to absorb the
/// rate excess, and at least enough to fit the window into the remaining
/// buffer space. Clamped to [0, window].
double compute_k(double r, double r_match, std::size_t window_size, std::size_t b,
                 std::size_t b_max);

/// Overload test: the buffer has grown past the share of the latency budget
/// the trade-off factor allows.
bool should_shed(std::size_t b, double alpha, double theta_ms, double t_match_ms);

/// Per-element decision while shedding is active: drop when the coefficient
/// cell is at or below the threshold. position is 1-based within the window
/// and is scaled to the snapshot's column range by the caller.
bool keep_element(const SheddingState& st, const Cco& cco, std::uint32_t pair_index,
                  std::uint32_t position);

/// End-of-window evaluation: re-test the overload condition and either arm
/// shedding with a fresh threshold for k drops or disarm it.
/// effective_window is the window (or part) size the drop volume was based on.
SheddingState run_window_boundary(SheddingState st, const Cco* cco, std::size_t b,
                                  const SheddingConfig& cfg, std::size_t effective_window);

/// Spare buffer space left by the trade-off factor, in elements.
double spare_space(double theta_ms, double t_match_ms, double alpha);

/// Part size for variable shedding intervals: the floor of the spare space.
/// Windows longer than the spare space are evaluated in parts of this size.
std::size_t variable_part_size(const SheddingState& st, double theta_ms);

/// Baseline drop-set selection over a completed window. Returns the indices
/// (into the window) of dropped elements, ascending.
///   random:   uniform k-subset
///   weighted: k draws without replacement, probability proportional to
///             101 - coefficient
///   sort:     the k smallest coefficients, ties broken by arrival order
std::vector<std::size_t> baseline_shed(ShedStrategy strategy,
                                       std::span<const std::uint8_t> window_coeffs,
                                       std::size_t k, std::mt19937_64& rng);

}  // namespace rumour

#endif  // RUMOUR_SHEDDER_HPP
