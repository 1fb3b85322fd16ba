#ifndef RUMOUR_GENERATOR_HPP
#define RUMOUR_GENERATOR_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "rumour/matcher.hpp"
#include "rumour/stream_io.hpp"
#include "rumour/types.hpp"

namespace rumour {

enum class RateProfile : std::uint8_t { constant, bursty, skewed };
enum class CoeffDist : std::uint8_t { normal, skewed };

RateProfile rate_profile_from_string(const std::string& name);
CoeffDist coeff_dist_from_string(const std::string& name);

/// Recipe for a reproducible benchmark stream. Inter-arrival behaviour is
/// encoded in the timestamp gaps; planted pattern instances carry the
/// ground-truth label on each of their elements.
struct SyntheticStreamSpec {
    std::size_t entity_count = 500;
    std::size_t length = 10000;
    RateProfile rate_profile = RateProfile::constant;
    double burst_factor = 4.0;
    double rumour_rate = 0.05;  // target fraction of elements inside planted instances
    CoeffDist coeff_dist = CoeffDist::normal;
    std::uint64_t seed = 1;
    double shift_at = -1.0;                 // <0: no drift
    std::vector<double> rumour_mix;         // per-pattern weights before the shift
    std::vector<double> rumour_mix_post;    // weights after the shift
    std::size_t degree_cap = 0;             // >0: bounded-degree background
};

/// Deterministic for a fixed spec: same spec and seed give the same stream.
std::vector<StreamElement> generate_stream(const SyntheticStreamSpec& spec,
                                           const PatternSet& patterns,
                                           const ModalityTable& modalities,
                                           EntityInterner& interner);

}  // namespace rumour

#endif  // RUMOUR_GENERATOR_HPP
