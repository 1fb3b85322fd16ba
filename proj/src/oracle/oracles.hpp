#ifndef RUMOUR_ORACLES_HPP
#define RUMOUR_ORACLES_HPP

// Reference implementations used to cross-check the streaming engine. They
// deliberately avoid the engine's data structures and algorithms: matching
// enumerates embeddings over a plain adjacency copy without the degree
// index, scoring keeps raw value histories instead of sketches, and the
// cumulative coefficient occurrence is a nested loop instead of prefix
// sums. The chi-square statistic uses the same reduced algebraic form as
// the engine so that flag decisions stay float-stable across both routes;
// the algebraic identity between the forms is checked separately.

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "rumour/anomaly.hpp"
#include "rumour/coeff.hpp"
#include "rumour/matcher.hpp"
#include "rumour/stream_io.hpp"
#include "rumour/types.hpp"

namespace rumour::oracle {

/// Minimal self-contained graph for reference enumeration.
class MiniGraph {
public:
    /// Returns false when the element is rejected (self-loop, duplicate
    /// relation, or modality conflict), mirroring the engine's rules.
    bool apply(const StreamElement& s);

    bool has_edge(EntityId u, EntityId v) const {
        return edges_.contains(key(u, v));
    }
    std::optional<Modality> modality_of(EntityId v) const {
        auto it = vertices_.find(v);
        if (it == vertices_.end()) return std::nullopt;
        return it->second;
    }
    const std::vector<EntityId>& of_modality(Modality m) const;
    const std::vector<EntityId>& out_of(EntityId v) const;
    const std::vector<EntityId>& in_of(EntityId v) const;

private:
    static std::uint64_t key(EntityId u, EntityId v) {
        return detail::hash_combine(detail::mix64(u.value), v.value);
    }

    std::unordered_map<EntityId, Modality> vertices_;
    std::unordered_map<std::uint16_t, std::vector<EntityId>> by_modality_;
    std::unordered_map<EntityId, std::vector<EntityId>> out_, in_;
    std::unordered_set<std::uint64_t> edges_;
};

/// Every embedding of the pattern in the graph (injective assignments whose
/// pattern edges all map onto graph edges, modalities agreeing). Sorted sets
/// of assignment vectors make comparisons order-insensitive.
std::set<std::vector<EntityId>> enumerate_matches(const MiniGraph& graph,
                                                  const RumourPattern& pattern);

/// As above but with one pattern edge pinned onto a concrete relation.
std::set<std::vector<EntityId>> enumerate_matches_anchored(const MiniGraph& graph,
                                                           const RumourPattern& pattern,
                                                           std::uint32_t edge_index,
                                                           EntityId u, EntityId u_prime);

/// Nested-loop cumulative coefficient occurrence over the normalised matrix.
std::array<double, 101> cco_reference(const CoefficientMatrix& cm);

/// Two-term observed/expected form of the feature statistic.
std::optional<double> chi_square_two_term(double f_hat, double s_hat, std::uint64_t t);

/// Chi-square(1) survival function by Simpson quadrature.
double chi1_survival_quadrature(double x2);

/// Raw-history element scoring: literal cumulative sums, per-feature
/// p-values, and the exact rank of the minimum p-value.
class LiteralScorer {
public:
    explicit LiteralScorer(std::uint32_t value_resolution) : resolution_(value_resolution) {}

    /// Scores one observation group for an element history key, then
    /// appends the new minimum p-value to the history.
    double score_group(std::uint64_t history_key,
                       const std::vector<std::pair<std::uint32_t, double>>& features,
                       bool real_valued, std::uint64_t seq);

    double latest(std::uint64_t score_key) const {
        auto it = latest_.find(score_key);
        return it == latest_.end() ? 1.0 : it->second;
    }
    void remember(std::uint64_t score_key, double score) { latest_[score_key] = score; }

private:
    std::uint32_t resolution_;
    std::unordered_map<std::uint64_t, std::vector<double>> values_;  // per (key, feature)
    std::unordered_map<std::uint64_t, double> sums_;
    std::unordered_map<std::uint64_t, std::uint32_t> counts_;        // per key
    std::unordered_map<std::uint64_t, std::vector<double>> pmin_history_;
    std::unordered_map<std::uint64_t, double> latest_;
};

/// Static counterpart of the streaming detector: replays the stream,
/// enumerates the matches each relation completes, scores elements from raw
/// history, and applies the same admission rule. Intended for desk-scale
/// streams.
class StaticDetector {
public:
    StaticDetector(const PatternSet& patterns, const SignificanceConfig& sig,
                   std::uint32_t value_resolution)
        : patterns_(patterns), sig_(sig), scorer_(value_resolution) {}

    struct Outcome {
        std::set<std::string> rumour_keys;
        std::uint64_t matches = 0;
        std::uint64_t rumours = 0;
    };

    Outcome detect(const std::vector<StreamElement>& stream, const EntityInterner& interner);

private:
    void observe_features(const StreamElement& s, std::uint64_t seq);

    const PatternSet& patterns_;
    SignificanceConfig sig_;
    LiteralScorer scorer_;
    MiniGraph graph_;
    std::unordered_map<EntityId, std::uint64_t> last_touch_;
    std::unordered_map<std::uint64_t, std::uint64_t> class_last_seen_;
    std::unordered_map<EntityId, std::uint64_t> in_degree_, out_degree_;
};

}  // namespace rumour::oracle

#endif  // RUMOUR_ORACLES_HPP
