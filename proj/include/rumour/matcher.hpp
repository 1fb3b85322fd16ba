#ifndef RUMOUR_MATCHER_HPP
#define RUMOUR_MATCHER_HPP

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "rumour/graph.hpp"
#include "rumour/pattern.hpp"
#include "rumour/pindex.hpp"
#include "rumour/types.hpp"

namespace rumour {

/// A relation variable of one pattern, addressed by edge index.
struct Trigger {
    std::uint32_t pattern_index;
    std::uint32_t edge_index;
};

/// Loaded pattern collection plus the lookup structures the matcher needs:
/// a trigger table mapping each second-order modality to the relation
/// variables it can instantiate, and a per-anchor search plan that orders
/// the remaining pattern edges breadth-first from the anchor.
class PatternSet {
public:
    PatternSet(std::vector<RumourPattern> patterns, const ModalityTable& modalities);

    std::span<const RumourPattern> patterns() const { return patterns_; }
    const RumourPattern& pattern(std::uint32_t idx) const { return patterns_.at(idx); }
    std::size_t max_pattern_size() const { return p_max_; }

    std::span<const Trigger> triggers_for(Modality m, Modality m_prime) const;

    /// Edge visit order for a search anchored at the given pattern edge.
    /// Every step has at least one endpoint bound when reached.
    struct PlanStep {
        std::uint32_t edge_index;
        bool forward;  // true: expand from bound source over out-edges
        bool check_only;  // both endpoints already bound
    };
    std::span<const PlanStep> plan(std::uint32_t pattern_index, std::uint32_t edge_index) const {
        return plans_.at(pattern_index).at(edge_index);
    }

private:
    std::vector<RumourPattern> patterns_;
    std::unordered_map<std::uint32_t, std::vector<Trigger>> triggers_;
    std::vector<std::vector<std::vector<PlanStep>>> plans_;
    std::size_t p_max_ = 0;
    std::size_t modality_count_ = 0;
};

/// Finds every match of the anchored pattern that maps the anchor edge onto
/// the element (u, u'). The search expands pattern edges in plan order,
/// enumerates candidates from adjacency lists filtered by modality, prunes
/// through the index, and breaks ties by ascending entity id. The frontier
/// never exceeds the pattern itself.
///
/// Match semantics: injective variable binding where every pattern edge maps
/// onto a graph edge (extra graph edges among bound entities are allowed).
std::vector<PatternMatch> bfs_match(const SocialGraph& graph, const PIndex& index,
                                    const PatternSet& ps, Trigger anchor,
                                    const StreamElement& s, std::uint64_t matched_at);

struct ProcessResult {
    ApplyResult applied;
    std::vector<PatternMatch> matches;
};

/// One step of the streaming matcher: apply the element to graph and index,
/// then collect the new matches it completes across all triggered relation
/// variables. Rejected elements (duplicate edge, modality conflict,
/// self-loop) produce no matches.
ProcessResult process_element(SocialGraph& graph, PIndex& index, const PatternSet& ps,
                              const StreamElement& s, std::uint64_t matched_at);

}  // namespace rumour

#endif  // RUMOUR_MATCHER_HPP
