#ifndef RUMOUR_FEATURES_HPP
#define RUMOUR_FEATURES_HPP

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "rumour/graph.hpp"
#include "rumour/pindex.hpp"
#include "rumour/types.hpp"

namespace rumour {

// Scored elements are entities and relations. Entities are keyed by id;
// a relation instance by its ordered endpoint pair; relation histories are
// pooled per second-order modality (a concrete relation occurs only once,
// so its own history would always be empty).
namespace element_keys {

constexpr std::uint64_t kEntityTag = 0x9ae16a3b2f90404fULL;
constexpr std::uint64_t kRelationTag = 0xc2b2ae3d27d4eb4fULL;
constexpr std::uint64_t kClassTag = 0x165667b19e3779f9ULL;

inline std::uint64_t entity(EntityId e) { return detail::hash_combine(kEntityTag, e.value); }

inline std::uint64_t relation(EntityId u, EntityId v) {
    return detail::hash_combine(kRelationTag, detail::hash_combine(u.value, v.value));
}

inline std::uint64_t relation_class(Modality m, Modality m_prime) {
    return detail::hash_combine(kClassTag,
                                (static_cast<std::uint64_t>(m.id) << 16) | m_prime.id);
}

inline std::uint64_t feature(std::uint64_t element_key, std::uint32_t feature_id) {
    return detail::hash_combine(element_key, feature_id);
}

}  // namespace element_keys

/// One feature observation: the history of (history_key, feature) is scored,
/// the resulting element score is stored under score_key. For entities the
/// two keys coincide; for relations the history is class-pooled while the
/// score belongs to the concrete relation instance.
struct FeatureObs {
    std::uint64_t history_key;
    std::uint64_t score_key;
    std::uint32_t feature_id;
    double value;
    bool real_valued;
};

/// Pluggable feature extraction. Implementations may keep their own
/// recency state; extraction runs once per accepted element, after the
/// element was applied to graph and index.
class FeatureProvider {
public:
    virtual ~FeatureProvider() = default;
    virtual void extract(const StreamElement& s, std::uint64_t seq, const SocialGraph& graph,
                         const PIndex& index, std::vector<FeatureObs>& out) = 0;
};

/// Benchmark features, three per entity plus one per relation class:
///   0: total in-degree of the entity
///   1: total out-degree of the entity
///   2: gap since the entity was last touched
///   3: gap since the relation class was last seen
/// All are non-negative integers.
class SyntheticFeatureProvider : public FeatureProvider {
public:
    void extract(const StreamElement& s, std::uint64_t seq, const SocialGraph& graph,
                 const PIndex& index, std::vector<FeatureObs>& out) override {
        extract_entity(s.u, seq, index, out);
        extract_entity(s.u_prime, seq, index, out);

        const std::uint64_t cls = element_keys::relation_class(s.m, s.m_prime);
        const std::uint64_t rel = element_keys::relation(s.u, s.u_prime);
        auto [it, fresh] = class_last_seen_.try_emplace(cls, seq);
        if (!fresh) {
            out.push_back(FeatureObs{cls, rel, 3, static_cast<double>(seq - it->second), false});
            it->second = seq;
        } else {
            // First sighting of the class still counts as an observation so
            // the relation gets a (cold) score entry.
            out.push_back(FeatureObs{cls, rel, 3, 0.0, false});
        }
        (void)graph;
    }

private:
    void extract_entity(EntityId v, std::uint64_t seq, const PIndex& index,
                        std::vector<FeatureObs>& out) {
        const std::uint64_t key = element_keys::entity(v);
        std::uint64_t in = 0, out_deg = 0;
        for (std::uint16_t m = 0; m < index.modality_count(); ++m) {
            in += index.degree(v, Modality{m}, Direction::in);
            out_deg += index.degree(v, Modality{m}, Direction::out);
        }
        out.push_back(FeatureObs{key, key, 0, static_cast<double>(in), false});
        out.push_back(FeatureObs{key, key, 1, static_cast<double>(out_deg), false});
        auto [it, fresh] = entity_last_touch_.try_emplace(v, seq);
        if (!fresh) {
            out.push_back(FeatureObs{key, key, 2, static_cast<double>(seq - it->second), false});
            it->second = seq;
        }
    }

    std::unordered_map<EntityId, std::uint64_t> entity_last_touch_;
    std::unordered_map<std::uint64_t, std::uint64_t> class_last_seen_;
};

}  // namespace rumour

#endif  // RUMOUR_FEATURES_HPP
