#ifndef RUMOUR_PINDEX_HPP
#define RUMOUR_PINDEX_HPP

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "rumour/pattern.hpp"
#include "rumour/types.hpp"

namespace rumour {

enum class Direction : std::uint8_t { in, out };

/// Per-entity, per-modality in/out degree counters. An absent entry is
/// zero and counters never decrease (there are no deletions).
///
/// For an element (u, u', m, m'), u gains an out-neighbour of modality m'
/// and u' gains an in-neighbour of modality m.
class PIndex {
public:
    explicit PIndex(std::size_t modality_count) : modality_count_(modality_count) {}

    void update(const StreamElement& s) {
        cell(s.u).out[s.m_prime.id] += 1;
        cell(s.u_prime).in[s.m.id] += 1;
    }

    std::uint32_t degree(EntityId v, Modality m, Direction dir) const {
        auto it = cells_.find(v);
        if (it == cells_.end()) return 0;
        const auto& counts = dir == Direction::out ? it->second.out : it->second.in;
        return counts[m.id];
    }

    /// Necessary condition for variable var of pattern p to map to v: for
    /// every modality, v's indexed degrees cover the degrees the variable
    /// requires. False soundly rules the binding out; true only says the
    /// search is worth running.
    bool satisfies_necessary(EntityId v, const RumourPattern& p, VarId var) const {
        auto it = cells_.find(v);
        const auto req_out = p.required_out(var);
        const auto req_in = p.required_in(var);
        if (it == cells_.end()) {
            for (std::size_t m = 0; m < modality_count_; ++m)
                if (req_out[m] > 0 || req_in[m] > 0) return false;
            return true;
        }
        for (std::size_t m = 0; m < modality_count_; ++m) {
            if (it->second.out[m] < req_out[m]) return false;
            if (it->second.in[m] < req_in[m]) return false;
        }
        return true;
    }

    std::size_t modality_count() const { return modality_count_; }

    void reserve(std::size_t entities) { cells_.reserve(entities); }

private:
    struct Cell {
        std::vector<std::uint32_t> in;
        std::vector<std::uint32_t> out;
    };

    Cell& cell(EntityId v) {
        auto it = cells_.find(v);
        if (it == cells_.end()) {
            it = cells_
                     .emplace(v, Cell{std::vector<std::uint32_t>(modality_count_, 0),
                                      std::vector<std::uint32_t>(modality_count_, 0)})
                     .first;
        }
        return it->second;
    }

    std::unordered_map<EntityId, Cell> cells_;
    std::size_t modality_count_;
};

}  // namespace rumour

#endif  // RUMOUR_PINDEX_HPP
