#ifndef RUMOUR_GRAPH_HPP
#define RUMOUR_GRAPH_HPP

#include <cstdint>
#include <span>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "rumour/types.hpp"

namespace rumour {

enum class ApplyError : std::uint8_t {
    duplicate_edge,
    modality_conflict,
    self_loop,
};

struct ApplySummary {
    bool u_new = false;
    bool u_prime_new = false;
    bool edge_added = false;
};

struct ApplyResult {
    ApplySummary summary;
    std::optional<ApplyError> error;
    bool ok() const { return !error.has_value(); }
};

struct Neighbor {
    EntityId id;
    Modality modality;
};

/// Evolving multi-modal social graph. Single writer (the matcher stage).
/// Vertices keep the modality they were first seen with; the edge set
/// has no duplicate (u, u') and no self-loops. There is no deletion.
class SocialGraph {
public:
    ApplyResult apply(const StreamElement& s) {
        ApplyResult res;
        if (s.u == s.u_prime) {
            res.error = ApplyError::self_loop;
            ++self_loops_rejected_;
            return res;
        }
        auto iu = vertices_.find(s.u);
        if (iu != vertices_.end() && iu->second != s.m) {
            res.error = ApplyError::modality_conflict;
            ++conflicts_rejected_;
            return res;
        }
        auto iv = vertices_.find(s.u_prime);
        if (iv != vertices_.end() && iv->second != s.m_prime) {
            res.error = ApplyError::modality_conflict;
            ++conflicts_rejected_;
            return res;
        }
        if (edges_.contains(edge_key(s.u, s.u_prime))) {
            res.error = ApplyError::duplicate_edge;
            ++duplicates_rejected_;
            return res;
        }
        if (iu == vertices_.end()) {
            vertices_.emplace(s.u, s.m);
            res.summary.u_new = true;
        }
        if (iv == vertices_.end()) {
            vertices_.emplace(s.u_prime, s.m_prime);
            res.summary.u_prime_new = true;
        }
        edges_.insert(edge_key(s.u, s.u_prime));
        adjacency_[s.u].out.push_back(Neighbor{s.u_prime, s.m_prime});
        adjacency_[s.u_prime].in.push_back(Neighbor{s.u, s.m});
        res.summary.edge_added = true;
        ++edge_count_;
        t_now_ = s.t;
        return res;
    }

    bool has_vertex(EntityId v) const { return vertices_.contains(v); }

    std::optional<Modality> modality_of(EntityId v) const {
        auto it = vertices_.find(v);
        if (it == vertices_.end()) return std::nullopt;
        return it->second;
    }

    bool has_edge(EntityId u, EntityId v) const { return edges_.contains(edge_key(u, v)); }

    std::span<const Neighbor> out_neighbors(EntityId v) const {
        auto it = adjacency_.find(v);
        if (it == adjacency_.end()) return {};
        return it->second.out;
    }

    std::span<const Neighbor> in_neighbors(EntityId v) const {
        auto it = adjacency_.find(v);
        if (it == adjacency_.end()) return {};
        return it->second.in;
    }

    std::size_t vertex_count() const { return vertices_.size(); }
    std::size_t edge_count() const { return edge_count_; }
    std::uint64_t t_now() const { return t_now_; }

    std::uint64_t duplicates_rejected() const { return duplicates_rejected_; }
    std::uint64_t conflicts_rejected() const { return conflicts_rejected_; }
    std::uint64_t self_loops_rejected() const { return self_loops_rejected_; }

    const std::unordered_map<EntityId, Modality>& vertices() const { return vertices_; }

    void reserve(std::size_t vertices, std::size_t edges) {
        vertices_.reserve(vertices);
        adjacency_.reserve(vertices);
        edges_.reserve(edges);
    }

private:
    struct Adjacency {
        std::vector<Neighbor> out;
        std::vector<Neighbor> in;
    };

    struct EdgeKey {
        std::uint64_t from;
        std::uint64_t to;
        bool operator==(const EdgeKey&) const = default;
    };
    struct EdgeKeyHash {
        std::size_t operator()(const EdgeKey& k) const noexcept {
            return static_cast<std::size_t>(detail::hash_combine(k.from, k.to));
        }
    };

    static EdgeKey edge_key(EntityId u, EntityId v) { return EdgeKey{u.value, v.value}; }

    std::unordered_map<EntityId, Modality> vertices_;
    std::unordered_map<EntityId, Adjacency> adjacency_;
    std::unordered_set<EdgeKey, EdgeKeyHash> edges_;
    std::size_t edge_count_ = 0;
    std::uint64_t t_now_ = 0;
    std::uint64_t duplicates_rejected_ = 0;
    std::uint64_t conflicts_rejected_ = 0;
    std::uint64_t self_loops_rejected_ = 0;
};

/// Count-based window over the stream. Positions are 1-based arrival ranks.
class WindowState {
public:
    explicit WindowState(std::size_t capacity) : capacity_(capacity) {}

    /// Rank the element would take if appended now: the number of window
    /// elements with timestamp <= s.t, counting s itself.
    std::size_t position_if_appended(const StreamElement& s) const {
        std::size_t n = 1;
        for (const auto& e : elements_)
            if (e.t <= s.t) ++n;
        return n;
    }

    /// Appends and returns the 1-based position.
    std::size_t append(const StreamElement& s) {
        std::size_t pos = position_if_appended(s);
        elements_.push_back(s);
        return pos;
    }

    bool full() const { return elements_.size() >= capacity_; }
    void reset(std::size_t capacity) {
        elements_.clear();
        capacity_ = capacity;
    }

    const std::vector<StreamElement>& elements() const { return elements_; }
    std::size_t capacity() const { return capacity_; }
    std::size_t size() const { return elements_.size(); }

private:
    std::vector<StreamElement> elements_;
    std::size_t capacity_;
};

inline std::size_t window_position(const WindowState& w, const StreamElement& s) {
    return w.position_if_appended(s);
}

}  // namespace rumour

#endif  // RUMOUR_GRAPH_HPP
