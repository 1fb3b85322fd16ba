#ifndef RUMOUR_PATTERN_HPP
#define RUMOUR_PATTERN_HPP

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rumour/types.hpp"

namespace rumour {

using VarId = std::uint32_t;

struct PatternEdge {
    VarId from;
    VarId to;
    bool operator==(const PatternEdge&) const = default;
};

class PatternError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Annotated query graph. Entity variables carry modalities; edges are
/// relation variables. The graph must be weakly connected, have at least
/// two variables, and no duplicate or self-loop edge.
///
/// Construction precomputes, per variable, the in/out degree it requires
/// towards each modality. These vectors drive index-based pruning during
/// the guided search.
class RumourPattern {
public:
    RumourPattern(std::string name, std::vector<Modality> var_modalities,
                  std::vector<PatternEdge> edges, std::size_t modality_count)
        : name_(std::move(name)),
          var_modalities_(std::move(var_modalities)),
          edges_(std::move(edges)),
          modality_count_(modality_count) {
        validate();
        const std::size_t n = var_modalities_.size();
        required_out_.assign(n, std::vector<std::uint32_t>(modality_count_, 0));
        required_in_.assign(n, std::vector<std::uint32_t>(modality_count_, 0));
        for (const auto& e : edges_) {
            required_out_[e.from][var_modalities_[e.to].id] += 1;
            required_in_[e.to][var_modalities_[e.from].id] += 1;
        }
    }

    const std::string& name() const { return name_; }
    std::size_t variable_count() const { return var_modalities_.size(); }
    Modality modality_of(VarId v) const { return var_modalities_.at(v); }
    std::span<const PatternEdge> edges() const { return edges_; }
    std::size_t modality_count() const { return modality_count_; }

    std::span<const std::uint32_t> required_out(VarId v) const { return required_out_.at(v); }
    std::span<const std::uint32_t> required_in(VarId v) const { return required_in_.at(v); }

private:
    void validate() const {
        const std::size_t n = var_modalities_.size();
        if (n < 2) throw PatternError("pattern '" + name_ + "': needs at least two variables");
        if (edges_.empty()) throw PatternError("pattern '" + name_ + "': needs at least one edge");
        for (const auto& e : edges_) {
            if (e.from >= n || e.to >= n)
                throw PatternError("pattern '" + name_ + "': edge references unknown variable");
            if (e.from == e.to)
                throw PatternError("pattern '" + name_ + "': self-loop edge");
        }
        for (std::size_t i = 0; i < edges_.size(); ++i)
            for (std::size_t j = i + 1; j < edges_.size(); ++j)
                if (edges_[i] == edges_[j])
                    throw PatternError("pattern '" + name_ + "': duplicate edge");
        for (auto m : var_modalities_)
            if (m.id >= modality_count_)
                throw PatternError("pattern '" + name_ + "': variable modality out of range");
        // Weak connectivity over the undirected skeleton.
        std::vector<bool> seen(n, false);
        std::vector<VarId> stack{0};
        seen[0] = true;
        std::size_t reached = 1;
        while (!stack.empty()) {
            VarId v = stack.back();
            stack.pop_back();
            for (const auto& e : edges_) {
                VarId other;
                if (e.from == v) other = e.to;
                else if (e.to == v) other = e.from;
                else continue;
                if (!seen[other]) {
                    seen[other] = true;
                    ++reached;
                    stack.push_back(other);
                }
            }
        }
        if (reached != n)
            throw PatternError("pattern '" + name_ + "': not weakly connected");
    }

    std::string name_;
    std::vector<Modality> var_modalities_;
    std::vector<PatternEdge> edges_;
    std::size_t modality_count_;
    std::vector<std::vector<std::uint32_t>> required_out_;
    std::vector<std::vector<std::uint32_t>> required_in_;
};

/// Isomorphism witness: assignment[v] is the entity bound to variable v.
struct PatternMatch {
    std::uint32_t pattern_index = 0;
    std::vector<EntityId> assignment;
    std::uint64_t matched_at = 0;

    bool operator==(const PatternMatch& o) const {
        return pattern_index == o.pattern_index && assignment == o.assignment;
    }
};

struct PatternMatchHash {
    std::size_t operator()(const PatternMatch& m) const noexcept {
        std::uint64_t h = detail::mix64(m.pattern_index);
        for (auto e : m.assignment) h = detail::hash_combine(h, e.value);
        return static_cast<std::size_t>(h);
    }
};

}  // namespace rumour

#endif  // RUMOUR_PATTERN_HPP
