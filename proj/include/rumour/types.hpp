#ifndef RUMOUR_TYPES_HPP
#define RUMOUR_TYPES_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace rumour {

/// Type label of an entity (user, tweet, hashtag, ...). Ids are dense
/// handles 0..count-1 issued by a ModalityTable.
struct Modality {
    std::uint16_t id = 0;
    auto operator<=>(const Modality&) const = default;
};

/// Handle into the entity universe. Stable for the process lifetime,
/// never reused.
struct EntityId {
    std::uint64_t value = 0;
    auto operator<=>(const EntityId&) const = default;
};

/// One timestamped relation (u, u', m, m', t). The unit of ingestion
/// and shedding. The label carries ground truth for benchmark streams
/// and is absent on real feeds.
struct StreamElement {
    EntityId u;
    EntityId u_prime;
    Modality m;
    Modality m_prime;
    std::uint64_t t = 0;
    std::optional<bool> rumour_label;
};

/// Registry of modality names with dense ids. Names are unique;
/// intern() is idempotent.
class ModalityTable {
public:
    Modality intern(const std::string& name) {
        auto it = index_.find(name);
        if (it != index_.end()) return Modality{it->second};
        if (names_.size() >= 0xffff) throw std::length_error("too many modalities");
        auto id = static_cast<std::uint16_t>(names_.size());
        names_.push_back(name);
        index_.emplace(name, id);
        return Modality{id};
    }

    std::optional<Modality> find(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) return std::nullopt;
        return Modality{it->second};
    }

    const std::string& name(Modality m) const { return names_.at(m.id); }
    std::size_t size() const { return names_.size(); }

    /// Number of second-order modalities (ordered pairs).
    std::size_t pair_count() const { return names_.size() * names_.size(); }

    /// Dense row index of the ordered pair (m, m').
    std::uint32_t pair_index(Modality m, Modality m_prime) const {
        return static_cast<std::uint32_t>(m.id) * static_cast<std::uint32_t>(names_.size()) +
               m_prime.id;
    }

private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, std::uint16_t> index_;
};

namespace detail {

inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
    return mix64(a ^ (mix64(b) + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2)));
}

}  // namespace detail

}  // namespace rumour

template <>
struct std::hash<rumour::EntityId> {
    std::size_t operator()(rumour::EntityId e) const noexcept {
        return static_cast<std::size_t>(rumour::detail::mix64(e.value));
    }
};

template <>
struct std::hash<rumour::Modality> {
    std::size_t operator()(rumour::Modality m) const noexcept {
        return static_cast<std::size_t>(m.id);
    }
};

#endif  // RUMOUR_TYPES_HPP
