#include "rumour/generator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <unordered_map>
#include <unordered_set>

namespace rumour {

RateProfile rate_profile_from_string(const std::string& name) {
    if (name == "constant") return RateProfile::constant;
    if (name == "bursty") return RateProfile::bursty;
    if (name == "skewed") return RateProfile::skewed;
    throw std::invalid_argument("unknown rate profile: " + name);
}

CoeffDist coeff_dist_from_string(const std::string& name) {
    if (name == "normal") return CoeffDist::normal;
    if (name == "skewed") return CoeffDist::skewed;
    throw std::invalid_argument("unknown coefficient distribution: " + name);
}

namespace {

struct EdgeKey {
    std::uint64_t a, b;
    bool operator==(const EdgeKey&) const = default;
};
struct EdgeKeyHash {
    std::size_t operator()(const EdgeKey& k) const noexcept {
        return static_cast<std::size_t>(detail::hash_combine(k.a, k.b));
    }
};

class GapSource {
public:
    GapSource(RateProfile profile, double burst_factor, std::mt19937_64& rng)
        : profile_(profile), burst_factor_(std::max(1.5, burst_factor)), rng_(rng) {}

    std::uint64_t next() {
        switch (profile_) {
            case RateProfile::constant:
                return 1;
            case RateProfile::bursty: {
                if (phase_left_ == 0) {
                    in_burst_ = !in_burst_;
                    std::uniform_int_distribution<std::size_t> len(60, 140);
                    phase_left_ = len(rng_);
                }
                --phase_left_;
                if (in_burst_) {
                    // Mean gap ~ 1/burst_factor: mostly simultaneous arrivals.
                    std::bernoulli_distribution one(1.0 / burst_factor_);
                    return one(rng_) ? 1 : 0;
                }
                std::uniform_int_distribution<std::uint64_t> gap(
                    1, static_cast<std::uint64_t>(2 * burst_factor_ - 1));
                return gap(rng_);
            }
            case RateProfile::skewed: {
                // Heavy-tailed gaps with mean near one.
                std::exponential_distribution<double> exp_gap(1.25);
                return static_cast<std::uint64_t>(std::floor(exp_gap(rng_) * 1.6));
            }
        }
        return 1;
    }

private:
    RateProfile profile_;
    double burst_factor_;
    std::mt19937_64& rng_;
    bool in_burst_ = false;
    std::size_t phase_left_ = 0;
};

}  // namespace

std::vector<StreamElement> generate_stream(const SyntheticStreamSpec& spec,
                                           const PatternSet& patterns,
                                           const ModalityTable& modalities,
                                           EntityInterner& interner) {
    std::mt19937_64 rng(spec.seed);
    GapSource gaps(spec.rate_profile, spec.burst_factor, rng);

    const std::size_t mod_count = modalities.size();
    std::vector<std::vector<EntityId>> pool(mod_count);
    std::unordered_map<EntityId, std::size_t> degree;
    std::uint64_t next_entity = 0;

    auto fresh_entity = [&](Modality m) {
        EntityId e = interner.intern("n" + std::to_string(next_entity++));
        pool[m.id].push_back(e);
        return e;
    };
    for (std::size_t i = 0; i < spec.entity_count; ++i)
        fresh_entity(Modality{static_cast<std::uint16_t>(i % mod_count)});

    std::unordered_set<EdgeKey, EdgeKeyHash> used_edges;
    auto claim_edge = [&](EntityId u, EntityId v) {
        if (u == v) return false;
        return used_edges.insert(EdgeKey{u.value, v.value}).second;
    };

    // Background second-order modality weights.
    std::vector<std::uint32_t> pair_m(mod_count * mod_count), pair_mp(mod_count * mod_count);
    std::vector<double> pair_weight(mod_count * mod_count, 1.0);
    for (std::size_t a = 0; a < mod_count; ++a)
        for (std::size_t b = 0; b < mod_count; ++b) {
            pair_m[a * mod_count + b] = static_cast<std::uint32_t>(a);
            pair_mp[a * mod_count + b] = static_cast<std::uint32_t>(b);
        }
    if (spec.coeff_dist == CoeffDist::skewed) {
        std::vector<std::size_t> order(pair_weight.size());
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t rank = 0; rank < order.size(); ++rank)
            pair_weight[order[rank]] = 1.0 / static_cast<double>(rank + 1);
    }
    std::discrete_distribution<std::size_t> pair_dist(pair_weight.begin(), pair_weight.end());

    // Pattern mix for planted instances.
    auto normalize_mix = [&](std::vector<double> mix) {
        if (mix.empty()) mix.assign(patterns.patterns().size(), 1.0);
        if (mix.size() != patterns.patterns().size())
            throw ConfigError("rumour mix size must equal the pattern count");
        return mix;
    };
    const auto mix_pre = normalize_mix(spec.rumour_mix);
    const auto mix_post = normalize_mix(
        spec.rumour_mix_post.empty() ? spec.rumour_mix : spec.rumour_mix_post);

    double mean_edges = 0;
    for (const auto& p : patterns.patterns()) mean_edges += static_cast<double>(p.edges().size());
    mean_edges /= static_cast<double>(patterns.patterns().size());
    const double p_start = std::min(0.9, spec.rumour_rate / std::max(1.0, mean_edges));

    std::vector<StreamElement> out;
    out.reserve(spec.length);
    std::uint64_t t = 0;
    std::bernoulli_distribution start_instance(p_start);

    auto pick_background_endpoint = [&](Modality m) {
        auto& candidates = pool[m.id];
        for (int attempt = 0; attempt < 8; ++attempt) {
            std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
            EntityId e = candidates[pick(rng)];
            if (spec.degree_cap == 0 || degree[e] < spec.degree_cap) return e;
        }
        return fresh_entity(m);
    };

    while (out.size() < spec.length) {
        t += gaps.next();
        const bool post_shift =
            spec.shift_at >= 0 &&
            static_cast<double>(out.size()) >=
                spec.shift_at * static_cast<double>(spec.length);
        const auto& mix = post_shift ? mix_post : mix_pre;

        if (start_instance(rng)) {
            // Plant one full pattern instance on fresh entities; all of its
            // elements carry the ground-truth label.
            std::discrete_distribution<std::size_t> pick_pattern(mix.begin(), mix.end());
            const auto& p = patterns.patterns()[pick_pattern(rng)];
            std::vector<EntityId> cast;
            cast.reserve(p.variable_count());
            for (VarId v = 0; v < p.variable_count(); ++v)
                cast.push_back(fresh_entity(p.modality_of(v)));
            for (const auto& e : p.edges()) {
                if (out.size() >= spec.length) break;
                if (!claim_edge(cast[e.from], cast[e.to])) continue;
                StreamElement el;
                el.u = cast[e.from];
                el.u_prime = cast[e.to];
                el.m = p.modality_of(e.from);
                el.m_prime = p.modality_of(e.to);
                el.t = t;
                el.rumour_label = true;
                degree[el.u] += 1;
                degree[el.u_prime] += 1;
                out.push_back(el);
                t += gaps.next() > 0 ? 1 : 0;  // instances arrive tightly packed
            }
            continue;
        }

        const std::size_t pair = pair_dist(rng);
        const Modality m{static_cast<std::uint16_t>(pair_m[pair])};
        const Modality mp{static_cast<std::uint16_t>(pair_mp[pair])};
        StreamElement el;
        bool placed = false;
        for (int attempt = 0; attempt < 16 && !placed; ++attempt) {
            el.u = pick_background_endpoint(m);
            el.u_prime = pick_background_endpoint(mp);
            placed = claim_edge(el.u, el.u_prime);
        }
        if (!placed) {
            el.u = fresh_entity(m);
            el.u_prime = fresh_entity(mp);
            claim_edge(el.u, el.u_prime);
        }
        el.m = m;
        el.m_prime = mp;
        el.t = t;
        el.rumour_label = false;
        degree[el.u] += 1;
        degree[el.u_prime] += 1;
        out.push_back(el);
    }
    return out;
}

}  // namespace rumour
