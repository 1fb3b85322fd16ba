#include "rumour/anomaly.hpp"

#include <algorithm>
#include <cmath>

namespace rumour {

std::optional<double> feature_chi_square(double f_hat, double s_hat, std::uint64_t t) {
    if (t < 2 || s_hat <= 0) return std::nullopt;
    const double td = static_cast<double>(t);
    const double d = f_hat - s_hat / td;
    return d * d * td * td / (s_hat * (td - 1.0));
}

double chi_square_pvalue(double x2) {
    if (x2 <= 0) return 1.0;
    // chi2(1) survival: P(Z^2 > x) = erfc(sqrt(x/2))
    return std::erfc(std::sqrt(x2 / 2.0));
}

FeatureSketchPair::FeatureSketchPair(const AnomalyParams& params) : exact_(params.exact) {
    if (!exact_) {
        sk_cumulative_.emplace(params.eps, params.delta, params.seed);
        sk_current_.emplace(params.eps, params.delta, params.seed + 1);
    }
}

void FeatureSketchPair::observe(std::uint64_t key, std::uint64_t value, std::uint64_t epoch) {
    if (exact_) {
        ex_cumulative_.update(key, value);
        ex_current_.update(key, value, epoch);
    } else {
        sk_cumulative_->update(key, value);
        sk_current_->update(key, value, epoch);
    }
}

std::uint64_t FeatureSketchPair::cumulative(std::uint64_t key) const {
    return exact_ ? ex_cumulative_.estimate(key) : sk_cumulative_->estimate(key);
}

std::uint64_t FeatureSketchPair::current(std::uint64_t key, std::uint64_t epoch) const {
    return exact_ ? ex_current_.estimate(key, epoch) : sk_current_->estimate(key, epoch);
}

ElementScoreState::ElementScoreState(const AnomalyParams& params) : exact_(params.exact) {
    if (!exact_) {
        // A rank read sums up to eleven dyadic counters, and bucket counts
        // are small relative to the point-query sketches, so these run at a
        // much finer grid than the configured eps.
        const double rank_eps = std::max(params.eps / 50.0, 1e-6);
        levels_.reserve(kLevels);
        for (std::uint32_t l = 0; l < kLevels; ++l)
            levels_.emplace_back(rank_eps, params.delta, params.seed + 100 + l);
    }
}

std::uint32_t ElementScoreState::bucket_of(double p) {
    if (p <= 0) return 0;
    if (p >= 1) return kBuckets - 1;
    auto b = static_cast<std::uint32_t>(p * kBuckets);
    return std::min(b, kBuckets - 1);
}

double ElementScoreState::count_leq(std::uint64_t key, double pmin) const {
    if (exact_) {
        auto it = history_.find(key);
        if (it == history_.end()) return 0;
        const auto& h = it->second;
        return static_cast<double>(std::upper_bound(h.begin(), h.end(), pmin) - h.begin());
    }
    // Dyadic prefix count over [0, bucket].
    const std::uint32_t n = bucket_of(pmin) + 1;
    std::uint64_t total = 0;
    std::uint32_t start = 0;
    for (int l = kLevels - 1; l >= 0; --l) {
        if (n & (1u << l)) {
            const std::uint64_t node = start >> l;
            total += levels_[static_cast<std::size_t>(l)].estimate(
                detail::hash_combine(key, node));
            start += 1u << l;
        }
    }
    return static_cast<double>(total);
}

void ElementScoreState::insert(std::uint64_t key, double pmin) {
    if (exact_) {
        auto& h = history_[key];
        h.insert(std::upper_bound(h.begin(), h.end(), pmin), pmin);
        return;
    }
    const std::uint32_t b = bucket_of(pmin);
    for (std::uint32_t l = 0; l < kLevels; ++l)
        levels_[l].update(detail::hash_combine(key, b >> l), 1);
}

double ElementScoreState::score(std::uint64_t key, double pmin_now) {
    auto& n = observations_[key];
    double result = 1.0;
    if (n > 0) result = std::min(1.0, count_leq(key, pmin_now) / static_cast<double>(n));
    insert(key, pmin_now);
    ++n;
    return result;
}

std::uint32_t ElementScoreState::observations(std::uint64_t key) const {
    auto it = observations_.find(key);
    return it == observations_.end() ? 0 : it->second;
}

SubgraphScore subgraph_score(const RumourPattern& pattern, const PatternMatch& match,
                             const std::function<double(std::uint64_t)>& score_of,
                             const SignificanceConfig& cfg) {
    const auto edges = pattern.edges();
    const std::size_t nv = pattern.variable_count();
    const std::size_t ne = edges.size();

    std::vector<bool> var_sig(nv), edge_sig(ne);
    for (std::size_t v = 0; v < nv; ++v)
        var_sig[v] = score_of(element_keys::entity(match.assignment[v])) < cfg.alpha_sig;
    for (std::size_t e = 0; e < ne; ++e) {
        const auto key = element_keys::relation(match.assignment[edges[e].from],
                                                match.assignment[edges[e].to]);
        edge_sig[e] = score_of(key) < cfg.alpha_sig;
    }

    std::size_t covered = 0;
    for (std::size_t v = 0; v < nv; ++v) {
        if (var_sig[v]) {
            ++covered;
            continue;
        }
        // Insignificant entity: admitted next to two significant relations.
        std::size_t sig_neighbors = 0;
        for (std::size_t e = 0; e < ne; ++e)
            if ((edges[e].from == v || edges[e].to == v) && edge_sig[e]) ++sig_neighbors;
        if (sig_neighbors >= 2) ++covered;
    }
    for (std::size_t e = 0; e < ne; ++e) {
        if (edge_sig[e]) {
            ++covered;
            continue;
        }
        std::size_t sig_neighbors = 0;
        if (var_sig[edges[e].from]) ++sig_neighbors;
        if (var_sig[edges[e].to]) ++sig_neighbors;
        if (sig_neighbors >= 2) ++covered;
    }

    SubgraphScore out;
    out.score = static_cast<double>(covered) / static_cast<double>(nv + ne);
    out.is_rumour = out.score >= cfg.confidence_threshold;
    return out;
}

AnomalyEngine::AnomalyEngine(const AnomalyParams& params, const SignificanceConfig& sig,
                             std::unique_ptr<FeatureProvider> provider)
    : params_(params), sig_(sig), provider_(std::move(provider)), counts_(params),
      ranks_(params) {
    sig_.validate();
}

double AnomalyEngine::score_group(std::uint64_t history_key, std::uint64_t score_key,
                                  const std::vector<FeatureObs>& obs, std::size_t begin,
                                  std::size_t end, std::uint64_t seq) {
    const std::uint32_t t = ranks_.observations(history_key) + 1;
    double p_min = 1.0;
    for (std::size_t i = begin; i < end; ++i) {
        const auto& o = obs[i];
        double raw = o.real_valued ? o.value * params_.value_resolution : o.value;
        const auto scaled = static_cast<std::uint64_t>(std::llround(std::max(0.0, raw)));
        const auto key = element_keys::feature(history_key, o.feature_id);
        counts_.observe(key, scaled, seq);
        double p = 1.0;
        if (t >= 2) {
            const double s_hat = static_cast<double>(counts_.cumulative(key));
            const double f_hat = static_cast<double>(counts_.current(key, seq));
            if (auto x2 = feature_chi_square(f_hat, s_hat, t)) p = chi_square_pvalue(*x2);
        }
        p_min = std::min(p_min, p);
    }
    const double px = ranks_.score(history_key, p_min);
    score_table_[score_key] = px;
    return px;
}

ElementScores AnomalyEngine::observe(const StreamElement& s, std::uint64_t seq,
                                     const SocialGraph& graph, const PIndex& index) {
    scratch_.clear();
    provider_->extract(s, seq, graph, index, scratch_);

    ElementScores out;
    const std::uint64_t key_u = element_keys::entity(s.u);
    const std::uint64_t key_v = element_keys::entity(s.u_prime);
    const std::uint64_t key_rel = element_keys::relation(s.u, s.u_prime);

    // Observations arrive grouped by history key; score each contiguous group.
    std::size_t i = 0;
    while (i < scratch_.size()) {
        std::size_t j = i;
        while (j < scratch_.size() && scratch_[j].history_key == scratch_[i].history_key) ++j;
        const double px =
            score_group(scratch_[i].history_key, scratch_[i].score_key, scratch_, i, j, seq);
        const std::uint64_t sk = scratch_[i].score_key;
        if (sk == key_u) out.u = px;
        if (sk == key_v) out.u_prime = px;
        if (sk == key_rel) out.relation = px;
        i = j;
    }
    return out;
}

double AnomalyEngine::score_of(std::uint64_t element_key) const {
    auto it = score_table_.find(element_key);
    return it == score_table_.end() ? 1.0 : it->second;
}

SubgraphScore AnomalyEngine::judge(const RumourPattern& pattern,
                                   const PatternMatch& match) const {
    return subgraph_score(
        pattern, match, [this](std::uint64_t k) { return score_of(k); }, sig_);
}

}  // namespace rumour
