#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace rumour::oracle {

bool MiniGraph::apply(const StreamElement& s) {
    if (s.u == s.u_prime) return false;
    auto iu = vertices_.find(s.u);
    if (iu != vertices_.end() && iu->second != s.m) return false;
    auto iv = vertices_.find(s.u_prime);
    if (iv != vertices_.end() && iv->second != s.m_prime) return false;
    if (!edges_.insert(key(s.u, s.u_prime)).second) return false;
    if (iu == vertices_.end()) {
        vertices_.emplace(s.u, s.m);
        by_modality_[s.m.id].push_back(s.u);
    }
    if (iv == vertices_.end()) {
        vertices_.emplace(s.u_prime, s.m_prime);
        by_modality_[s.m_prime.id].push_back(s.u_prime);
    }
    out_[s.u].push_back(s.u_prime);
    in_[s.u_prime].push_back(s.u);
    return true;
}

namespace {
const std::vector<EntityId> kEmpty;
}

const std::vector<EntityId>& MiniGraph::of_modality(Modality m) const {
    auto it = by_modality_.find(m.id);
    return it == by_modality_.end() ? kEmpty : it->second;
}
const std::vector<EntityId>& MiniGraph::out_of(EntityId v) const {
    auto it = out_.find(v);
    return it == out_.end() ? kEmpty : it->second;
}
const std::vector<EntityId>& MiniGraph::in_of(EntityId v) const {
    auto it = in_.find(v);
    return it == in_.end() ? kEmpty : it->second;
}

namespace {

// Adjacency-guided order: after the seeds, every variable neighbours an
// earlier one (patterns are connected, so this always completes).
std::vector<VarId> connectivity_order(const RumourPattern& p, std::vector<VarId> seeds) {
    std::vector<bool> placed(p.variable_count(), false);
    for (VarId v : seeds) placed[v] = true;
    std::vector<VarId> order = std::move(seeds);
    while (order.size() < p.variable_count()) {
        for (VarId v = 0; v < p.variable_count(); ++v) {
            if (placed[v]) continue;
            bool adjacent = false;
            for (const auto& e : p.edges())
                if ((e.from == v && placed[e.to]) || (e.to == v && placed[e.from]))
                    adjacent = true;
            if (adjacent) {
                order.push_back(v);
                placed[v] = true;
            }
        }
    }
    return order;
}

struct EnumState {
    const MiniGraph& graph;
    const RumourPattern& pattern;
    const std::vector<VarId>& order;
    std::vector<EntityId> assignment;
    std::vector<bool> bound;
    std::set<std::vector<EntityId>>* out;
};

bool complete_check(const EnumState& st) {
    for (const auto& e : st.pattern.edges())
        if (!st.graph.has_edge(st.assignment[e.from], st.assignment[e.to])) return false;
    return true;
}

void enumerate_rec(EnumState& st, std::size_t depth) {
    if (depth == st.order.size()) {
        if (complete_check(st)) st.out->insert(st.assignment);
        return;
    }
    const VarId var = st.order[depth];
    const Modality want = st.pattern.modality_of(var);

    // Candidate pool: neighbours of any bound adjacent variable, or the whole
    // modality class for the first variable.
    std::vector<EntityId> pool;
    bool pooled = false;
    for (const auto& e : st.pattern.edges()) {
        if (e.to == var && st.bound[e.from]) {
            const auto& c = st.graph.out_of(st.assignment[e.from]);
            pool.assign(c.begin(), c.end());
            pooled = true;
            break;
        }
        if (e.from == var && st.bound[e.to]) {
            const auto& c = st.graph.in_of(st.assignment[e.to]);
            pool.assign(c.begin(), c.end());
            pooled = true;
            break;
        }
    }
    if (!pooled) {
        const auto& c = st.graph.of_modality(want);
        pool.assign(c.begin(), c.end());
    }

    for (EntityId cand : pool) {
        if (st.graph.modality_of(cand) != want) continue;
        bool used = false;
        for (VarId v = 0; v < st.pattern.variable_count(); ++v)
            if (st.bound[v] && st.assignment[v] == cand) used = true;
        if (used) continue;
        st.assignment[var] = cand;
        st.bound[var] = true;
        enumerate_rec(st, depth + 1);
        st.bound[var] = false;
    }
}

}  // namespace

std::set<std::vector<EntityId>> enumerate_matches(const MiniGraph& graph,
                                                  const RumourPattern& pattern) {
    std::set<std::vector<EntityId>> out;
    auto order = connectivity_order(pattern, {0});
    EnumState st{graph, pattern, order, std::vector<EntityId>(pattern.variable_count()),
                 std::vector<bool>(pattern.variable_count(), false), &out};
    enumerate_rec(st, 0);
    return out;
}

std::set<std::vector<EntityId>> enumerate_matches_anchored(const MiniGraph& graph,
                                                           const RumourPattern& pattern,
                                                           std::uint32_t edge_index,
                                                           EntityId u, EntityId u_prime) {
    std::set<std::vector<EntityId>> out;
    const auto& anchor = pattern.edges()[edge_index];
    if (graph.modality_of(u) != pattern.modality_of(anchor.from)) return out;
    if (graph.modality_of(u_prime) != pattern.modality_of(anchor.to)) return out;
    if (u == u_prime) return out;

    auto order = connectivity_order(pattern, {anchor.from, anchor.to});
    EnumState st{graph, pattern,
                 order,  std::vector<EntityId>(pattern.variable_count()),
                 std::vector<bool>(pattern.variable_count(), false), &out};
    st.assignment[anchor.from] = u;
    st.assignment[anchor.to] = u_prime;
    st.bound[anchor.from] = st.bound[anchor.to] = true;
    enumerate_rec(st, 2);
    return out;
}

std::array<double, 101> cco_reference(const CoefficientMatrix& cm) {
    std::array<double, 101> omega{};
    const auto coeffs = cm.coeffs();
    const double share = cm.rows() == 0 ? 0.0 : 1.0 / static_cast<double>(cm.rows());
    for (int pi = 0; pi <= 100; ++pi) {
        double total = 0;
        for (std::uint8_t c : coeffs)
            if (c <= pi) total += share;
        omega[static_cast<std::size_t>(pi)] = total;
    }
    return omega;
}

std::optional<double> chi_square_two_term(double f_hat, double s_hat, std::uint64_t t) {
    if (t < 2 || s_hat <= 0) return std::nullopt;
    const double td = static_cast<double>(t);
    const double exp_now = s_hat / td;
    const double exp_past = s_hat * (td - 1.0) / td;
    const double obs_now = f_hat;
    const double obs_past = s_hat - f_hat;
    return (obs_now - exp_now) * (obs_now - exp_now) / exp_now +
           (obs_past - exp_past) * (obs_past - exp_past) / exp_past;
}

double chi1_survival_quadrature(double x2) {
    if (x2 <= 0) return 1.0;
    // CDF(x) = 2/sqrt(2*pi) * integral_0^sqrt(x) exp(-y^2/2) dy
    const double upper = std::sqrt(x2);
    const int n = 4000;  // even
    const double h = upper / n;
    auto f = [](double y) { return std::exp(-y * y / 2.0); };
    double sum = f(0.0) + f(upper);
    for (int i = 1; i < n; ++i) sum += (i % 2 == 1 ? 4.0 : 2.0) * f(h * i);
    const double integral = sum * h / 3.0;
    const double cdf = 2.0 / std::sqrt(2.0 * std::numbers::pi) * integral;
    return std::max(0.0, 1.0 - cdf);
}

double LiteralScorer::score_group(std::uint64_t history_key,
                                  const std::vector<std::pair<std::uint32_t, double>>& features,
                                  bool real_valued, std::uint64_t seq) {
    (void)seq;
    auto& n = counts_[history_key];
    const std::uint32_t t = n + 1;
    double p_min = 1.0;
    for (const auto& [fid, raw] : features) {
        const double scale = real_valued ? static_cast<double>(resolution_) : 1.0;
        const double value =
            static_cast<double>(static_cast<std::uint64_t>(std::llround(std::max(0.0, raw * scale))));
        const auto key = element_keys::feature(history_key, fid);
        values_[key].push_back(value);
        sums_[key] += value;
        double p = 1.0;
        if (t >= 2) {
            const double s = sums_[key];
            if (s > 0) {
                const double td = static_cast<double>(t);
                const double d = value - s / td;
                const double x2 = d * d * td * td / (s * (td - 1.0));
                p = chi_square_pvalue(x2);
            }
        }
        p_min = std::min(p_min, p);
    }
    auto& hist = pmin_history_[history_key];
    double score = 1.0;
    if (!hist.empty()) {
        std::size_t leq = 0;
        for (double h : hist)
            if (h <= p_min) ++leq;
        score = std::min(1.0, static_cast<double>(leq) / static_cast<double>(hist.size()));
    }
    hist.push_back(p_min);
    ++n;
    return score;
}

void StaticDetector::observe_features(const StreamElement& s, std::uint64_t seq) {
    auto entity_group = [&](EntityId v) {
        std::vector<std::pair<std::uint32_t, double>> feats;
        feats.emplace_back(0, static_cast<double>(in_degree_[v]));
        feats.emplace_back(1, static_cast<double>(out_degree_[v]));
        auto [it, fresh] = last_touch_.try_emplace(v, seq);
        if (!fresh) {
            feats.emplace_back(2, static_cast<double>(seq - it->second));
            it->second = seq;
        }
        const auto key = element_keys::entity(v);
        scorer_.remember(key, scorer_.score_group(key, feats, false, seq));
    };
    in_degree_[s.u_prime] += 1;
    out_degree_[s.u] += 1;
    entity_group(s.u);
    entity_group(s.u_prime);

    const auto cls = element_keys::relation_class(s.m, s.m_prime);
    auto [it, fresh] = class_last_seen_.try_emplace(cls, seq);
    std::vector<std::pair<std::uint32_t, double>> feats;
    if (!fresh) {
        feats.emplace_back(3, static_cast<double>(seq - it->second));
        it->second = seq;
    } else {
        feats.emplace_back(3, 0.0);
    }
    scorer_.remember(element_keys::relation(s.u, s.u_prime),
                     scorer_.score_group(cls, feats, false, seq));
}

StaticDetector::Outcome StaticDetector::detect(const std::vector<StreamElement>& stream,
                                               const EntityInterner& interner) {
    Outcome out;
    std::uint64_t seq = 0;
    for (const auto& s : stream) {
        ++seq;
        if (!graph_.apply(s)) continue;
        observe_features(s, seq);

        for (std::uint32_t pi = 0; pi < patterns_.patterns().size(); ++pi) {
            const auto& p = patterns_.pattern(pi);
            std::set<std::vector<EntityId>> found;
            for (std::uint32_t ei = 0; ei < p.edges().size(); ++ei) {
                const auto& pe = p.edges()[ei];
                if (p.modality_of(pe.from) != s.m || p.modality_of(pe.to) != s.m_prime)
                    continue;
                auto anchored =
                    enumerate_matches_anchored(graph_, p, ei, s.u, s.u_prime);
                found.insert(anchored.begin(), anchored.end());
            }
            for (const auto& assignment : found) {
                ++out.matches;
                // Same admission rule as the engine, evaluated on literal scores.
                const auto edges = p.edges();
                std::vector<bool> var_sig(p.variable_count()), edge_sig(edges.size());
                for (VarId v = 0; v < p.variable_count(); ++v)
                    var_sig[v] =
                        scorer_.latest(element_keys::entity(assignment[v])) < sig_.alpha_sig;
                for (std::size_t e = 0; e < edges.size(); ++e)
                    edge_sig[e] = scorer_.latest(element_keys::relation(
                                      assignment[edges[e].from], assignment[edges[e].to])) <
                                  sig_.alpha_sig;
                std::size_t covered = 0;
                for (VarId v = 0; v < p.variable_count(); ++v) {
                    if (var_sig[v]) {
                        ++covered;
                        continue;
                    }
                    std::size_t sig_nb = 0;
                    for (std::size_t e = 0; e < edges.size(); ++e)
                        if ((edges[e].from == v || edges[e].to == v) && edge_sig[e]) ++sig_nb;
                    if (sig_nb >= 2) ++covered;
                }
                for (std::size_t e = 0; e < edges.size(); ++e) {
                    if (edge_sig[e]) {
                        ++covered;
                        continue;
                    }
                    std::size_t sig_nb = 0;
                    if (var_sig[edges[e].from]) ++sig_nb;
                    if (var_sig[edges[e].to]) ++sig_nb;
                    if (sig_nb >= 2) ++covered;
                }
                const double score = static_cast<double>(covered) /
                                     static_cast<double>(p.variable_count() + edges.size());
                if (score >= sig_.confidence_threshold) {
                    ++out.rumours;
                    std::string key = p.name();
                    key += '|';
                    for (std::size_t i = 0; i < assignment.size(); ++i) {
                        if (i > 0) key += ',';
                        key += interner.name(assignment[i]);
                    }
                    out.rumour_keys.insert(std::move(key));
                }
            }
        }
    }
    return out;
}

}  // namespace rumour::oracle
