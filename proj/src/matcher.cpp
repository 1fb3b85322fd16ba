#include "rumour/matcher.hpp"

#include <algorithm>
#include <unordered_set>

namespace rumour {

namespace {

std::uint32_t pair_key(Modality m, Modality m_prime, std::size_t modality_count) {
    return static_cast<std::uint32_t>(m.id) * static_cast<std::uint32_t>(modality_count) +
           m_prime.id;
}

}  // namespace

PatternSet::PatternSet(std::vector<RumourPattern> patterns, const ModalityTable& modalities)
    : patterns_(std::move(patterns)), modality_count_(modalities.size()) {
    plans_.resize(patterns_.size());
    for (std::uint32_t pi = 0; pi < patterns_.size(); ++pi) {
        const auto& p = patterns_[pi];
        p_max_ = std::max(p_max_, p.variable_count());
        const auto edges = p.edges();
        plans_[pi].resize(edges.size());
        for (std::uint32_t ei = 0; ei < edges.size(); ++ei) {
            const auto& e = edges[ei];
            triggers_[pair_key(p.modality_of(e.from), p.modality_of(e.to), modality_count_)]
                .push_back(Trigger{pi, ei});

            // Breadth-first plan from the anchor over the undirected skeleton:
            // repeatedly take, in declaration order, any unplanned edge with a
            // bound endpoint. The pattern is connected, so this covers it.
            std::vector<bool> bound(p.variable_count(), false);
            std::vector<bool> planned(edges.size(), false);
            bound[e.from] = bound[e.to] = true;
            planned[ei] = true;
            auto& plan = plans_[pi][ei];
            for (std::size_t covered = 1; covered < edges.size();) {
                for (std::uint32_t j = 0; j < edges.size(); ++j) {
                    if (planned[j]) continue;
                    const auto& cand = edges[j];
                    if (bound[cand.from] && bound[cand.to]) {
                        plan.push_back(PlanStep{j, true, true});
                    } else if (bound[cand.from]) {
                        plan.push_back(PlanStep{j, true, false});
                        bound[cand.to] = true;
                    } else if (bound[cand.to]) {
                        plan.push_back(PlanStep{j, false, false});
                        bound[cand.from] = true;
                    } else {
                        continue;
                    }
                    planned[j] = true;
                    ++covered;
                }
            }
        }
    }
}

std::span<const Trigger> PatternSet::triggers_for(Modality m, Modality m_prime) const {
    auto it = triggers_.find(pair_key(m, m_prime, modality_count_));
    if (it == triggers_.end()) return {};
    return it->second;
}

namespace {

struct SearchContext {
    const SocialGraph& graph;
    const PIndex& index;
    const RumourPattern& pattern;
    std::span<const PatternSet::PlanStep> plan;
    std::uint32_t pattern_index;
    std::uint64_t matched_at;
    std::vector<EntityId> assignment;
    std::vector<bool> assigned;
    std::vector<EntityId> used;  // bound entities, for injectivity
    std::vector<PatternMatch>* out;
};

bool is_used(const SearchContext& ctx, EntityId e) {
    return std::find(ctx.used.begin(), ctx.used.end(), e) != ctx.used.end();
}

void expand(SearchContext& ctx, std::size_t step_idx) {
    if (step_idx == ctx.plan.size()) {
        ctx.out->push_back(
            PatternMatch{ctx.pattern_index, ctx.assignment, ctx.matched_at});
        return;
    }
    const auto& step = ctx.plan[step_idx];
    const auto& e = ctx.pattern.edges()[step.edge_index];
    if (step.check_only) {
        if (ctx.graph.has_edge(ctx.assignment[e.from], ctx.assignment[e.to]))
            expand(ctx, step_idx + 1);
        return;
    }
    const VarId bound_var = step.forward ? e.from : e.to;
    const VarId free_var = step.forward ? e.to : e.from;
    const Modality want = ctx.pattern.modality_of(free_var);
    const EntityId from = ctx.assignment[bound_var];
    auto neighbors =
        step.forward ? ctx.graph.out_neighbors(from) : ctx.graph.in_neighbors(from);

    // Deterministic candidate order: ascending entity id.
    std::vector<EntityId> candidates;
    for (const auto& nb : neighbors) {
        if (nb.modality != want) continue;
        if (is_used(ctx, nb.id)) continue;
        if (!ctx.index.satisfies_necessary(nb.id, ctx.pattern, free_var)) continue;
        candidates.push_back(nb.id);
    }
    std::sort(candidates.begin(), candidates.end());
    for (EntityId cand : candidates) {
        ctx.assignment[free_var] = cand;
        ctx.assigned[free_var] = true;
        ctx.used.push_back(cand);
        expand(ctx, step_idx + 1);
        ctx.used.pop_back();
        ctx.assigned[free_var] = false;
    }
}

}  // namespace

std::vector<PatternMatch> bfs_match(const SocialGraph& graph, const PIndex& index,
                                    const PatternSet& ps, Trigger anchor,
                                    const StreamElement& s, std::uint64_t matched_at) {
    std::vector<PatternMatch> out;
    const auto& p = ps.pattern(anchor.pattern_index);
    const auto& e = p.edges()[anchor.edge_index];
    if (p.modality_of(e.from) != s.m || p.modality_of(e.to) != s.m_prime) return out;
    if (s.u == s.u_prime) return out;
    if (!index.satisfies_necessary(s.u, p, e.from)) return out;
    if (!index.satisfies_necessary(s.u_prime, p, e.to)) return out;

    SearchContext ctx{graph,
                      index,
                      p,
                      ps.plan(anchor.pattern_index, anchor.edge_index),
                      anchor.pattern_index,
                      matched_at,
                      std::vector<EntityId>(p.variable_count()),
                      std::vector<bool>(p.variable_count(), false),
                      {},
                      &out};
    ctx.assignment[e.from] = s.u;
    ctx.assignment[e.to] = s.u_prime;
    ctx.assigned[e.from] = ctx.assigned[e.to] = true;
    ctx.used.push_back(s.u);
    ctx.used.push_back(s.u_prime);
    expand(ctx, 0);
    return out;
}

ProcessResult process_element(SocialGraph& graph, PIndex& index, const PatternSet& ps,
                              const StreamElement& s, std::uint64_t matched_at) {
    ProcessResult res;
    res.applied = graph.apply(s);
    if (!res.applied.ok()) return res;
    index.update(s);

    std::unordered_set<PatternMatch, PatternMatchHash> seen;
    for (const auto& trig : ps.triggers_for(s.m, s.m_prime)) {
        for (auto& m : bfs_match(graph, index, ps, trig, s, matched_at)) {
            if (seen.insert(m).second) res.matches.push_back(std::move(m));
        }
    }
    std::sort(res.matches.begin(), res.matches.end(),
              [](const PatternMatch& a, const PatternMatch& b) {
                  if (a.pattern_index != b.pattern_index)
                      return a.pattern_index < b.pattern_index;
                  return a.assignment < b.assignment;
              });
    return res;
}

}  // namespace rumour
