#ifndef RUMOUR_ANOMALY_HPP
#define RUMOUR_ANOMALY_HPP

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <unordered_map>
#include <vector>

#include "rumour/cm_sketch.hpp"
#include "rumour/features.hpp"
#include "rumour/graph.hpp"
#include "rumour/pattern.hpp"
#include "rumour/pindex.hpp"

namespace rumour {

/// Two-class chi-square statistic comparing the value observed now against
/// the expectation derived from the cumulative sum:
///   (f - s/t)^2 * t^2 / (s * (t - 1))
/// Undefined (nullopt) when t < 2 or the cumulative sum is zero; the caller
/// treats that as non-anomalous.
std::optional<double> feature_chi_square(double f_hat, double s_hat, std::uint64_t t);

/// Survival function of the chi-square distribution with one degree of
/// freedom. Monotone decreasing, 1 at zero.
double chi_square_pvalue(double x2);

struct SignificanceConfig {
    double alpha_sig = 0.05;
    double confidence_threshold = 0.95;

    void validate() const {
        if (!(alpha_sig > 0 && alpha_sig < 1))
            throw std::invalid_argument("alpha_sig must be in (0,1)");
        if (!(confidence_threshold >= 0 && confidence_threshold <= 1))
            throw std::invalid_argument("confidence_threshold must be in [0,1]");
    }
};

struct AnomalyParams {
    double eps = 0.01;
    double delta = 0.01;
    std::uint32_t value_resolution = 100;  // scale for real-valued features
    bool exact = false;                    // exact counters instead of sketches
    std::uint64_t seed = 0x5eedULL;
};

/// The two per-feature counter families: a cumulative one approximating the
/// sum of all values of (element, feature), and a per-tick one that logically
/// resets at each epoch. Backed by count-min sketches, or by exact maps in
/// oracle mode.
class FeatureSketchPair {
public:
    FeatureSketchPair(const AnomalyParams& params);

    void observe(std::uint64_t feature_key, std::uint64_t value, std::uint64_t epoch);
    std::uint64_t cumulative(std::uint64_t feature_key) const;
    std::uint64_t current(std::uint64_t feature_key, std::uint64_t epoch) const;

private:
    bool exact_;
    std::optional<CmSketch> sk_cumulative_;
    std::optional<EpochCmSketch> sk_current_;
    ExactCounter ex_cumulative_;
    EpochExactCounter ex_current_;
};

/// History of per-element minimum p-values, supporting the rank score
///   p(x) = |{past p_min <= current p_min}| / (t - 1).
///
/// Sketch mode quantises p_min into 1000 equal-width buckets on [0,1] and
/// keeps one count-min sketch per dyadic level over the bucket range, so a
/// rank read sums at most eleven counters instead of walking every bucket.
/// These sketches run at a tenth of the configured eps to keep the summed
/// one-sided error small. Exact mode keeps the raw values per element and
/// computes the literal rank.
class ElementScoreState {
public:
    explicit ElementScoreState(const AnomalyParams& params);

    /// Rank of pmin_now against the element's history, then records
    /// pmin_now. Cold elements (no history) score 1.0.
    double score(std::uint64_t element_key, double pmin_now);

    std::uint32_t observations(std::uint64_t element_key) const;

    static constexpr std::uint32_t kBuckets = 1000;

private:
    static constexpr std::uint32_t kLeaves = 1024;
    static constexpr std::uint32_t kLevels = 11;

    static std::uint32_t bucket_of(double p);
    double count_leq(std::uint64_t element_key, double pmin) const;
    void insert(std::uint64_t element_key, double pmin);

    bool exact_;
    std::vector<CmSketch> levels_;
    std::unordered_map<std::uint64_t, std::vector<double>> history_;  // sorted
    std::unordered_map<std::uint64_t, std::uint32_t> observations_;
};

struct SubgraphScore {
    double score = 0.0;
    bool is_rumour = false;
};

/// Fraction of match elements (entities and relations) whose scores are
/// significant at alpha_sig, admitting an insignificant element when at
/// least two of its neighbours in the match are significant. The match is
/// flagged once the fraction reaches the confidence threshold.
SubgraphScore subgraph_score(const RumourPattern& pattern, const PatternMatch& match,
                             const std::function<double(std::uint64_t)>& score_of,
                             const SignificanceConfig& cfg);

struct ElementScores {
    double u = 1.0;
    double u_prime = 1.0;
    double relation = 1.0;
};

/// Streaming detector state: extracts features for each accepted element,
/// maintains the counter families, derives per-feature p-values and the
/// rank-based element score, and judges pattern matches.
class AnomalyEngine {
public:
    AnomalyEngine(const AnomalyParams& params, const SignificanceConfig& sig,
                  std::unique_ptr<FeatureProvider> provider);

    /// Scores u, u' and the relation; must run after the element was applied
    /// to graph and index. seq is the element's arrival index (the logical
    /// tick used for epochs).
    ElementScores observe(const StreamElement& s, std::uint64_t seq, const SocialGraph& graph,
                          const PIndex& index);

    /// Latest score of an element, 1.0 if never scored.
    double score_of(std::uint64_t element_key) const;

    SubgraphScore judge(const RumourPattern& pattern, const PatternMatch& match) const;

    const SignificanceConfig& significance() const { return sig_; }

private:
    double score_group(std::uint64_t history_key, std::uint64_t score_key,
                       const std::vector<FeatureObs>& obs, std::size_t begin, std::size_t end,
                       std::uint64_t seq);

    AnomalyParams params_;
    SignificanceConfig sig_;
    std::unique_ptr<FeatureProvider> provider_;
    FeatureSketchPair counts_;
    ElementScoreState ranks_;
    std::unordered_map<std::uint64_t, double> score_table_;
    std::vector<FeatureObs> scratch_;
};

}  // namespace rumour

#endif  // RUMOUR_ANOMALY_HPP
