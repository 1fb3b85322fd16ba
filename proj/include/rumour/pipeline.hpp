#ifndef RUMOUR_PIPELINE_HPP
#define RUMOUR_PIPELINE_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "rumour/anomaly.hpp"
#include "rumour/matcher.hpp"
#include "rumour/shedder.hpp"
#include "rumour/stream_io.hpp"
#include "rumour/types.hpp"

namespace rumour {

enum class DetectorMode : std::uint8_t { ground, anomaly };

DetectorMode detector_mode_from_string(const std::string& name);
const char* to_string(DetectorMode m);

enum class DropReason : std::uint8_t {
    shed,              // policy decision
    capacity,          // buffer full, emergency drop
    duplicate,         // repeated (u,u') relation
    modality_conflict,
    self_loop,
};
const char* to_string(DropReason r);

struct PipelineConfig {
    SheddingConfig shed;
    SignificanceConfig significance;
    AnomalyParams anomaly;
    DetectorMode detector = DetectorMode::ground;
    double service_ms = 1.0;   // simulated per-element matching delay
    double tick_ms = 1.0;      // wall-clock milliseconds per source tick
    double drift_threshold = 0.10;
    bool feedback_rumours_only = true;  // coefficient updates from judged rumours
    bool w_bar_fixed = false;           // false: estimated window size = max seen
    std::size_t window_min = 0;         // both > 0: variable window sizes
    std::size_t window_max = 0;
    int threads = 1;                    // 1: simulated clock; 2: staged threads

    void validate() const {
        shed.validate();
        significance.validate();
        if (service_ms <= 0) throw std::invalid_argument("service time must be positive");
        if (threads != 1 && threads != 2) throw std::invalid_argument("threads must be 1 or 2");
        if ((window_min == 0) != (window_max == 0) || window_min > window_max)
            throw std::invalid_argument("bad variable window bounds");
    }

    nlohmann::json to_json() const;
};

struct Event {
    enum class Kind : std::uint8_t { accept, drop, match, rumour, retrain };
    Kind kind;
    std::uint64_t seq = 0;  // arrival index, 1-based
    std::uint64_t t = 0;    // source tick
    // element payload
    std::string u, v, mu, mv;
    int label = -1;  // -1: unlabeled
    DropReason reason = DropReason::shed;
    double arrive_ms = 0, done_ms = 0;
    std::uint32_t window_index = 0, position = 0;
    // match payload
    std::string pattern;
    std::string match_key;
    bool all_labeled = false;
    double score = 0;  // subgraph score; mre for retrain events
};

struct LatencySummary {
    double p50 = 0, p95 = 0, max = 0;
};

struct MetricsReport {
    std::uint64_t total_elements = 0;
    std::uint64_t accepted = 0;
    std::uint64_t dropped_shed = 0;      // policy drops
    std::uint64_t dropped_capacity = 0;  // emergency drops
    std::uint64_t rejected = 0;          // duplicates, conflicts, self-loops
    std::uint64_t matches = 0;
    std::uint64_t detection_count = 0;  // rumours found
    double shedding_ratio = 0;
    std::optional<double> beta;
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f_beta_score;
    std::optional<double> error_rate;
    LatencySummary latency;
    double throughput_eps = 0;
    std::optional<double> shedding_coefficient;
    std::optional<double> coefficient_loss;
    std::uint64_t retrains = 0;
    std::vector<std::uint64_t> retrain_seqs;
    nlohmann::json config;

    nlohmann::json to_json() const;
};

/// Run-side diagnostics that are not part of the event log.
struct RunDiagnostics {
    std::uint64_t starvation_windows = 0;
    std::vector<std::uint64_t> mre_exceed_seqs;
};

/// Ground truth carried from a reference (no shedding) run.
struct ReferenceInfo {
    std::uint64_t f_ref = 0;
    std::unordered_set<std::string> truth;  // canonical match keys of rumours
};

struct RunResult {
    MetricsReport report;
    std::vector<Event> events;
    RunDiagnostics diag;
};

/// Weighted precision/recall combination; beta is the rumour-element ratio.
/// Zero when both precision and recall are zero.
double f_beta(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn, double beta);

/// Metrics are a pure function of the event log (plus the resolved config
/// and, optionally, reference-run truth): recomputing from a persisted log
/// reproduces the report bit for bit.
MetricsReport compute_metrics(const std::vector<Event>& events, const nlohmann::json& config,
                              const ReferenceInfo* ref);

/// Processes the whole stream under the given configuration. The interner
/// and modality table resolve names for the event log.
RunResult run_pipeline(const PipelineConfig& cfg, const PatternSet& patterns,
                       const ModalityTable& modalities, const EntityInterner& interner,
                       const std::vector<StreamElement>& stream,
                       const ReferenceInfo* ref = nullptr);

/// Same pipeline with shedding disabled and an unbounded buffer; the
/// denominator run for shedding coefficient and coefficient loss.
RunResult reference_run(PipelineConfig cfg, const PatternSet& patterns,
                        const ModalityTable& modalities, const EntityInterner& interner,
                        const std::vector<StreamElement>& stream);

ReferenceInfo reference_info_from(const RunResult& reference);

void write_event_log(std::ostream& out, const std::vector<Event>& events);
std::vector<Event> read_event_log(std::istream& in);

}  // namespace rumour

#endif  // RUMOUR_PIPELINE_HPP
