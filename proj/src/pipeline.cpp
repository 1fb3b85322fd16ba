#include "rumour/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <thread>
#include <unordered_map>

namespace rumour {

using nlohmann::json;

DetectorMode detector_mode_from_string(const std::string& name) {
    if (name == "ground") return DetectorMode::ground;
    if (name == "anomaly") return DetectorMode::anomaly;
    throw std::invalid_argument("unknown detector: " + name);
}

const char* to_string(DetectorMode m) {
    return m == DetectorMode::ground ? "ground" : "anomaly";
}

const char* to_string(DropReason r) {
    switch (r) {
        case DropReason::shed: return "shed";
        case DropReason::capacity: return "capacity";
        case DropReason::duplicate: return "duplicate";
        case DropReason::modality_conflict: return "modality_conflict";
        case DropReason::self_loop: return "self_loop";
    }
    return "?";
}

namespace {

DropReason drop_reason_from_string(const std::string& s) {
    if (s == "shed") return DropReason::shed;
    if (s == "capacity") return DropReason::capacity;
    if (s == "duplicate") return DropReason::duplicate;
    if (s == "modality_conflict") return DropReason::modality_conflict;
    if (s == "self_loop") return DropReason::self_loop;
    throw std::invalid_argument("unknown drop reason: " + s);
}

DropReason reason_of(ApplyError e) {
    switch (e) {
        case ApplyError::duplicate_edge: return DropReason::duplicate;
        case ApplyError::modality_conflict: return DropReason::modality_conflict;
        case ApplyError::self_loop: return DropReason::self_loop;
    }
    return DropReason::duplicate;
}

}  // namespace

json PipelineConfig::to_json() const {
    json j;
    j["shed"]["theta_ms"] = shed.theta_ms;
    j["shed"]["b_max"] = shed.b_max;
    j["shed"]["window_size"] = shed.window_size;
    j["shed"]["strategy"] = to_string(shed.strategy);
    j["shed"]["interval_mode"] =
        shed.interval_mode == IntervalMode::whole_window ? "whole-window" : "variable-parts";
    j["shed"]["measure_interval_ms"] = shed.measure_interval_ms;
    j["shed"]["seed"] = shed.seed;
    j["shed"]["rate_ewma"] = shed.rate_ewma;
    j["anomaly"]["eps"] = anomaly.eps;
    j["anomaly"]["delta"] = anomaly.delta;
    j["anomaly"]["alpha_sig"] = significance.alpha_sig;
    j["anomaly"]["confidence_threshold"] = significance.confidence_threshold;
    j["anomaly"]["value_resolution"] = anomaly.value_resolution;
    j["anomaly"]["exact"] = anomaly.exact;
    j["detector"] = to_string(detector);
    j["service_ms"] = service_ms;
    j["tick_ms"] = tick_ms;
    j["coeff"]["drift_threshold"] = drift_threshold;
    j["coeff"]["w_bar_mode"] = w_bar_fixed ? "fixed" : "max-seen";
    j["feedback_rumours_only"] = feedback_rumours_only;
    j["window_min"] = window_min;
    j["window_max"] = window_max;
    j["threads"] = threads;
    return j;
}

double f_beta(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn, double beta) {
    const double p = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double r = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    if (p <= 0 && r <= 0) return 0.0;
    const double b2 = beta * beta;
    return (1.0 + b2) * p * r / (b2 * p + r);
}

// ---------------------------------------------------------------------------
// Event log serialization

namespace {

const char* kind_name(Event::Kind k) {
    switch (k) {
        case Event::Kind::accept: return "accept";
        case Event::Kind::drop: return "drop";
        case Event::Kind::match: return "match";
        case Event::Kind::rumour: return "rumour";
        case Event::Kind::retrain: return "retrain";
    }
    return "?";
}

Event::Kind kind_from_string(const std::string& s) {
    if (s == "accept") return Event::Kind::accept;
    if (s == "drop") return Event::Kind::drop;
    if (s == "match") return Event::Kind::match;
    if (s == "rumour") return Event::Kind::rumour;
    if (s == "retrain") return Event::Kind::retrain;
    throw std::invalid_argument("unknown event kind: " + s);
}

json event_to_json(const Event& e) {
    json j;
    j["kind"] = kind_name(e.kind);
    j["seq"] = e.seq;
    j["t"] = e.t;
    switch (e.kind) {
        case Event::Kind::accept:
            j["u"] = e.u;
            j["v"] = e.v;
            j["mu"] = e.mu;
            j["mv"] = e.mv;
            if (e.label >= 0) j["label"] = e.label;
            j["arrive_ms"] = e.arrive_ms;
            j["done_ms"] = e.done_ms;
            j["win"] = e.window_index;
            j["pos"] = e.position;
            break;
        case Event::Kind::drop:
            j["u"] = e.u;
            j["v"] = e.v;
            j["mu"] = e.mu;
            j["mv"] = e.mv;
            if (e.label >= 0) j["label"] = e.label;
            j["reason"] = to_string(e.reason);
            j["win"] = e.window_index;
            j["pos"] = e.position;
            break;
        case Event::Kind::match:
        case Event::Kind::rumour:
            j["pattern"] = e.pattern;
            j["key"] = e.match_key;
            j["all_labeled"] = e.all_labeled;
            j["score"] = e.score;
            break;
        case Event::Kind::retrain:
            j["mre"] = e.score;
            break;
    }
    return j;
}

Event event_from_json(const json& j) {
    Event e;
    e.kind = kind_from_string(j.at("kind").get<std::string>());
    e.seq = j.at("seq").get<std::uint64_t>();
    e.t = j.at("t").get<std::uint64_t>();
    switch (e.kind) {
        case Event::Kind::accept:
            e.u = j.at("u").get<std::string>();
            e.v = j.at("v").get<std::string>();
            e.mu = j.at("mu").get<std::string>();
            e.mv = j.at("mv").get<std::string>();
            e.label = j.contains("label") ? j["label"].get<int>() : -1;
            e.arrive_ms = j.at("arrive_ms").get<double>();
            e.done_ms = j.at("done_ms").get<double>();
            e.window_index = j.at("win").get<std::uint32_t>();
            e.position = j.at("pos").get<std::uint32_t>();
            break;
        case Event::Kind::drop:
            e.u = j.at("u").get<std::string>();
            e.v = j.at("v").get<std::string>();
            e.mu = j.at("mu").get<std::string>();
            e.mv = j.at("mv").get<std::string>();
            e.label = j.contains("label") ? j["label"].get<int>() : -1;
            e.reason = drop_reason_from_string(j.at("reason").get<std::string>());
            e.window_index = j.at("win").get<std::uint32_t>();
            e.position = j.at("pos").get<std::uint32_t>();
            break;
        case Event::Kind::match:
        case Event::Kind::rumour:
            e.pattern = j.at("pattern").get<std::string>();
            e.match_key = j.at("key").get<std::string>();
            e.all_labeled = j.at("all_labeled").get<bool>();
            e.score = j.at("score").get<double>();
            break;
        case Event::Kind::retrain:
            e.score = j.at("mre").get<double>();
            break;
    }
    return e;
}

}  // namespace

void write_event_log(std::ostream& out, const std::vector<Event>& events) {
    for (const auto& e : events) out << event_to_json(e).dump() << '\n';
}

std::vector<Event> read_event_log(std::istream& in) {
    std::vector<Event> events;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        events.push_back(event_from_json(json::parse(line)));
    }
    return events;
}

// ---------------------------------------------------------------------------
// Metrics

MetricsReport compute_metrics(const std::vector<Event>& events, const json& config,
                              const ReferenceInfo* ref) {
    MetricsReport r;
    r.config = config;

    std::vector<double> latencies;
    double first_arrive = 0, last_done = 0;
    bool any_accept = false;
    std::uint64_t labeled_total = 0, labeled_shed = 0;
    std::uint64_t tp_labeled = 0;
    std::unordered_set<std::string> detected;

    for (const auto& e : events) {
        switch (e.kind) {
            case Event::Kind::accept:
                ++r.total_elements;
                ++r.accepted;
                if (e.label == 1) ++labeled_total;
                latencies.push_back(e.done_ms - e.arrive_ms);
                if (!any_accept) {
                    first_arrive = e.arrive_ms;
                    any_accept = true;
                }
                last_done = std::max(last_done, e.done_ms);
                break;
            case Event::Kind::drop:
                ++r.total_elements;
                if (e.label == 1) ++labeled_total;
                if (e.reason == DropReason::shed) {
                    ++r.dropped_shed;
                    if (e.label == 1) ++labeled_shed;
                } else if (e.reason == DropReason::capacity) {
                    ++r.dropped_capacity;
                    if (e.label == 1) ++labeled_shed;
                } else {
                    ++r.rejected;
                }
                break;
            case Event::Kind::match:
                ++r.matches;
                break;
            case Event::Kind::rumour:
                ++r.detection_count;
                detected.insert(e.match_key);
                if (e.all_labeled) ++tp_labeled;
                break;
            case Event::Kind::retrain:
                ++r.retrains;
                r.retrain_seqs.push_back(e.seq);
                break;
        }
    }

    if (r.total_elements > 0)
        r.shedding_ratio = static_cast<double>(r.dropped_shed + r.dropped_capacity) /
                           static_cast<double>(r.total_elements);
    if (r.total_elements > 0)
        r.beta = static_cast<double>(labeled_total) / static_cast<double>(r.total_elements);
    if (labeled_total > 0)
        r.error_rate = static_cast<double>(labeled_shed) / static_cast<double>(labeled_total);

    if (r.detection_count > 0)
        r.precision = static_cast<double>(tp_labeled) / static_cast<double>(r.detection_count);

    if (!latencies.empty()) {
        std::sort(latencies.begin(), latencies.end());
        auto at = [&](double q) {
            const auto idx =
                static_cast<std::size_t>(q * static_cast<double>(latencies.size() - 1));
            return latencies[idx];
        };
        r.latency.p50 = at(0.50);
        r.latency.p95 = at(0.95);
        r.latency.max = latencies.back();
    }
    if (any_accept && last_done > first_arrive)
        r.throughput_eps =
            static_cast<double>(r.accepted) / ((last_done - first_arrive) / 1000.0);

    if (ref != nullptr) {
        std::uint64_t tp = 0;
        for (const auto& key : detected)
            if (ref->truth.contains(key)) ++tp;
        const std::uint64_t fp = detected.size() - tp;
        const std::uint64_t fn = ref->truth.size() - tp;
        if (tp + fp + fn > 0 && r.beta) {
            r.recall = tp + fn == 0
                           ? 1.0
                           : static_cast<double>(tp) / static_cast<double>(tp + fn);
            r.f_beta_score = f_beta(tp, fp, fn, *r.beta);
        }
        if (ref->f_ref > 0) {
            r.shedding_coefficient = static_cast<double>(r.detection_count) /
                                     static_cast<double>(ref->f_ref);
            r.coefficient_loss =
                (static_cast<double>(ref->f_ref) - static_cast<double>(r.detection_count)) /
                static_cast<double>(ref->f_ref);
        }
    } else if (r.total_elements > 0 && r.dropped_shed + r.dropped_capacity == 0 &&
               config.contains("shed") && config["shed"]["strategy"] == "none") {
        // A no-shedding run is its own reference.
        r.coefficient_loss = 0.0;
    }
    return r;
}

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

json MetricsReport::to_json() const {
    json j;
    j["totals"]["elements"] = total_elements;
    j["totals"]["accepted"] = accepted;
    j["totals"]["dropped_shed"] = dropped_shed;
    j["totals"]["dropped_capacity"] = dropped_capacity;
    j["totals"]["rejected"] = rejected;
    j["totals"]["matches"] = matches;
    j["detection_count"] = detection_count;
    j["shedding_ratio"] = shedding_ratio;
    j["beta"] = opt(beta);
    j["precision"] = opt(precision);
    j["recall"] = opt(recall);
    j["f_beta"] = opt(f_beta_score);
    j["error_rate"] = opt(error_rate);
    j["latency_ms"]["p50"] = latency.p50;
    j["latency_ms"]["p95"] = latency.p95;
    j["latency_ms"]["max"] = latency.max;
    j["throughput_eps"] = throughput_eps;
    j["shedding_coefficient"] = opt(shedding_coefficient);
    j["coefficient_loss"] = opt(coefficient_loss);
    j["retrains"] = retrains;
    j["retrain_seqs"] = retrain_seqs;
    j["config"] = config;
    return j;
}

// ---------------------------------------------------------------------------
// Detector core: matching, scoring, coefficient feedback.

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

struct EdgeMeta {
    std::uint32_t pair_index;
    std::uint32_t position;     // raw 1-based position in its window
    std::uint32_t window_size;  // size of that window
    bool labeled;
};

class DetectorCore {
public:
    DetectorCore(const PipelineConfig& cfg, const PatternSet& patterns,
                 const ModalityTable& modalities, const EntityInterner& interner,
                 std::size_t w_bar)
        : cfg_(cfg), patterns_(patterns), modalities_(modalities), interner_(interner),
          index_(modalities.size()), cm_(modalities.pair_count(), w_bar),
          drift_(cfg.drift_threshold) {
        if (cfg_.detector == DetectorMode::anomaly)
            engine_ = std::make_unique<AnomalyEngine>(
                cfg_.anomaly, cfg_.significance, std::make_unique<SyntheticFeatureProvider>());
    }

    /// Runs matching, scoring and feedback for a kept element. The element's
    /// own accept/drop event is the caller's job; match and rumour events are
    /// appended here. Returns false if the element was rejected (then the
    /// drop event is appended here instead).
    bool process(const StreamElement& s, std::uint64_t seq, std::uint32_t window_index,
                 std::uint32_t position, std::uint32_t window_size,
                 std::vector<Event>& events) {
        auto result = process_element(graph_, index_, patterns_, s, seq);
        if (!result.applied.ok()) {
            Event e = element_event(Event::Kind::drop, s, seq);
            e.reason = reason_of(*result.applied.error);
            e.window_index = window_index;
            e.position = position;
            events.push_back(std::move(e));
            return false;
        }
        edge_meta_.emplace(EdgeKey{s.u.value, s.u_prime.value},
                           EdgeMeta{modalities_.pair_index(s.m, s.m_prime), position,
                                    window_size, s.rumour_label.value_or(false)});
        if (engine_) engine_->observe(s, seq, graph_, index_);
        pending_matches_ = std::move(result.matches);
        return true;
    }

    /// Judges and logs the matches found by the last process() call.
    void emit_matches(const StreamElement& s, std::uint64_t seq, std::vector<Event>& events) {
        for (const auto& match : pending_matches_) handle_match(match, s, seq, events);
        pending_matches_.clear();
    }

    /// First build or drift-triggered rebuild of the CCO snapshot.
    void maintain_model(std::uint64_t seq, std::vector<Event>& events) {
        if (cm_.empty()) return;
        const bool first = cco_ == nullptr;
        if (!first && !drift_.drift_check()) return;
        const double mre_before = drift_.mre();
        cm_.coeffs();  // force renormalisation before snapshotting
        auto fresh = std::make_shared<const Cco>(build_cco(cm_));
        {
            std::lock_guard<std::mutex> lock(cco_mutex_);
            cco_ = std::move(fresh);
        }
        drift_.rebase(cm_);
        exceeded_since_rebase_ = false;
        Event e;
        e.kind = Event::Kind::retrain;
        e.seq = seq;
        e.score = mre_before;
        events.push_back(std::move(e));
    }

    std::shared_ptr<const Cco> snapshot() const {
        std::lock_guard<std::mutex> lock(cco_mutex_);
        return cco_;
    }

    Event element_event(Event::Kind kind, const StreamElement& s, std::uint64_t seq) const {
        Event e;
        e.kind = kind;
        e.seq = seq;
        e.t = s.t;
        e.u = interner_.name(s.u);
        e.v = interner_.name(s.u_prime);
        e.mu = modalities_.name(s.m);
        e.mv = modalities_.name(s.m_prime);
        e.label = s.rumour_label ? (*s.rumour_label ? 1 : 0) : -1;
        return e;
    }

    const std::vector<std::uint64_t>& mre_exceed_seqs() const { return mre_exceed_seqs_; }
    CoefficientMatrix& coefficients() { return cm_; }
    const SocialGraph& graph() const { return graph_; }

private:
    void handle_match(const PatternMatch& match, const StreamElement& s, std::uint64_t seq,
                      std::vector<Event>& events) {
        const auto& pattern = patterns_.pattern(match.pattern_index);

        bool all_labeled = true;
        for (const auto& pe : pattern.edges()) {
            auto it = edge_meta_.find(EdgeKey{match.assignment[pe.from].value,
                                              match.assignment[pe.to].value});
            if (it == edge_meta_.end() || !it->second.labeled) {
                all_labeled = false;
                break;
            }
        }

        SubgraphScore verdict;
        if (cfg_.detector == DetectorMode::ground) {
            verdict.is_rumour = all_labeled;
            verdict.score = all_labeled ? 1.0 : 0.0;
        } else {
            verdict = engine_->judge(pattern, match);
        }

        Event e;
        e.kind = verdict.is_rumour ? Event::Kind::rumour : Event::Kind::match;
        e.seq = seq;
        e.t = s.t;
        e.pattern = pattern.name();
        e.match_key = match_key(pattern, match);
        e.all_labeled = all_labeled;
        e.score = verdict.score;
        if (verdict.is_rumour) {
            // The rumour event doubles as a match event in the counters.
            Event m = e;
            m.kind = Event::Kind::match;
            events.push_back(std::move(m));
        }
        events.push_back(std::move(e));

        if (verdict.is_rumour || !cfg_.feedback_rumours_only) feed_back(pattern, match);
    }

    void feed_back(const RumourPattern& pattern, const PatternMatch& match) {
        for (const auto& pe : pattern.edges()) {
            auto it = edge_meta_.find(
                EdgeKey{match.assignment[pe.from].value, match.assignment[pe.to].value});
            if (it == edge_meta_.end()) continue;
            const auto& meta = it->second;
            const auto cols = static_cast<double>(cm_.cols());
            auto col = static_cast<std::uint32_t>(std::llround(
                static_cast<double>(meta.position) * cols /
                static_cast<double>(meta.window_size)));
            col = std::clamp<std::uint32_t>(col, 1, static_cast<std::uint32_t>(cm_.cols()));
            const auto fresh = cm_.increment(meta.pair_index, col);
            drift_.on_increment(meta.pair_index, col - 1, fresh);
        }
        if (!exceeded_since_rebase_ && drift_.has_snapshot() &&
            drift_.mre() > drift_.threshold()) {
            exceeded_since_rebase_ = true;
            mre_exceed_seqs_.push_back(last_seq_hint_);
        }
    }

    std::string match_key(const RumourPattern& pattern, const PatternMatch& match) const {
        std::string key = pattern.name();
        key += '|';
        for (std::size_t i = 0; i < match.assignment.size(); ++i) {
            if (i > 0) key += ',';
            key += interner_.name(match.assignment[i]);
        }
        return key;
    }

public:
    // Arrival hint so drift exceed ticks can be attributed; set by the caller
    // before processing each element.
    std::uint64_t last_seq_hint_ = 0;

private:
    const PipelineConfig& cfg_;
    const PatternSet& patterns_;
    const ModalityTable& modalities_;
    const EntityInterner& interner_;
    SocialGraph graph_;
    PIndex index_;
    std::unique_ptr<AnomalyEngine> engine_;
    CoefficientMatrix cm_;
    DriftMonitor drift_;
    std::shared_ptr<const Cco> cco_;
    mutable std::mutex cco_mutex_;
    std::unordered_map<EdgeKey, EdgeMeta, EdgeKeyHash> edge_meta_;
    std::vector<PatternMatch> pending_matches_;
    std::vector<std::uint64_t> mre_exceed_seqs_;
    bool exceeded_since_rebase_ = false;
};

// Virtual-time single server with FIFO service.
class SimServer {
public:
    std::size_t occupancy(double now) {
        while (!completions_.empty() && completions_.front() <= now) completions_.pop_front();
        return completions_.size();
    }

    double enqueue(double arrive, double service) {
        const double start = std::max(arrive, server_free_);
        const double done = start + service;
        server_free_ = done;
        completions_.push_back(done);
        return done;
    }

private:
    double server_free_ = 0;
    std::deque<double> completions_;
};

struct PendingElement {
    StreamElement elem;
    std::uint64_t seq;
    double arrive_ms;
    std::uint32_t position;
    std::uint8_t coeff;
};

}  // namespace

// ---------------------------------------------------------------------------
// Simulated-clock pipeline (single thread, deterministic).

namespace {

RunResult run_simulated(const PipelineConfig& cfg, const PatternSet& patterns,
                        const ModalityTable& modalities, const EntityInterner& interner,
                        const std::vector<StreamElement>& stream, const ReferenceInfo* ref) {
    const auto& shed_cfg = cfg.shed;
    const bool variable_windows = cfg.window_min > 0;
    std::mt19937_64 shed_rng(shed_cfg.seed);
    std::mt19937_64 window_rng(shed_cfg.seed ^ 0x9e3779b97f4a7c15ULL);

    std::size_t w_bar = variable_windows && !cfg.w_bar_fixed ? cfg.window_min
                                                             : shed_cfg.window_size;
    DetectorCore core(cfg, patterns, modalities, interner, w_bar);
    SimServer server;
    std::vector<Event> events;
    events.reserve(stream.size() + stream.size() / 8);

    SheddingState st;
    st.t_match_ms = cfg.service_ms;
    st.r_match = 1000.0 / cfg.service_ms;

    const bool unbounded = shed_cfg.strategy == ShedStrategy::none;
    double next_measure = shed_cfg.measure_interval_ms;
    double last_measure = 0;
    std::uint64_t arrivals_in_interval = 0;

    std::uint32_t window_index = 0;
    std::uint32_t pos_in_window = 0;
    std::size_t window_size = shed_cfg.window_size;
    std::size_t part_size = 0;  // 0: whole-window evaluation only
    std::vector<bool> predrawn_drop;
    std::vector<PendingElement> pending;
    const bool deferred = shed_cfg.strategy == ShedStrategy::weighted ||
                          shed_cfg.strategy == ShedStrategy::sort;

    auto scaled_position = [](std::uint32_t pos, std::size_t wsize, std::size_t cols) {
        auto col = static_cast<std::uint32_t>(std::llround(
            static_cast<double>(pos) * static_cast<double>(cols) /
            static_cast<double>(wsize)));
        return std::clamp<std::uint32_t>(col, 1, static_cast<std::uint32_t>(cols));
    };

    // ready is when the element reaches the buffer (later than arrive for
    // window-buffered strategies); latency is measured from true arrival.
    auto try_enqueue = [&](const StreamElement& s, std::uint64_t seq, double arrive,
                           double ready, std::uint32_t pos) {
        const std::size_t b = server.occupancy(ready);
        if (!unbounded && b >= shed_cfg.b_max) {
            Event e = core.element_event(Event::Kind::drop, s, seq);
            e.reason = DropReason::capacity;
            e.window_index = window_index;
            e.position = pos;
            events.push_back(std::move(e));
            return;
        }
        const double done = server.enqueue(ready, cfg.service_ms);
        core.last_seq_hint_ = seq;
        if (core.process(s, seq, window_index, pos, static_cast<std::uint32_t>(window_size),
                         events)) {
            Event e = core.element_event(Event::Kind::accept, s, seq);
            e.arrive_ms = arrive;
            e.done_ms = done;
            e.window_index = window_index;
            e.position = pos;
            events.push_back(std::move(e));
            core.emit_matches(s, seq, events);
        }
    };

    auto start_window = [&](double now) {
        pos_in_window = 0;
        if (variable_windows) {
            std::uniform_int_distribution<std::size_t> draw(cfg.window_min, cfg.window_max);
            window_size = draw(window_rng);
            if (!cfg.w_bar_fixed && window_size > w_bar) {
                w_bar = window_size;
                core.coefficients().widen(w_bar);
            }
        }
        // Variable shedding intervals: split the window once it outgrows the
        // spare buffer space.
        part_size = 0;
        if (shed_cfg.interval_mode == IntervalMode::variable_parts &&
            shed_cfg.strategy == ShedStrategy::coefficient && st.t_match_ms > 0) {
            const double z = spare_space(shed_cfg.theta_ms, st.t_match_ms, st.alpha);
            if (static_cast<double>(window_size) > z)
                part_size = std::max<std::size_t>(1, variable_part_size(st, shed_cfg.theta_ms));
        }
        // Random baseline (and the cold-start fallback of the coefficient
        // strategy) pre-draws this window's drop set.
        predrawn_drop.assign(window_size, false);
        const bool cold_coefficient =
            shed_cfg.strategy == ShedStrategy::coefficient && core.snapshot() == nullptr;
        if (shed_cfg.strategy == ShedStrategy::random || cold_coefficient) {
            const std::size_t b = server.occupancy(now);
            if (static_cast<double>(b) > shed_cfg.theta_ms / st.t_match_ms + 1.0) {
                auto k = static_cast<std::size_t>(std::llround(st.k));
                std::vector<std::uint8_t> flat(window_size, 0);
                for (std::size_t i : baseline_shed(ShedStrategy::random, flat,
                                                   std::min(k, window_size), shed_rng))
                    predrawn_drop[i] = true;
            }
        }
    };

    auto boundary_eval = [&](double now, std::size_t effective_window) {
        core.maintain_model(core.last_seq_hint_, events);
        auto cco = core.snapshot();
        const std::size_t b = server.occupancy(now);
        st = run_window_boundary(st, cco.get(), b, shed_cfg, effective_window);
    };

    auto flush_pending = [&](double now) {
        if (pending.empty()) return;
        const std::size_t b = server.occupancy(now);
        auto k = static_cast<std::size_t>(std::llround(st.k));
        bool triggered;
        if (shed_cfg.strategy == ShedStrategy::weighted)
            triggered = static_cast<double>(b) > shed_cfg.theta_ms / st.t_match_ms + 1.0;
        else
            triggered = should_shed(b, st.alpha, shed_cfg.theta_ms, st.t_match_ms);
        std::vector<bool> drop(pending.size(), false);
        if (triggered && k > 0) {
            std::vector<std::uint8_t> coeffs;
            coeffs.reserve(pending.size());
            for (const auto& p : pending) coeffs.push_back(p.coeff);
            for (std::size_t i :
                 baseline_shed(shed_cfg.strategy, coeffs, std::min(k, pending.size()),
                               shed_rng))
                drop[i] = true;
        }
        for (std::size_t i = 0; i < pending.size(); ++i) {
            auto& p = pending[i];
            if (drop[i]) {
                Event e = core.element_event(Event::Kind::drop, p.elem, p.seq);
                e.reason = DropReason::shed;
                e.window_index = window_index;
                e.position = p.position;
                events.push_back(std::move(e));
            } else {
                try_enqueue(p.elem, p.seq, p.arrive_ms, now, p.position);
            }
        }
        pending.clear();
    };

    for (std::uint64_t seq = 1; seq <= stream.size(); ++seq) {
        const auto& s = stream[seq - 1];
        const double now = static_cast<double>(s.t) * cfg.tick_ms;

        // Time-based measurement interval (possibly several in a lull).
        while (now >= next_measure) {
            const double interval_s = (next_measure - last_measure) / 1000.0;
            const double inst =
                interval_s > 0 ? static_cast<double>(arrivals_in_interval) / interval_s : 0.0;
            st.r = last_measure == 0 ? inst
                                     : shed_cfg.rate_ewma * inst +
                                           (1.0 - shed_cfg.rate_ewma) * st.r;
            const std::size_t eff = part_size > 0 ? part_size : window_size;
            const std::size_t b = server.occupancy(next_measure);
            st.k = compute_k(st.r, st.r_match, eff, b, shed_cfg.b_max);
            st.alpha = st.k / static_cast<double>(eff);
            arrivals_in_interval = 0;
            last_measure = next_measure;
            next_measure += shed_cfg.measure_interval_ms;
        }
        ++arrivals_in_interval;

        if (pos_in_window == 0) start_window(now);
        const std::uint32_t pos = ++pos_in_window;
        core.last_seq_hint_ = seq;

        bool keep = true;
        bool decided = true;
        switch (shed_cfg.strategy) {
            case ShedStrategy::none:
                break;
            case ShedStrategy::coefficient: {
                auto cco = core.snapshot();
                if (cco) {
                    keep = keep_element(st, *cco,
                                        modalities.pair_index(s.m, s.m_prime),
                                        scaled_position(pos, window_size, cco->cols));
                } else {
                    keep = !predrawn_drop[pos - 1];
                }
                break;
            }
            case ShedStrategy::random:
                keep = !predrawn_drop[pos - 1];
                break;
            case ShedStrategy::weighted:
            case ShedStrategy::sort:
                decided = false;
                break;
        }

        if (decided) {
            if (keep) {
                try_enqueue(s, seq, now, now, pos);
            } else {
                Event e = core.element_event(Event::Kind::drop, s, seq);
                e.reason = DropReason::shed;
                e.window_index = window_index;
                e.position = pos;
                events.push_back(std::move(e));
            }
        } else {
            std::uint8_t coeff = 0;
            if (auto cco = core.snapshot()) {
                coeff = cco->snapshot_coeff(modalities.pair_index(s.m, s.m_prime),
                                            scaled_position(pos, window_size, cco->cols) - 1);
            }
            pending.push_back(PendingElement{s, seq, now, pos, coeff});
        }

        const bool window_end = pos_in_window >= window_size;
        const bool part_end = part_size > 0 && pos_in_window % part_size == 0;
        if (window_end || part_end) {
            if (window_end && deferred) flush_pending(now);
            boundary_eval(now, part_size > 0 ? part_size : window_size);
            if (window_end) {
                pos_in_window = 0;
                ++window_index;
            }
        }
    }
    // Trailing partial window.
    if (deferred && !pending.empty())
        flush_pending(static_cast<double>(stream.empty() ? 0 : stream.back().t) * cfg.tick_ms);

    RunResult out;
    out.events = std::move(events);
    out.report = compute_metrics(out.events, cfg.to_json(), ref);
    out.diag.starvation_windows = st.starvation;
    out.diag.mre_exceed_seqs = core.mre_exceed_seqs();
    return out;
}

// ---------------------------------------------------------------------------
// Two-stage threaded pipeline (ingest+shed | match+detect).

class BoundedBuffer {
public:
    explicit BoundedBuffer(std::size_t capacity) : capacity_(capacity) {}

    std::size_t occupancy() const { return size_.load(std::memory_order_relaxed); }

    bool try_push(PendingElement item) {
        std::unique_lock<std::mutex> lock(mutex_);
        if (queue_.size() >= capacity_) return false;
        queue_.push_back(std::move(item));
        size_.store(queue_.size(), std::memory_order_relaxed);
        ready_.notify_one();
        return true;
    }

    void push_blocking(PendingElement item) {
        std::unique_lock<std::mutex> lock(mutex_);
        space_.wait(lock, [&] { return queue_.size() < capacity_; });
        queue_.push_back(std::move(item));
        size_.store(queue_.size(), std::memory_order_relaxed);
        ready_.notify_one();
    }

    bool pop(PendingElement& out) {
        std::unique_lock<std::mutex> lock(mutex_);
        ready_.wait(lock, [&] { return !queue_.empty() || closed_; });
        if (queue_.empty()) return false;
        out = std::move(queue_.front());
        queue_.pop_front();
        size_.store(queue_.size(), std::memory_order_relaxed);
        space_.notify_one();
        return true;
    }

    void close() {
        std::lock_guard<std::mutex> lock(mutex_);
        closed_ = true;
        ready_.notify_all();
    }

private:
    std::size_t capacity_;
    mutable std::mutex mutex_;
    std::condition_variable ready_, space_;
    std::deque<PendingElement> queue_;
    std::atomic<std::size_t> size_{0};
    bool closed_ = false;
};

RunResult run_threaded(const PipelineConfig& cfg, const PatternSet& patterns,
                       const ModalityTable& modalities, const EntityInterner& interner,
                       const std::vector<StreamElement>& stream, const ReferenceInfo* ref) {
    const auto& shed_cfg = cfg.shed;
    const bool unbounded = shed_cfg.strategy == ShedStrategy::none;
    std::mt19937_64 shed_rng(shed_cfg.seed);

    DetectorCore core(cfg, patterns, modalities, interner, shed_cfg.window_size);
    BoundedBuffer buffer(unbounded ? stream.size() + 1 : shed_cfg.b_max);
    std::vector<Event> ingest_events, detect_events;
    std::atomic<double> t_match_ms{cfg.service_ms};

    const auto start_time = std::chrono::steady_clock::now();
    auto now_ms = [&] {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                         start_time)
            .count();
    };

    std::thread detector([&] {
        PendingElement item;
        std::uint64_t processed = 0;
        while (buffer.pop(item)) {
            const double begin = now_ms();
            core.last_seq_hint_ = item.seq;
            const bool accepted =
                core.process(item.elem, item.seq, 0, item.position,
                             static_cast<std::uint32_t>(shed_cfg.window_size), detect_events);
            const double end = now_ms();
            const double ewma = shed_cfg.rate_ewma;
            t_match_ms.store(std::max(1e-6, ewma * (end - begin) +
                                                (1.0 - ewma) * t_match_ms.load()));
            if (accepted) {
                Event e = core.element_event(Event::Kind::accept, item.elem, item.seq);
                e.arrive_ms = item.arrive_ms;
                e.done_ms = end;
                e.position = item.position;
                detect_events.push_back(std::move(e));
                core.emit_matches(item.elem, item.seq, detect_events);
            }
            if (++processed % shed_cfg.window_size == 0)
                core.maintain_model(item.seq, detect_events);
        }
        core.maintain_model(core.last_seq_hint_, detect_events);
    });

    SheddingState st;
    st.t_match_ms = t_match_ms.load();
    st.r_match = 1000.0 / st.t_match_ms;
    double last_measure = 0;
    std::uint64_t arrivals_in_interval = 0;
    std::uint32_t pos_in_window = 0;
    std::vector<PendingElement> pending;
    const bool deferred = shed_cfg.strategy == ShedStrategy::weighted ||
                          shed_cfg.strategy == ShedStrategy::sort;

    auto forward = [&](const PendingElement& item) {
        if (unbounded) {
            buffer.push_blocking(item);
        } else if (!buffer.try_push(item)) {
            Event e = core.element_event(Event::Kind::drop, item.elem, item.seq);
            e.reason = DropReason::capacity;
            e.position = item.position;
            ingest_events.push_back(std::move(e));
        }
    };

    auto flush_pending = [&] {
        if (pending.empty()) return;
        const std::size_t b = buffer.occupancy();
        bool triggered;
        if (shed_cfg.strategy == ShedStrategy::weighted)
            triggered = static_cast<double>(b) > shed_cfg.theta_ms / st.t_match_ms + 1.0;
        else
            triggered = should_shed(b, st.alpha, shed_cfg.theta_ms, st.t_match_ms);
        std::vector<bool> drop(pending.size(), false);
        const auto k = static_cast<std::size_t>(std::llround(st.k));
        if (triggered && k > 0) {
            std::vector<std::uint8_t> coeffs(pending.size(), 0);
            if (auto cco = core.snapshot())
                for (std::size_t i = 0; i < pending.size(); ++i)
                    coeffs[i] = cco->snapshot_coeff(
                        modalities.pair_index(pending[i].elem.m, pending[i].elem.m_prime),
                        std::min<std::uint32_t>(pending[i].position,
                                                static_cast<std::uint32_t>(cco->cols)) -
                            1);
            for (std::size_t i :
                 baseline_shed(shed_cfg.strategy, coeffs, std::min(k, pending.size()),
                               shed_rng))
                drop[i] = true;
        }
        for (std::size_t i = 0; i < pending.size(); ++i) {
            if (drop[i]) {
                Event e = core.element_event(Event::Kind::drop, pending[i].elem,
                                             pending[i].seq);
                e.reason = DropReason::shed;
                e.position = pending[i].position;
                ingest_events.push_back(std::move(e));
            } else {
                forward(pending[i]);
            }
        }
        pending.clear();
    };

    for (std::uint64_t seq = 1; seq <= stream.size(); ++seq) {
        const auto& s = stream[seq - 1];
        const double now = now_ms();
        st.t_match_ms = t_match_ms.load();
        st.r_match = 1000.0 / st.t_match_ms;
        if (now - last_measure >= shed_cfg.measure_interval_ms) {
            const double inst =
                static_cast<double>(arrivals_in_interval) / ((now - last_measure) / 1000.0);
            st.r = shed_cfg.rate_ewma * inst + (1.0 - shed_cfg.rate_ewma) * st.r;
            st.k = compute_k(st.r, st.r_match, shed_cfg.window_size, buffer.occupancy(),
                             shed_cfg.b_max);
            st.alpha = st.k / static_cast<double>(shed_cfg.window_size);
            arrivals_in_interval = 0;
            last_measure = now;
        }
        ++arrivals_in_interval;
        const std::uint32_t pos = ++pos_in_window;

        if (deferred) {
            pending.push_back(PendingElement{s, seq, now, pos, 0});
        } else {
            bool keep = true;
            if (shed_cfg.strategy == ShedStrategy::coefficient) {
                if (auto cco = core.snapshot())
                    keep = keep_element(st, *cco, modalities.pair_index(s.m, s.m_prime),
                                        std::min<std::uint32_t>(
                                            pos, static_cast<std::uint32_t>(cco->cols)));
            } else if (shed_cfg.strategy == ShedStrategy::random &&
                       static_cast<double>(buffer.occupancy()) >
                           shed_cfg.theta_ms / st.t_match_ms + 1.0) {
                std::bernoulli_distribution coin(std::min(1.0, st.alpha));
                keep = !coin(shed_rng);
            }
            if (!keep) {
                Event e = core.element_event(Event::Kind::drop, s, seq);
                e.reason = DropReason::shed;
                e.position = pos;
                ingest_events.push_back(std::move(e));
            } else {
                forward(PendingElement{s, seq, now, pos, 0});
            }
        }

        if (pos_in_window >= shed_cfg.window_size) {
            pos_in_window = 0;
            if (deferred) flush_pending();
            auto cco = core.snapshot();
            st = run_window_boundary(st, cco.get(), buffer.occupancy(), shed_cfg,
                                     shed_cfg.window_size);
        }
    }
    if (deferred) flush_pending();
    buffer.close();
    detector.join();

    RunResult out;
    out.events = std::move(detect_events);
    out.events.insert(out.events.end(), ingest_events.begin(), ingest_events.end());
    std::stable_sort(out.events.begin(), out.events.end(),
                     [](const Event& a, const Event& b) { return a.seq < b.seq; });
    out.report = compute_metrics(out.events, cfg.to_json(), ref);
    out.diag.mre_exceed_seqs = core.mre_exceed_seqs();
    return out;
}

}  // namespace

RunResult run_pipeline(const PipelineConfig& cfg, const PatternSet& patterns,
                       const ModalityTable& modalities, const EntityInterner& interner,
                       const std::vector<StreamElement>& stream, const ReferenceInfo* ref) {
    cfg.validate();
    if (cfg.threads == 2)
        return run_threaded(cfg, patterns, modalities, interner, stream, ref);
    return run_simulated(cfg, patterns, modalities, interner, stream, ref);
}

RunResult reference_run(PipelineConfig cfg, const PatternSet& patterns,
                        const ModalityTable& modalities, const EntityInterner& interner,
                        const std::vector<StreamElement>& stream) {
    cfg.shed.strategy = ShedStrategy::none;
    cfg.threads = 1;
    return run_pipeline(cfg, patterns, modalities, interner, stream, nullptr);
}

ReferenceInfo reference_info_from(const RunResult& reference) {
    ReferenceInfo info;
    info.f_ref = reference.report.detection_count;
    for (const auto& e : reference.events)
        if (e.kind == Event::Kind::rumour) info.truth.insert(e.match_key);
    return info;
}

}  // namespace rumour
