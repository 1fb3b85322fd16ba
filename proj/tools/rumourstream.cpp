// Benchmark CLI: run the streaming detector over a stream file, generate
// synthetic streams, or cross-check the engine against its reference
// implementations.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "rumour/generator.hpp"
#include "rumour/pipeline.hpp"
#include "oracle/oracles.hpp"

namespace {

using namespace rumour;

int log_level() {
    const char* env = std::getenv("RUMOURSTREAM_LOG");
    if (env == nullptr) return 1;
    const std::string v(env);
    if (v == "quiet") return 0;
    if (v == "debug") return 2;
    return 1;
}

struct RunOptions {
    std::string patterns_path;
    std::string stream_path;
    std::string metrics_out;
    std::string event_log;
    std::string shedder = "coefficient";
    std::string detector = "ground";
    std::string interval_mode = "whole-window";
    std::string w_bar_mode = "max-seen";
    PipelineConfig cfg;
    bool reference = false;
    bool feedback_all = false;
    std::size_t window_min = 0, window_max = 0;
};

int cmd_run(const RunOptions& opt) {
    auto loaded = load_patterns(opt.patterns_path);
    EntityInterner interner;
    auto stream = load_stream(opt.stream_path, loaded.modalities, interner);

    PipelineConfig cfg = opt.cfg;
    cfg.shed.strategy = shed_strategy_from_string(opt.shedder);
    cfg.detector = detector_mode_from_string(opt.detector);
    cfg.shed.interval_mode = opt.interval_mode == "variable-parts"
                                 ? IntervalMode::variable_parts
                                 : IntervalMode::whole_window;
    cfg.feedback_rumours_only = !opt.feedback_all;
    cfg.window_min = opt.window_min;
    cfg.window_max = opt.window_max;
    if (opt.w_bar_mode == "fixed") cfg.w_bar_fixed = true;
    else if (opt.w_bar_mode != "max-seen")
        throw ConfigError("unknown w-bar mode: " + opt.w_bar_mode);
    cfg.validate();

    ReferenceInfo ref;
    const ReferenceInfo* ref_ptr = nullptr;
    if (opt.reference) {
        if (log_level() >= 1) std::cerr << "running reference (no shedding) pass\n";
        auto ref_result = reference_run(cfg, *loaded.set, loaded.modalities, interner, stream);
        ref = reference_info_from(ref_result);
        ref_ptr = &ref;
    }

    auto result = run_pipeline(cfg, *loaded.set, loaded.modalities, interner, stream, ref_ptr);

    if (!opt.event_log.empty()) {
        std::ofstream out(opt.event_log);
        if (!out) throw ConfigError("cannot open event log: " + opt.event_log);
        write_event_log(out, result.events);
    }
    const auto report = result.report.to_json().dump(2);
    if (!opt.metrics_out.empty()) {
        std::ofstream out(opt.metrics_out);
        if (!out) throw ConfigError("cannot open metrics file: " + opt.metrics_out);
        out << report << '\n';
    } else {
        std::cout << report << '\n';
    }
    if (log_level() >= 1) {
        std::cerr << "elements=" << result.report.total_elements
                  << " accepted=" << result.report.accepted
                  << " shed_ratio=" << result.report.shedding_ratio
                  << " rumours=" << result.report.detection_count
                  << " max_latency_ms=" << result.report.latency.max << '\n';
    }
    return 0;
}

struct GenOptions {
    std::string patterns_path;
    std::string out_path;
    SyntheticStreamSpec spec;
    std::string rate_profile = "constant";
    std::string coeff_dist = "normal";
    std::string rumour_mix, rumour_mix_post;
};

std::vector<double> parse_mix(const std::string& csv) {
    std::vector<double> mix;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) mix.push_back(std::stod(item));
    return mix;
}

int cmd_gen(const GenOptions& opt) {
    auto loaded = load_patterns(opt.patterns_path);
    SyntheticStreamSpec spec = opt.spec;
    spec.rate_profile = rate_profile_from_string(opt.rate_profile);
    spec.coeff_dist = coeff_dist_from_string(opt.coeff_dist);
    if (!opt.rumour_mix.empty()) spec.rumour_mix = parse_mix(opt.rumour_mix);
    if (!opt.rumour_mix_post.empty()) spec.rumour_mix_post = parse_mix(opt.rumour_mix_post);

    EntityInterner interner;
    auto stream = generate_stream(spec, *loaded.set, loaded.modalities, interner);
    write_stream_file(opt.out_path, stream, loaded.modalities, interner);
    if (log_level() >= 1) {
        std::size_t labeled = 0;
        for (const auto& e : stream)
            if (e.rumour_label.value_or(false)) ++labeled;
        std::cerr << "wrote " << stream.size() << " elements (" << labeled
                  << " labeled) to " << opt.out_path << '\n';
    }
    return 0;
}

struct OracleOptions {
    std::string patterns_path;
    std::string mode = "matcher";
    std::size_t trials = 20;
    std::uint64_t seed = 7;
};

int oracle_matcher(const OracleOptions& opt) {
    auto loaded = load_patterns(opt.patterns_path);
    std::mt19937_64 rng(opt.seed);
    for (std::size_t trial = 0; trial < opt.trials; ++trial) {
        SyntheticStreamSpec spec;
        spec.entity_count = 40;
        spec.length = 200;
        spec.rumour_rate = 0.3;
        spec.seed = rng();
        EntityInterner interner;
        auto stream = generate_stream(spec, *loaded.set, loaded.modalities, interner);

        SocialGraph graph;
        PIndex index(loaded.modalities.size());
        oracle::MiniGraph mini;
        std::set<std::pair<std::uint32_t, std::vector<EntityId>>> streaming;
        std::uint64_t seq = 0;
        for (const auto& s : stream) {
            ++seq;
            auto res = process_element(graph, index, *loaded.set, s, seq);
            for (auto& m : res.matches) streaming.insert({m.pattern_index, m.assignment});
            mini.apply(s);
        }
        std::set<std::pair<std::uint32_t, std::vector<EntityId>>> reference;
        for (std::uint32_t pi = 0; pi < loaded.set->patterns().size(); ++pi)
            for (auto& a : oracle::enumerate_matches(mini, loaded.set->pattern(pi)))
                reference.insert({pi, a});
        if (streaming != reference) {
            std::cout << "matcher oracle: MISMATCH in trial " << trial << " (streaming "
                      << streaming.size() << " vs reference " << reference.size() << ")\n";
            return 1;
        }
    }
    std::cout << "matcher oracle: equal on " << opt.trials << " random streams\n";
    return 0;
}

int oracle_cco(const OracleOptions& opt) {
    std::mt19937_64 rng(opt.seed);
    double worst = 0;
    for (std::size_t trial = 0; trial < opt.trials; ++trial) {
        std::uniform_int_distribution<std::size_t> rows(1, 20), cols(1, 200);
        CoefficientMatrix cm(rows(rng), cols(rng));
        std::uniform_int_distribution<std::uint32_t> pair(
            0, static_cast<std::uint32_t>(cm.rows() - 1)),
            pos(1, static_cast<std::uint32_t>(cm.cols()));
        std::uniform_int_distribution<int> hits(0, 500);
        const int n = hits(rng);
        for (int i = 0; i < n; ++i) cm.increment(pair(rng), pos(rng));
        const auto fast = build_cco(cm);
        const auto slow = oracle::cco_reference(cm);
        for (std::size_t pi = 0; pi <= 100; ++pi)
            worst = std::max(worst, std::abs(fast.cumulative[pi] - slow[pi]));
    }
    std::cout << "cco oracle: max deviation " << worst << " over " << opt.trials
              << " random matrices\n";
    return worst <= 1e-9 ? 0 : 1;
}

int oracle_anomaly(const OracleOptions& opt) {
    // Same feature stream through exact and sketch-backed scoring; compare
    // the flag decisions element by element.
    std::mt19937_64 rng(opt.seed);
    AnomalyParams exact_params, sketch_params;
    exact_params.exact = true;
    sketch_params.exact = false;
    FeatureSketchPair exact_counts(exact_params), sketch_counts(sketch_params);
    ElementScoreState exact_ranks(exact_params), sketch_ranks(sketch_params);

    const std::size_t elements = 60, ticks = 150;
    std::poisson_distribution<int> value(20);
    std::uint64_t disagreements = 0, flags = 0, total = 0;
    for (std::size_t tick = 1; tick <= ticks; ++tick) {
        for (std::size_t el = 0; el < elements; ++el) {
            const auto key = detail::mix64(el + 1);
            const auto fkey = element_keys::feature(key, 0);
            const auto v = static_cast<std::uint64_t>(value(rng));
            exact_counts.observe(fkey, v, tick);
            sketch_counts.observe(fkey, v, tick);
            auto flag = [&](FeatureSketchPair& counts, ElementScoreState& ranks) {
                double p = 1.0;
                if (tick >= 2) {
                    auto x2 = feature_chi_square(
                        static_cast<double>(counts.current(fkey, tick)),
                        static_cast<double>(counts.cumulative(fkey)), tick);
                    if (x2) p = chi_square_pvalue(*x2);
                }
                return ranks.score(key, p) < 0.05;
            };
            const bool fe = flag(exact_counts, exact_ranks);
            const bool fs = flag(sketch_counts, sketch_ranks);
            ++total;
            if (fe) ++flags;
            if (fe != fs) ++disagreements;
        }
    }
    const double rate = static_cast<double>(disagreements) / static_cast<double>(total);
    std::cout << "anomaly oracle: flag disagreement rate " << rate << " (exact flags "
              << flags << "/" << total << ")\n";
    return rate <= 0.01 ? 0 : 1;
}

int cmd_oracle(const OracleOptions& opt) {
    if (opt.mode == "matcher") return oracle_matcher(opt);
    if (opt.mode == "cco") return oracle_cco(opt);
    if (opt.mode == "anomaly") return oracle_anomaly(opt);
    throw ConfigError("unknown oracle mode: " + opt.mode);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Streaming rumour detection benchmark"};
    app.require_subcommand(1);

    RunOptions run_opt;
    auto* run = app.add_subcommand("run", "Process a stream file");
    run->add_option("--patterns", run_opt.patterns_path, "Pattern catalogue (JSON)")
        ->required();
    run->add_option("--stream", run_opt.stream_path, "Stream file")->required();
    run->add_option("--theta-ms", run_opt.cfg.shed.theta_ms, "Latency threshold (ms)");
    run->add_option("--window-size", run_opt.cfg.shed.window_size, "Window size");
    run->add_option("--buffer-max", run_opt.cfg.shed.b_max, "Input buffer capacity");
    run->add_option("--shedder", run_opt.shedder,
                    "coefficient|random|weighted|sort|none");
    run->add_option("--detector", run_opt.detector, "ground|anomaly");
    run->add_option("--seed", run_opt.cfg.shed.seed, "Shedder rng seed");
    run->add_option("--metrics-out", run_opt.metrics_out, "Metrics report path");
    run->add_flag("--reference", run_opt.reference,
                  "Also run the no-shedding reference pass");
    run->add_option("--event-log", run_opt.event_log, "Event log path (JSON lines)");
    run->add_option("--service-ms", run_opt.cfg.service_ms,
                    "Simulated per-element matching delay");
    run->add_option("--tick-ms", run_opt.cfg.tick_ms, "Milliseconds per stream tick");
    run->add_option("--measure-interval-ms", run_opt.cfg.shed.measure_interval_ms,
                    "Rate measurement interval");
    run->add_option("--interval-mode", run_opt.interval_mode,
                    "whole-window|variable-parts");
    run->add_option("--threads", run_opt.cfg.threads, "1 (simulated) or 2 (staged)");
    run->add_option("--alpha-sig", run_opt.cfg.significance.alpha_sig,
                    "Element significance level");
    run->add_option("--confidence", run_opt.cfg.significance.confidence_threshold,
                    "Subgraph admission confidence");
    run->add_option("--anomaly-eps", run_opt.cfg.anomaly.eps, "Sketch eps");
    run->add_option("--anomaly-delta", run_opt.cfg.anomaly.delta, "Sketch delta");
    run->add_option("--value-resolution", run_opt.cfg.anomaly.value_resolution,
                    "Scaling for real-valued features");
    run->add_flag("--exact-anomaly", run_opt.cfg.anomaly.exact,
                  "Exact counters instead of sketches");
    run->add_option("--drift-threshold", run_opt.cfg.drift_threshold,
                    "Coefficient drift retrain threshold");
    run->add_flag("--feedback-all", run_opt.feedback_all,
                  "Coefficient feedback from all matches, not only rumours");
    run->add_option("--window-min", run_opt.window_min, "Variable window minimum");
    run->add_option("--window-max", run_opt.window_max, "Variable window maximum");
    run->add_option("--w-bar-mode", run_opt.w_bar_mode,
                    "Estimated window size: max-seen|fixed");

    GenOptions gen_opt;
    auto* gen = app.add_subcommand("gen", "Generate a synthetic stream");
    gen->add_option("--patterns", gen_opt.patterns_path, "Pattern catalogue (JSON)")
        ->required();
    gen->add_option("--out", gen_opt.out_path, "Output stream file")->required();
    gen->add_option("--entities", gen_opt.spec.entity_count, "Initial entity pool");
    gen->add_option("--length", gen_opt.spec.length, "Stream length");
    gen->add_option("--rate-profile", gen_opt.rate_profile, "constant|bursty|skewed");
    gen->add_option("--burst-factor", gen_opt.spec.burst_factor, "Burst contrast");
    gen->add_option("--rumour-rate", gen_opt.spec.rumour_rate,
                    "Target labeled-element fraction");
    gen->add_option("--coeff-dist", gen_opt.coeff_dist, "normal|skewed");
    gen->add_option("--seed", gen_opt.spec.seed, "Generator seed");
    gen->add_option("--shift-at", gen_opt.spec.shift_at,
                    "Fraction of the stream where the rumour mix flips");
    gen->add_option("--rumour-mix", gen_opt.rumour_mix,
                    "Per-pattern weights, comma separated");
    gen->add_option("--rumour-mix-post", gen_opt.rumour_mix_post,
                    "Per-pattern weights after the shift");
    gen->add_option("--degree-cap", gen_opt.spec.degree_cap,
                    "Bound background degree (0 = uncapped)");

    OracleOptions oracle_opt;
    auto* orc = app.add_subcommand("oracle", "Cross-check against references");
    orc->add_option("--patterns", oracle_opt.patterns_path, "Pattern catalogue (JSON)");
    orc->add_option("--mode", oracle_opt.mode, "matcher|cco|anomaly")->required();
    orc->add_option("--trials", oracle_opt.trials, "Number of trials");
    orc->add_option("--seed", oracle_opt.seed, "Oracle rng seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (run->parsed()) return cmd_run(run_opt);
        if (gen->parsed()) return cmd_gen(gen_opt);
        if (orc->parsed()) {
            if (oracle_opt.mode == "matcher" && oracle_opt.patterns_path.empty())
                throw ConfigError("oracle --mode matcher needs --patterns");
            return cmd_oracle(oracle_opt);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
