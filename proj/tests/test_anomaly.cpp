#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <unordered_map>

#include "rumour/anomaly.hpp"
#include "rumour/cm_sketch.hpp"
#include "oracle/oracles.hpp"
#include "testsupport.hpp"

using namespace rumour;

TEST_CASE("sketch point updates and queries") {
    CmSketch sk(0.01, 0.01, 1);
    sk.update(42, 5);
    CHECK(sk.estimate(42) == 5);
    CHECK(sk.width() == 272);  // ceil(e / 0.01)
    CHECK(sk.depth() == 5);    // ceil(ln 100)

    sk.update(43, 7);
    CHECK(sk.estimate(42) == 5);
    CHECK(sk.estimate(43) == 7);
}

TEST_CASE("sketch error bound against an exact map") {
    std::mt19937_64 rng(99);
    int good_trials = 0;
    const int trials = 100;
    for (int trial = 0; trial < trials; ++trial) {
        CmSketch sk(0.01, 0.01, rng());
        std::unordered_map<std::uint64_t, std::uint64_t> exact;
        std::uniform_int_distribution<std::uint64_t> key(0, 999);
        std::uniform_int_distribution<std::uint64_t> amount(1, 5);
        std::uint64_t mass = 0;
        for (int i = 0; i < 10000; ++i) {
            auto k = key(rng);
            auto v = amount(rng);
            sk.update(k, v);
            exact[k] += v;
            mass += v;
        }
        bool ok = true;
        const double bound = 0.01 * static_cast<double>(mass);
        for (const auto& [k, v] : exact) {
            const auto est = sk.estimate(k);
            if (est < v) ok = false;  // never underestimates
            if (static_cast<double>(est - v) > bound) ok = false;
        }
        if (ok) ++good_trials;
    }
    CHECK(good_trials >= 99);
}

TEST_CASE("feature statistic matches hand-derived values") {
    CHECK(*feature_chi_square(2.0, 8.0, 4) == doctest::Approx(0.0));
    CHECK(*feature_chi_square(5.0, 8.0, 4) == doctest::Approx(6.0));
    CHECK(*feature_chi_square(0.0, 10.0, 10) == doctest::Approx(100.0 / 90.0).epsilon(1e-9));
    CHECK_FALSE(feature_chi_square(1.0, 0.0, 5).has_value());
    CHECK_FALSE(feature_chi_square(1.0, 4.0, 1).has_value());
}

TEST_CASE("the algebraic forms of the statistic agree") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> f_dist(0.0, 500.0);
    std::uniform_int_distribution<std::uint64_t> t_dist(2, 10000);
    for (int i = 0; i < 10000; ++i) {
        const std::uint64_t t = t_dist(rng);
        const double f = f_dist(rng);
        const double s = f + f_dist(rng) + 1e-6;
        const double reduced = *feature_chi_square(f, s, t);
        const double two_term = *oracle::chi_square_two_term(f, s, t);
        // step-wise variant of the reduced form
        const double td = static_cast<double>(t);
        const double stepwise =
            (f - s / td) * (f - s / td) * (td / s) * (td / (td - 1.0));
        CHECK(std::abs(reduced - two_term) <= 1e-9 * std::max(1.0, std::abs(reduced)));
        CHECK(std::abs(reduced - stepwise) <= 1e-9 * std::max(1.0, std::abs(reduced)));
    }
}

TEST_CASE("p-values follow the chi-square(1) survival function") {
    CHECK(chi_square_pvalue(0.0) == 1.0);
    CHECK(chi_square_pvalue(3.841) == doctest::Approx(0.05).epsilon(2e-3));
    CHECK(chi_square_pvalue(6.635) == doctest::Approx(0.01).epsilon(2e-3));
    // quadrature cross-check and monotonicity
    double prev = 1.1;
    for (double x : {0.1, 0.5, 1.0, 2.0, 3.841, 6.635, 10.0, 20.0}) {
        const double p = chi_square_pvalue(x);
        CHECK(p == doctest::Approx(oracle::chi1_survival_quadrature(x)).epsilon(1e-6));
        CHECK(p < prev);
        prev = p;
    }
}

TEST_CASE("rank score against explicit histories") {
    AnomalyParams exact;
    exact.exact = true;

    ElementScoreState cold(exact);
    CHECK(cold.score(7, 0.3) == 1.0);  // no history yet

    ElementScoreState flat(exact);
    for (int i = 0; i < 3; ++i) flat.score(7, 0.5);
    CHECK(flat.score(7, 0.1) == 0.0);

    ElementScoreState mid(exact);
    for (double p : {0.1, 0.2, 0.3, 0.4}) mid.score(7, p);
    CHECK(mid.score(7, 0.25) == doctest::Approx(0.5));

    ElementScoreState equal(exact);
    for (int i = 0; i < 5; ++i) equal.score(7, 0.42);
    CHECK(equal.score(7, 0.42) == 1.0);
}

TEST_CASE("sketched rank scores stay close to the literal ranks") {
    std::mt19937_64 rng(8);
    AnomalyParams sketch_params;  // defaults, sketch mode
    ElementScoreState sketched(sketch_params);
    std::unordered_map<std::uint64_t, std::vector<double>> history;

    std::uniform_real_distribution<double> pdist(0.0, 1.0);
    double total_dev = 0;
    std::size_t samples = 0;
    for (int tick = 0; tick < 1000; ++tick) {
        for (std::uint64_t el = 1; el <= 20; ++el) {
            const double p = pdist(rng);
            auto& h = history[el];
            double literal = 1.0;
            if (!h.empty()) {
                std::size_t leq = 0;
                for (double x : h)
                    if (x <= p) ++leq;
                literal = static_cast<double>(leq) / static_cast<double>(h.size());
            }
            const double approx = sketched.score(el, p);
            h.push_back(p);
            if (h.size() > 1) {
                total_dev += std::abs(approx - literal);
                ++samples;
            }
        }
    }
    CHECK(total_dev / static_cast<double>(samples) <= 0.02);
}

TEST_CASE("subgraph admission rule") {
    auto f = test::make_fixture();
    // Path pattern: U -> T -> H gives five elements (3 entities, 2 relations).
    RumourPattern path("path", {f.user, f.tweet, f.hashtag},
                       {PatternEdge{0, 1}, PatternEdge{1, 2}}, 4);
    PatternMatch m{0, {f.v1, f.v3, f.v4}, 1};
    SignificanceConfig cfg;  // alpha 0.05, confidence 0.95

    auto with_scores = [&](std::unordered_map<std::uint64_t, double> scores) {
        return subgraph_score(
            path, m,
            [&](std::uint64_t key) {
                auto it = scores.find(key);
                return it == scores.end() ? 1.0 : it->second;
            },
            cfg);
    };

    const auto ku = element_keys::entity(f.v1);
    const auto kt = element_keys::entity(f.v3);
    const auto kh = element_keys::entity(f.v4);
    const auto r1 = element_keys::relation(f.v1, f.v3);
    const auto r2 = element_keys::relation(f.v3, f.v4);

    SUBCASE("all significant") {
        auto s = with_scores({{ku, 0.01}, {kt, 0.01}, {kh, 0.01}, {r1, 0.01}, {r2, 0.01}});
        CHECK(s.score == 1.0);
        CHECK(s.is_rumour);
    }
    SUBCASE("nothing significant") {
        auto s = with_scores({});
        CHECK(s.score == 0.0);
        CHECK_FALSE(s.is_rumour);
    }
    SUBCASE("insignificant relation admitted between two significant entities") {
        auto s = with_scores({{ku, 0.01}, {kt, 0.01}, {kh, 0.01}, {r1, 0.01}, {r2, 0.9}});
        CHECK(s.score == 1.0);
        CHECK(s.is_rumour);
    }
    SUBCASE("a single significant neighbour does not admit") {
        auto s = with_scores({{ku, 0.01}, {kt, 0.01}, {kh, 0.9}, {r1, 0.01}, {r2, 0.9}});
        CHECK(s.score == doctest::Approx(0.6));
        CHECK_FALSE(s.is_rumour);
    }
}

TEST_CASE("stationary features flag near the significance level") {
    // Poisson counts with a stable mean; per-feature p-values should flag at
    // roughly the significance level once the history has settled.
    std::mt19937_64 rng(12);
    std::poisson_distribution<int> value(30);
    AnomalyParams params;
    params.exact = true;
    FeatureSketchPair counts(params);
    const std::uint64_t key = element_keys::feature(element_keys::entity(EntityId{1}), 0);

    std::uint64_t flags = 0, total = 0;
    const std::uint64_t ticks = 6000, burn_in = 200;
    for (std::uint64_t t = 1; t <= ticks; ++t) {
        const auto v = static_cast<std::uint64_t>(value(rng));
        counts.observe(key, v, t);
        if (t <= burn_in) continue;
        auto x2 = feature_chi_square(static_cast<double>(counts.current(key, t)),
                                     static_cast<double>(counts.cumulative(key)), t);
        REQUIRE(x2.has_value());
        ++total;
        if (chi_square_pvalue(*x2) < 0.05) ++flags;
    }
    const double rate = static_cast<double>(flags) / static_cast<double>(total);
    CHECK(rate > 0.03);
    CHECK(rate < 0.07);
}

TEST_CASE("exact and sketched scoring disagree on few flags") {
    std::mt19937_64 rng(21);
    AnomalyParams exact_params, sketch_params;
    exact_params.exact = true;
    FeatureSketchPair ec(exact_params), sc(sketch_params);
    ElementScoreState er(exact_params), sr(sketch_params);

    std::poisson_distribution<int> value(20);
    std::uint64_t diff = 0, total = 0;
    for (std::uint64_t tick = 1; tick <= 150; ++tick) {
        for (std::uint64_t el = 1; el <= 60; ++el) {
            const auto key = detail::mix64(el);
            const auto fkey = element_keys::feature(key, 0);
            const auto v = static_cast<std::uint64_t>(value(rng));
            ec.observe(fkey, v, tick);
            sc.observe(fkey, v, tick);
            auto flag = [&](FeatureSketchPair& c, ElementScoreState& r) {
                double p = 1.0;
                if (tick >= 2) {
                    auto x2 = feature_chi_square(static_cast<double>(c.current(fkey, tick)),
                                                 static_cast<double>(c.cumulative(fkey)), tick);
                    if (x2) p = chi_square_pvalue(*x2);
                }
                return r.score(key, p) < 0.05;
            };
            const bool fe = flag(ec, er);
            const bool fs = flag(sc, sr);
            ++total;
            if (fe != fs) ++diff;
        }
    }
    CHECK(static_cast<double>(diff) / static_cast<double>(total) <= 0.01);
}
