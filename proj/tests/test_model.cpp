#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "rumour/graph.hpp"
#include "testsupport.hpp"

using namespace rumour;
using test::elem;

TEST_CASE("apply adds entities and relation") {
    auto f = test::make_fixture();
    SocialGraph g;
    auto r = g.apply(f.elements[0]);
    REQUIRE(r.ok());
    CHECK(r.summary.u_new);
    CHECK(r.summary.u_prime_new);
    CHECK(r.summary.edge_added);
    CHECK(g.modality_of(f.v1) == f.user);
    CHECK(g.modality_of(f.v2) == f.tweet);
    CHECK(g.has_edge(f.v1, f.v2));
    CHECK(g.t_now() == 1);
}

TEST_CASE("duplicate relation is rejected and counted") {
    auto f = test::make_fixture();
    SocialGraph g;
    REQUIRE(g.apply(f.elements[0]).ok());
    auto r = g.apply(f.elements[0]);
    REQUIRE_FALSE(r.ok());
    CHECK(r.error == ApplyError::duplicate_edge);
    CHECK(g.duplicates_rejected() == 1);
    CHECK(g.edge_count() == 1);
}

TEST_CASE("known entity joined by a new one") {
    auto f = test::make_fixture();
    SocialGraph g;
    REQUIRE(g.apply(elem(f.v1, f.v2, f.user, f.tweet, 1)).ok());
    auto r = g.apply(elem(f.v1, f.v3, f.user, f.tweet, 2));
    REQUIRE(r.ok());
    CHECK_FALSE(r.summary.u_new);
    CHECK(r.summary.u_prime_new);
    CHECK(r.summary.edge_added);
}

TEST_CASE("modality conflicts and self-loops rejected") {
    auto f = test::make_fixture();
    SocialGraph g;
    REQUIRE(g.apply(elem(f.v1, f.v2, f.user, f.tweet, 1)).ok());
    auto conflict = g.apply(elem(f.v1, f.v4, f.tweet, f.hashtag, 2));
    CHECK(conflict.error == ApplyError::modality_conflict);
    auto loop = g.apply(elem(f.v5, f.v5, f.user, f.user, 3));
    CHECK(loop.error == ApplyError::self_loop);
    CHECK(g.conflicts_rejected() == 1);
    CHECK(g.self_loops_rejected() == 1);
    // rejected elements leave no trace
    CHECK_FALSE(g.has_vertex(f.v4));
    CHECK_FALSE(g.has_vertex(f.v5));
}

TEST_CASE("window positions are arrival ranks") {
    auto f = test::make_fixture();
    WindowState w(100);
    CHECK(w.append(elem(f.v1, f.v2, f.user, f.tweet, 1)) == 1);

    WindowState big(100);
    for (std::uint64_t i = 1; i <= 57; ++i) {
        auto e = elem(EntityId{i}, EntityId{i + 1000}, f.user, f.tweet, i);
        CHECK(big.append(e) == i);
    }

    // Tie on timestamps: the latecomer at t=2 counts everything <= 2.
    WindowState tie(100);
    tie.append(elem(f.v1, f.v2, f.user, f.tweet, 1));
    tie.append(elem(f.v1, f.v3, f.user, f.tweet, 2));
    auto late = elem(f.v2, f.v3, f.tweet, f.tweet, 2);
    CHECK(window_position(tie, late) == 3);
}

TEST_CASE("replay matches batch construction regardless of order") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        auto stream = test::random_stream(rng, 3, 15, 60);
        SocialGraph ordered;
        for (const auto& s : stream) REQUIRE(ordered.apply(s).ok());

        auto shuffled = stream;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        SocialGraph batch;
        for (const auto& s : shuffled) REQUIRE(batch.apply(s).ok());

        CHECK(ordered.vertex_count() == batch.vertex_count());
        CHECK(ordered.edge_count() == batch.edge_count());
        CHECK(ordered.edge_count() == stream.size());
        for (const auto& s : stream) {
            CHECK(batch.has_edge(s.u, s.u_prime));
            CHECK(ordered.modality_of(s.u) == batch.modality_of(s.u));
        }
    }
}

TEST_CASE("vertex and edge counts equal accepted distinct entities and elements") {
    std::mt19937_64 rng(23);
    auto stream = test::random_stream(rng, 4, 20, 80);
    SocialGraph g;
    std::set<std::uint64_t> entities;
    for (const auto& s : stream) {
        REQUIRE(g.apply(s).ok());
        entities.insert(s.u.value);
        entities.insert(s.u_prime.value);
    }
    CHECK(g.vertex_count() == entities.size());
    CHECK(g.edge_count() == stream.size());
}
