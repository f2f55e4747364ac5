#include <doctest.h>

#include <algorithm>
#include <random>

#include "../oracle/naive_estimator.hpp"
#include "rainclean/background.hpp"
#include "rainclean/error.hpp"
#include "support.hpp"

using namespace rainclean;

namespace {

using Trace = std::vector<std::uint8_t>;

std::vector<int> widen(const Trace& t) { return {t.begin(), t.end()}; }

// Random traces biased towards repeats so modes and ties are common.
Trace random_trace(std::mt19937_64& rng, std::size_t n) {
    std::uniform_int_distribution<int> palette_size(1, 6);
    std::uniform_int_distribution<int> value(0, 255);
    std::vector<std::uint8_t> palette(static_cast<std::size_t>(palette_size(rng)));
    for (auto& v : palette) {
        v = static_cast<std::uint8_t>(value(rng));
    }
    std::uniform_int_distribution<std::size_t> pick(0, palette.size() - 1);
    Trace t(n);
    for (auto& v : t) {
        v = palette[pick(rng)];
    }
    return t;
}

Sequence sequence_from(const std::vector<Trace>& per_site, int w, int h, int c) {
    const std::size_t n = per_site.front().size();
    std::vector<Frame> frames(n, Frame(w, h, c));
    for (std::size_t s = 0; s < per_site.size(); ++s) {
        for (std::size_t k = 0; k < n; ++k) {
            frames[k].data[s] = per_site[s][k];
        }
    }
    return Sequence(std::move(frames));
}

} // namespace

TEST_SUITE("background") {

TEST_CASE("compute_mode examples") {
    const ModeStats constant = compute_mode(Trace{7, 7, 7, 7});
    CHECK(constant.mode == 7);
    CHECK(constant.mode_count == 4);
    CHECK(constant.r_min() == 0.0);
    CHECK(constant.r_max() == 0.0);

    const ModeStats skewed = compute_mode(Trace{10, 10, 12, 200});
    CHECK(skewed.mode == 10);
    CHECK(skewed.mode_count == 2);
    CHECK(skewed.r_min() == 0.0);
    CHECK(skewed.r_max() == 50.0);

    CHECK(compute_mode(Trace{5, 5, 9, 9}).mode == 5);
    CHECK(compute_mode(Trace{9, 9, 5, 5}).mode == 5);
    CHECK_THROWS_AS(compute_mode(Trace{}), Error);
}

TEST_CASE("mode_span examples") {
    const PercentSpan constant = mode_span(compute_mode(Trace{7, 7, 7, 7}));
    CHECK(constant.low == 0.0);
    CHECK(constant.high == 100.0);

    const PercentSpan skewed = mode_span(compute_mode(Trace{10, 10, 12, 200}));
    CHECK(skewed.low == 0.0);
    CHECK(skewed.high == 50.0);

    const ModeStats middle = compute_mode(Trace{1, 2, 2, 2, 3});
    CHECK(mode_span(middle).low == 20.0);
    CHECK(mode_span(middle).high == 80.0);
    CHECK_FALSE(span_contains(middle, 20));
    CHECK(span_contains(middle, 21));
    CHECK(span_contains(middle, 80));
    CHECK_FALSE(span_contains(middle, 81));
}

TEST_CASE("select_global_percentile examples") {
    // Span (0, 50].
    const ModeStats a = compute_mode(Trace{10, 10, 12, 200});
    GlobalPercentile one = select_global_percentile(std::vector<ModeStats>{a});
    CHECK(one.p_hat == 1);
    for (int p = 0; p <= 100; ++p) {
        CHECK(one.vote.counts[p] == (p >= 1 && p <= 50 ? 1u : 0u));
    }

    // Span (25, 75].
    const ModeStats b = compute_mode(Trace{1, 5, 5, 9});
    REQUIRE(mode_span(b).low == 25.0);
    REQUIRE(mode_span(b).high == 75.0);
    GlobalPercentile two = select_global_percentile(std::vector<ModeStats>{a, b});
    CHECK(two.p_hat == 26);
    CHECK(two.vote.counts[26] == 2);
    CHECK(*std::max_element(two.vote.counts.begin(), two.vote.counts.end()) == 2);

    const ModeStats flat = compute_mode(Trace{3, 3, 3});
    GlobalPercentile all = select_global_percentile(std::vector<ModeStats>(9, flat));
    CHECK(all.p_hat == 1);
    CHECK(all.vote.counts[1] == 9);
    CHECK(all.vote.counts[0] == 0);
}

TEST_CASE("value_at_percentile examples") {
    const Trace t{10, 10, 12, 200};
    CHECK(value_at_percentile(t, 50) == 10);
    CHECK(value_at_percentile(t, 100) == 200);
    CHECK(value_at_percentile(Trace{9, 4, 7}, 0) == 4);
    CHECK_THROWS_AS(value_at_percentile(t, 101), Error);
    CHECK_THROWS_AS(value_at_percentile(t, -1), Error);
    CHECK_THROWS_AS(value_at_percentile(Trace{}, 10), Error);
}

TEST_CASE("estimate_background on identical frames returns the frame") {
    std::mt19937_64 rng(5);
    const Frame f = test_support::random_frame(rng, 9, 7, 3);
    const Sequence seq({f, f, f, f});
    const CandidateClean c = estimate_background(seq);
    CHECK(c.image.data == f.data);
    CHECK(c.p_hat == 1);
    CHECK(c.coverage == 1.0);
    CHECK(c.n_used == 4);
    CHECK(mode_filter_baseline(seq).data == f.data);
}

TEST_CASE("mode filter on skewed traces") {
    const Sequence seq = sequence_from(std::vector<Trace>(12, Trace{10, 12, 10, 200}), 2, 2, 3);
    const Frame m = mode_filter_baseline(seq);
    CHECK(std::all_of(m.data.begin(), m.data.end(), [](std::uint8_t v) { return v == 10; }));
}

TEST_CASE("empty sequence is rejected") {
    CHECK_THROWS_AS(estimate_background(Sequence{}), Error);
    CHECK_THROWS_AS(select_global_percentile(std::vector<ModeStats>{}), Error);
}

TEST_CASE("property: mode membership and maximal count") {
    std::mt19937_64 rng(101);
    std::uniform_int_distribution<std::size_t> len(1, 32);
    for (int iter = 0; iter < 2000; ++iter) {
        const Trace t = random_trace(rng, len(rng));
        const ModeStats s = compute_mode(t);
        CHECK(std::find(t.begin(), t.end(), s.mode) != t.end());
        const auto mode_count = static_cast<std::uint32_t>(std::count(t.begin(), t.end(), s.mode));
        CHECK(s.mode_count == mode_count);
        for (std::uint8_t v : t) {
            CHECK(static_cast<std::uint32_t>(std::count(t.begin(), t.end(), v)) <= mode_count);
        }
        CHECK(s.below + s.mode_count + s.above == t.size());
    }
}

TEST_CASE("property: span correctness, exhaustive over p") {
    std::mt19937_64 rng(202);
    std::uniform_int_distribution<std::size_t> len(1, 32);
    for (int iter = 0; iter < 2000; ++iter) {
        const Trace t = random_trace(rng, len(rng));
        const ModeStats s = compute_mode(t);
        const PercentSpan span = mode_span(s);
        for (int p = 0; p <= 100; ++p) {
            const bool inside = span.low < p && p <= span.high;
            CHECK(span_contains(s, p) == inside);
            if (inside) {
                CHECK(value_at_percentile(t, p) == s.mode);
            }
        }
    }
}

TEST_CASE("property: value_at_percentile is monotone in p") {
    std::mt19937_64 rng(303);
    std::uniform_int_distribution<std::size_t> len(1, 40);
    for (int iter = 0; iter < 1000; ++iter) {
        const Trace t = random_trace(rng, len(rng));
        std::uint8_t prev = 0;
        for (int p = 0; p <= 100; ++p) {
            const std::uint8_t v = value_at_percentile(t, p);
            CHECK(v >= prev);
            CHECK(v == oracle::naive_nearest_rank(widen(t), p));
            prev = v;
        }
    }
}

TEST_CASE("property: brute-force equivalence on random fields") {
    std::mt19937_64 rng(404);
    std::uniform_int_distribution<int> dim(1, 16), chan(0, 1), frames(1, 32);
    for (int iter = 0; iter < 60; ++iter) {
        const int w = dim(rng), h = dim(rng), c = chan(rng) ? 3 : 1;
        const auto n = static_cast<std::size_t>(frames(rng));
        std::vector<Trace> traces;
        for (int s = 0; s < w * h * c; ++s) {
            traces.push_back(random_trace(rng, n));
        }
        const Sequence seq = sequence_from(traces, w, h, c);
        oracle::Field field{w, h, c, {}};
        for (const auto& f : seq.frames()) {
            field.frames.push_back(f.data);
        }
        const oracle::Result expect = oracle::naive_estimate(field);
        const auto stats = compute_mode_field(seq, {2});
        for (std::size_t s = 0; s < stats.size(); ++s) {
            CHECK(stats[s].mode == expect.stats[s].mode);
            CHECK(stats[s].r_min() == doctest::Approx(expect.stats[s].r_min));
        }
        const CandidateClean got = estimate_background(seq, {3});
        CHECK(got.p_hat == expect.p_hat);
        for (int p = 0; p <= 100; ++p) {
            CHECK(static_cast<long long>(got.vote.counts[p]) == expect.votes[p]);
        }
        CHECK(got.image.data == expect.image);
        CHECK(mode_filter_baseline(seq).data == expect.mode_image);
    }
}

TEST_CASE("property: thread count never changes the result") {
    std::mt19937_64 rng(505);
    std::vector<Frame> frames;
    for (int k = 0; k < 23; ++k) {
        frames.push_back(test_support::random_frame(rng, 61, 37, 3, 90, 110));
    }
    const Sequence seq(frames);
    const CandidateClean ref = estimate_background(seq, {1});
    for (unsigned threads : {2u, 3u, 7u, 16u}) {
        const CandidateClean c = estimate_background(seq, {threads});
        CHECK(c.image.data == ref.image.data);
        CHECK(c.vote == ref.vote);
        CHECK(c.p_hat == ref.p_hat);
    }
}

TEST_CASE("property: frame order never changes the result") {
    std::mt19937_64 rng(606);
    std::vector<Frame> frames;
    for (int k = 0; k < 17; ++k) {
        frames.push_back(test_support::random_frame(rng, 11, 9, 3, 40, 50));
    }
    const CandidateClean ref = estimate_background(Sequence(frames));
    std::shuffle(frames.begin(), frames.end(), rng);
    const CandidateClean shuffled = estimate_background(Sequence(frames));
    CHECK(shuffled.image.data == ref.image.data);
    CHECK(shuffled.vote == ref.vote);
}

TEST_CASE("exact recovery on a hand-built brightening field") {
    // Each site is clean in 7 of 10 frames; contamination only brightens.
    std::mt19937_64 rng(707);
    const Frame clean = test_support::random_frame(rng, 20, 20, 3, 0, 200);
    std::vector<Frame> frames(10, clean);
    std::uniform_int_distribution<int> bump(1, 55);
    for (std::size_t s = 0; s < clean.data.size(); ++s) {
        std::vector<std::size_t> ks{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
        std::shuffle(ks.begin(), ks.end(), rng);
        for (int r = 0; r < 3; ++r) {
            frames[ks[r]].data[s] = static_cast<std::uint8_t>(clean.data[s] + bump(rng));
        }
    }
    const CandidateClean c = estimate_background(Sequence(frames));
    CHECK(c.image.data == clean.data);
}

} // TEST_SUITE
