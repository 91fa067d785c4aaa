#include <augmt/digest.hpp>
#include <augmt/error.hpp>
#include <augmt/parallel.hpp>
#include <augmt/random.hpp>
#include <augmt/utf8.hpp>

#include <gtest/gtest.h>

#include <array>
#include <numeric>
#include <set>

using namespace augmt;

TEST(Utf8, RejectsMalformedSequences) {
    EXPECT_TRUE(utf8::is_valid("grüß dich, čas"));
    EXPECT_FALSE(utf8::is_valid("\xc0\xaf"));         // overlong '/'
    EXPECT_FALSE(utf8::is_valid("\xed\xa0\x80"));     // surrogate
    EXPECT_FALSE(utf8::is_valid("\xf4\x90\x80\x80")); // above U+10FFFF
    EXPECT_FALSE(utf8::is_valid("ab\xe2\x82"));       // truncated
    EXPECT_EQ(utf8::find_invalid("ab\xff"), std::optional<std::size_t>(2));
}

TEST(Utf8, DecodeEncodeRoundTrip) {
    const std::string s = "ä ö ü ß č š ž ć ł 𝄞";
    EXPECT_EQ(utf8::encode(utf8::decode(s)), s);
    EXPECT_EQ(utf8::length(s), 19u);
}

TEST(Random, FnvKnownVectors) {
    // Published FNV-1a 64-bit test values.
    EXPECT_EQ(digest(""), "cbf29ce484222325");
    EXPECT_EQ(digest("a"), "af63dc4c8601ec8c");
    EXPECT_EQ(digest("foobar"), "85944171f73967e8");
}

TEST(Random, Mt19937_64MatchesStandardReference) {
    // The standard requires the 10000th output of a default-seeded mt19937_64.
    Engine eng;
    eng.discard(9999);
    EXPECT_EQ(eng(), 9981545732273789042ULL);
}

TEST(Random, BoundedStaysInRangeAndCoversIt) {
    Engine eng(1);
    std::array<int, 7> hist{};
    for (int i = 0; i < 70000; ++i) {
        const auto v = bounded(eng, 7);
        ASSERT_LT(v, 7u);
        ++hist[v];
    }
    for (int h : hist)
        EXPECT_NEAR(h, 10000, 500);
    EXPECT_EQ(bounded(eng, 1), 0u);
}

TEST(Random, SampleIndicesAreDistinctAscendingAndExact) {
    for (std::size_t n : {0u, 1u, 17u, 100u}) {
        Engine eng(42);
        const auto idx = sample_indices(100, n, eng);
        ASSERT_EQ(idx.size(), n);
        EXPECT_TRUE(std::is_sorted(idx.begin(), idx.end()));
        EXPECT_EQ(std::set<std::size_t>(idx.begin(), idx.end()).size(), n);
    }
}

TEST(Random, SubstreamsDifferAndRepeat) {
    Engine a = substream(5, 0), b = substream(5, 1), c = substream(5, 0);
    const auto x = a();
    EXPECT_NE(x, b());
    EXPECT_EQ(x, c());
}

TEST(Parallel, ResultsIndependentOfThreadCount) {
    std::vector<std::uint64_t> ref(1000);
    parallel_for(ref.size(), 1, [&](std::size_t i) { ref[i] = splitmix64(i); });
    for (unsigned t : {2u, 3u, 8u, 64u}) {
        std::vector<std::uint64_t> out(1000);
        parallel_for(out.size(), t, [&](std::size_t i) { out[i] = splitmix64(i); });
        EXPECT_EQ(out, ref) << t;
    }
}

TEST(Parallel, RethrowsTheLowestFailure) {
    for (unsigned t : {1u, 4u, 16u}) {
        try {
            parallel_for(100, t, [](std::size_t i) {
                if (i == 30 || i == 90)
                    throw LineError(i + 1, "bad");
            });
            FAIL();
        } catch (const LineError &e) {
            EXPECT_EQ(e.line(), 31u) << t;
        }
    }
}
