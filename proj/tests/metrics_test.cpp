#include <augmt/metrics.hpp>
#include <augmt/synthetic.hpp>

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <algorithm>

using namespace augmt;

namespace {

using Lines = std::vector<std::string>;

std::vector<std::string> words(const std::string &s) { return tokenize(s); }

std::size_t levenshtein(const std::vector<std::string> &a, const std::vector<std::string> &b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j)
        prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j)
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

// Minimum over "no shift" and every single phrase move (cost 1) of the remaining edit distance.
std::size_t one_shift_oracle(const std::vector<std::string> &hyp, const std::vector<std::string> &ref) {
    std::size_t best = levenshtein(hyp, ref);
    for (std::size_t start = 0; start < hyp.size(); ++start)
        for (std::size_t len = 1; start + len <= hyp.size(); ++len) {
            std::vector<std::string> rest(hyp.begin(), hyp.begin() + long(start));
            rest.insert(rest.end(), hyp.begin() + long(start + len), hyp.end());
            for (std::size_t pos = 0; pos <= rest.size(); ++pos) {
                auto moved = rest;
                moved.insert(moved.begin() + long(pos), hyp.begin() + long(start), hyp.begin() + long(start + len));
                if (moved != hyp)
                    best = std::min(best, 1 + levenshtein(moved, ref));
            }
        }
    return best;
}

nlohmann::json reference() {
    return nlohmann::json::parse(testutil::read_file(std::string(AUGMT_TESTDATA_DIR) + "/metrics_reference.json"));
}

Lines lines_of(const char *name) { return read_lines(std::string(AUGMT_TESTDATA_DIR) + "/" + name); }

} // namespace

TEST(Metrics, IdenticalSegmentsAreExact) {
    const Lines s{"Das ist ein Test.", "Hier ist noch einer, mit 3.5 Zahlen!"};
    EXPECT_DOUBLE_EQ(bleu(s, s).value, 100.0);
    EXPECT_DOUBLE_EQ(chrf2(s, s).value, 100.0);
    EXPECT_DOUBLE_EQ(ter(s, s).value, 0.0);
}

TEST(Metrics, ModifiedUnigramPrecisionIsClipped) {
    const auto st = bleu_stats("the the the the the the the", "the cat is on the mat");
    EXPECT_EQ(st[0], 2.0); // "the" clipped to its reference count
    EXPECT_EQ(st[4], 7.0);
    EXPECT_DOUBLE_EQ(st[0] / st[4], 2.0 / 7.0);
}

TEST(Metrics, BleuByHandWithFloorAndBrevity) {
    // 1-gram 5/6, 2-gram 3/5, 3-gram 1/4, 4-gram 0/3 (floored to 0.1/3); same length.
    const Lines h{"the cat sat on the mat"}, r{"the cat is on the mat"};
    const double expected = 100.0 * std::exp((std::log(5.0 / 6) + std::log(3.0 / 5) + std::log(1.0 / 4) + std::log(0.1 / 3)) / 4);
    EXPECT_NEAR(bleu(h, r).value, expected, 1e-9);
    // Shorter hypothesis: 5 tokens against 6.
    const Lines h2{"the cat on the mat"};
    const double p = (std::log(5.0 / 5) + std::log(3.0 / 4) + std::log(1.0 / 3) + std::log(0.1 / 2)) / 4;
    EXPECT_NEAR(bleu(h2, r).value, 100.0 * std::exp(1.0 - 6.0 / 5.0) * std::exp(p), 1e-9);
}

TEST(Metrics, DisjointInputsScoreZero) {
    const Lines h{"aaa bbb ccc ddd"}, r{"xxx yyy zzz www"};
    EXPECT_DOUBLE_EQ(bleu(h, r).value, 0.0);
    EXPECT_DOUBLE_EQ(chrf2(Lines{"abc"}, Lines{"xyz"}).value, 0.0);
}

TEST(Metrics, SingleTokenHypothesisIsFinite) {
    const auto v = bleu(Lines{"cat"}, Lines{"the cat sat"}).value;
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_GE(v, 0.0);
}

TEST(Metrics, ChrfAbcAbdByHand) {
    // n=1: 2 of 3 both ways; n=2: 1 of 2; n=3: 0 of 1; higher orders have no n-grams.
    const double p = (2.0 / 3 + 1.0 / 2 + 0.0) / 3, r = p;
    EXPECT_NEAR(chrf2(Lines{"abc"}, Lines{"abd"}).value, 100.0 * 5 * p * r / (4 * p + r), 1e-12);
    EXPECT_NEAR(chrf2(Lines{"abc"}, Lines{"abd"}).value, 100.0 * 7.0 / 18.0, 1e-12);
}

TEST(Metrics, ChrfIgnoresWhitespace) {
    EXPECT_DOUBLE_EQ(chrf2(Lines{"a b c"}, Lines{"abc"}).value, 100.0);
}

TEST(Metrics, TerSingleSubstitution) {
    EXPECT_DOUBLE_EQ(ter(Lines{"a b x d e"}, Lines{"a b c d e"}).value, 20.0);
}

TEST(Metrics, TerShiftMatchesExhaustiveOracle) {
    const auto h = words("b c d a"), r = words("a b c d");
    const auto [edits, len] = ter_edits(h, r);
    EXPECT_LE(edits, 2u);
    EXPECT_EQ(edits, one_shift_oracle(h, r));
    EXPECT_EQ(edits, 1u);
    EXPECT_EQ(len, 4u);
}

TEST(Metrics, TerBoundsOnRandomSmallInstances) {
    Engine eng(3);
    const std::vector<std::string> alphabet{"a", "b", "c", "d"};
    for (int it = 0; it < 500; ++it) {
        std::vector<std::string> h(1 + bounded(eng, 6)), r(1 + bounded(eng, 6));
        for (auto &w : h)
            w = alphabet[bounded(eng, 4)];
        for (auto &w : r)
            w = alphabet[bounded(eng, 4)];
        const auto edits = ter_edits(h, r).first;
        EXPECT_LE(edits, levenshtein(h, r));
        EXPECT_LE(edits, std::max(h.size(), r.size()));
        EXPECT_EQ(edits == 0, h == r);
    }
}

TEST(Metrics, MatchesReferenceToolkitOnMixedText) {
    const auto ref = reference();
    const auto hyps = lines_of("metrics.hyp"), refs = lines_of("metrics.ref");
    EXPECT_NEAR(bleu(hyps, refs).value, ref["bleu"].get<double>(), 1e-9);
    EXPECT_NEAR(chrf2(hyps, refs).value, ref["chrf2"].get<double>(), 1e-9);
    EXPECT_NEAR(ter(hyps, refs).value, ref["ter"].get<double>(), 1e-9);
    MetricConfig lc;
    lc.lowercase = true;
    EXPECT_NEAR(bleu(hyps, refs, lc).value, ref["bleu_lowercase"].get<double>(), 1e-9);
    for (std::size_t i = 0; i < hyps.size(); ++i) {
        EXPECT_EQ(tokenize_13a(hyps[i]), ref["tokenized_13a"][i].get<std::string>()) << i;
        EXPECT_NEAR(ter(Lines{hyps[i]}, Lines{refs[i]}).value, ref["segment_ter"][i].get<double>(), 1e-9) << i;
    }
}

TEST(Metrics, TerEditsMatchReferenceToolkitOnRandomInstances) {
    for (const auto &c : reference()["random_ter"]) {
        const auto [edits, len] = ter_edits(words(c["hyp"]), words(c["ref"]));
        EXPECT_EQ(double(edits), c["edits"].get<double>()) << c["hyp"] << " | " << c["ref"];
        EXPECT_EQ(double(len), c["ref_len"].get<double>());
    }
}

TEST(Metrics, JointPermutationAndTrailingWhitespaceInvariance) {
    auto hyps = lines_of("metrics.hyp"), refs = lines_of("metrics.ref");
    const auto base = std::vector<double>{bleu(hyps, refs).value, chrf2(hyps, refs).value, ter(hyps, refs).value};
    std::reverse(hyps.begin(), hyps.end());
    std::reverse(refs.begin(), refs.end());
    for (auto &h : hyps)
        h += "  ";
    EXPECT_EQ(base, (std::vector<double>{bleu(hyps, refs).value, chrf2(hyps, refs).value, ter(hyps, refs).value}));
}

TEST(Metrics, PaddingNeverRaisesBleu) {
    const auto hyps = lines_of("metrics.hyp"), refs = lines_of("metrics.ref");
    auto padded = hyps;
    for (auto &h : padded)
        h += " zzz qqq";
    EXPECT_LE(bleu(padded, refs).value, bleu(hyps, refs).value);
}

TEST(Metrics, InputErrors) {
    EXPECT_THROW(bleu(Lines{"a"}, Lines{"a", "b"}), ValidationError);
    EXPECT_THROW(bleu(Lines{}, Lines{}), ValidationError);
    EXPECT_THROW(chrf2(Lines{"a"}, Lines{"  "}), LineError);
    EXPECT_THROW(bleu(Lines{""}, Lines{"a"}), DataError);
    EXPECT_THROW(parse_metric("meteor"), ValidationError);
}

TEST(Metrics, BootstrapDegenerateAndDeterministic) {
    const auto refs = lines_of("metrics.ref");
    const auto same = bootstrap_ci(Metric::bleu, refs, refs, {1000, 0.95, 1, 2});
    EXPECT_DOUBLE_EQ(same.value, 100.0);
    EXPECT_DOUBLE_EQ(*same.ci_half_width, 0.0);
    EXPECT_DOUBLE_EQ(*bootstrap_ci(Metric::ter, refs, refs).ci_half_width, 0.0);

    const auto hyps = lines_of("metrics.hyp");
    const auto a = bootstrap_ci(Metric::chrf2, hyps, refs, {1000, 0.95, 9, 1});
    const auto b = bootstrap_ci(Metric::chrf2, hyps, refs, {1000, 0.95, 9, 4});
    EXPECT_EQ(*a.ci_half_width, *b.ci_half_width);
    EXPECT_GT(*a.ci_half_width, 0.0);
    EXPECT_EQ(a.config_digest, b.config_digest);
    EXPECT_THROW(bootstrap_ci(Metric::bleu, hyps, refs, {99}), ValidationError);
    EXPECT_THROW(bootstrap_ci(Metric::bleu, hyps, refs, {1000, 1.0}), ValidationError);
}

TEST(Metrics, BootstrapMatchesSharedIndexOracle) {
    const Lines hyps{"a b c d", "the cat sat", "x y z w v", "one two three four", "hello world again"};
    const Lines refs{"a b c e", "the cat sat down", "x y q w v", "one two three five", "hello there world again"};
    for (Metric m : {Metric::bleu, Metric::chrf2, Metric::ter}) {
        std::vector<double> values;
        for (std::size_t b = 0; b < 1000; ++b) {
            Lines h, r;
            for (std::size_t i : bootstrap_indices(5, b, 42))
                h.push_back(hyps[i]), r.push_back(refs[i]);
            values.push_back(corpus_score(m, h, r).value);
        }
        std::sort(values.begin(), values.end());
        auto pct = [&](double q) {
            const double pos = q * 999;
            const auto lo = std::size_t(pos);
            return values[lo] + (pos - double(lo)) * (values[std::min<std::size_t>(lo + 1, 999)] - values[lo]);
        };
        const double oracle = (pct(0.975) - pct(0.025)) / 2;
        EXPECT_NEAR(*bootstrap_ci(m, hyps, refs, {1000, 0.95, 42, 3}).ci_half_width, oracle, 0.1) << to_string(m);
    }
}

TEST(Metrics, Tokenizer13a) {
    EXPECT_EQ(tokenize_13a("Hello, world!"), "Hello , world !");
    EXPECT_EQ(tokenize_13a("It costs 3,500.5 euros."), "It costs 3,500.5 euros .");
    EXPECT_EQ(tokenize_13a("A&amp;B (x)"), "A & B ( x )");
}

TEST(Metrics, JsonShapeAndDigest) {
    const auto s = bleu(Lines{"a b c d"}, Lines{"a b c d"});
    const auto j = to_json(s);
    EXPECT_EQ(j["metric"], "bleu");
    EXPECT_TRUE(j["ci"].is_null());
    EXPECT_EQ(j["n"], 1);
    MetricConfig lc;
    lc.lowercase = true;
    EXPECT_NE(bleu(Lines{"a"}, Lines{"a"}, lc).config_digest, s.config_digest);
}
