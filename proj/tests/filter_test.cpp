#include <augmt/filter.hpp>
#include <augmt/synthetic.hpp>

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace augmt;

namespace {

RatioCriterion fixed_criterion(bool length = true, bool perplexity = true) {
    RatioCriterion c;
    if (length)
        c.length = RatioStats{RatioFeature::length, 1.18, 0.17, 0};
    if (perplexity) {
        c.perplexity = RatioStats{RatioFeature::perplexity, 1.01, 0.37, 0};
        c.lm_src = "lm.de.arpa";
        c.lm_tgt = "lm.hsb.arpa";
    }
    return c;
}

struct Fixture {
    synthetic::ToyLanguagePair lp;
    ParallelCorpus natural = lp.bilingual(1000, 31);
    NGramModel lm_src = train_lm(natural.source_side(), {});
    NGramModel lm_tgt = train_lm(natural.target_side(), {});
    ParallelCorpus synthetic_pairs = make_synthetic();

    ParallelCorpus make_synthetic() const {
        Engine eng(32);
        const auto mono = lp.monolingual(1000, 33);
        ParallelCorpus out({"de", "hsb"});
        for (const auto &s : mono.sentences)
            out.add(s.text, lp.translate(s.text, eng, 0.4), Origin::synthetic);
        return out;
    }

    RatioScorer scorer() const { return {LengthUnit::chars, &lm_src, &lm_tgt}; }
};

const Fixture &fixture() {
    static const Fixture f;
    return f;
}

} // namespace

TEST(Filter, FixedIntervalMembershipAndClosure) {
    const auto c = fixed_criterion();
    EXPECT_TRUE(c.length->contains(1.18));
    EXPECT_TRUE(c.length->contains(1.01)); // lower boundary
    EXPECT_TRUE(c.length->contains(1.35)); // upper boundary, although 1.18 + 0.17 < 1.35 in binary
    EXPECT_FALSE(c.length->contains(1.0099));
    EXPECT_FALSE(c.length->contains(1.3501));
    EXPECT_TRUE(c.perplexity->contains(0.64));
    EXPECT_TRUE(c.perplexity->contains(1.38));
    EXPECT_FALSE(c.perplexity->contains(0.6399));
    EXPECT_FALSE(c.perplexity->contains(1.3801));
}

TEST(Filter, LengthOnlyOnConstructedRatios) {
    ParallelCorpus syn({"de", "hsb"});
    // source/target character ratios: 1.0, 1.01, 1.2, 1.35, 1.36, 2.0
    const std::vector<std::pair<int, int>> lengths{{100, 100}, {101, 100}, {120, 100}, {135, 100}, {136, 100}, {20, 10}};
    for (auto [s, t] : lengths)
        syn.add(std::string(static_cast<std::size_t>(s), 'a'), std::string(static_cast<std::size_t>(t), 'b'),
                Origin::synthetic);
    const auto r = apply_filter(syn, fixed_criterion(true, false), {LengthUnit::chars});
    EXPECT_EQ(r.report.passed, 3u);
    EXPECT_EQ(r.report.failed, 3u);
    std::vector<bool> passed;
    for (const auto &d : r.decisions)
        passed.push_back(d.passed);
    EXPECT_EQ(passed, (std::vector<bool>{false, true, true, true, false, false}));
    EXPECT_EQ(r.decisions[0].failed_features, std::vector<std::string>{"length"});
}

TEST(Filter, PassPlusFailIsTotalAndMatchesRecount) {
    const auto &f = fixture();
    const auto crit = fixed_criterion();
    const auto r = apply_filter(f.synthetic_pairs, crit, f.scorer(), 4);
    EXPECT_EQ(r.report.total, 1000u);
    EXPECT_EQ(r.report.passed + r.report.failed, r.report.total);
    EXPECT_EQ(r.passing.size(), r.report.passed);
    // Recount from first principles.
    std::size_t expected = 0;
    for (std::size_t i = 0; i < f.synthetic_pairs.size(); ++i) {
        const auto &p = f.synthetic_pairs[i];
        const double rl = double(char_count(p.src.text)) / double(char_count(p.tgt.text));
        const double rp = f.lm_src.perplexity(p.src).ppl / f.lm_tgt.perplexity(p.tgt).ppl;
        const bool ok = rl >= 1.01 - 1e-9 && rl <= 1.35 + 1e-9 && rp >= 0.64 - 1e-9 && rp <= 1.38 + 1e-9;
        expected += ok;
        EXPECT_EQ(r.decisions[i].passed, ok) << i;
        EXPECT_DOUBLE_EQ(*r.decisions[i].r_len, rl);
    }
    EXPECT_EQ(r.report.passed, expected);
    EXPECT_GT(expected, 0u);
    EXPECT_LT(expected, 1000u);
}

TEST(Filter, ConjunctionIsMonotone) {
    const auto &f = fixture();
    const auto both = apply_filter(f.synthetic_pairs, fixed_criterion(true, true), f.scorer(), 2);
    const auto len = apply_filter(f.synthetic_pairs, fixed_criterion(true, false), f.scorer(), 2);
    const auto ppl = apply_filter(f.synthetic_pairs, fixed_criterion(false, true), f.scorer(), 2);
    EXPECT_LE(both.report.passed, std::min(len.report.passed, ppl.report.passed));
    for (std::size_t i = 0; i < both.decisions.size(); ++i)
        EXPECT_EQ(both.decisions[i].passed, len.decisions[i].passed && ppl.decisions[i].passed) << i;
}

TEST(Filter, RefilteringIsIdempotent) {
    const auto &f = fixture();
    const auto once = apply_filter(f.synthetic_pairs, fixed_criterion(), f.scorer());
    const auto twice = apply_filter(once.passing, fixed_criterion(), f.scorer());
    EXPECT_EQ(twice.passing, once.passing);
    EXPECT_EQ(twice.report.failed, 0u);
}

TEST(Filter, ThreadCountDoesNotChangeDecisions) {
    const auto &f = fixture();
    const auto a = apply_filter(f.synthetic_pairs, fixed_criterion(), f.scorer(), 1);
    const auto b = apply_filter(f.synthetic_pairs, fixed_criterion(), f.scorer(), 8);
    EXPECT_EQ(a.passing, b.passing);
    for (std::size_t i = 0; i < a.decisions.size(); ++i)
        EXPECT_EQ(to_json(a.decisions[i]), to_json(b.decisions[i]));
}

TEST(Filter, UndefinedRatioFailsWithReason) {
    ParallelCorpus syn({"de", "hsb"});
    syn.add("abc", "", Origin::synthetic);
    const auto r = apply_filter(syn, fixed_criterion(true, false), {LengthUnit::chars});
    ASSERT_EQ(r.decisions.size(), 1u);
    EXPECT_FALSE(r.decisions[0].passed);
    EXPECT_FALSE(r.decisions[0].r_len);
    EXPECT_NE(r.decisions[0].failed_features[0].find("zero target length"), std::string::npos);
}

TEST(Filter, UnitMismatchIsRejected) {
    ParallelCorpus syn({"de", "hsb"});
    syn.add("a", "b");
    EXPECT_THROW(apply_filter(syn, fixed_criterion(true, false), {LengthUnit::words}), ValidationError);
}

TEST(Filter, FitComputesPopulationMeanAndSd) {
    ParallelCorpus nat({"de", "hsb"});
    nat.add("aa", "a");     // 2
    nat.add("aaaa", "a");   // 4
    nat.add("aaa", "");     // undefined, skipped
    const auto fit = fit_criterion(nat, true, false, {LengthUnit::chars});
    EXPECT_DOUBLE_EQ(fit.criterion.length->mean, 3.0);
    EXPECT_DOUBLE_EQ(fit.criterion.length->sd, 1.0);
    EXPECT_EQ(fit.criterion.length->count, 2u);
    EXPECT_EQ(fit.skipped_length, 1u);
}

TEST(Filter, FitOnNaturalDataCentersItsOwnRatios) {
    const auto &f = fixture();
    const auto fit = fit_criterion(f.natural, true, true, f.scorer(), "s", "t", 3);
    double mean = 0;
    for (double r : fit.perplexity_ratios)
        mean += r;
    mean /= double(fit.perplexity_ratios.size());
    EXPECT_NEAR(fit.criterion.perplexity->mean, mean, 1e-12);
    // Roughly two thirds of a bell-shaped sample lies within one sd.
    const auto r = apply_filter(f.natural, fit.criterion, f.scorer());
    EXPECT_GT(r.report.passed, 300u);
}

TEST(Filter, CriterionJsonRoundTrip) {
    const auto c = fixed_criterion();
    const auto back = criterion_from_json(to_json(c));
    EXPECT_EQ(back.length->mean, 1.18);
    EXPECT_EQ(back.perplexity->sd, 0.37);
    EXPECT_EQ(back.lm_tgt, "lm.hsb.arpa");
    auto j = to_json(c);
    j["features"]["perplexity"].erase("lm_src");
    EXPECT_THROW(criterion_from_json(j), ValidationError);
    j = to_json(c);
    j["features"]["length"]["sd"] = -0.1;
    EXPECT_THROW(criterion_from_json(j), ValidationError);
    EXPECT_THROW(criterion_from_json(nlohmann::json{{"features", nlohmann::json::object()}}), ValidationError);
}

TEST(Filter, HistogramRecount) {
    Engine eng(5);
    std::vector<double> v;
    for (int i = 0; i < 5000; ++i)
        v.push_back(0.5 + unit_real(eng));
    v.push_back(0.5);
    v.push_back(1.5);
    const auto h = ratio_histogram(v, 17);
    std::size_t sum = 0;
    for (std::size_t b = 0; b < h.counts.size(); ++b) {
        std::size_t expected = 0;
        for (double x : v)
            expected += x >= h.bin_left(b) && (b + 1 == h.counts.size() ? x <= h.bin_right(b) : x < h.bin_right(b));
        EXPECT_EQ(h.counts[b], expected) << b;
        sum += h.counts[b];
    }
    EXPECT_EQ(sum, v.size());
    const auto clipped = ratio_histogram(v, 4, std::pair{0.8, 1.2});
    std::size_t in = 0;
    for (auto c : clipped.counts)
        in += c;
    EXPECT_EQ(in + clipped.below + clipped.above, v.size());
}

TEST(Filter, HistogramCsvLayout) {
    testutil::TempDir d;
    const std::vector<double> v{1.0, 2.0, 2.0, 3.0};
    write_histogram_csv(d.file("h.csv"), ratio_histogram(v, 2));
    EXPECT_EQ(testutil::read_file(d.file("h.csv")), "bin_left,bin_right,count\n1,2,1\n2,3,3\n");
}

TEST(Filter, RandomSampleIsSeededOrderedSubset) {
    const auto &f = fixture();
    const auto a = random_sample(f.natural, 100, 7);
    const auto b = random_sample(f.natural, 100, 7);
    const auto c = random_sample(f.natural, 100, 8);
    EXPECT_EQ(a, b);
    EXPECT_NE(a, c);
    ASSERT_EQ(a.size(), 100u);
    std::size_t j = 0;
    for (std::size_t i = 0; i < f.natural.size() && j < a.size(); ++i)
        if (f.natural[i] == a[j])
            ++j;
    EXPECT_EQ(j, a.size()); // a is a subsequence of the corpus
    EXPECT_EQ(random_sample(f.natural, f.natural.size(), 1), f.natural);
    EXPECT_THROW(random_sample(f.natural, f.natural.size() + 1, 1), ValidationError);
}
