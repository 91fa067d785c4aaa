#pragma once

#include <augmt/corpus.hpp>
#include <augmt/error.hpp>
#include <augmt/ngram_lm.hpp>
#include <augmt/parallel.hpp>
#include <augmt/random.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace augmt {

enum class RatioFeature { length, perplexity };
enum class LengthUnit { chars, words };

inline const char *to_string(RatioFeature f) { return f == RatioFeature::length ? "length" : "perplexity"; }
inline const char *to_string(LengthUnit u) { return u == LengthUnit::chars ? "chars" : "words"; }

inline LengthUnit parse_length_unit(std::string_view s) {
    if (s == "chars")
        return LengthUnit::chars;
    if (s == "words")
        return LengthUnit::words;
    throw ValidationError("length unit must be 'chars' or 'words', got '" + std::string(s) + "'");
}

inline RatioFeature parse_ratio_feature(std::string_view s) {
    if (s == "length")
        return RatioFeature::length;
    if (s == "perplexity")
        return RatioFeature::perplexity;
    throw ValidationError("feature must be 'length' or 'perplexity', got '" + std::string(s) + "'");
}

/// Ratios are always source / target.
inline constexpr const char *kRatioDirection = "source/target";

// Interval bounds usually come from decimal text (1.18 + 0.17 is 1.3499999999999999 in
// binary), so membership allows this much relative slack at both ends.
inline constexpr double kIntervalSlack = 1e-12;

struct RatioStats {
    RatioFeature feature = RatioFeature::length;
    double mean = 0.0;
    double sd = 0.0;
    std::size_t count = 0;

    double low() const { return mean - sd; }
    double high() const { return mean + sd; }

    /// Closed interval [mean - sd, mean + sd].
    bool contains(double r) const {
        const double lo = low(), hi = high();
        return r >= lo - kIntervalSlack * std::max(1.0, std::abs(lo)) &&
               r <= hi + kIntervalSlack * std::max(1.0, std::abs(hi));
    }
};

struct RatioCriterion {
    std::optional<RatioStats> length;
    std::optional<RatioStats> perplexity;
    LengthUnit length_unit = LengthUnit::chars;
    std::string lm_src;
    std::string lm_tgt;

    void validate() const {
        if (!length && !perplexity)
            throw ValidationError("criterion needs at least one feature");
        if (perplexity && (lm_src.empty() || lm_tgt.empty()))
            throw ValidationError("perplexity criterion requires source and target LM references");
        for (const auto *f : {&length, &perplexity})
            if (*f && !((*f)->sd >= 0.0))
                throw ValidationError("criterion standard deviation must be non-negative");
    }
};

inline nlohmann::json to_json(const RatioCriterion &c) {
    nlohmann::json features = nlohmann::json::object();
    if (c.length)
        features["length"] = {{"mean", c.length->mean}, {"sd", c.length->sd}, {"unit", to_string(c.length_unit)},
                              {"count", c.length->count}};
    if (c.perplexity)
        features["perplexity"] = {{"mean", c.perplexity->mean}, {"sd", c.perplexity->sd}, {"lm_src", c.lm_src},
                                  {"lm_tgt", c.lm_tgt}, {"count", c.perplexity->count}};
    return {{"features", features}, {"direction", kRatioDirection}};
}

inline RatioCriterion criterion_from_json(const nlohmann::json &j) {
    RatioCriterion c;
    try {
        const auto &f = j.at("features");
        if (j.contains("direction") && j["direction"] != kRatioDirection)
            throw ValidationError("unsupported ratio direction " + j["direction"].dump());
        if (f.contains("length")) {
            const auto &l = f["length"];
            c.length = RatioStats{RatioFeature::length, l.at("mean").get<double>(), l.at("sd").get<double>(),
                                  l.value("count", std::size_t{0})};
            c.length_unit = parse_length_unit(l.value("unit", "chars"));
        }
        if (f.contains("perplexity")) {
            const auto &p = f["perplexity"];
            c.perplexity = RatioStats{RatioFeature::perplexity, p.at("mean").get<double>(), p.at("sd").get<double>(),
                                      p.value("count", std::size_t{0})};
            c.lm_src = p.at("lm_src").get<std::string>();
            c.lm_tgt = p.at("lm_tgt").get<std::string>();
        }
    } catch (const nlohmann::json::exception &e) {
        throw ValidationError(std::string("malformed criterion: ") + e.what());
    }
    c.validate();
    return c;
}

inline RatioCriterion load_criterion(const std::string &path) {
    std::ifstream in(path);
    if (!in)
        throw ValidationError("cannot open criterion '" + path + "'");
    try {
        return criterion_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error &e) {
        throw ValidationError(path + ": " + e.what());
    }
}

/// Computes per-pair feature ratios. The LMs are borrowed and must outlive the scorer.
struct RatioScorer {
    LengthUnit unit = LengthUnit::chars;
    const NGramModel *lm_src = nullptr;
    const NGramModel *lm_tgt = nullptr;

    double length_of(std::string_view text) const {
        return static_cast<double>(unit == LengthUnit::chars ? char_count(text) : word_count(text));
    }

    double ratio(const SentencePair &pair, RatioFeature feature, std::size_t line) const {
        if (feature == RatioFeature::length) {
            const double tgt = length_of(pair.tgt.text);
            if (tgt <= 0.0)
                throw LineError(line, "zero target length");
            return length_of(pair.src.text) / tgt;
        }
        if (!lm_src || !lm_tgt)
            throw ValidationError("perplexity ratio requires source and target language models");
        const double src = lm_src->perplexity(pair.src).ppl;
        const double tgt = lm_tgt->perplexity(pair.tgt).ppl;
        if (!std::isfinite(src) || !std::isfinite(tgt) || tgt <= 0.0)
            throw LineError(line, "non-finite perplexity");
        return src / tgt;
    }
};

namespace detail {
/// Two-pass population mean and standard deviation in fixed order.
inline std::pair<double, double> mean_sd(const std::vector<double> &v) {
    double sum = 0.0;
    for (double x : v)
        sum += x;
    const double mean = sum / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v)
        ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / static_cast<double>(v.size()))};
}
} // namespace detail

struct FitResult {
    RatioCriterion criterion;
    std::size_t skipped_length = 0;
    std::size_t skipped_perplexity = 0;
    std::vector<double> length_ratios;
    std::vector<double> perplexity_ratios;
};

/// Mean and population SD of each requested feature's ratio over a natural corpus.
/// Pairs whose ratio is undefined are skipped and counted.
inline FitResult fit_criterion(const ParallelCorpus &corpus, bool use_length, bool use_perplexity,
                               const RatioScorer &scorer, const std::string &lm_src_id = {},
                               const std::string &lm_tgt_id = {}, unsigned threads = 1) {
    if (corpus.empty())
        throw DataError("cannot fit a criterion on an empty corpus");
    if (!use_length && !use_perplexity)
        throw ValidationError("at least one feature is required");
    std::vector<std::optional<double>> len(corpus.size()), ppl(corpus.size());
    parallel_for(corpus.size(), threads, [&](std::size_t i) {
        try {
            if (use_length)
                len[i] = scorer.ratio(corpus[i], RatioFeature::length, i + 1);
        } catch (const LineError &) {
        }
        try {
            if (use_perplexity)
                ppl[i] = scorer.ratio(corpus[i], RatioFeature::perplexity, i + 1);
        } catch (const LineError &) {
        }
    });
    FitResult out;
    out.criterion.length_unit = scorer.unit;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        if (use_length)
            len[i] ? out.length_ratios.push_back(*len[i]) : void(++out.skipped_length);
        if (use_perplexity)
            ppl[i] ? out.perplexity_ratios.push_back(*ppl[i]) : void(++out.skipped_perplexity);
    }
    if (use_length) {
        if (out.length_ratios.empty())
            throw DataError("every pair has an undefined length ratio");
        auto [m, s] = detail::mean_sd(out.length_ratios);
        out.criterion.length = RatioStats{RatioFeature::length, m, s, out.length_ratios.size()};
    }
    if (use_perplexity) {
        if (out.perplexity_ratios.empty())
            throw DataError("every pair has an undefined perplexity ratio");
        auto [m, s] = detail::mean_sd(out.perplexity_ratios);
        out.criterion.perplexity = RatioStats{RatioFeature::perplexity, m, s, out.perplexity_ratios.size()};
        out.criterion.lm_src = lm_src_id;
        out.criterion.lm_tgt = lm_tgt_id;
    }
    return out;
}

struct FilterDecision {
    std::size_t line = 0; ///< 1-based
    std::optional<double> r_len;
    std::optional<double> r_ppl;
    bool passed = false;
    std::vector<std::string> failed_features;
};

struct FilterReport {
    std::size_t total = 0;
    std::size_t passed = 0;
    std::size_t failed = 0;
    RatioCriterion criterion;
};

struct FilterResult {
    FilterReport report;
    std::vector<FilterDecision> decisions;
    ParallelCorpus passing;
};

/// Keeps a pair only when every feature in the criterion has its ratio inside the
/// feature's closed interval. Pairs whose ratio cannot be computed fail with a reason.
inline FilterResult apply_filter(const ParallelCorpus &synthetic, const RatioCriterion &criterion,
                                 const RatioScorer &scorer, unsigned threads = 1) {
    criterion.validate();
    if (criterion.length && scorer.unit != criterion.length_unit)
        throw ValidationError(std::string("scorer length unit '") + to_string(scorer.unit) +
                              "' differs from criterion unit '" + to_string(criterion.length_unit) + "'");
    FilterResult out{{}, std::vector<FilterDecision>(synthetic.size()), ParallelCorpus(synthetic.langs())};
    parallel_for(synthetic.size(), threads, [&](std::size_t i) {
        auto &d = out.decisions[i];
        d.line = i + 1;
        auto check = [&](const std::optional<RatioStats> &stats, RatioFeature f, std::optional<double> &slot) {
            if (!stats)
                return;
            try {
                slot = scorer.ratio(synthetic[i], f, i + 1);
                if (!stats->contains(*slot))
                    d.failed_features.emplace_back(to_string(f));
            } catch (const LineError &e) {
                d.failed_features.push_back(std::string(to_string(f)) + ": " + e.what());
            }
        };
        check(criterion.length, RatioFeature::length, d.r_len);
        check(criterion.perplexity, RatioFeature::perplexity, d.r_ppl);
        d.passed = d.failed_features.empty();
    });
    out.report.criterion = criterion;
    out.report.total = synthetic.size();
    for (std::size_t i = 0; i < synthetic.size(); ++i) {
        if (out.decisions[i].passed) {
            ++out.report.passed;
            out.passing.add(synthetic[i]);
        } else {
            ++out.report.failed;
        }
    }
    return out;
}

inline nlohmann::json to_json(const FilterDecision &d) {
    nlohmann::json j{{"line", d.line}};
    j["r_len"] = d.r_len ? nlohmann::json(*d.r_len) : nlohmann::json(nullptr);
    j["r_ppl"] = d.r_ppl ? nlohmann::json(*d.r_ppl) : nlohmann::json(nullptr);
    j["passed"] = d.passed;
    j["failed_features"] = d.failed_features;
    return j;
}

inline nlohmann::json to_json(const FilterReport &r) {
    return {{"total", r.total}, {"passed", r.passed}, {"failed", r.failed}, {"criterion", to_json(r.criterion)}};
}

/// Uniform sample without replacement, in original order.
inline ParallelCorpus random_sample(const ParallelCorpus &corpus, std::size_t n, std::uint64_t seed) {
    if (n > corpus.size())
        throw ValidationError("cannot sample " + std::to_string(n) + " pairs from a corpus of " +
                              std::to_string(corpus.size()));
    Engine eng(seed);
    ParallelCorpus out(corpus.langs());
    for (std::size_t i : sample_indices(corpus.size(), n, eng))
        out.add(corpus[i]);
    return out;
}

struct Histogram {
    double lo = 0.0;
    double hi = 0.0;
    std::vector<std::size_t> counts;
    std::size_t below = 0;
    std::size_t above = 0;

    double bin_left(std::size_t i) const { return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(counts.size()); }
    double bin_right(std::size_t i) const { return i + 1 == counts.size() ? hi : bin_left(i + 1); }
};

/// Equal-width bins over [min, max] of the values, or over `range` when given. The last
/// bin is closed on the right; values outside the range go to below/above.
inline Histogram ratio_histogram(std::span<const double> values, std::size_t bins,
                                 std::optional<std::pair<double, double>> range = {}) {
    if (bins == 0)
        throw ValidationError("histogram needs at least one bin");
    if (values.empty())
        throw DataError("cannot build a histogram of no values");
    Histogram h;
    if (range) {
        if (!(range->first < range->second))
            throw ValidationError("histogram range must satisfy low < high");
        h.lo = range->first, h.hi = range->second;
    } else {
        auto [mn, mx] = std::minmax_element(values.begin(), values.end());
        h.lo = *mn, h.hi = *mx;
    }
    h.counts.assign(bins, 0);
    const double span = h.hi - h.lo;
    for (double v : values) {
        if (v < h.lo) {
            ++h.below;
        } else if (v > h.hi) {
            ++h.above;
        } else {
            std::size_t idx = span > 0 ? static_cast<std::size_t>((v - h.lo) / span * static_cast<double>(bins)) : 0;
            idx = std::min(idx, bins - 1);
            // Agree exactly with the reported edges.
            while (span > 0 && idx > 0 && v < h.bin_left(idx))
                --idx;
            while (span > 0 && idx + 1 < bins && v >= h.bin_left(idx + 1))
                ++idx;
            ++h.counts[idx];
        }
    }
    return h;
}

inline void write_histogram_csv(const std::string &path, const Histogram &h) {
    std::ofstream out(path);
    if (!out)
        throw ValidationError("cannot write '" + path + "'");
    out << "bin_left,bin_right,count\n";
    char buf[128];
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%zu\n", h.bin_left(i), h.bin_right(i), h.counts[i]);
        out << buf;
    }
}

} // namespace augmt
