#pragma once

#include <augmt/corpus.hpp>
#include <augmt/digest.hpp>
#include <augmt/error.hpp>
#include <augmt/parallel.hpp>
#include <augmt/random.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <regex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace augmt {

enum class Metric { bleu, chrf2, ter };

inline const char *to_string(Metric m) {
    switch (m) {
    case Metric::bleu: return "bleu";
    case Metric::chrf2: return "chrf2";
    default: return "ter";
    }
}

inline Metric parse_metric(std::string_view s) {
    if (s == "bleu")
        return Metric::bleu;
    if (s == "chrf2" || s == "chrf")
        return Metric::chrf2;
    if (s == "ter")
        return Metric::ter;
    throw ValidationError("unknown metric '" + std::string(s) + "' (expected bleu, chrf2 or ter)");
}

struct MetricScore {
    Metric metric = Metric::bleu;
    double value = 0.0; ///< percent scale
    std::optional<double> ci_half_width;
    std::size_t n_segments = 0;
    std::string config;
    std::string config_digest;
};

struct MetricConfig {
    bool lowercase = false;
    int bleu_max_order = 4;
    double bleu_floor = 0.1;
    int chrf_char_order = 6;
    double chrf_beta = 2.0;

    std::string describe(Metric m) const {
        std::string s = std::string("metric=") + to_string(m) + ";case=" + (lowercase ? "lc" : "mixed");
        char buf[96];
        switch (m) {
        case Metric::bleu:
            std::snprintf(buf, sizeof buf, ";tok=13a;order=%d;smooth=floor:%g", bleu_max_order, bleu_floor);
            break;
        case Metric::chrf2:
            std::snprintf(buf, sizeof buf, ";nc=%d;nw=0;beta=%g;space=no", chrf_char_order, chrf_beta);
            break;
        case Metric::ter:
            std::snprintf(buf, sizeof buf, ";tok=13a;shift=greedy;max_shift=10;max_dist=50");
            break;
        }
        return s + buf;
    }
};

/// The mteval-v13a tokenizer: punctuation and symbols split off, periods and commas kept
/// inside numbers.
inline std::string tokenize_13a(std::string_view text) {
    std::string line(text);
    auto replace_all = [&](std::string_view from, std::string_view to) {
        for (std::size_t pos = 0; (pos = line.find(from, pos)) != std::string::npos; pos += to.size())
            line.replace(pos, from.size(), to);
    };
    replace_all("<skipped>", "");
    if (line.find('&') != std::string::npos) {
        replace_all("&quot;", "\"");
        replace_all("&amp;", "&");
        replace_all("&lt;", "<");
        replace_all("&gt;", ">");
    }
    static const std::regex symbols(R"(([\{-~\[-` -&\(-\+:-@/]))");
    static const std::regex before_punct(R"(([^0-9])([\.,]))");
    static const std::regex after_punct(R"(([\.,])([^0-9]))");
    static const std::regex digit_dash(R"(([0-9])(-))");
    line = " " + line + " ";
    line = std::regex_replace(line, symbols, " $1 ");
    line = std::regex_replace(line, before_punct, "$1 $2 ");
    line = std::regex_replace(line, after_punct, " $1 $2");
    line = std::regex_replace(line, digit_dash, "$1 $2 ");
    std::string out;
    for (const auto &tok : tokenize(line)) {
        if (!out.empty())
            out.push_back(' ');
        out += tok;
    }
    return out;
}

namespace detail {

inline std::string lower_ascii(std::string s) {
    for (auto &c : s)
        if (c >= 'A' && c <= 'Z')
            c = static_cast<char>(c - 'A' + 'a');
    return s;
}

inline void check_segments(std::span<const std::string> hyps, std::span<const std::string> refs) {
    if (hyps.size() != refs.size())
        throw ValidationError("hypothesis has " + std::to_string(hyps.size()) + " segments, reference has " +
                              std::to_string(refs.size()));
    if (hyps.empty())
        throw ValidationError("no segments to score");
}

inline std::vector<std::string> metric_tokens(std::string_view text, const MetricConfig &cfg) {
    std::string t = tokenize_13a(text);
    if (cfg.lowercase)
        t = lower_ascii(std::move(t));
    return tokenize(t);
}

} // namespace detail

// ---------------------------------------------------------------------------
// BLEU

/// Sufficient statistics: matches[n], totals[n] for n = 1..order, then hyp and ref length.
using SegmentStats = std::vector<double>;

inline SegmentStats bleu_stats(std::string_view hyp, std::string_view ref, const MetricConfig &cfg = {}) {
    const auto h = detail::metric_tokens(hyp, cfg);
    const auto r = detail::metric_tokens(ref, cfg);
    const auto order = static_cast<std::size_t>(cfg.bleu_max_order);
    SegmentStats st(2 * order + 2, 0.0);
    for (std::size_t n = 1; n <= order; ++n) {
        std::map<std::vector<std::string>, int> ref_counts;
        for (std::size_t i = 0; i + n <= r.size(); ++i)
            ++ref_counts[std::vector<std::string>(r.begin() + static_cast<std::ptrdiff_t>(i), r.begin() + static_cast<std::ptrdiff_t>(i + n))];
        std::map<std::vector<std::string>, int> hyp_counts;
        for (std::size_t i = 0; i + n <= h.size(); ++i)
            ++hyp_counts[std::vector<std::string>(h.begin() + static_cast<std::ptrdiff_t>(i), h.begin() + static_cast<std::ptrdiff_t>(i + n))];
        double matches = 0, total = 0;
        for (const auto &[gram, c] : hyp_counts) {
            total += c;
            if (auto it = ref_counts.find(gram); it != ref_counts.end())
                matches += std::min(c, it->second);
        }
        st[n - 1] = matches;
        st[order + n - 1] = total;
    }
    st[2 * order] = static_cast<double>(h.size());
    st[2 * order + 1] = static_cast<double>(r.size());
    return st;
}

/// Corpus BLEU from summed statistics; 0 when the hypothesis side is empty.
inline double bleu_from_stats(std::span<const double> st, const MetricConfig &cfg = {}) {
    const auto order = static_cast<std::size_t>(cfg.bleu_max_order);
    const double sys_len = st[2 * order], ref_len = st[2 * order + 1];
    if (sys_len <= 0 || st[0] == 0)
        return 0.0;
    std::vector<double> precisions(order, 0.0);
    for (std::size_t n = 0; n < order; ++n) {
        const double correct = st[n], total = st[order + n];
        if (total == 0)
            break;
        precisions[n] = correct == 0 ? cfg.bleu_floor / total : correct / total;
    }
    double log_sum = 0.0;
    for (double p : precisions)
        log_sum += p > 0 ? std::log(p) : -9999999999.0;
    const double bp = sys_len < ref_len ? std::exp(1.0 - ref_len / sys_len) : 1.0;
    return 100.0 * bp * std::exp(log_sum / static_cast<double>(order));
}

// ---------------------------------------------------------------------------
// chrF

/// Per character order n: hyp n-grams, ref n-grams, matched n-grams.
inline SegmentStats chrf_stats(std::string_view hyp, std::string_view ref, const MetricConfig &cfg = {}) {
    auto chars = [&](std::string_view s) {
        std::u32string out;
        for (char32_t cp : utf8::decode(cfg.lowercase ? detail::lower_ascii(std::string(s)) : std::string(s)))
            if (!utf8::is_space(cp))
                out.push_back(cp);
        return out;
    };
    const auto h = chars(hyp), r = chars(ref);
    const auto order = static_cast<std::size_t>(cfg.chrf_char_order);
    SegmentStats st(3 * order, 0.0);
    for (std::size_t n = 1; n <= order; ++n) {
        std::unordered_map<std::u32string, int> hc, rc;
        for (std::size_t i = 0; i + n <= h.size(); ++i)
            ++hc[h.substr(i, n)];
        for (std::size_t i = 0; i + n <= r.size(); ++i)
            ++rc[r.substr(i, n)];
        double match = 0;
        for (const auto &[g, c] : hc)
            if (auto it = rc.find(g); it != rc.end())
                match += std::min(c, it->second);
        st[3 * (n - 1)] = h.size() >= n ? static_cast<double>(h.size() - n + 1) : 0.0;
        st[3 * (n - 1) + 1] = r.size() >= n ? static_cast<double>(r.size() - n + 1) : 0.0;
        st[3 * (n - 1) + 2] = match;
    }
    return st;
}

/// Precision and recall are averaged over the orders where both sides have n-grams, then
/// combined into an F-beta score.
inline double chrf_from_stats(std::span<const double> st, const MetricConfig &cfg = {}) {
    const auto order = static_cast<std::size_t>(cfg.chrf_char_order);
    const double factor = cfg.chrf_beta * cfg.chrf_beta;
    double avg_p = 0, avg_r = 0;
    int effective = 0;
    for (std::size_t n = 0; n < order; ++n) {
        const double nh = st[3 * n], nr = st[3 * n + 1], nm = st[3 * n + 2];
        if (nh > 0 && nr > 0) {
            avg_p += nm / nh;
            avg_r += nm / nr;
            ++effective;
        }
    }
    if (effective == 0)
        return 0.0;
    avg_p /= effective;
    avg_r /= effective;
    if (avg_p + avg_r == 0)
        return 0.0;
    return 100.0 * (1 + factor) * avg_p * avg_r / (factor * avg_p + avg_r);
}

// ---------------------------------------------------------------------------
// TER

namespace ter_detail {

inline constexpr std::size_t kMaxShiftSize = 10;
inline constexpr std::size_t kMaxShiftDist = 50;
inline constexpr std::size_t kMaxShiftCandidates = 1000;

using Words = std::vector<std::string>;

struct Alignment {
    std::vector<long> ref_to_hyp; ///< per ref position, hyp position it aligns after (-1 = before start)
    std::vector<int> ref_err;
    std::vector<int> hyp_err;
};

/// Levenshtein distance between word sequences plus the hyp/ref alignment of one optimal
/// path. Ties prefer match/substitution, then an extra hypothesis word, then a missing
/// reference word.
inline std::pair<std::size_t, Alignment> edit_distance(const Words &hyp, const Words &ref) {
    const std::size_t H = hyp.size(), R = ref.size();
    std::vector<std::size_t> cost((H + 1) * (R + 1));
    auto at = [&](std::size_t i, std::size_t j) -> std::size_t & { return cost[i * (R + 1) + j]; };
    for (std::size_t i = 0; i <= H; ++i)
        at(i, 0) = i;
    for (std::size_t j = 0; j <= R; ++j)
        at(0, j) = j;
    for (std::size_t i = 1; i <= H; ++i)
        for (std::size_t j = 1; j <= R; ++j)
            at(i, j) = std::min({at(i - 1, j - 1) + (hyp[i - 1] == ref[j - 1] ? 0 : 1), at(i - 1, j) + 1, at(i, j - 1) + 1});

    enum Op { nop, sub, hyp_extra, ref_extra };
    std::vector<Op> trace;
    std::size_t i = H, j = R;
    while (i > 0 || j > 0) {
        if (i > 0 && j > 0 && at(i, j) == at(i - 1, j - 1) + (hyp[i - 1] == ref[j - 1] ? 0 : 1)) {
            trace.push_back(hyp[i - 1] == ref[j - 1] ? nop : sub);
            --i, --j;
        } else if (i > 0 && at(i, j) == at(i - 1, j) + 1) {
            trace.push_back(hyp_extra);
            --i;
        } else {
            trace.push_back(ref_extra);
            --j;
        }
    }
    std::reverse(trace.begin(), trace.end());

    Alignment a;
    a.ref_to_hyp.assign(R, -1);
    long ph = -1, pr = -1;
    for (Op op : trace) {
        switch (op) {
        case nop:
        case sub:
            ++ph, ++pr;
            a.ref_to_hyp[static_cast<std::size_t>(pr)] = ph;
            a.hyp_err.push_back(op == sub);
            a.ref_err.push_back(op == sub);
            break;
        case hyp_extra:
            ++ph;
            a.hyp_err.push_back(1);
            break;
        case ref_extra:
            ++pr;
            a.ref_to_hyp[static_cast<std::size_t>(pr)] = ph;
            a.ref_err.push_back(1);
            break;
        }
    }
    return {at(H, R), std::move(a)};
}

/// Moves words[start, start+length) so that it begins before position `target` of the
/// original sequence.
inline Words perform_shift(const Words &w, std::size_t start, std::size_t length, std::size_t target) {
    Words out;
    out.reserve(w.size());
    // Slice bounds clamp to the sequence, as in the reference implementation.
    auto put = [&](std::size_t b, std::size_t e) {
        e = std::min(e, w.size());
        if (b < e)
            out.insert(out.end(), w.begin() + static_cast<std::ptrdiff_t>(b), w.begin() + static_cast<std::ptrdiff_t>(e));
    };
    if (target < start) {
        put(0, target), put(start, start + length), put(target, start), put(start + length, w.size());
    } else if (target > start + length) {
        put(0, start), put(start + length, target), put(start, start + length), put(target, w.size());
    } else {
        put(0, start), put(start + length, length + target), put(start, start + length), put(length + target, w.size());
    }
    return out;
}

struct Candidate {
    long gain;
    std::size_t length;
    std::size_t start_h;
    std::size_t target;
    Words shifted;

    // Highest gain, then longest phrase, then earliest phrase, then earliest target.
    bool better_than(const Candidate &o) const {
        if (gain != o.gain)
            return gain > o.gain;
        if (length != o.length)
            return length > o.length;
        if (start_h != o.start_h)
            return start_h < o.start_h;
        if (target != o.target)
            return target < o.target;
        return shifted > o.shifted;
    }
};

inline std::optional<Candidate> best_shift(const Words &hyp, const Words &ref, std::size_t &checked) {
    const auto [pre_score, align] = edit_distance(hyp, ref);
    std::optional<Candidate> best;
    for (std::size_t sh = 0; sh < hyp.size(); ++sh) {
        for (std::size_t sr = 0; sr < ref.size(); ++sr) {
            if ((sh > sr ? sh - sr : sr - sh) > kMaxShiftDist)
                continue;
            for (std::size_t len = 1; len <= kMaxShiftSize && sh + len <= hyp.size() && sr + len <= ref.size() &&
                                      hyp[sh + len - 1] == ref[sr + len - 1];
                 ++len) {
                // Only shift phrases that are wrong in the hypothesis and that land on a
                // reference span that is not already matched.
                bool hyp_wrong = false, ref_wrong = false;
                for (std::size_t k = sh; k < sh + len; ++k)
                    hyp_wrong |= align.hyp_err[k] != 0;
                for (std::size_t k = sr; k < sr + len; ++k)
                    ref_wrong |= align.ref_err[k] != 0;
                if (!hyp_wrong || !ref_wrong)
                    continue;
                const long aligned = align.ref_to_hyp[sr];
                if (aligned >= static_cast<long>(sh) && aligned < static_cast<long>(sh + len))
                    continue;
                long prev = -1;
                for (long offset = -1; offset < static_cast<long>(len); ++offset) {
                    long idx;
                    const long pos = static_cast<long>(sr) + offset;
                    if (pos == -1)
                        idx = 0;
                    else if (pos < static_cast<long>(ref.size()))
                        idx = align.ref_to_hyp[static_cast<std::size_t>(pos)] + 1;
                    else
                        break;
                    if (idx == prev)
                        continue;
                    prev = idx;
                    Words shifted = perform_shift(hyp, sh, len, static_cast<std::size_t>(idx));
                    const long gain = static_cast<long>(pre_score) - static_cast<long>(edit_distance(shifted, ref).first);
                    Candidate c{gain, len, sh, static_cast<std::size_t>(idx), std::move(shifted)};
                    ++checked;
                    if (!best || c.better_than(*best))
                        best = std::move(c);
                }
                if (checked >= kMaxShiftCandidates)
                    return best;
            }
        }
    }
    return best;
}

} // namespace ter_detail

/// Edits (shifts plus insertions, deletions and substitutions) and reference length for
/// one segment, from the greedy shift search over word tokens.
inline std::pair<std::size_t, std::size_t> ter_edits(const std::vector<std::string> &hyp,
                                                     const std::vector<std::string> &ref) {
    std::size_t shifts = 0, checked = 0;
    auto current = hyp;
    while (true) {
        auto cand = ter_detail::best_shift(current, ref, checked);
        if (checked >= ter_detail::kMaxShiftCandidates || !cand || cand->gain <= 0)
            break;
        ++shifts;
        current = std::move(cand->shifted);
    }
    return {shifts + ter_detail::edit_distance(current, ref).first, ref.size()};
}

inline SegmentStats ter_stats(std::string_view hyp, std::string_view ref, const MetricConfig &cfg = {}) {
    const auto [edits, len] = ter_edits(detail::metric_tokens(hyp, cfg), detail::metric_tokens(ref, cfg));
    return {static_cast<double>(edits), static_cast<double>(len)};
}

inline double ter_from_stats(std::span<const double> st) { return st[1] > 0 ? 100.0 * st[0] / st[1] : 0.0; }

// ---------------------------------------------------------------------------
// Corpus scoring

inline SegmentStats segment_stats(Metric m, std::string_view hyp, std::string_view ref, const MetricConfig &cfg) {
    switch (m) {
    case Metric::bleu: return bleu_stats(hyp, ref, cfg);
    case Metric::chrf2: return chrf_stats(hyp, ref, cfg);
    default: return ter_stats(hyp, ref, cfg);
    }
}

inline double score_from_stats(Metric m, std::span<const double> st, const MetricConfig &cfg) {
    switch (m) {
    case Metric::bleu: return bleu_from_stats(st, cfg);
    case Metric::chrf2: return chrf_from_stats(st, cfg);
    default: return ter_from_stats(st);
    }
}

/// Per-segment statistics after input validation.
inline std::vector<SegmentStats> corpus_segment_stats(Metric m, std::span<const std::string> hyps,
                                                      std::span<const std::string> refs, const MetricConfig &cfg,
                                                      unsigned threads = 1) {
    detail::check_segments(hyps, refs);
    for (std::size_t i = 0; i < refs.size(); ++i)
        if (word_count(refs[i]) == 0)
            throw LineError(i + 1, "empty reference");
    std::vector<SegmentStats> out(hyps.size());
    parallel_for(hyps.size(), threads, [&](std::size_t i) { out[i] = segment_stats(m, hyps[i], refs[i], cfg); });
    if (m == Metric::bleu) {
        const auto hyp_len_at = static_cast<std::size_t>(2 * cfg.bleu_max_order);
        double sys_len = 0;
        for (const auto &st : out)
            sys_len += st[hyp_len_at];
        if (sys_len == 0)
            throw DataError("every hypothesis is empty");
    }
    return out;
}

namespace detail {
inline MetricScore summarize(Metric m, const std::vector<SegmentStats> &stats, const MetricConfig &cfg) {
    SegmentStats sum(stats.front().size(), 0.0);
    for (const auto &st : stats)
        for (std::size_t k = 0; k < st.size(); ++k)
            sum[k] += st[k];
    MetricScore s;
    s.metric = m;
    s.value = score_from_stats(m, sum, cfg);
    s.n_segments = stats.size();
    s.config = cfg.describe(m);
    s.config_digest = digest(s.config);
    return s;
}
} // namespace detail

inline MetricScore corpus_score(Metric m, std::span<const std::string> hyps, std::span<const std::string> refs,
                                const MetricConfig &cfg = {}, unsigned threads = 1) {
    return detail::summarize(m, corpus_segment_stats(m, hyps, refs, cfg, threads), cfg);
}

inline MetricScore bleu(std::span<const std::string> hyps, std::span<const std::string> refs, const MetricConfig &cfg = {}) {
    return corpus_score(Metric::bleu, hyps, refs, cfg);
}
inline MetricScore chrf2(std::span<const std::string> hyps, std::span<const std::string> refs, const MetricConfig &cfg = {}) {
    return corpus_score(Metric::chrf2, hyps, refs, cfg);
}
inline MetricScore ter(std::span<const std::string> hyps, std::span<const std::string> refs, const MetricConfig &cfg = {}) {
    return corpus_score(Metric::ter, hyps, refs, cfg);
}

// ---------------------------------------------------------------------------
// Bootstrap

struct BootstrapOptions {
    std::size_t resamples = 1000;
    double level = 0.95;
    std::uint64_t seed = 1;
    unsigned threads = 1;
};

/// Segment indices of resample b: n draws with replacement from its own seeded substream.
inline std::vector<std::size_t> bootstrap_indices(std::size_t n, std::size_t b, std::uint64_t seed) {
    Engine eng = substream(seed, b);
    std::vector<std::size_t> idx(n);
    for (auto &i : idx)
        i = static_cast<std::size_t>(bounded(eng, n));
    return idx;
}

/// Linear-interpolated percentile of sorted values, q in [0, 1].
inline double percentile(std::span<const double> sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

/// Corpus score plus half the width of the central `level` percentile interval of the
/// metric over bootstrap resamples of segments.
inline MetricScore bootstrap_ci(Metric m, std::span<const std::string> hyps, std::span<const std::string> refs,
                                const BootstrapOptions &opts = {}, const MetricConfig &cfg = {}) {
    if (opts.resamples < 100)
        throw ValidationError("bootstrap needs at least 100 resamples");
    if (!(opts.level > 0.0 && opts.level < 1.0))
        throw ValidationError("confidence level must lie in (0, 1)");
    const auto stats = corpus_segment_stats(m, hyps, refs, cfg, opts.threads);
    MetricScore score = detail::summarize(m, stats, cfg);
    const std::size_t n = stats.size(), width = stats.front().size();
    std::vector<double> values(opts.resamples);
    parallel_for(opts.resamples, opts.threads, [&](std::size_t b) {
        SegmentStats sum(width, 0.0);
        for (std::size_t i : bootstrap_indices(n, b, opts.seed))
            for (std::size_t k = 0; k < width; ++k)
                sum[k] += stats[i][k];
        values[b] = score_from_stats(m, sum, cfg);
    });
    std::sort(values.begin(), values.end());
    const double tail = (1.0 - opts.level) / 2.0;
    score.ci_half_width = (percentile(values, 1.0 - tail) - percentile(values, tail)) / 2.0;
    score.config += ";bootstrap=" + std::to_string(opts.resamples) + ":" + std::to_string(opts.level) + ":" +
                    std::to_string(opts.seed);
    score.config_digest = digest(score.config);
    return score;
}

inline nlohmann::json to_json(const MetricScore &s) {
    return {{"metric", to_string(s.metric)},
            {"value", s.value},
            {"ci", s.ci_half_width ? nlohmann::json(*s.ci_half_width) : nlohmann::json(nullptr)},
            {"n", s.n_segments},
            {"config", s.config},
            {"config_digest", s.config_digest}};
}

} // namespace augmt
