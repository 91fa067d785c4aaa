#pragma once

#include <augmt/error.hpp>
#include <augmt/utf8.hpp>

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace augmt {

enum class Origin { natural, synthetic };

inline const char *to_string(Origin o) { return o == Origin::natural ? "natural" : "synthetic"; }

struct Sentence {
    std::string text;
    std::string lang;

    bool operator==(const Sentence &) const = default;
};

struct SentencePair {
    Sentence src;
    Sentence tgt;
    Origin origin = Origin::natural;

    bool operator==(const SentencePair &) const = default;
};

struct LanguagePair {
    std::string src;
    std::string tgt;

    bool operator==(const LanguagePair &) const = default;
};

/// Parses "de,hsb" or "de-hsb".
inline LanguagePair parse_language_pair(std::string_view spec) {
    const auto pos = spec.find_first_of(",-");
    if (pos == std::string_view::npos || pos == 0 || pos + 1 == spec.size())
        throw ValidationError("language pair must look like 'de,hsb', got '" + std::string(spec) + "'");
    LanguagePair langs{std::string(spec.substr(0, pos)), std::string(spec.substr(pos + 1))};
    if (langs.src == langs.tgt)
        throw ValidationError("source and target language must differ ('" + langs.src + "')");
    return langs;
}

struct MonoCorpus {
    std::string lang;
    std::vector<Sentence> sentences;

    std::size_t size() const noexcept { return sentences.size(); }
    bool empty() const noexcept { return sentences.empty(); }
    const Sentence &operator[](std::size_t i) const { return sentences[i]; }

    void add(std::string text) { sentences.push_back({std::move(text), lang}); }
};

/// Line-aligned sentence pairs sharing one language pair.
class ParallelCorpus {
  public:
    ParallelCorpus() = default;
    explicit ParallelCorpus(LanguagePair langs) : langs_(std::move(langs)) {
        if (langs_.src == langs_.tgt)
            throw ValidationError("source and target language must differ ('" + langs_.src + "')");
    }

    const LanguagePair &langs() const noexcept { return langs_; }
    const std::vector<SentencePair> &pairs() const noexcept { return pairs_; }
    std::size_t size() const noexcept { return pairs_.size(); }
    bool empty() const noexcept { return pairs_.empty(); }
    const SentencePair &operator[](std::size_t i) const { return pairs_[i]; }

    void add(std::string src, std::string tgt, Origin origin = Origin::natural) {
        pairs_.push_back({{std::move(src), langs_.src}, {std::move(tgt), langs_.tgt}, origin});
    }

    void add(SentencePair pair) {
        if (pair.src.lang != langs_.src || pair.tgt.lang != langs_.tgt)
            throw DataError("sentence pair languages " + pair.src.lang + "-" + pair.tgt.lang +
                            " do not match corpus " + langs_.src + "-" + langs_.tgt);
        pairs_.push_back(std::move(pair));
    }

    MonoCorpus source_side() const {
        MonoCorpus out{langs_.src, {}};
        out.sentences.reserve(pairs_.size());
        for (const auto &p : pairs_)
            out.sentences.push_back(p.src);
        return out;
    }

    MonoCorpus target_side() const {
        MonoCorpus out{langs_.tgt, {}};
        out.sentences.reserve(pairs_.size());
        for (const auto &p : pairs_)
            out.sentences.push_back(p.tgt);
        return out;
    }

    bool operator==(const ParallelCorpus &) const = default;

  private:
    LanguagePair langs_;
    std::vector<SentencePair> pairs_;
};

struct LoadOptions {
    /// Empty lines are rejected unless set; then they load as empty sentences.
    bool allow_empty = false;
};

/// Reads one sentence per line. CRLF is normalized to LF; a missing final newline is accepted.
inline std::vector<std::string> read_lines(const std::string &path, const LoadOptions &opts = {}) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ValidationError("cannot open '" + path + "'");
    std::vector<std::string> lines;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (auto bad = utf8::find_invalid(line))
            throw LineError(lineno, path + ": invalid UTF-8 at byte " + std::to_string(*bad));
        if (line.find('\r') != std::string::npos)
            throw LineError(lineno, path + ": stray carriage return");
        if (line.empty() && !opts.allow_empty)
            throw LineError(lineno, path + ": empty line (use allow-empty to keep it)");
        lines.push_back(std::move(line));
    }
    return lines;
}

inline MonoCorpus load_mono(const std::string &path, std::string lang, const LoadOptions &opts = {}) {
    MonoCorpus out{std::move(lang), {}};
    for (auto &line : read_lines(path, opts))
        out.add(std::move(line));
    return out;
}

inline ParallelCorpus load_corpus(const std::string &src_path, const std::string &tgt_path,
                                  const LanguagePair &langs, const LoadOptions &opts = {}) {
    auto src = read_lines(src_path, opts);
    auto tgt = read_lines(tgt_path, opts);
    if (src.size() != tgt.size())
        throw DataError("line count mismatch: '" + src_path + "' has " + std::to_string(src.size()) +
                        " lines, '" + tgt_path + "' has " + std::to_string(tgt.size()) + " lines");
    ParallelCorpus corpus(langs);
    for (std::size_t i = 0; i < src.size(); ++i)
        corpus.add(std::move(src[i]), std::move(tgt[i]));
    return corpus;
}

/// Two tab-separated columns per line.
inline ParallelCorpus load_tsv(const std::string &path, const LanguagePair &langs,
                               const LoadOptions &opts = {}) {
    LoadOptions raw = opts;
    raw.allow_empty = true;
    ParallelCorpus corpus(langs);
    std::size_t lineno = 0;
    for (auto &line : read_lines(path, raw)) {
        ++lineno;
        const auto tab = line.find('\t');
        if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos)
            throw LineError(lineno, path + ": expected exactly two tab-separated columns");
        std::string src = line.substr(0, tab);
        std::string tgt = line.substr(tab + 1);
        if (!opts.allow_empty && (src.empty() || tgt.empty()))
            throw LineError(lineno, path + ": empty column");
        corpus.add(std::move(src), std::move(tgt));
    }
    return corpus;
}

inline void write_lines(const std::string &path, std::span<const Sentence> sentences) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ValidationError("cannot write '" + path + "'");
    for (const auto &s : sentences)
        out << s.text << '\n';
}

inline void write_mono(const std::string &path, const MonoCorpus &c) { write_lines(path, c.sentences); }

inline void write_corpus(const ParallelCorpus &c, const std::string &src_path, const std::string &tgt_path) {
    write_mono(src_path, c.source_side());
    write_mono(tgt_path, c.target_side());
}

enum class TokenMode { whitespace, character };

/// Whitespace mode splits on runs of Unicode whitespace; character mode yields each
/// non-whitespace scalar value as its own token.
inline std::vector<std::string> tokenize(std::string_view text, TokenMode mode = TokenMode::whitespace) {
    std::vector<std::string> out;
    const std::u32string cps = utf8::decode(text);
    if (mode == TokenMode::character) {
        for (char32_t cp : cps) {
            if (utf8::is_space(cp))
                continue;
            std::string tok;
            utf8::append(tok, cp);
            out.push_back(std::move(tok));
        }
        return out;
    }
    std::string cur;
    for (char32_t cp : cps) {
        if (utf8::is_space(cp)) {
            if (!cur.empty())
                out.push_back(std::move(cur)), cur.clear();
        } else {
            utf8::append(cur, cp);
        }
    }
    if (!cur.empty())
        out.push_back(std::move(cur));
    return out;
}

inline std::vector<std::string> tokenize(const Sentence &s, TokenMode mode = TokenMode::whitespace) {
    return tokenize(s.text, mode);
}

inline std::size_t word_count(std::string_view text) {
    std::size_t n = 0;
    bool in_word = false;
    for (char32_t cp : utf8::decode(text)) {
        const bool sp = utf8::is_space(cp);
        n += !sp && !in_word;
        in_word = !sp;
    }
    return n;
}

/// Scalar values including internal whitespace.
inline std::size_t char_count(std::string_view text) { return utf8::length(text); }

struct LengthStats {
    std::size_t count = 0;
    double mean_words = 0, sd_words = 0;
    double mean_chars = 0, sd_chars = 0;
};

struct StatsOptions {
    bool sample_sd = false;
};

namespace detail {
// Lengths are integers, so sums of values and squares are exact and order-independent.
struct MomentAccumulator {
    std::uint64_t n = 0;
    unsigned __int128 sum = 0, sum_sq = 0;

    void add(std::uint64_t v) {
        ++n;
        sum += v;
        sum_sq += static_cast<unsigned __int128>(v) * v;
    }

    double mean() const { return static_cast<double>(sum) / static_cast<double>(n); }

    double sd(bool sample) const {
        if (sample && n < 2)
            return 0.0;
        // n*sum_sq - sum^2 is exact integer arithmetic.
        const unsigned __int128 num = static_cast<unsigned __int128>(n) * sum_sq - sum * sum;
        const double denom = static_cast<double>(n) * static_cast<double>(sample ? n - 1 : n);
        return std::sqrt(static_cast<double>(num) / denom);
    }
};
} // namespace detail

inline LengthStats corpus_stats(std::span<const Sentence> sentences, const StatsOptions &opts = {}) {
    if (sentences.empty())
        throw DataError("cannot compute statistics of an empty corpus");
    detail::MomentAccumulator words, chars;
    for (const auto &s : sentences) {
        words.add(word_count(s.text));
        chars.add(char_count(s.text));
    }
    return {sentences.size(),  words.mean(), words.sd(opts.sample_sd),
            chars.mean(),      chars.sd(opts.sample_sd)};
}

inline LengthStats corpus_stats(const MonoCorpus &c, const StatsOptions &opts = {}) {
    return corpus_stats(std::span<const Sentence>(c.sentences), opts);
}

inline std::pair<LengthStats, LengthStats> corpus_stats(const ParallelCorpus &c, const StatsOptions &opts = {}) {
    return {corpus_stats(c.source_side(), opts), corpus_stats(c.target_side(), opts)};
}

inline nlohmann::json to_json(const LengthStats &s) {
    return {{"count", s.count},
            {"words", {{"mean", s.mean_words}, {"sd", s.sd_words}}},
            {"chars", {{"mean", s.mean_chars}, {"sd", s.sd_chars}}}};
}

/// "German (de)" for known codes, the code itself otherwise.
inline std::string language_label(std::string_view code) {
    static const std::pair<std::string_view, std::string_view> names[] = {
        {"de", "German"}, {"hsb", "Upper Sorbian"}, {"dsb", "Lower Sorbian"}, {"cs", "Czech"}, {"en", "English"}};
    for (const auto &[c, name] : names)
        if (c == code)
            return std::string(name) + " (" + std::string(code) + ")";
    return std::string(code);
}

/// One row in the "corpus | language | # sentences | words | chars" layout, one decimal place.
inline std::string format_stats_row(std::string_view corpus, std::string_view language, const LengthStats &s) {
    std::string count = std::to_string(s.count);
    for (int i = static_cast<int>(count.size()) - 3; i > 0; i -= 3)
        count.insert(static_cast<std::size_t>(i), ",");
    char buf[256];
    const std::string lang = language_label(language);
    std::snprintf(buf, sizeof buf, "%-12.*s %-20s %12s  %5.1f ± %-5.1f  %6.1f ± %-6.1f",
                  static_cast<int>(corpus.size()), corpus.data(), lang.c_str(), count.c_str(), s.mean_words,
                  s.sd_words, s.mean_chars, s.sd_chars);
    return buf;
}

inline std::string stats_table_header() {
    return "corpus       language              # sentences  in words       in characters";
}

} // namespace augmt
