#pragma once

#include <augmt/corpus.hpp>
#include <augmt/embedding.hpp>
#include <augmt/error.hpp>
#include <augmt/parallel.hpp>

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace augmt {

inline constexpr double kDefaultTmThreshold = 0.5;
inline constexpr std::string_view kSeparator = "[SEP]";

struct TmMatch {
    std::size_t query_line = 0;
    std::size_t tm_line = 0;
    double distance = 0.0;
    Sentence s_t;
    Sentence t_t;
};

struct TmAnnotatedInput {
    Sentence s;
    std::optional<TmMatch> match;
    std::string rendered;
};

/// Best TM entry for query row `q_line` if its distance is within `threshold` (inclusive).
/// With `exclude_self`, the TM line with the query's own index is skipped.
inline std::optional<TmMatch> retrieve_tm(std::size_t q_line, std::span<const float> query, const VectorIndex &index,
                                          const ParallelCorpus &tm, double threshold, bool exclude_self) {
    if (!(threshold > 0.0))
        throw ValidationError("threshold must be positive");
    if (index.size() != tm.size())
        throw DataError("index holds " + std::to_string(index.size()) + " vectors but the TM has " +
                        std::to_string(tm.size()) + " pairs");
    const auto nn = index.nearest(query, 1, 1, exclude_self ? std::optional<std::size_t>(q_line) : std::nullopt);
    if (nn.empty() || nn.front().distance > threshold)
        return std::nullopt;
    const auto &pair = tm[nn.front().line_id];
    return TmMatch{q_line, nn.front().line_id, nn.front().distance, pair.src, pair.tgt};
}

namespace detail {
inline void check_no_separator(std::string_view text, const char *field) {
    if (text.find(kSeparator) != std::string_view::npos)
        throw DataError(std::string(field) + " contains the reserved token [SEP]: '" + std::string(text) + "'");
}
} // namespace detail

/// "[SEP] s [SEP] s_t [SEP] t_t", or `s` unchanged without a match.
inline std::string render_tm_input(std::string_view s, std::optional<std::string_view> s_t = {},
                                   std::optional<std::string_view> t_t = {}) {
    detail::check_no_separator(s, "input");
    if (!s_t || !t_t)
        return std::string(s);
    detail::check_no_separator(*s_t, "TM source");
    detail::check_no_separator(*t_t, "TM target");
    std::string out;
    out.reserve(s.size() + s_t->size() + t_t->size() + 20);
    out.append(kSeparator).append(" ").append(s);
    out.append(" ").append(kSeparator).append(" ").append(*s_t);
    out.append(" ").append(kSeparator).append(" ").append(*t_t);
    return out;
}

inline std::string render_tm_input(const Sentence &s, const std::optional<TmMatch> &match) {
    if (!match)
        return render_tm_input(s.text);
    return render_tm_input(s.text, match->s_t.text, match->t_t.text);
}

struct TmParts {
    std::string s, s_t, t_t;
    bool operator==(const TmParts &) const = default;
};

/// Inverse of render_tm_input for matched inputs; nullopt for pass-through text.
inline std::optional<TmParts> parse_tm_input(std::string_view rendered) {
    const std::string lead = std::string(kSeparator) + " ";
    const std::string mid = " " + std::string(kSeparator) + " ";
    if (!rendered.starts_with(lead))
        return std::nullopt;
    rendered.remove_prefix(lead.size());
    const auto a = rendered.find(mid);
    if (a == std::string_view::npos)
        throw DataError("malformed TM input: missing second separator");
    const auto b = rendered.find(mid, a + mid.size());
    if (b == std::string_view::npos || rendered.find(mid, b + mid.size()) != std::string_view::npos)
        throw DataError("malformed TM input: expected exactly three fields");
    return TmParts{std::string(rendered.substr(0, a)), std::string(rendered.substr(a + mid.size(), b - a - mid.size())),
                   std::string(rendered.substr(b + mid.size()))};
}

struct TmOptions {
    double threshold = kDefaultTmThreshold;
    bool exclude_self = false;
    unsigned threads = 1;
};

struct TmSummary {
    std::size_t matched = 0;
    std::size_t unmatched = 0;
    double threshold = kDefaultTmThreshold;
    bool exclude_self = false;
};

struct TmAnnotation {
    std::vector<TmAnnotatedInput> records;
    TmSummary summary;
};

/// Annotates every input line with its best TM match, preserving input order.
inline TmAnnotation annotate_corpus(const MonoCorpus &inputs, const EmbeddingSet &input_vectors,
                                    const VectorIndex &index, const ParallelCorpus &tm, const TmOptions &opts) {
    if (input_vectors.count != inputs.size())
        throw DataError("embeddings cover " + std::to_string(input_vectors.count) + " lines but the input has " +
                        std::to_string(inputs.size()));
    if (input_vectors.dim != index.dim())
        throw DataError("input embedding dimension " + std::to_string(input_vectors.dim) +
                        " does not match TM dimension " + std::to_string(index.dim()));
    if (index.size() != tm.size())
        throw DataError("index holds " + std::to_string(index.size()) + " vectors but the TM has " +
                        std::to_string(tm.size()) + " pairs");
    TmAnnotation out;
    out.records.resize(inputs.size());
    parallel_for(inputs.size(), opts.threads, [&](std::size_t i) {
        auto &rec = out.records[i];
        rec.s = inputs[i];
        rec.match = retrieve_tm(i, input_vectors.row(i), index, tm, opts.threshold, opts.exclude_self);
        try {
            rec.rendered = render_tm_input(rec.s, rec.match);
        } catch (const DataError &e) {
            throw LineError(i + 1, e.what());
        }
    });
    out.summary.threshold = opts.threshold;
    out.summary.exclude_self = opts.exclude_self;
    for (const auto &rec : out.records)
        ++(rec.match ? out.summary.matched : out.summary.unmatched);
    return out;
}

inline nlohmann::json to_json(const TmAnnotatedInput &rec, std::size_t line) {
    nlohmann::json j{{"line", line}, {"src", rec.s.text}};
    if (rec.match) {
        j["tm_line"] = rec.match->tm_line + 1;
        j["tm_src"] = rec.match->s_t.text;
        j["tm_tgt"] = rec.match->t_t.text;
        j["distance"] = rec.match->distance;
    } else {
        j["tm_line"] = nullptr;
        j["tm_src"] = nullptr;
        j["tm_tgt"] = nullptr;
        j["distance"] = nullptr;
    }
    j["rendered"] = rec.rendered;
    return j;
}

inline nlohmann::json to_json(const TmSummary &s) {
    return {{"matched", s.matched}, {"unmatched", s.unmatched}, {"threshold", s.threshold},
            {"exclude_self", s.exclude_self}};
}

} // namespace augmt
