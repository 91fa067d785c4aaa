#pragma once

#include <augmt/corpus.hpp>
#include <augmt/embedding.hpp>
#include <augmt/error.hpp>
#include <augmt/random.hpp>

#include <nlohmann/json.hpp>

#include <numeric>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

namespace augmt {

struct SelectedLine {
    std::size_t bilingual_line = 0;
    std::size_t mono_line = 0;
    double distance = 0.0;
};

struct DomainSelection {
    std::vector<SelectedLine> selected_lines;
    bool dedup = false;
    MonoCorpus corpus;
};

/// For each bilingual source vector, the nearest monolingual sentence (ties to the lower
/// mono line). Output follows bilingual line order. With `dedup`, repeated sentences keep
/// only their first occurrence.
inline DomainSelection domain_select(const EmbeddingSet &bilingual_src, const MonoCorpus &mono,
                                     const VectorIndex &mono_index, bool dedup, unsigned threads = 1) {
    if (mono.empty())
        throw DataError("monolingual retrieval database is empty");
    if (mono_index.size() != mono.size())
        throw DataError("monolingual index holds " + std::to_string(mono_index.size()) + " vectors but the corpus has " +
                        std::to_string(mono.size()) + " lines");
    if (bilingual_src.dim != mono_index.dim())
        throw DataError("dimension mismatch: bilingual " + std::to_string(bilingual_src.dim) + " vs monolingual " +
                        std::to_string(mono_index.dim()));
    const auto nn = mono_index.nearest_batch(bilingual_src, 1, threads);
    DomainSelection out;
    out.dedup = dedup;
    out.corpus.lang = mono.lang;
    std::unordered_set<std::string> seen;
    for (std::size_t i = 0; i < nn.size(); ++i) {
        const auto &best = nn[i].front();
        const auto &text = mono[best.line_id].text;
        if (dedup && !seen.insert(text).second)
            continue;
        out.selected_lines.push_back({i, best.line_id, best.distance});
        out.corpus.add(text);
    }
    return out;
}

inline nlohmann::json to_json(const SelectedLine &s) {
    return {{"bilingual_line", s.bilingual_line + 1}, {"mono_line", s.mono_line + 1}, {"distance", s.distance}};
}

struct Provenance {
    Origin origin = Origin::natural;
    std::size_t source_line = 0; ///< 1-based line in the corpus the pair came from
    std::string generator;
    std::string criterion;
};

struct MergedCorpus {
    ParallelCorpus corpus;
    std::vector<Provenance> provenance;
};

/// Concatenates original then synthetic pairs (synthetic ones tagged as such), optionally
/// shuffled with a seeded permutation.
inline MergedCorpus merge(const ParallelCorpus &original, const ParallelCorpus &synthetic,
                          std::optional<std::uint64_t> shuffle_seed = {}, const std::string &generator_id = {},
                          const std::string &criterion_id = {}) {
    if (original.langs() != synthetic.langs())
        throw DataError("language pair mismatch: " + original.langs().src + "-" + original.langs().tgt + " vs " +
                        synthetic.langs().src + "-" + synthetic.langs().tgt);
    std::vector<std::size_t> order(original.size() + synthetic.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (shuffle_seed) {
        Engine eng(*shuffle_seed);
        shuffle(std::span<std::size_t>(order), eng);
    }
    MergedCorpus out{ParallelCorpus(original.langs()), {}};
    out.provenance.reserve(order.size());
    for (std::size_t idx : order) {
        if (idx < original.size()) {
            out.corpus.add(original[idx]);
            out.provenance.push_back({original[idx].origin, idx + 1, {}, {}});
        } else {
            SentencePair p = synthetic[idx - original.size()];
            p.origin = Origin::synthetic;
            out.corpus.add(std::move(p));
            out.provenance.push_back({Origin::synthetic, idx - original.size() + 1, generator_id, criterion_id});
        }
    }
    return out;
}

inline nlohmann::json to_json(const Provenance &p, std::size_t line) {
    nlohmann::json j{{"line", line}, {"origin", to_string(p.origin)}, {"source_line", p.source_line}};
    if (p.origin == Origin::synthetic) {
        j["generator"] = p.generator;
        j["criterion"] = p.criterion;
    }
    return j;
}

} // namespace augmt
