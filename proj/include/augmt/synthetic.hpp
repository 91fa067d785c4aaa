#pragma once

// Deterministic toy data: a two-language lexicon with topic structure, a bag-of-words
// sentence encoder, and a noisy word-by-word "translator". Used for bundled fixtures,
// tests and demos in place of real corpora and a neural embedding model.

#include <augmt/corpus.hpp>
#include <augmt/digest.hpp>
#include <augmt/embedding.hpp>
#include <augmt/random.hpp>

#include <cmath>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace augmt::synthetic {

class ToyLanguagePair {
  public:
    explicit ToyLanguagePair(std::uint64_t seed = 2020, std::size_t concepts = 600, std::size_t topics = 8)
        : topics_(topics) {
        static const std::vector<std::string> src_onsets{"b", "d", "f", "g", "h", "k", "l", "m", "n", "p",
                                                         "r", "s", "t", "w", "z", "sch", "st", "br", "gr", "ch"};
        static const std::vector<std::string> src_vowels{"a", "e", "i", "o", "u", "ei", "au", "ä", "ö", "ü", "ie", "e"};
        static const std::vector<std::string> src_codas{"", "", "n", "r", "t", "s", "ng", "ch", "l", "nd"};
        static const std::vector<std::string> tgt_onsets{"b", "d", "w", "h", "k", "l", "m", "n", "p", "r",
                                                         "s", "t", "č", "š", "ž", "ć", "ł", "dź", "z", "j"};
        static const std::vector<std::string> tgt_vowels{"a", "e", "i", "o", "u", "y", "ě", "ó", "a", "o"};
        static const std::vector<std::string> tgt_codas{"", "", "", "j", "n", "m", "ć", "š", "", "k"};
        Engine eng(seed);
        auto word = [&](const auto &on, const auto &vo, const auto &co, std::size_t min_syl, std::size_t max_syl) {
            std::string w;
            const std::size_t syl = min_syl + static_cast<std::size_t>(bounded(eng, max_syl - min_syl + 1));
            for (std::size_t s = 0; s < syl; ++s)
                w += on[bounded(eng, on.size())] + vo[bounded(eng, vo.size())];
            return w + co[bounded(eng, co.size())];
        };
        std::unordered_set<std::string> used_src, used_tgt;
        while (src_.size() < concepts) {
            auto s = word(src_onsets, src_vowels, src_codas, 1, 3);
            auto t = word(tgt_onsets, tgt_vowels, tgt_codas, 1, 3);
            if (used_src.count(s) || used_tgt.count(t))
                continue;
            used_src.insert(s), used_tgt.insert(t);
            index_.emplace(s, src_.size());
            src_.push_back(std::move(s));
            tgt_.push_back(std::move(t));
        }
    }

    std::size_t concepts() const noexcept { return src_.size(); }

    /// Concept ids of one sentence: skewed toward frequent concepts and toward the topic.
    std::vector<std::size_t> draw(Engine &eng, std::size_t topic) const {
        const std::size_t len = 3 + static_cast<std::size_t>(bounded(eng, 18));
        std::vector<std::size_t> out;
        out.reserve(len);
        for (std::size_t i = 0; i < len; ++i) {
            const double u = unit_real(eng);
            auto c = static_cast<std::size_t>(static_cast<double>(src_.size()) * u * u);
            if (unit_real(eng) < 0.6)
                c = (c / topics_) * topics_ + topic;
            out.push_back(std::min(c, src_.size() - 1));
        }
        return out;
    }

    std::string render_src(std::span<const std::size_t> ids) const { return join(ids, src_); }

    /// Target rendering drops roughly one word in nine, never all of them.
    std::string render_tgt(std::span<const std::size_t> ids, Engine &eng) const {
        std::vector<std::size_t> kept;
        for (std::size_t id : ids)
            if (unit_real(eng) >= 0.11)
                kept.push_back(id);
        if (kept.empty())
            kept.push_back(ids.front());
        return join(kept, tgt_);
    }

    ParallelCorpus bilingual(std::size_t n, std::uint64_t seed, const LanguagePair &langs = {"de", "hsb"}) const {
        Engine eng(seed);
        ParallelCorpus out(langs);
        for (std::size_t i = 0; i < n; ++i) {
            const auto ids = draw(eng, i % topics_);
            out.add(render_src(ids), render_tgt(ids, eng));
        }
        return out;
    }

    /// Fresh source-language sentences; a fraction `near_fraction` are one-word edits of
    /// sentences in `near`.
    MonoCorpus monolingual(std::size_t n, std::uint64_t seed, const ParallelCorpus *near = nullptr,
                           double near_fraction = 0.0) const {
        Engine eng(seed);
        MonoCorpus out{"de", {}};
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<std::size_t> ids;
            if (near && !near->empty() && unit_real(eng) < near_fraction) {
                const auto &base = (*near)[bounded(eng, near->size())].src.text;
                for (const auto &w : tokenize(base))
                    ids.push_back(index_.at(w));
                ids[bounded(eng, ids.size())] = bounded(eng, src_.size());
            } else {
                ids = draw(eng, bounded(eng, topics_));
            }
            out.add(render_src(ids));
        }
        return out;
    }

    /// Word-by-word translation. With probability `noise` the output is corrupted by
    /// truncation, repetition or foreign filler, which distorts its length and fluency.
    std::string translate(std::string_view src, Engine &eng, double noise) const {
        std::vector<std::size_t> ids;
        for (const auto &w : tokenize(src)) {
            auto it = index_.find(w);
            ids.push_back(it == index_.end() ? bounded(eng, src_.size()) : it->second);
        }
        if (ids.empty())
            return {};
        std::string out = render_tgt(ids, eng);
        if (unit_real(eng) >= noise)
            return out;
        switch (bounded(eng, 3)) {
        case 0: {
            const auto words = tokenize(out);
            const std::size_t keep = std::max<std::size_t>(1, words.size() / 3);
            out.clear();
            for (std::size_t i = 0; i < keep; ++i)
                out += (i ? " " : "") + words[i];
            return out;
        }
        case 1:
            return out + " " + out;
        default:
            for (int i = 0; i < 4; ++i)
                out += " " + src_[bounded(eng, src_.size())] + src_[bounded(eng, src_.size())];
            return out;
        }
    }

  private:
    static std::string join(std::span<const std::size_t> ids, const std::vector<std::string> &words) {
        std::string out;
        for (std::size_t i = 0; i < ids.size(); ++i)
            out += (i ? " " : "") + words[ids[i]];
        return out;
    }

    std::size_t topics_;
    std::vector<std::string> src_, tgt_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Bag-of-words encoder: each word hashes to a fixed random direction, a sentence is the
/// normalized sum. Sentences sharing most words land close together.
class ToyEncoder {
  public:
    explicit ToyEncoder(std::size_t dim = 16, std::uint64_t seed = 7) : dim_(dim), seed_(seed) {}

    std::size_t dim() const noexcept { return dim_; }

    std::vector<float> encode(std::string_view text) const {
        std::vector<double> acc(dim_, 0.0);
        for (const auto &w : tokenize(text)) {
            Fnv1a h;
            h.update(w);
            Engine eng = substream(seed_, h.value());
            for (auto &a : acc)
                a += 2.0 * unit_real(eng) - 1.0;
        }
        double norm = 0.0;
        for (double a : acc)
            norm += a * a;
        norm = std::sqrt(norm);
        std::vector<float> out(dim_, 0.0f);
        if (norm > 0)
            for (std::size_t i = 0; i < dim_; ++i)
                out[i] = static_cast<float>(acc[i] / norm);
        return out;
    }

    EmbeddingSet encode_all(std::span<const Sentence> sentences) const {
        EmbeddingSet set;
        set.count = sentences.size();
        set.dim = dim_;
        set.normalized = true;
        set.values.reserve(set.count * dim_);
        for (const auto &s : sentences) {
            const auto v = encode(s.text);
            set.values.insert(set.values.end(), v.begin(), v.end());
        }
        set.model_name = "toy-bow-" + std::to_string(dim_);
        return set;
    }

  private:
    std::size_t dim_;
    std::uint64_t seed_;
};

/// n random vectors with components uniform in [-1, 1).
inline EmbeddingSet random_vectors(std::size_t n, std::size_t dim, std::uint64_t seed) {
    Engine eng(seed);
    EmbeddingSet set;
    set.count = n;
    set.dim = dim;
    set.values.resize(n * dim);
    for (auto &v : set.values)
        v = static_cast<float>(2.0 * unit_real(eng) - 1.0);
    return set;
}

} // namespace augmt::synthetic
