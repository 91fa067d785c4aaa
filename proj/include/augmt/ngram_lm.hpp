#pragma once

#include <augmt/corpus.hpp>
#include <augmt/error.hpp>
#include <augmt/parallel.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace augmt {

enum class Smoothing { kneser_ney_interpolated, add_k, unknown };

inline const char *to_string(Smoothing s) {
    switch (s) {
    case Smoothing::kneser_ney_interpolated: return "kneser_ney_interpolated";
    case Smoothing::add_k: return "add_k";
    default: return "unknown";
    }
}

using WordId = std::uint32_t;
/// An n-gram as a sequence of word ids, oldest first.
using NGramKey = std::u32string;

inline constexpr WordId kUnkId = 0;
inline constexpr WordId kBosId = 1;
inline constexpr WordId kEosId = 2;
inline constexpr int kMaxOrder = 6;
inline constexpr double kLog10Zero = -99.0;

class Vocabulary {
  public:
    Vocabulary() {
        add("<unk>");
        add("<s>");
        add("</s>");
    }

    WordId add(std::string_view word) {
        auto [it, inserted] = ids_.try_emplace(std::string(word), static_cast<WordId>(words_.size()));
        if (inserted)
            words_.emplace_back(word);
        return it->second;
    }

    WordId id(std::string_view word) const {
        auto it = ids_.find(std::string(word));
        return it == ids_.end() ? kUnkId : it->second;
    }

    bool contains(std::string_view word) const { return ids_.count(std::string(word)) != 0; }
    const std::string &word(WordId id) const { return words_.at(id); }
    std::size_t size() const noexcept { return words_.size(); }

    /// Number of predictable events: every type except <s>.
    std::size_t event_count() const noexcept { return words_.size() - 1; }

  private:
    std::unordered_map<std::string, WordId> ids_;
    std::vector<std::string> words_;
};

struct NGramEntry {
    double log10_prob = 0.0;
    double log10_backoff = 0.0;
};

struct PerplexityScore {
    double ppl = 0.0;
    double log_prob_sum = 0.0; ///< natural log
    std::size_t token_count = 0;
    std::size_t oov_count = 0;
};

struct LmOptions {
    int order = 3;
    Smoothing smoothing = Smoothing::kneser_ney_interpolated;
    double add_k = 0.01;
    /// Tokens seen fewer times are mapped to <unk>.
    std::size_t min_count = 1;
    /// Fixed Kneser-Ney discount for every order and count class. When unset, discounts
    /// are estimated from count-of-counts.
    std::optional<double> discount;
};

/// Backoff n-gram model. Probabilities of seen n-grams are stored already interpolated
/// with their lower orders and the backoff weight of a context is its interpolation
/// weight, so the ARPA backoff rule reproduces the interpolated distribution exactly.
class NGramModel {
  public:
    NGramModel() = default;
    explicit NGramModel(int order) : order_(order), tables_(static_cast<std::size_t>(order)) {}

    int order() const noexcept { return order_; }
    const Vocabulary &vocab() const noexcept { return vocab_; }
    Smoothing smoothing() const noexcept { return smoothing_; }
    const std::string &smoothing_note() const noexcept { return note_; }
    const std::vector<std::array<double, 3>> &discounts() const noexcept { return discounts_; }

    /// Entries of order k (1-based).
    const std::unordered_map<NGramKey, NGramEntry> &table(int k) const { return tables_.at(static_cast<std::size_t>(k - 1)); }

    /// log10 p(w | context) under the backoff rule; context is oldest-first and may be
    /// longer than order-1.
    double log10_prob(std::span<const WordId> context, WordId w) const {
        const std::size_t max_len = std::min<std::size_t>(context.size(), static_cast<std::size_t>(order_ - 1));
        double backoff = 0.0;
        NGramKey key;
        for (std::size_t len = max_len + 1; len-- > 0;) {
            key.assign(context.end() - static_cast<std::ptrdiff_t>(len), context.end());
            key.push_back(w);
            const auto &tab = tables_[len];
            if (auto it = tab.find(key); it != tab.end())
                return it->second.log10_prob + backoff;
            if (len > 0) {
                key.pop_back();
                const auto &ctx_tab = tables_[len - 1];
                if (auto it = ctx_tab.find(key); it != ctx_tab.end())
                    backoff += it->second.log10_backoff;
            }
        }
        return kLog10Zero;
    }

    double prob(std::span<const WordId> context, WordId w) const { return std::pow(10.0, log10_prob(context, w)); }

    /// Σ_w p(w | context) over every predictable type (excludes <s>).
    double context_mass(std::span<const WordId> context) const {
        double sum = 0.0;
        for (WordId w = 0; w < vocab_.size(); ++w)
            if (w != kBosId)
                sum += prob(context, w);
        return sum;
    }

    /// Scores a sentence padded with order-1 <s> and one </s>.
    PerplexityScore perplexity(std::string_view sentence) const {
        std::vector<WordId> ids(static_cast<std::size_t>(order_ - 1), kBosId);
        PerplexityScore score;
        for (const auto &tok : tokenize(sentence)) {
            const WordId id = vocab_.id(tok);
            score.oov_count += id == kUnkId && tok != "<unk>";
            ids.push_back(id);
        }
        ids.push_back(kEosId);
        const std::size_t start = static_cast<std::size_t>(order_ - 1);
        // Running mean in log10, the unit the tables are stored in; a constant sequence
        // keeps its value exactly.
        double mean = 0.0, sum = 0.0;
        for (std::size_t i = start; i < ids.size(); ++i) {
            const std::span<const WordId> ctx(ids.data() + (i - start), start);
            const double lp = log10_prob(ctx, ids[i]);
            sum += lp;
            mean += (lp - mean) / static_cast<double>(i - start + 1);
        }
        score.token_count = ids.size() - start;
        score.log_prob_sum = sum * std::log(10.0);
        score.ppl = std::pow(10.0, -mean);
        return score;
    }

    PerplexityScore perplexity(const Sentence &s) const { return perplexity(std::string_view(s.text)); }

    std::vector<PerplexityScore> perplexity_batch(std::span<const Sentence> sentences, unsigned threads = 1) const {
        std::vector<PerplexityScore> out(sentences.size());
        parallel_for(sentences.size(), threads, [&](std::size_t i) { out[i] = perplexity(sentences[i]); });
        return out;
    }

    /// Equal probability for every listed word, </s> and <unk>.
    static NGramModel uniform(std::span<const std::string> words) {
        NGramModel m(1);
        for (const auto &w : words)
            m.vocab_.add(w);
        const double lp = -std::log10(static_cast<double>(m.vocab_.event_count()));
        for (WordId w = 0; w < m.vocab_.size(); ++w)
            m.tables_[0][NGramKey(1, w)] = {w == kBosId ? kLog10Zero : lp, 0.0};
        m.smoothing_ = Smoothing::unknown;
        m.note_ = "uniform";
        return m;
    }

    void write_arpa(std::ostream &out) const;
    void write_arpa(const std::string &path) const {
        std::ofstream out(path);
        if (!out)
            throw ValidationError("cannot write '" + path + "'");
        write_arpa(out);
    }

    static NGramModel read_arpa(std::istream &in, const std::string &name = "<arpa>");
    static NGramModel read_arpa(const std::string &path) {
        std::ifstream in(path);
        if (!in)
            throw ValidationError("cannot open ARPA file '" + path + "'");
        return read_arpa(in, path);
    }

    friend NGramModel train_lm(std::span<const Sentence> sentences, const LmOptions &opts);

  private:
    int order_ = 0;
    Vocabulary vocab_;
    std::vector<std::unordered_map<NGramKey, NGramEntry>> tables_;
    Smoothing smoothing_ = Smoothing::unknown;
    std::string note_;
    std::vector<std::array<double, 3>> discounts_;
};

namespace detail {

using CountTable = std::unordered_map<NGramKey, std::uint64_t>;

inline bool all_bos(const NGramKey &k) {
    return std::all_of(k.begin(), k.end(), [](char32_t c) { return c == kBosId; });
}

/// Modified Kneser-Ney discounts {D1, D2, D3+}; nullopt when count-of-counts are degenerate.
inline std::optional<std::array<double, 3>> estimate_discounts(const CountTable &adjusted) {
    std::array<double, 4> n{};
    for (const auto &[key, c] : adjusted)
        if (c >= 1 && c <= 4)
            n[c - 1] += 1;
    if (n[0] == 0 || n[1] == 0 || n[2] == 0 || n[3] == 0)
        return std::nullopt;
    const double y = n[0] / (n[0] + 2 * n[1]);
    std::array<double, 3> d{1 - 2 * y * n[1] / n[0], 2 - 3 * y * n[2] / n[1], 3 - 4 * y * n[3] / n[2]};
    for (std::size_t i = 0; i < 3; ++i)
        if (!(d[i] > 0.0) || !(d[i] < static_cast<double>(i + 1)))
            return std::nullopt;
    return d;
}

inline double discount_for(const std::array<double, 3> &d, std::uint64_t count) {
    return count == 0 ? 0.0 : d[std::min<std::uint64_t>(count, 3) - 1];
}

inline double safe_log10(double p) { return p > 0.0 ? std::log10(p) : kLog10Zero; }

} // namespace detail

inline NGramModel train_lm(std::span<const Sentence> sentences, const LmOptions &opts) {
    using detail::CountTable;
    if (opts.order < 1 || opts.order > kMaxOrder)
        throw ValidationError("order must be in [1, " + std::to_string(kMaxOrder) + "], got " +
                              std::to_string(opts.order));
    if (sentences.empty())
        throw DataError("cannot train a language model on an empty corpus");
    if (opts.smoothing == Smoothing::unknown)
        throw ValidationError("smoothing must be kneser_ney_interpolated or add_k");
    if (opts.add_k < 0.0)
        throw ValidationError("add-k constant must be non-negative");
    if (opts.discount && !(*opts.discount >= 0.0 && *opts.discount <= 1.0))
        throw ValidationError("fixed discount must lie in [0, 1]");

    const auto N = static_cast<std::size_t>(opts.order);
    std::vector<std::vector<std::string>> tokens;
    tokens.reserve(sentences.size());
    std::unordered_map<std::string, std::size_t> freq;
    for (const auto &s : sentences) {
        tokens.push_back(tokenize(s));
        for (const auto &t : tokens.back())
            ++freq[t];
    }

    NGramModel m(opts.order);
    std::vector<CountTable> raw(N);
    std::vector<WordId> ids;
    for (const auto &sent : tokens) {
        // One <s> per sentence, as standard toolkits count. Scoring pads with order-1 <s>,
        // and the missing all-<s> contexts back off with weight 1 to the single-<s> state.
        ids.assign(1, kBosId);
        for (const auto &t : sent)
            ids.push_back(freq[t] < opts.min_count ? kUnkId : m.vocab_.add(t));
        ids.push_back(kEosId);
        for (std::size_t i = 1; i < ids.size(); ++i)
            for (std::size_t k = 1; k <= std::min(N, i + 1); ++k)
                ++raw[k - 1][NGramKey(ids.begin() + static_cast<std::ptrdiff_t>(i + 1 - k),
                                      ids.begin() + static_cast<std::ptrdiff_t>(i + 1))];
    }

    Smoothing smoothing = opts.smoothing;
    std::vector<CountTable> counts = raw;
    std::vector<std::array<double, 3>> discounts(N);
    if (smoothing == Smoothing::kneser_ney_interpolated) {
        // Lower orders use the number of distinct left extensions, except n-grams
        // starting with <s>, which cannot be extended and keep raw counts.
        for (std::size_t k = 1; k < N; ++k) {
            CountTable cont;
            for (const auto &[key, c] : raw[k])
                if (key[1] != kBosId)
                    ++cont[key.substr(1)];
            for (auto &[key, c] : counts[k - 1])
                if (key[0] != kBosId)
                    c = cont[key];
        }
        for (std::size_t k = 0; k < N && smoothing == Smoothing::kneser_ney_interpolated; ++k) {
            if (opts.discount) {
                discounts[k] = {*opts.discount, *opts.discount, *opts.discount};
            } else if (auto d = detail::estimate_discounts(counts[k])) {
                discounts[k] = *d;
            } else {
                smoothing = Smoothing::add_k;
                m.note_ = "count-of-counts degenerate at order " + std::to_string(k + 1) + "; fell back to add-k";
            }
        }
        if (smoothing == Smoothing::add_k) {
            counts = raw;
            discounts.clear();
        }
    }
    m.smoothing_ = smoothing;
    if (smoothing == Smoothing::kneser_ney_interpolated)
        m.discounts_ = discounts;

    const double V = static_cast<double>(m.vocab_.event_count());
    const double k_add = opts.add_k;

    struct ContextStats {
        double total = 0;
        std::array<double, 3> n{};
    };

    for (std::size_t k = 1; k <= N; ++k) {
        std::unordered_map<NGramKey, ContextStats> ctx;
        for (const auto &[key, c] : counts[k - 1]) {
            auto &st = ctx[key.substr(0, k - 1)];
            st.total += static_cast<double>(c);
            if (c > 0)
                st.n[std::min<std::uint64_t>(c, 3) - 1] += 1;
        }
        auto gamma = [&](const ContextStats &st) {
            if (smoothing == Smoothing::add_k)
                return st.total + k_add * V > 0 ? k_add * V / (st.total + k_add * V) : 1.0;
            const auto &d = discounts[k - 1];
            return st.total > 0 ? (d[0] * st.n[0] + d[1] * st.n[1] + d[2] * st.n[2]) / st.total : 1.0;
        };
        auto own = [&](std::uint64_t c, const ContextStats &st) {
            if (smoothing == Smoothing::add_k)
                return st.total + k_add * V > 0 ? static_cast<double>(c) / (st.total + k_add * V) : 0.0;
            return st.total > 0 ? std::max(0.0, static_cast<double>(c) - detail::discount_for(discounts[k - 1], c)) /
                                      st.total
                                : 0.0;
        };

        auto &tab = m.tables_[k - 1];
        if (k == 1) {
            const auto &st = ctx[NGramKey()];
            const double g = gamma(st);
            for (WordId w = 0; w < m.vocab_.size(); ++w) {
                if (w == kBosId) {
                    tab[NGramKey(1, w)] = {kLog10Zero, 0.0};
                    continue;
                }
                auto it = counts[0].find(NGramKey(1, w));
                const std::uint64_t c = it == counts[0].end() ? 0 : it->second;
                tab[NGramKey(1, w)] = {detail::safe_log10(own(c, st) + g / V), 0.0};
            }
            continue;
        }
        std::vector<WordId> lower_ctx;
        for (const auto &[key, c] : counts[k - 1]) {
            const NGramKey h = key.substr(0, k - 1);
            const auto &st = ctx[h];
            lower_ctx.assign(h.begin() + 1, h.end());
            const double lower = m.prob(lower_ctx, static_cast<WordId>(key.back()));
            tab[key] = {detail::safe_log10(own(c, st) + gamma(st) * lower), 0.0};
        }
        // Interpolation weights become backoff weights of the context n-grams. Contexts
        // made only of <s> are never predicted and get placeholder entries.
        auto &ctx_tab = m.tables_[k - 2];
        for (const auto &[h, st] : ctx) {
            auto it = ctx_tab.find(h);
            if (it == ctx_tab.end()) {
                if (!detail::all_bos(h))
                    throw std::logic_error("context without an n-gram entry");
                it = ctx_tab.emplace(h, NGramEntry{kLog10Zero, 0.0}).first;
            }
            it->second.log10_backoff = detail::safe_log10(gamma(st));
        }
    }
    return m;
}

inline NGramModel train_lm(const MonoCorpus &corpus, const LmOptions &opts) {
    return train_lm(std::span<const Sentence>(corpus.sentences), opts);
}

inline void NGramModel::write_arpa(std::ostream &out) const {
    out << "\n\\data\\\n";
    for (int k = 1; k <= order_; ++k)
        out << "ngram " << k << "=" << tables_[static_cast<std::size_t>(k - 1)].size() << "\n";
    char buf[64];
    auto fmt = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.8g", std::isfinite(v) ? v : kLog10Zero);
        return std::string(buf);
    };
    for (int k = 1; k <= order_; ++k) {
        const auto &tab = tables_[static_cast<std::size_t>(k - 1)];
        std::vector<const std::pair<const NGramKey, NGramEntry> *> rows;
        rows.reserve(tab.size());
        for (const auto &kv : tab)
            rows.push_back(&kv);
        std::sort(rows.begin(), rows.end(), [](auto *a, auto *b) { return a->first < b->first; });
        out << "\n\\" << k << "-grams:\n";
        for (const auto *row : rows) {
            out << fmt(row->second.log10_prob) << '\t';
            for (std::size_t i = 0; i < row->first.size(); ++i)
                out << (i ? " " : "") << vocab_.word(static_cast<WordId>(row->first[i]));
            if (k < order_)
                out << '\t' << fmt(row->second.log10_backoff);
            out << '\n';
        }
    }
    out << "\n\\end\\\n";
}

inline NGramModel NGramModel::read_arpa(std::istream &in, const std::string &name) {
    auto fail = [&](std::size_t line, const std::string &msg) -> LineError { return LineError(line, name + ": " + msg); };
    auto parse_double = [&](const std::string &s, std::size_t line) {
        std::size_t used = 0;
        double v = 0;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception &) {
            throw fail(line, "not a number: '" + s + "'");
        }
        if (used != s.size())
            throw fail(line, "not a number: '" + s + "'");
        return v;
    };

    std::string line;
    std::size_t lineno = 0;
    std::vector<std::size_t> declared;
    enum class State { start, data, grams, end } state = State::start;
    int current = 0;
    std::vector<std::vector<std::pair<std::vector<std::string>, NGramEntry>>> rows;

    auto close_section = [&](std::size_t at) {
        if (current > 0 && rows[static_cast<std::size_t>(current - 1)].size() != declared[static_cast<std::size_t>(current - 1)])
            throw fail(at, std::to_string(current) + "-gram section has " +
                               std::to_string(rows[static_cast<std::size_t>(current - 1)].size()) + " entries, header declares " +
                               std::to_string(declared[static_cast<std::size_t>(current - 1)]));
    };

    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos)
            continue;
        if (state == State::start) {
            if (line == "\\data\\")
                state = State::data;
            continue;
        }
        if (line == "\\end\\") {
            close_section(lineno);
            state = State::end;
            break;
        }
        if (line.size() > 2 && line.front() == '\\') {
            int k = 0;
            char tail[16] = {};
            if (std::sscanf(line.c_str(), "\\%d-grams%15s", &k, tail) != 2 || std::string(tail) != ":")
                throw fail(lineno, "malformed section header '" + line + "'");
            if (k != current + 1 || k > static_cast<int>(declared.size()))
                throw fail(lineno, "unexpected section \\" + std::to_string(k) + "-grams:");
            close_section(lineno);
            current = k;
            state = State::grams;
            continue;
        }
        if (state == State::data) {
            int k = 0;
            unsigned long long n = 0;
            char extra = 0;
            if (std::sscanf(line.c_str(), "ngram %d=%llu %c", &k, &n, &extra) != 2)
                throw fail(lineno, "malformed count line '" + line + "'");
            if (k != static_cast<int>(declared.size()) + 1 || k > kMaxOrder)
                throw fail(lineno, "unexpected n-gram order " + std::to_string(k));
            declared.push_back(static_cast<std::size_t>(n));
            rows.emplace_back();
            continue;
        }
        std::istringstream fields(line);
        std::vector<std::string> parts;
        for (std::string f; fields >> f;)
            parts.push_back(f);
        const auto k = static_cast<std::size_t>(current);
        if (parts.size() != k + 1 && parts.size() != k + 2)
            throw fail(lineno, "expected " + std::to_string(k + 1) + " or " + std::to_string(k + 2) + " fields");
        NGramEntry e{parse_double(parts[0], lineno), parts.size() == k + 2 ? parse_double(parts.back(), lineno) : 0.0};
        rows[k - 1].push_back({std::vector<std::string>(parts.begin() + 1, parts.begin() + 1 + static_cast<std::ptrdiff_t>(k)), e});
    }
    if (state != State::end)
        throw fail(lineno, "missing \\end\\ marker");
    if (declared.empty())
        throw fail(lineno, "no n-gram counts declared");

    NGramModel m(static_cast<int>(declared.size()));
    for (const auto &[words, e] : rows[0])
        m.vocab_.add(words[0]);
    for (std::size_t k = 1; k <= declared.size(); ++k) {
        for (const auto &[words, e] : rows[k - 1]) {
            NGramKey key;
            for (const auto &w : words) {
                if (!m.vocab_.contains(w))
                    throw DataError(name + ": word '" + w + "' in a " + std::to_string(k) + "-gram is not a unigram");
                key.push_back(m.vocab_.id(w));
            }
            m.tables_[k - 1][key] = e;
        }
    }
    for (WordId w : {kUnkId, kBosId, kEosId})
        m.tables_[0].try_emplace(NGramKey(1, w), NGramEntry{kLog10Zero, 0.0});
    m.note_ = "read from " + name;
    return m;
}

inline nlohmann::json to_json(const PerplexityScore &s, std::size_t line) {
    return {{"line", line}, {"ppl", s.ppl}, {"tokens", s.token_count}, {"oov", s.oov_count}};
}

} // namespace augmt
