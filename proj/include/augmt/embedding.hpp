#pragma once

#include <augmt/error.hpp>
#include <augmt/parallel.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace augmt {

/// n x d row-major float32 vectors, one row per line of the bound corpus.
struct EmbeddingSet {
    std::size_t count = 0;
    std::size_t dim = 0;
    bool normalized = false;
    std::vector<float> values;
    std::string corpus_id;
    std::string model_name;

    std::span<const float> row(std::size_t i) const { return {values.data() + i * dim, dim}; }

    static EmbeddingSet from_rows(const std::vector<std::vector<float>> &rows) {
        EmbeddingSet set;
        set.count = rows.size();
        set.dim = rows.empty() ? 0 : rows.front().size();
        set.values.reserve(set.count * set.dim);
        for (const auto &r : rows) {
            if (r.size() != set.dim)
                throw DataError("embedding rows have inconsistent dimension");
            set.values.insert(set.values.end(), r.begin(), r.end());
        }
        return set;
    }
};

/// Squared distance accumulated in double. No dimension check.
inline double squared_distance(std::span<const float> a, std::span<const float> b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        sum += d * d;
    }
    return sum;
}

inline double euclidean_distance(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size())
        throw DataError("dimension mismatch: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    return std::sqrt(squared_distance(a, b));
}

inline constexpr std::array<char, 6> kEmbeddingMagic{'A', 'E', 'M', 'B', '1', '\0'};
inline constexpr std::size_t kEmbeddingHeaderSize = 6 + 4 + 4 + 1 + 7;

namespace detail {
inline std::uint32_t read_le32(const unsigned char *p) {
    return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
           static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

inline void write_le32(std::ostream &out, std::uint32_t v) {
    const char b[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                       static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
    out.write(b, 4);
}
} // namespace detail

/// Reads an AEMB1 file. When `expected_count` is given, the row count must match it
/// (the line count of the corpus the vectors are bound to).
inline EmbeddingSet load_embeddings(const std::string &path, std::optional<std::size_t> expected_count = {}) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ValidationError("cannot open embedding file '" + path + "'");
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() < kEmbeddingHeaderSize)
        throw DataError(path + ": truncated header (" + std::to_string(bytes.size()) + " bytes)");
    if (std::memcmp(bytes.data(), kEmbeddingMagic.data(), kEmbeddingMagic.size()) != 0)
        throw DataError(path + ": bad magic, expected AEMB1");
    EmbeddingSet set;
    set.count = detail::read_le32(bytes.data() + 6);
    set.dim = detail::read_le32(bytes.data() + 10);
    const unsigned char flag = bytes[14];
    if (flag > 1)
        throw DataError(path + ": normalized flag must be 0 or 1, got " + std::to_string(flag));
    set.normalized = flag == 1;
    if (set.dim == 0)
        throw DataError(path + ": dim is 0");
    const std::size_t payload = bytes.size() - kEmbeddingHeaderSize;
    const std::size_t expected_payload = set.count * set.dim * 4;
    if (payload != expected_payload)
        throw DataError(path + ": payload is " + std::to_string(payload) + " bytes, header n=" +
                        std::to_string(set.count) + " d=" + std::to_string(set.dim) + " requires " +
                        std::to_string(expected_payload));
    if (expected_count && *expected_count != set.count)
        throw DataError(path + ": count n=" + std::to_string(set.count) + " does not match corpus line count " +
                        std::to_string(*expected_count));
    set.values.resize(set.count * set.dim);
    const unsigned char *p = bytes.data() + kEmbeddingHeaderSize;
    for (std::size_t i = 0; i < set.values.size(); ++i, p += 4) {
        const float v = std::bit_cast<float>(detail::read_le32(p));
        if (!std::isfinite(v))
            throw DataError(path + ": non-finite component in row " + std::to_string(i / set.dim));
        set.values[i] = v;
    }
    set.corpus_id = path;
    const std::string sidecar = path + ".json";
    if (std::filesystem::exists(sidecar)) {
        std::ifstream js(sidecar);
        try {
            const auto meta = nlohmann::json::parse(js);
            set.corpus_id = meta.value("corpus_file", path);
            set.model_name = meta.value("model_name", "");
        } catch (const nlohmann::json::exception &e) {
            throw DataError(sidecar + ": " + e.what());
        }
    }
    return set;
}

inline void write_embeddings(const std::string &path, const EmbeddingSet &set) {
    if (set.values.size() != set.count * set.dim)
        throw DataError("embedding set has " + std::to_string(set.values.size()) + " values, expected n*d");
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ValidationError("cannot write '" + path + "'");
    out.write(kEmbeddingMagic.data(), kEmbeddingMagic.size());
    detail::write_le32(out, static_cast<std::uint32_t>(set.count));
    detail::write_le32(out, static_cast<std::uint32_t>(set.dim));
    out.put(set.normalized ? 1 : 0);
    const char reserved[7] = {};
    out.write(reserved, 7);
    for (float v : set.values)
        detail::write_le32(out, std::bit_cast<std::uint32_t>(v));
}

inline void write_embedding_sidecar(const std::string &path, const std::string &corpus_file,
                                    const std::string &model_name, const std::string &created_at) {
    std::ofstream out(path + ".json");
    out << nlohmann::json{{"corpus_file", corpus_file}, {"model_name", model_name}, {"created_at", created_at}}.dump(2)
        << '\n';
}

struct Neighbor {
    std::size_t line_id = 0;
    double distance = 0.0;

    bool operator==(const Neighbor &) const = default;
};

/// Exact flat index. Results are ordered by (distance, line_id) and identical to a
/// brute-force scan for any thread count.
class VectorIndex {
  public:
    explicit VectorIndex(EmbeddingSet set) : set_(std::move(set)) {}

    const EmbeddingSet &embeddings() const noexcept { return set_; }
    std::size_t size() const noexcept { return set_.count; }
    std::size_t dim() const noexcept { return set_.dim; }

    /// The k nearest rows; returns all rows when k exceeds the count. Rows listed in
    /// `exclude` are skipped.
    std::vector<Neighbor> nearest(std::span<const float> query, std::size_t k, unsigned threads = 1,
                                  std::optional<std::size_t> exclude = {}) const {
        if (k == 0)
            throw ValidationError("k must be at least 1");
        if (query.size() != set_.dim)
            throw DataError("query dimension " + std::to_string(query.size()) + " does not match index dimension " +
                            std::to_string(set_.dim));
        const std::size_t chunks = std::max(1u, threads);
        std::vector<std::vector<Scored>> partial(chunks);
        const std::size_t per = (set_.count + chunks - 1) / chunks;
        parallel_for(chunks, threads, [&](std::size_t c) {
            const std::size_t begin = c * per;
            const std::size_t end = std::min(set_.count, begin + per);
            partial[c] = scan(query, k, begin, end, exclude);
        });
        std::vector<Scored> merged;
        for (auto &p : partial)
            merged.insert(merged.end(), p.begin(), p.end());
        return finish(std::move(merged), k);
    }

    /// One neighbor list per query row, parallel over queries.
    std::vector<std::vector<Neighbor>> nearest_batch(const EmbeddingSet &queries, std::size_t k, unsigned threads = 1,
                                                     bool exclude_same_row = false) const {
        if (queries.dim != set_.dim)
            throw DataError("query dimension " + std::to_string(queries.dim) + " does not match index dimension " +
                            std::to_string(set_.dim));
        std::vector<std::vector<Neighbor>> out(queries.count);
        parallel_for(queries.count, threads, [&](std::size_t i) {
            out[i] = nearest(queries.row(i), k, 1, exclude_same_row ? std::optional<std::size_t>(i) : std::nullopt);
        });
        return out;
    }

  private:
    struct Scored {
        double sq;
        std::size_t id;
        bool operator<(const Scored &o) const { return sq < o.sq || (sq == o.sq && id < o.id); }
    };

    std::vector<Scored> scan(std::span<const float> q, std::size_t k, std::size_t begin, std::size_t end,
                             std::optional<std::size_t> exclude) const {
        std::vector<Scored> heap; // max-heap on (sq, id)
        heap.reserve(k + 1);
        for (std::size_t i = begin; i < end; ++i) {
            if (exclude && *exclude == i)
                continue;
            const Scored s{squared_distance(q, set_.row(i)), i};
            if (heap.size() < k) {
                heap.push_back(s);
                std::push_heap(heap.begin(), heap.end());
            } else if (s < heap.front()) {
                std::pop_heap(heap.begin(), heap.end());
                heap.back() = s;
                std::push_heap(heap.begin(), heap.end());
            }
        }
        return heap;
    }

    static std::vector<Neighbor> finish(std::vector<Scored> all, std::size_t k) {
        std::sort(all.begin(), all.end());
        if (all.size() > k)
            all.resize(k);
        std::vector<Neighbor> out;
        out.reserve(all.size());
        for (const auto &s : all)
            out.push_back({s.id, std::sqrt(s.sq)});
        return out;
    }

    EmbeddingSet set_;
};

} // namespace augmt
