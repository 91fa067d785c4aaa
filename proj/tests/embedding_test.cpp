#include <augmt/embedding.hpp>
#include <augmt/synthetic.hpp>

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cstring>

using namespace augmt;
using testutil::TempDir;

namespace {

// Independent reference: all distances, sorted by (distance, line).
std::vector<Neighbor> brute_force(const EmbeddingSet &set, std::span<const float> q, std::size_t k,
                                  std::optional<std::size_t> exclude = {}) {
    std::vector<Neighbor> all;
    for (std::size_t i = 0; i < set.count; ++i) {
        if (exclude && *exclude == i)
            continue;
        double s = 0;
        for (std::size_t j = 0; j < set.dim; ++j) {
            const double d = double(q[j]) - double(set.row(i)[j]);
            s += d * d;
        }
        all.push_back({i, std::sqrt(s)});
    }
    std::sort(all.begin(), all.end(), [](const Neighbor &a, const Neighbor &b) {
        return a.distance != b.distance ? a.distance < b.distance : a.line_id < b.line_id;
    });
    all.resize(std::min(k, all.size()));
    return all;
}

std::string header(std::uint32_t n, std::uint32_t d, unsigned char flag) {
    std::string h("AEMB1\0", 6);
    for (std::uint32_t v : {n, d})
        for (int b = 0; b < 4; ++b)
            h.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
    h.push_back(static_cast<char>(flag));
    h.append(7, '\0');
    return h;
}

std::string floats(std::initializer_list<float> vs) {
    std::string out;
    for (float v : vs) {
        char b[4];
        std::memcpy(b, &v, 4); // test host is little-endian
        out.append(b, 4);
    }
    return out;
}

} // namespace

TEST(Embedding, EuclideanDistanceByHand) {
    const std::vector<float> a{0, 0, 0}, b{1, 2, 2};
    EXPECT_DOUBLE_EQ(euclidean_distance(a, b), 3.0);
    EXPECT_DOUBLE_EQ(euclidean_distance(b, b), 0.0);
    const std::vector<float> c{1, 2};
    EXPECT_THROW(euclidean_distance(a, c), DataError);
}

TEST(Embedding, NearestMatchesBruteForce100x16) {
    const auto set = synthetic::random_vectors(100, 16, 3);
    const VectorIndex index(set);
    const auto queries = synthetic::random_vectors(20, 16, 4);
    for (std::size_t q = 0; q < queries.count; ++q)
        for (unsigned t : {1u, 3u})
            EXPECT_EQ(index.nearest(queries.row(q), 7, t), brute_force(set, queries.row(q), 7));
}

TEST(Embedding, TiesBreakTowardLowerLineId) {
    // Rows 1 and 3 are identical; both are equidistant from the query.
    const auto set = EmbeddingSet::from_rows({{5, 5}, {1, 0}, {0, 3}, {1, 0}, {-1, 0}});
    const VectorIndex index(set);
    const std::vector<float> q{0, 0};
    const auto nn = index.nearest(q, 4, 2);
    ASSERT_EQ(nn.size(), 4u);
    EXPECT_EQ(nn[0].line_id, 1u);
    EXPECT_EQ(nn[1].line_id, 3u);
    EXPECT_EQ(nn[2].line_id, 4u);
    EXPECT_EQ(nn[3].line_id, 2u);
}

TEST(Embedding, KLargerThanCountReturnsAllAndZeroIsError) {
    const VectorIndex index(synthetic::random_vectors(5, 4, 1));
    const std::vector<float> q{0, 0, 0, 0};
    EXPECT_EQ(index.nearest(q, 50).size(), 5u);
    EXPECT_THROW(index.nearest(q, 0), ValidationError);
}

TEST(Embedding, ExcludeSelfSkipsTheQueryRow) {
    const auto set = synthetic::random_vectors(30, 8, 9);
    const VectorIndex index(set);
    const auto nn = index.nearest_batch(set, 3, 2, true);
    for (std::size_t i = 0; i < set.count; ++i) {
        EXPECT_EQ(nn[i], brute_force(set, set.row(i), 3, i));
        for (const auto &n : nn[i])
            EXPECT_NE(n.line_id, i);
    }
}

TEST(Embedding, FileRoundTripWithSidecar) {
    TempDir d;
    auto set = synthetic::random_vectors(12, 5, 2);
    set.normalized = false;
    write_embeddings(d.file("x.aemb"), set);
    write_embedding_sidecar(d.file("x.aemb"), "x.txt", "some-model", "2024-01-01");
    const auto back = load_embeddings(d.file("x.aemb"), 12);
    EXPECT_EQ(back.values, set.values);
    EXPECT_EQ(back.model_name, "some-model");
    EXPECT_EQ(back.corpus_id, "x.txt");
    EXPECT_EQ(testutil::read_file(d.file("x.aemb")).size(), 22u + 12 * 5 * 4);
}

TEST(Embedding, HandWrittenFileParses) {
    TempDir d;
    testutil::write_file(d.file("h.aemb"), header(2, 2, 1) + floats({0.6f, 0.8f, 1.0f, 0.0f}));
    const auto set = load_embeddings(d.file("h.aemb"));
    EXPECT_EQ(set.count, 2u);
    EXPECT_EQ(set.dim, 2u);
    EXPECT_TRUE(set.normalized);
    EXPECT_FLOAT_EQ(set.row(0)[1], 0.8f);
}

TEST(Embedding, ValidationErrors) {
    TempDir d;
    const auto expect_data_error = [&](const std::string &bytes, std::optional<std::size_t> n = {}) {
        testutil::write_file(d.file("b.aemb"), bytes);
        EXPECT_THROW(load_embeddings(d.file("b.aemb"), n), DataError);
    };
    expect_data_error("AEMB1");                                          // truncated header
    expect_data_error("AEMB2" + header(1, 1, 0).substr(5) + floats({1})); // bad magic
    expect_data_error(header(1, 2, 0) + floats({1}));                    // short payload
    expect_data_error(header(1, 1, 2) + floats({1}));                    // bad flag
    expect_data_error(header(1, 0, 0));                                  // zero dim
    expect_data_error(header(1, 1, 0) + floats({NAN}));                  // NaN
    expect_data_error(header(2, 1, 0) + floats({1, 2}), 3);              // count binding
    EXPECT_THROW(load_embeddings(d.file("missing.aemb")), ValidationError);
}
