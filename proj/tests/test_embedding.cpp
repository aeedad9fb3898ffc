#include <catch2/catch_amalgamated.hpp>

#include "medgraph/embedding.hpp"

#include "test_util.hpp"

using namespace mg;

TEST_CASE("cosine similarity basics") {
    CHECK(cosine_similarity({1, 0}, {1, 0}) == Catch::Approx(1.0));
    CHECK(cosine_similarity({1, 0}, {0, 1}) == Catch::Approx(0.0));
    CHECK(cosine_similarity({1, 1}, {1, 0}) == Catch::Approx(0.7071067812).epsilon(1e-9));
    CHECK_THROWS_AS(cosine_similarity({0, 0}, {1, 0}), ZeroVectorError);
    CHECK_THROWS_AS(cosine_similarity({1, 0}, {1, 0, 0}), ShapeMismatchError);
}

TEST_CASE("provider returns stored vectors verbatim") {
    EmbeddingProvider p(3, 0);
    p.put("pneumonia", {1.0, 2.0, 3.0});
    REQUIRE(p.has("pneumonia"));
    CHECK(p.get("pneumonia") == std::vector<double>{1.0, 2.0, 3.0});
}

TEST_CASE("fallback vectors are unit norm and deterministic") {
    EmbeddingProvider p(64, 9);
    auto v1 = p.get("never stored");
    auto v2 = p.get("never stored");
    CHECK(v1 == v2);
    CHECK(norm2(v1) == Catch::Approx(1.0).margin(1e-12));

    EmbeddingProvider other_seed(64, 10);
    CHECK(other_seed.get("never stored") != v1);
}

TEST_CASE("embedding file round trip") {
    EmbeddingProvider p(4, 0);
    p.put("alpha", {0.25, -1.5, 3.0, 0.0});
    p.put("beta term", {1e-17, 2.0, -3.125, 4.75});
    std::string path = test_util::tmp_path("emb.tsv");
    p.save(path);
    auto q = EmbeddingProvider::load(path, 0);
    CHECK(q.dim() == 4);
    CHECK(q.get("alpha") == p.get("alpha"));
    CHECK(q.get("beta term") == p.get("beta term"));
    std::filesystem::remove(path);
}

TEST_CASE("dimension mismatch on put raises") {
    EmbeddingProvider p(3, 0);
    CHECK_THROWS_AS(p.put("x", {1.0}), ShapeMismatchError);
}
