// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <random>

#include "fixtures.hpp"
#include "ztt/data/batches.hpp"
#include "ztt/data/synthetic.hpp"
#include "ztt/data/vocab.hpp"
#include "ztt/errors.hpp"

using namespace ztt::data;

TEST_CASE("encode maps bytes to ids") {
    CHECK(encode(std::string_view("")).empty());
    CHECK(encode(std::string_view(""), true) == std::vector<TokenId>{Vocabulary::kBos});
    CHECK(encode(std::string_view("AB")) == std::vector<TokenId>{65, 66});
    const unsigned char raw[] = {0x00, 0xff, 0x80};
    CHECK(encode(std::span<const unsigned char>(raw)) == std::vector<TokenId>{0, 255, 128});
}

TEST_CASE("specials are outside the byte range") {
    for (TokenId id : {Vocabulary::kPad, Vocabulary::kBos, Vocabulary::kEos}) {
        CHECK_FALSE(Vocabulary::is_byte(id));
        CHECK(Vocabulary::is_special(id));
        CHECK(static_cast<std::size_t>(id) < Vocabulary::kSize);
    }
    CHECK(Vocabulary::kSize == 259);
}

TEST_CASE("decode drops specials and rejects unknown ids") {
    std::vector<TokenId> ids{Vocabulary::kBos, 104, 105, Vocabulary::kEos};
    CHECK(decode(ids) == "hi");
    std::vector<TokenId> bad{65, 259};
    CHECK_THROWS_AS(decode(bad), ztt::IndexError);
    std::vector<TokenId> neg{-1};
    CHECK_THROWS_AS(decode(neg), ztt::IndexError);
}

TEST_CASE("decode(encode(x)) round-trips random byte strings") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> byte(0, 255), len(0, 300);
    for (int trial = 0; trial < 200; ++trial) {
        std::string s(static_cast<std::size_t>(len(rng)), '\0');
        for (char& c : s) {
            c = static_cast<char>(byte(rng));
        }
        auto ids = encode(s, trial % 2 == 0);
        CHECK(ids.size() == s.size() + (trial % 2 == 0 ? 1 : 0));
        CHECK(decode(ids) == s);
    }
}

TEST_CASE("load_corpus reads raw bytes") {
    ztt_test::TempDir dir;
    const std::string path = dir.file("c.bin");
    {
        std::ofstream f(path, std::ios::binary);
        f.write("a\0b\n", 4);
    }
    CHECK(load_corpus(path) == std::vector<TokenId>{97, 0, 98, 10});
    CHECK_THROWS_AS(load_corpus(dir.file("missing")), ztt::DataError);
}

TEST_CASE("next_batch without shuffling walks the corpus") {
    std::vector<TokenId> corpus{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    BatchPlan plan;
    plan.seq_len = 4;
    plan.batch = 1;
    plan.shuffle = false;
    auto b = next_batch(plan, corpus, 0);
    CHECK(b.inputs == std::vector<TokenId>{1, 2, 3, 4});
    CHECK(b.targets == std::vector<TokenId>{2, 3, 4, 5});
    b = next_batch(plan, corpus, 1);
    CHECK(b.inputs == std::vector<TokenId>{5, 6, 7, 8});
    // Two windows fit; the third step wraps to the next epoch.
    CHECK(next_batch(plan, corpus, 2).inputs == std::vector<TokenId>{1, 2, 3, 4});
}

TEST_CASE("next_batch is deterministic in seed and step") {
    auto corpus = ztt_test::synthetic_tokens(5000);
    BatchPlan plan;
    plan.seq_len = 16;
    plan.batch = 4;
    plan.seed = 3;
    for (std::uint64_t step : {0u, 1u, 17u, 400u}) {
        auto a = next_batch(plan, corpus, step);
        auto b = next_batch(plan, corpus, step);
        CHECK(a.inputs == b.inputs);
        CHECK(a.targets == b.targets);
    }
    BatchPlan other = plan;
    other.seed = 4;
    CHECK(next_batch(plan, corpus, 0).inputs != next_batch(other, corpus, 0).inputs);
}

TEST_CASE("every window appears exactly once per epoch") {
    const std::size_t len = 1001, T = 10;
    const std::size_t windows = window_count(len, T);
    REQUIRE(windows == 100);
    for (bool shuffle : {false, true}) {
        BatchPlan plan;
        plan.seq_len = T;
        plan.shuffle = shuffle;
        plan.seed = 9;
        for (std::uint64_t epoch = 0; epoch < 3; ++epoch) {
            std::vector<std::size_t> seen;
            for (std::size_t i = 0; i < windows; ++i) {
                seen.push_back(window_offset(plan, len, epoch * windows + i));
            }
            std::sort(seen.begin(), seen.end());
            std::vector<std::size_t> expected(windows);
            for (std::size_t w = 0; w < windows; ++w) {
                expected[w] = w * T;
            }
            CHECK(seen == expected);
        }
    }
}

TEST_CASE("targets are inputs shifted by one in every batch") {
    auto corpus = ztt_test::synthetic_tokens(3000, 2);
    BatchPlan plan;
    plan.seq_len = 12;
    plan.batch = 3;
    for (std::uint64_t step = 0; step < 50; ++step) {
        auto b = next_batch(plan, corpus, step);
        REQUIRE(b.inputs.size() == 36);
        REQUIRE(b.targets.size() == 36);
        for (std::size_t r = 0; r < 3; ++r) {
            for (std::size_t t = 0; t + 1 < 12; ++t) {
                CHECK(b.targets[r * 12 + t] == b.inputs[r * 12 + t + 1]);
            }
        }
    }
}

TEST_CASE("short corpora are rejected") {
    std::vector<TokenId> corpus{1, 2, 3, 4};
    BatchPlan plan;
    plan.seq_len = 4;
    plan.batch = 1;
    CHECK_THROWS_AS(next_batch(plan, corpus, 0), ztt::DataError);
    corpus.push_back(5);
    CHECK_NOTHROW(next_batch(plan, corpus, 0));
}

TEST_CASE("split is a prefix/suffix cut") {
    std::vector<TokenId> corpus(100);
    auto s = split_corpus(corpus, 0.9);
    CHECK(s.train.size() == 90);
    CHECK(s.valid.size() == 10);
    CHECK(s.valid.data() == corpus.data() + 90);
    CHECK_THROWS_AS(split_corpus(corpus, 0.0), ztt::DataError);
}

TEST_CASE("synthetic text has the requested size and is seeded") {
    auto a = synthetic_text(4096, 1);
    CHECK(a.size() == 4096);
    CHECK(a == synthetic_text(4096, 1));
    CHECK(a != synthetic_text(4096, 2));
}
