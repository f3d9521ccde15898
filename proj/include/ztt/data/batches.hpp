// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ztt/data/vocab.hpp"

namespace ztt::data {

struct BatchPlan {
    std::size_t seq_len = 64;
    std::size_t batch = 8;
    std::uint64_t seed = 1;
    bool shuffle = true;
    double train_fraction = 0.9;
};

struct Batch {
    std::size_t batch = 0;
    std::size_t seq_len = 0;
    std::vector<TokenId> inputs;   // batch x seq_len, row-major
    std::vector<TokenId> targets;  // inputs shifted left by one
};

struct Split {
    std::span<const TokenId> train;
    std::span<const TokenId> valid;
};

// Prefix/suffix split by fraction.
Split split_corpus(std::span<const TokenId> corpus, double train_fraction);

// Number of non-overlapping windows of seq_len+1 tokens (sharing the boundary
// token) that fit in the corpus.
std::size_t window_count(std::size_t corpus_len, std::size_t seq_len);

// Start offset of the window used for slot `index` of the global sample
// stream (step * batch + b). Sequential plans walk windows in order; shuffled
// plans draw a fresh permutation of the windows per epoch from the seed.
std::size_t window_offset(const BatchPlan& plan, std::size_t corpus_len, std::uint64_t index);

Batch next_batch(const BatchPlan& plan, std::span<const TokenId> corpus, std::uint64_t step);

}  // namespace ztt::data
