// SPDX-License-Identifier: Apache-2.0
#include "ztt/data/batches.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "ztt/errors.hpp"

namespace ztt::data {

namespace {

// Unbiased draw in [0, bound) from the raw engine output, so permutations do
// not depend on the standard library's distribution implementation.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x = rng();
    while (x >= limit) {
        x = rng();
    }
    return x % bound;
}

std::vector<std::size_t> epoch_permutation(std::uint64_t seed, std::uint64_t epoch,
                                           std::size_t n) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(epoch >> 32)};
    std::mt19937_64 rng(seq);
    for (std::size_t i = n; i > 1; --i) {
        std::swap(perm[i - 1], perm[bounded(rng, i)]);
    }
    return perm;
}

}  // namespace

Split split_corpus(std::span<const TokenId> corpus, double train_fraction) {
    if (!(train_fraction > 0.0 && train_fraction <= 1.0)) {
        throw DataError("train fraction must lie in (0, 1]");
    }
    const auto cut = static_cast<std::size_t>(static_cast<double>(corpus.size()) * train_fraction);
    return Split{corpus.first(cut), corpus.subspan(cut)};
}

std::size_t window_count(std::size_t corpus_len, std::size_t seq_len) {
    if (seq_len == 0 || corpus_len < seq_len + 1) {
        return 0;
    }
    return (corpus_len - 1) / seq_len;
}

namespace {

struct PermutationCache {
    std::uint64_t epoch = 0;
    std::vector<std::size_t> perm;
};

std::size_t offset_for(const BatchPlan& plan, std::size_t corpus_len, std::uint64_t index,
                       PermutationCache& cache) {
    const std::size_t windows = window_count(corpus_len, plan.seq_len);
    if (windows == 0) {
        throw DataError("corpus of " + std::to_string(corpus_len) +
                        " tokens is shorter than seq_len+1 = " + std::to_string(plan.seq_len + 1));
    }
    const std::uint64_t epoch = index / windows;
    std::size_t window = static_cast<std::size_t>(index % windows);
    if (plan.shuffle) {
        if (cache.perm.size() != windows || cache.epoch != epoch) {
            cache.perm = epoch_permutation(plan.seed, epoch, windows);
            cache.epoch = epoch;
        }
        window = cache.perm[window];
    }
    return window * plan.seq_len;
}

}  // namespace

std::size_t window_offset(const BatchPlan& plan, std::size_t corpus_len, std::uint64_t index) {
    PermutationCache cache;
    return offset_for(plan, corpus_len, index, cache);
}

Batch next_batch(const BatchPlan& plan, std::span<const TokenId> corpus, std::uint64_t step) {
    if (plan.batch == 0) {
        throw DataError("batch size must be positive");
    }
    Batch out;
    out.batch = plan.batch;
    out.seq_len = plan.seq_len;
    out.inputs.reserve(plan.batch * plan.seq_len);
    out.targets.reserve(plan.batch * plan.seq_len);
    PermutationCache cache;
    for (std::size_t b = 0; b < plan.batch; ++b) {
        const std::size_t off = offset_for(plan, corpus.size(), step * plan.batch + b, cache);
        out.inputs.insert(out.inputs.end(), corpus.begin() + off,
                          corpus.begin() + off + plan.seq_len);
        out.targets.insert(out.targets.end(), corpus.begin() + off + 1,
                           corpus.begin() + off + plan.seq_len + 1);
    }
    return out;
}

}  // namespace ztt::data
