// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ztt/numerics/ops.hpp"

namespace ztt::data {

using numerics::TokenId;

// Byte-level vocabulary: ids 0..255 are raw bytes, followed by three specials.
struct Vocabulary {
    static constexpr TokenId kPad = 256;
    static constexpr TokenId kBos = 257;
    static constexpr TokenId kEos = 258;
    static constexpr std::size_t kSize = 259;

    static constexpr bool is_byte(TokenId id) { return id >= 0 && id < 256; }
    static constexpr bool is_special(TokenId id) { return id >= kPad && id <= kEos; }
};

std::vector<TokenId> encode(std::span<const unsigned char> bytes, bool prefix_bos = false);
std::vector<TokenId> encode(std::string_view text, bool prefix_bos = false);

// Specials are dropped; any other non-byte id is an IndexError.
std::string decode(std::span<const TokenId> ids);

// Reads a file as raw bytes and tokenizes it.
std::vector<TokenId> load_corpus(const std::string& path);

}  // namespace ztt::data
