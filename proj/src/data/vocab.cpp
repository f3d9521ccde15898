// SPDX-License-Identifier: Apache-2.0
#include "ztt/data/vocab.hpp"

#include <fstream>
#include <iterator>

#include "ztt/errors.hpp"

namespace ztt::data {

std::vector<TokenId> encode(std::span<const unsigned char> bytes, bool prefix_bos) {
    std::vector<TokenId> ids;
    ids.reserve(bytes.size() + (prefix_bos ? 1 : 0));
    if (prefix_bos) {
        ids.push_back(Vocabulary::kBos);
    }
    for (unsigned char b : bytes) {
        ids.push_back(static_cast<TokenId>(b));
    }
    return ids;
}

std::vector<TokenId> encode(std::string_view text, bool prefix_bos) {
    return encode(std::span<const unsigned char>(
                      reinterpret_cast<const unsigned char*>(text.data()), text.size()),
                  prefix_bos);
}

std::string decode(std::span<const TokenId> ids) {
    std::string out;
    out.reserve(ids.size());
    for (TokenId id : ids) {
        if (Vocabulary::is_byte(id)) {
            out.push_back(static_cast<char>(static_cast<unsigned char>(id)));
        } else if (!Vocabulary::is_special(id)) {
            throw IndexError("decode: token id " + std::to_string(id) + " is not in the vocabulary");
        }
    }
    return out;
}

std::vector<TokenId> load_corpus(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open corpus file '" + path + "'");
    }
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    return encode(bytes);
}

}  // namespace ztt::data
