// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace ztt::data {

// Deterministic English-like text from a small phrase grammar with skewed
// word frequencies. Used as a stand-in corpus when no text file is at hand.
std::string synthetic_text(std::size_t bytes, std::uint64_t seed);

}  // namespace ztt::data
