// SPDX-License-Identifier: Apache-2.0
#include "ztt/data/synthetic.hpp"

#include <array>
#include <random>
#include <span>
#include <string_view>

namespace ztt::data {

namespace {

constexpr std::array<std::string_view, 6> kDeterminers{"the", "a", "this", "every", "that", "one"};
constexpr std::array<std::string_view, 24> kAdjectives{
    "old",   "small", "bright", "quiet", "heavy", "green", "early", "cold",
    "happy", "broken", "long",  "strange", "warm", "dark", "simple", "clever",
    "empty", "round", "gentle", "proud", "wild", "distant", "narrow", "busy"};
constexpr std::array<std::string_view, 40> kNouns{
    "river",  "garden", "teacher", "window",  "machine", "village", "letter",  "forest",
    "doctor", "road",   "bird",    "city",    "child",   "market",  "engine",  "story",
    "house",  "farmer", "boat",    "mountain", "king",   "student", "lamp",    "bridge",
    "cat",    "soldier", "song",   "table",   "friend",  "storm",   "painter", "island",
    "clock",  "horse",  "library", "sailor",  "valley",  "kitchen", "poet",    "train"};
constexpr std::array<std::string_view, 30> kVerbs{
    "sees",    "finds",  "carries", "follows", "builds",  "remembers", "watches", "opens",
    "leaves",  "visits", "paints",  "hears",   "keeps",   "crosses",   "loves",   "moves",
    "reaches", "holds",  "writes",  "calls",   "answers", "repairs",   "passes",  "covers",
    "joins",   "meets",  "guards",  "sells",   "counts",  "greets"};
constexpr std::array<std::string_view, 10> kPrepositions{
    "near", "under", "behind", "across", "beside", "inside", "over", "past", "around", "toward"};
constexpr std::array<std::string_view, 8> kAdverbs{
    "slowly", "often", "never", "quietly", "again", "always", "nearly", "soon"};
constexpr std::array<std::string_view, 6> kConnectives{"and then", "but", "because", "while",
                                                        "so", "after that"};

class Writer {
public:
    explicit Writer(std::uint64_t seed) : rng_(seed) {}

    // Skewed towards the front of the list.
    std::string_view pick(std::span<const std::string_view> words) {
        const double u = unit_(rng_);
        return words[static_cast<std::size_t>(u * u * static_cast<double>(words.size()))];
    }
    bool chance(double p) { return unit_(rng_) < p; }

    void noun_phrase(std::string& out) {
        out += pick(kDeterminers);
        if (chance(0.45)) {
            out += ' ';
            out += pick(kAdjectives);
        }
        out += ' ';
        out += pick(kNouns);
    }

    void clause(std::string& out) {
        noun_phrase(out);
        if (chance(0.2)) {
            out += ' ';
            out += pick(kAdverbs);
        }
        out += ' ';
        out += pick(kVerbs);
        out += ' ';
        noun_phrase(out);
        if (chance(0.35)) {
            out += ' ';
            out += pick(kPrepositions);
            out += ' ';
            noun_phrase(out);
        }
    }

    void sentence(std::string& out) {
        const std::size_t start = out.size();
        clause(out);
        if (chance(0.3)) {
            out += ' ';
            out += pick(kConnectives);
            out += ' ';
            clause(out);
        }
        out[start] = static_cast<char>(out[start] - 'a' + 'A');
        out += chance(0.1) ? "?" : ".";
    }

private:
    std::mt19937_64 rng_;
    std::uniform_real_distribution<double> unit_{0.0, 1.0};
};

}  // namespace

std::string synthetic_text(std::size_t bytes, std::uint64_t seed) {
    Writer w(seed);
    std::string out;
    out.reserve(bytes + 256);
    std::size_t in_paragraph = 0;
    while (out.size() < bytes) {
        w.sentence(out);
        if (++in_paragraph >= 4 && w.chance(0.3)) {
            out += '\n';
            in_paragraph = 0;
        } else {
            out += ' ';
        }
    }
    out.resize(bytes);
    return out;
}

}  // namespace ztt::data
