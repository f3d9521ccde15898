// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <unistd.h>

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "ztt/data/synthetic.hpp"
#include "ztt/data/vocab.hpp"
#include "ztt/model/config.hpp"
#include "ztt/model/params.hpp"

namespace ztt_test {

inline ztt::model::ModelConfig tiny_config(ztt::model::Variant v, std::size_t layers = 4,
                                           std::size_t loops = 2) {
    auto c = ztt::model::config_for(v, layers, loops);
    c.d_model = 16;
    c.n_heads = 2;
    c.d_ff = 32;
    c.t_max = 8;
    return c;
}

// Replaces every parameter with N(mean, sigma) draws so activations and
// gradients are far from the near-zero regime of the default init.
template <typename S>
void randomize(ztt::model::ModelParameters<S>& params, std::uint64_t seed, double sigma = 0.3) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, sigma);
    for (auto* p : params.all()) {
        const bool gain = p->name.find("gamma") != std::string::npos;
        for (S& v : p->value.data()) {
            v = static_cast<S>((gain ? 1.0 : 0.0) + dist(rng));
        }
    }
}

inline std::vector<int> random_tokens(std::size_t n, std::uint64_t seed, int vocab = 259) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> dist(0, vocab - 1);
    std::vector<int> out(n);
    for (int& t : out) {
        t = dist(rng);
    }
    return out;
}

// Deletes the directory tree when it goes out of scope.
class TempDir {
public:
    TempDir() {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("ztt_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

inline std::vector<int> synthetic_tokens(std::size_t bytes, std::uint64_t seed = 7) {
    return ztt::data::encode(ztt::data::synthetic_text(bytes, seed));
}

}  // namespace ztt_test
