// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <random>

#include "ztt/errors.hpp"
#include "ztt/model/config.hpp"
#include "ztt/model/schedule.hpp"

using namespace ztt::model;

namespace {

std::vector<std::size_t> layer_ids(const CycleSchedule& s) {
    std::vector<std::size_t> out;
    for (const auto& a : s.applications) {
        out.push_back(a.layer + 1);  // 1-based, as layouts are usually written
    }
    return out;
}

}  // namespace

TEST_CASE("variant names round-trip") {
    for (Variant v : {Variant::vanilla, Variant::basic_cycling, Variant::head_tail_cycling,
                      Variant::zero_token}) {
        CHECK(parse_variant(variant_name(v)) == v);
    }
    CHECK_THROWS_AS(parse_variant("ztt"), ztt::ConfigError);
}

TEST_CASE("validate rejects inconsistent configs") {
    auto bad = [](auto edit) {
        ModelConfig c;
        edit(c);
        CHECK_THROWS_AS(c.validate(), ztt::ConfigError);
    };
    CHECK_NOTHROW(ModelConfig{}.validate());
    bad([](ModelConfig& c) { c.loop_count = 0; });
    bad([](ModelConfig& c) { c.all_layers = 0; });
    bad([](ModelConfig& c) { c.n_heads = 3; });
    bad([](ModelConfig& c) { c.all_layers = 2; });
    bad([](ModelConfig& c) {
        c = config_for(Variant::vanilla, 4, 1);
        c.loop_count = 2;
    });
    bad([](ModelConfig& c) {
        c = config_for(Variant::head_tail_cycling, 4, 2);
        c.use_zero_token = true;
    });
}

TEST_CASE("cycled sets follow the variant") {
    CHECK(config_for(Variant::vanilla, 4, 1).cycled_layers().empty());
    CHECK(config_for(Variant::basic_cycling, 3, 2).cycled_layers() ==
          std::vector<std::size_t>{0, 1, 2});
    CHECK(config_for(Variant::head_tail_cycling, 5, 2).cycled_layers() ==
          std::vector<std::size_t>{1, 2, 3});
    CHECK(config_for(Variant::zero_token, 3, 4).cycled_layers() == std::vector<std::size_t>{1});
}

TEST_CASE("schedule layouts") {
    auto htc = build_schedule(config_for(Variant::head_tail_cycling, 3, 4));
    CHECK(layer_ids(htc) == std::vector<std::size_t>{1, 2, 2, 2, 2, 3});
    CHECK(htc.exit_points == std::vector<std::size_t>{1, 2, 3, 4});
    CHECK(htc.applications[3].cycle == 2);
    CHECK(htc.applications[3].cycled);
    CHECK_FALSE(htc.applications[5].cycled);

    auto bc = build_schedule(config_for(Variant::basic_cycling, 3, 2));
    CHECK(layer_ids(bc) == std::vector<std::size_t>{1, 2, 3, 1, 2, 3});
    CHECK(bc.exit_points == std::vector<std::size_t>{2, 5});

    auto v = build_schedule(config_for(Variant::vanilla, 6, 1));
    CHECK(layer_ids(v) == std::vector<std::size_t>{1, 2, 3, 4, 5, 6});
    CHECK(v.length() == 6);

    for (Variant var : {Variant::basic_cycling, Variant::head_tail_cycling, Variant::zero_token}) {
        auto one = build_schedule(config_for(var, 5, 1));
        CHECK(layer_ids(one) == std::vector<std::size_t>{1, 2, 3, 4, 5});
    }
}

TEST_CASE("zero-key pool index is rank-major") {
    auto c = config_for(Variant::zero_token, 5, 3);
    CHECK(c.zero_key_index(1, 0) == 0);
    CHECK(c.zero_key_index(1, 2) == 2);
    CHECK(c.zero_key_index(3, 1) == 7);
    CHECK_THROWS_AS(c.zero_key_index(0, 0), ztt::UsageError);
}

TEST_CASE("schedule length formula holds for random configs") {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> pick_variant(0, 3), pick_l(1, 12), pick_n(1, 8);
    int checked = 0;
    while (checked < 1000) {
        const auto v = static_cast<Variant>(pick_variant(rng));
        const auto L = static_cast<std::size_t>(pick_l(rng));
        const auto N = static_cast<std::size_t>(pick_n(rng));
        auto c = config_for(v, L, N);
        try {
            c.validate();
        } catch (const ztt::ConfigError&) {
            continue;
        }
        ++checked;
        const auto s = build_schedule(c);
        const std::size_t looped = c.cycled_layers().size();
        const std::size_t expected = L - looped + looped * c.loop_count;
        REQUIRE(s.length() == expected);
        REQUIRE(c.effective_depth() == expected);

        // Every cycled layer appears once per cycle, in ascending order;
        // others exactly once.
        std::vector<std::size_t> uses(L, 0);
        for (const auto& a : s.applications) {
            ++uses[a.layer];
        }
        for (std::size_t l = 0; l < L; ++l) {
            REQUIRE(uses[l] == (c.is_cycled(l) ? c.loop_count : 1));
        }
        if (looped > 0) {
            REQUIRE(s.exit_points.size() == c.loop_count);
            for (std::size_t n = 0; n < c.loop_count; ++n) {
                const std::size_t begin = s.prefix_length + n * s.block_length;
                for (std::size_t i = 0; i < looped; ++i) {
                    REQUIRE(s.applications[begin + i].layer == c.cycled_layers()[i]);
                    REQUIRE(s.applications[begin + i].cycle == n);
                }
                REQUIRE(s.exit_points[n] == begin + looped - 1);
            }
        }
        if (v == Variant::head_tail_cycling || v == Variant::zero_token) {
            REQUIRE(s.applications.front().layer == 0);
            REQUIRE(s.applications.back().layer == L - 1);
        }
    }
}

TEST_CASE("reference layouts all have effective depth 6") {
    CHECK(build_schedule(config_for(Variant::vanilla, 6, 1)).length() == 6);
    CHECK(build_schedule(config_for(Variant::basic_cycling, 3, 2)).length() == 6);
    CHECK(build_schedule(config_for(Variant::head_tail_cycling, 3, 4)).length() == 6);
    CHECK(build_schedule(config_for(Variant::zero_token, 3, 4)).length() == 6);
}
