// SPDX-License-Identifier: Apache-2.0
// Acceptance run: one PASS/FAIL line per criterion. Criteria 10 and 11 are
// reported but do not affect the exit status.
#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "gradcheck.hpp"
#include "ztt/adaptive/decode.hpp"
#include "ztt/adaptive/policy.hpp"
#include "ztt/cli/checkpoint.hpp"
#include "ztt/data/batches.hpp"
#include "ztt/errors.hpp"
#include "ztt/model/layers.hpp"
#include "ztt/model/schedule.hpp"
#include "ztt/model/transformer.hpp"
#include "ztt/train/evaluate.hpp"
#include "ztt/train/sweep.hpp"
#include "ztt/train/trainer.hpp"

namespace {

using namespace ztt;
using model::ModelConfig;
using model::ModelParameters;
using model::Variant;
using numerics::Tape;
using numerics::Tensor;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

template <typename S>
double max_abs_diff(const Tensor<S>& a, const Tensor<S>& b) {
    if (a.shape() != b.shape()) {
        return INFINITY;
    }
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        m = std::max(m, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
    }
    return m;
}

Tensor<double> random_hidden(std::size_t rows, std::size_t d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, 1.0);
    Tensor<double> h(numerics::Shape{rows, d});
    for (double& v : h.data()) {
        v = dist(rng);
    }
    return h;
}

ModelParameters<double> random_params(const ModelConfig& c, std::uint64_t seed) {
    auto p = model::init_parameters<double>(c, seed);
    ztt_test::randomize(p, seed);
    return p;
}

// Makes query component 0 of every head a constant 1 for the given layer.
void constant_query_component(model::LayerParameters<double>& lp, const ModelConfig& c) {
    const std::size_t d = c.d_model, dh = c.head_dim();
    for (std::size_t h = 0; h < c.n_heads; ++h) {
        for (std::size_t r = 0; r < d; ++r) {
            lp.wq.value.at(r, h * dh) = 0.0;
        }
        lp.bq.value[h * dh] = 1.0;
    }
}

// Zero key whose slot-0 logit is `logit` for every query of a layer prepared
// by constant_query_component.
Tensor<double> zero_key_with_logit(const ModelConfig& c, double logit) {
    const std::size_t dh = c.head_dim();
    Tensor<double> z(numerics::Shape{c.d_model}, 0.0);
    for (std::size_t h = 0; h < c.n_heads; ++h) {
        z[h * dh] = logit * std::sqrt(static_cast<double>(dh));
    }
    return z;
}

// ---------------------------------------------------------------------------
// Shared smoke setup (criteria 6, 7, 8, 9, 10, 11).

constexpr std::size_t kCorpusBytes = std::size_t{1} << 20;
constexpr std::size_t kSmokeSteps = 2000;
constexpr std::size_t kSmokeBatch = 4;
constexpr double kTrainFraction = 0.9;

ModelConfig smoke_config() {
    ModelConfig c = model::config_for(Variant::zero_token, 4, 3);
    c.d_model = 128;
    c.n_heads = 4;
    c.d_ff = 512;
    c.t_max = 64;
    return c;
}

train::TrainPlan smoke_plan(std::uint64_t seed) {
    train::TrainPlan p;
    p.steps = kSmokeSteps;
    p.batch = kSmokeBatch;
    p.lr = 1e-3;
    p.seed = seed;
    return p;
}

struct Corpus {
    std::vector<numerics::TokenId> tokens;
    data::Split split;
};

const Corpus& corpus() {
    static const std::unique_ptr<Corpus> c = [] {
        auto out = std::make_unique<Corpus>();
        out->tokens = data::encode(data::synthetic_text(kCorpusBytes, 7));
        out->split = data::split_corpus(out->tokens, kTrainFraction);
        return out;
    }();
    return *c;
}

struct SmokeRun {
    std::uint64_t seed = 0;
    train::TrainState<float> state;
    std::vector<train::StepLog> log;
    double seconds = 0.0;
    train::EvalReport report;  // validation, fixed N, with per-cycle means
};

SmokeRun& smoke_run(std::uint64_t seed) {
    static std::map<std::uint64_t, std::unique_ptr<SmokeRun>> runs;
    auto& slot = runs[seed];
    if (!slot) {
        const ModelConfig config = smoke_config();
        auto run = std::make_unique<SmokeRun>();
        run->seed = seed;
        run->state = train::fresh_state<float>(config, seed);
        std::cerr << "training smoke model, seed " << seed << " (" << kSmokeSteps << " steps)\n";
        const auto start = Clock::now();
        auto sink = [&](const train::MetricsRow& r) {
            if (r.split == "train" && !r.exit && !r.cycle && r.step % 250 == 0) {
                std::cerr << "  step " << r.step << " loss " << r.loss.value_or(NAN) << " ("
                          << fmt("%.0f", seconds_since(start)) << " s)\n";
            }
        };
        run->log = train::train(run->state, smoke_plan(seed), config, corpus().split.train, sink);
        run->seconds = seconds_since(start);
        train::EvalOptions opts;
        opts.max_windows = 512;
        run->report = train::evaluate(run->state.params, config, corpus().split.valid, opts);
        slot = std::move(run);
    }
    return *slot;
}

// Loss at the first step and mean over the last 20.
std::pair<double, double> loss_endpoints(const std::vector<train::StepLog>& log) {
    const std::size_t tail = std::min<std::size_t>(20, log.size());
    double sum = 0.0;
    for (std::size_t i = log.size() - tail; i < log.size(); ++i) {
        sum += log[i].loss;
    }
    return {log.front().loss, sum / static_cast<double>(tail)};
}

// ---------------------------------------------------------------------------

Outcome gradient_suite() {
    ModelConfig c = ztt_test::tiny_config(Variant::zero_token, 4, 2);
    const std::size_t B = 1, T = 5;
    auto params = random_params(c, 11);
    auto tokens = ztt_test::random_tokens(B * T, 12);
    auto targets = ztt_test::random_tokens(B * T, 13);
    const auto start = Clock::now();
    const auto r = ztt_test::check_gradients(params, c, tokens, targets, B, T);
    const double secs = seconds_since(start);
    const std::set<std::string> required{"embeddings", "attention", "ffn",
                                         "norms",      "gates",     "zero_token_pool"};
    bool all_groups = true;
    std::string groups;
    for (const auto& g : required) {
        const bool present = r.count_by_group.count(g) > 0 && r.count_by_group.at(g) > 0;
        all_groups = all_groups && present;
        groups += fmt(" %s=%.1e", g.c_str(), present ? r.worst_by_group.at(g) : NAN);
    }
    const bool pass = all_groups && r.worst <= 1e-4 && secs < 60.0;
    return {pass, fmt("%zu entries, worst rel err %.2e at %s, %.1f s;", r.checked, r.worst,
                      r.worst_name.c_str(), secs) +
                      groups};
}

Outcome zero_token_identities() {
    const ModelConfig c = ztt_test::tiny_config(Variant::zero_token, 4, 2);
    const std::size_t B = 2, T = 6;
    const model::AttentionShape shape{B, T, c.n_heads};

    // Saturated slot 0: the sublayer adds nothing besides the output bias,
    // which is cleared so the residual path can be compared directly.
    double saturated = 0.0, min_weight = 1.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto p = random_params(c, 100 + seed);
        auto& lp = p.layers[1];
        constant_query_component(lp, c);
        lp.bo.value.fill(0.0);
        const auto h = random_hidden(B * T, c.d_model, 200 + seed);
        Tape<double> tape(false);
        auto r = model::attention_with_zero_token(tape, tape.constant(h), lp,
                                                  tape.constant(zero_key_with_logit(c, 40.0)),
                                                  shape, c.ln_eps);
        saturated = std::max(saturated, max_abs_diff(tape.value(r.output), h));
        for (double z : r.zero_attn_per_query) {
            min_weight = std::min(min_weight, z);
        }
    }

    // Suppressed slot 0 and gates held open: ZTT reduces to HTC.
    double suppressed = 0.0;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        ModelConfig zc = ztt_test::tiny_config(Variant::zero_token, 5, 3);
        auto zp = random_params(zc, 300 + seed);
        for (auto& lp : zp.layers) {
            constant_query_component(lp, zc);
            lp.gate_w->value.fill(0.0);
            lp.gate_b->value[0] = 40.0;
        }
        for (auto& key : zp.zero_keys) {
            key.value = zero_key_with_logit(zc, -40.0);
        }
        ModelConfig hc = model::config_for(Variant::head_tail_cycling, 5, 3);
        hc.d_model = zc.d_model;
        hc.n_heads = zc.n_heads;
        hc.d_ff = zc.d_ff;
        hc.t_max = zc.t_max;
        ModelParameters<double> hp = zp;
        hp.zero_keys.clear();
        for (auto& lp : hp.layers) {
            lp.gate_w.reset();
            lp.gate_b.reset();
        }
        model::check_shapes(hp, hc);
        const auto tokens = ztt_test::random_tokens(2 * zc.t_max, 400 + seed);
        Tape<double> a(false), b(false);
        auto fz = model::forward(a, zp, zc, tokens, 2, zc.t_max, true);
        auto fh = model::forward(b, hp, hc, tokens, 2, hc.t_max, true);
        if (fz.exit_logits.size() != fh.exit_logits.size()) {
            return {false, "exit counts differ"};
        }
        for (std::size_t e = 0; e < fz.exit_logits.size(); ++e) {
            suppressed = std::max(
                suppressed, max_abs_diff(a.value(fz.exit_logits[e]), b.value(fh.exit_logits[e])));
        }
    }
    const bool pass = saturated <= 1e-5 && suppressed <= 1e-5;
    return {pass, fmt("saturated: max |out - in| %.2e (slot-0 weight >= %.15f); "
                      "suppressed ZTT vs HTC logits %.2e",
                      saturated, min_weight, suppressed)};
}

Outcome gate_identities() {
    const ModelConfig c = ztt_test::tiny_config(Variant::zero_token, 4, 2);
    const std::size_t B = 2, T = 6;
    double closed = 0.0, open = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto p = random_params(c, 500 + seed);
        const std::size_t layer = seed % c.all_layers;
        auto& lp = p.layers[layer];
        const auto h = random_hidden(B * T, c.d_model, 600 + seed);
        std::optional<Tensor<double>> key;
        if (c.is_cycled(layer)) {
            key = p.zero_keys[c.zero_key_index(layer, 0)].value;
        }
        auto block = [&](model::LayerParameters<double>& l, Tensor<double>* post_attention) {
            Tape<double> tape(false);
            std::optional<numerics::Var> z;
            if (key) {
                z = tape.constant(*key);
            }
            auto a = model::attention_with_zero_token(tape, tape.constant(h), l, z,
                                                      {B, T, c.n_heads}, c.ln_eps);
            if (post_attention != nullptr) {
                *post_attention = tape.value(a.output);
            }
            auto f = model::gated_ffn(tape, a.output, l, c.ln_eps);
            return tape.value(f.output);
        };
        model::LayerParameters<double> ungated = lp;
        ungated.gate_w.reset();
        ungated.gate_b.reset();
        const auto reference = block(ungated, nullptr);

        lp.gate_w->value.fill(0.0);
        lp.gate_b->value[0] = -40.0;
        Tensor<double> h_a;
        const auto shut = block(lp, &h_a);
        closed = std::max(closed, max_abs_diff(shut, h_a));

        lp.gate_b->value[0] = 40.0;
        open = std::max(open, max_abs_diff(block(lp, nullptr), reference));
    }
    const bool pass = closed <= 1e-6 && open <= 1e-6;
    return {pass, fmt("gate->0 vs post-attention residual %.2e; gate->1 vs ungated block %.2e",
                      closed, open)};
}

// Counted from the variant's definition, independently of the library.
std::size_t expected_length(Variant v, std::size_t L, std::size_t N) {
    switch (v) {
        case Variant::vanilla:
            return L;
        case Variant::basic_cycling:
            return L * N;
        case Variant::head_tail_cycling:
        case Variant::zero_token:
            return 2 + (L - 2) * N;
    }
    return 0;
}

Outcome schedule_formula() {
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<int> pick_variant(0, 3), pick_l(1, 16), pick_n(1, 10);
    std::size_t checked = 0, failures = 0;
    while (checked < 1000) {
        const auto v = static_cast<Variant>(pick_variant(rng));
        const auto L = static_cast<std::size_t>(pick_l(rng));
        const auto N = v == Variant::vanilla ? 1 : static_cast<std::size_t>(pick_n(rng));
        const ModelConfig c = model::config_for(v, L, N);
        try {
            c.validate();
        } catch (const ConfigError&) {
            continue;
        }
        ++checked;
        const std::size_t looped = c.cycled_layers().size();
        const std::size_t formula = L - looped + looped * N;
        const std::size_t got = model::build_schedule(c).length();
        if (got != formula || got != expected_length(v, L, N) || c.effective_depth() != formula) {
            ++failures;
        }
    }
    struct Ref {
        Variant v;
        std::size_t L, N;
    };
    std::string lengths;
    bool refs_ok = true;
    for (auto [v, L, N] : {Ref{Variant::vanilla, 6, 1}, Ref{Variant::basic_cycling, 3, 2},
                           Ref{Variant::head_tail_cycling, 3, 4}, Ref{Variant::zero_token, 3, 4}}) {
        const auto c = model::config_for(v, L, N);
        const std::size_t len = model::build_schedule(c).length();
        refs_ok = refs_ok && len == 6 && c.cycled_layers().size() == (v == Variant::vanilla ? 0
                                                                      : v == Variant::basic_cycling
                                                                          ? L
                                                                          : 1);
        lengths += fmt(" %s(L=%zu,N=%zu)=%zu", std::string(model::variant_name(v)).c_str(), L, N,
                       len);
    }
    return {failures == 0 && refs_ok,
            fmt("%zu random configs, %zu failures; reference layouts:", checked, failures) +
                lengths};
}

std::size_t enumerated_count(const ModelConfig& c) {
    auto p = model::init_parameters<float>(c, 1);
    std::size_t n = 0;
    for (const auto* a : p.all()) {
        n += a->value.size();
    }
    return n;
}

Outcome parameter_accounting() {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> pick_l(3, 8), pick_n(2, 5), pick_h(1, 4);
    std::size_t configs = 0, failures = 0;
    auto sized = [](ModelConfig c, std::size_t d, std::size_t h, std::size_t f) {
        c.d_model = d;
        c.n_heads = h;
        c.d_ff = f;
        return c;
    };
    for (int i = 0; i < 40; ++i) {
        const auto L = static_cast<std::size_t>(pick_l(rng));
        const auto N = static_cast<std::size_t>(pick_n(rng));
        const auto H = static_cast<std::size_t>(pick_h(rng));
        const std::size_t d = 8 * H, f = 4 * d;
        const auto v = sized(model::config_for(Variant::vanilla, L, 1), d, H, f);
        const auto bc = sized(model::config_for(Variant::basic_cycling, L, N), d, H, f);
        const auto htc = sized(model::config_for(Variant::head_tail_cycling, L, N), d, H, f);
        const auto zt = sized(model::config_for(Variant::zero_token, L, N), d, H, f);
        const std::size_t pool = (L - 2) * N * d, gates = L * (d + 1);
        ++configs;
        const bool ok = enumerated_count(bc) == enumerated_count(v) &&
                        model::param_count(bc).total == model::param_count(v).total &&
                        enumerated_count(zt) == enumerated_count(htc) + pool + gates &&
                        model::param_count(zt).total == model::param_count(htc).total + pool + gates;
        failures += ok ? 0 : 1;
    }
    const auto s = smoke_config();
    const auto sv = model::config_for(Variant::vanilla, 4, 1);
    auto sh = model::config_for(Variant::head_tail_cycling, 4, 3);
    auto sb = model::config_for(Variant::basic_cycling, 4, 3);
    for (ModelConfig* c : {&sh, &sb}) {
        c->d_model = s.d_model;
        c->n_heads = s.n_heads;
        c->d_ff = s.d_ff;
    }
    auto svs = sv;
    svs.d_model = s.d_model;
    svs.n_heads = s.n_heads;
    svs.d_ff = s.d_ff;
    const std::size_t ztt_total = enumerated_count(s), htc_total = enumerated_count(sh);
    const std::size_t smoke_pool = (4 - 2) * 3 * s.d_model, smoke_gates = 4 * (s.d_model + 1);
    const std::size_t expect_extra = smoke_pool + smoke_gates;
    const bool smoke_ok = enumerated_count(sb) == enumerated_count(svs) &&
                          ztt_total - htc_total == expect_extra;
    failures += smoke_ok ? 0 : 1;
    return {failures == 0,
            fmt("%zu config groups, %zu failures; smoke size: V=BC=%zu, HTC=%zu, ZTT=%zu "
                "(+%zu = pool %zu + gates %zu)",
                configs + 1, failures, enumerated_count(sb), htc_total, ztt_total,
                ztt_total - htc_total, smoke_pool, smoke_gates)};
}

const std::vector<double>& threshold_grid() {
    static const std::vector<double> grid = [] {
        std::vector<double> g;
        for (int i = 0; i <= 20; ++i) {
            g.push_back(i / 20.0);
        }
        return g;
    }();
    return grid;
}

bool non_decreasing(const std::vector<double>& v) {
    return std::is_sorted(v.begin(), v.end());
}

Outcome early_exit() {
    const std::vector<double> trace{0.21, 0.47, 0.54, 0.65};
    struct Case {
        double p;
        std::optional<std::size_t> want;
        bool never_ok;
    };
    bool trace_ok = true;
    std::string exits;
    for (auto [p, want, never_ok] : {Case{0.2, 1, false}, Case{0.5, 3, false},
                                     Case{0.7, 4, true}, Case{1.0, std::nullopt, true}}) {
        const auto policy = adaptive::ExitPolicy::adaptive_at(p);
        const auto got = adaptive::first_exit_cycle(trace, policy);
        trace_ok = trace_ok && (got == want || (never_ok && !got));
        // should_exit must agree cycle by cycle.
        for (std::size_t n = 1; n <= trace.size(); ++n) {
            const bool fires = adaptive::should_exit(std::span(trace).first(n), policy);
            trace_ok = trace_ok && fires == (got && *got == n);
        }
        exits += fmt(" P=%.1f:%s", p, got ? std::to_string(*got).c_str() : "never");
    }

    // Real checkpoint: the seed-1 smoke model, written and read back.
    const SmokeRun& run = smoke_run(1);
    cli::RunConfig rc;
    rc.model = smoke_config();
    rc.plan = smoke_plan(1);
    rc.corpus_path = "synthetic";
    ztt_test::TempDir dir;
    cli::save_checkpoint(dir.file("smoke.ckpt"), cli::make_checkpoint(rc, run.state));
    const cli::LoadedRun loaded = cli::restore(cli::load_checkpoint(dir.file("smoke.ckpt")));
    const ModelConfig& c = loaded.config.model;
    const auto& valid = corpus().split.valid;

    std::vector<double> eval_loops, decode_loops;
    constexpr std::size_t kStreams = 4;
    for (double p : threshold_grid()) {
        train::EvalOptions opts;
        opts.policy = adaptive::ExitPolicy::adaptive_at(p);
        opts.max_windows = 128;
        eval_loops.push_back(train::evaluate(loaded.state.params, c, valid, opts).adaptive->avg_loop);

        // Per-token depth over fixed token streams (no sampling).
        std::size_t total = 0, count = 0;
        for (std::size_t s = 0; s < kStreams; ++s) {
            adaptive::DecodeCache<float> cache(c);
            for (std::size_t t = 0; t < c.t_max; ++t) {
                const auto step = adaptive::decode_step(cache, valid[s * 997 + t],
                                                        loaded.state.params, c, opts.policy);
                total += step.cycles_used;
                ++count;
            }
        }
        decode_loops.push_back(static_cast<double>(total) / static_cast<double>(count));
    }
    const double n = static_cast<double>(c.loop_count);
    const bool real_ok = non_decreasing(eval_loops) && non_decreasing(decode_loops) &&
                         eval_loops.back() == n && decode_loops.back() == n;
    std::string curve;
    for (std::size_t i = 0; i < threshold_grid().size(); i += 4) {
        curve += fmt(" P=%.1f:%.3f/%.3f", threshold_grid()[i], eval_loops[i], decode_loops[i]);
    }
    return {trace_ok && real_ok,
            "trace exits" + exits + "; checkpoint Avg_Loop (eval/decode)" + curve +
                (real_ok ? "; monotone over 21 thresholds" : "; NOT monotone or P=1 != N")};
}

template <typename S>
double incremental_vs_full(const ModelParameters<S>& params, const ModelConfig& c,
                           std::size_t prompts, std::uint64_t seed, std::size_t* steps) {
    auto& mutable_params = const_cast<ModelParameters<S>&>(params);
    const auto& valid = corpus().split.valid;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> len(1, c.t_max / 2);
    std::uniform_int_distribution<std::size_t> off(0, valid.size() - c.t_max - 1);
    double worst = 0.0;
    for (std::size_t i = 0; i < prompts; ++i) {
        const std::size_t start = off(rng);
        std::vector<numerics::TokenId> seq(valid.begin() + start, valid.begin() + start + len(rng));
        adaptive::DecodeCache<S> cache(c);
        for (std::size_t t = 0; t < seq.size(); ++t) {
            // Teacher-force the prompt, then continue greedily to t_max.
            const auto step = adaptive::decode_step(cache, seq[t], params, c,
                                                    adaptive::ExitPolicy::fixed());
            Tape<S> tape(false);
            auto fr = model::forward(tape, mutable_params, c, seq, 1, seq.size(), false);
            const auto& full = tape.value(fr.exit_logits.back());
            for (std::size_t v = 0; v < c.vocab; ++v) {
                worst = std::max(worst, std::abs(static_cast<double>(step.logits[v]) -
                                                 static_cast<double>(full.at(t, v))));
            }
            ++*steps;
            if (t + 1 == seq.size() && seq.size() < c.t_max) {
                const auto best = std::max_element(step.logits.data().begin(),
                                                   step.logits.data().end()) -
                                  step.logits.data().begin();
                seq.push_back(static_cast<numerics::TokenId>(best));
            }
        }
    }
    return worst;
}

Outcome decode_cache() {
    const SmokeRun& run = smoke_run(1);
    const ModelConfig c = smoke_config();
    const auto p64 = run.state.params.cast<double>();
    std::size_t steps64 = 0, steps32 = 0;
    const double d64 = incremental_vs_full(p64, c, 100, 77, &steps64);
    const double d32 = incremental_vs_full(run.state.params, c, 100, 77, &steps32);
    return {d64 <= 1e-5 && d32 <= 1e-5,
            fmt("100 prompts, %zu decode steps each dtype; max |incremental - full| "
                "f64 %.2e, f32 %.2e",
                steps64, d64, d32)};
}

Outcome determinism() {
    const ModelConfig c = smoke_config();
    auto plan = smoke_plan(3);
    plan.stop_after = 10;
    auto first = train::fresh_state<float>(c, 3);
    auto second = train::fresh_state<float>(c, 3);
    const auto la = train::train(first, plan, c, corpus().split.train);
    const auto lb = train::train(second, plan, c, corpus().split.train);
    bool losses_equal = la.size() == 10 && lb.size() == 10;
    for (std::size_t i = 0; losses_equal && i < la.size(); ++i) {
        losses_equal = std::memcmp(&la[i].loss, &lb[i].loss, sizeof(double)) == 0;
    }
    bool params_equal = true;
    const auto pa = first.params.all();
    const auto pb = second.params.all();
    for (std::size_t i = 0; i < pa.size(); ++i) {
        params_equal = params_equal && std::memcmp(pa[i]->value.data().data(),
                                                   pb[i]->value.data().data(),
                                                   pa[i]->value.size() * sizeof(float)) == 0;
    }

    cli::RunConfig rc;
    rc.model = c;
    rc.plan = plan;
    rc.corpus_path = "synthetic";
    ztt_test::TempDir dir;
    const std::string a = dir.file("a.ckpt"), b = dir.file("b.ckpt");
    cli::save_checkpoint(a, cli::make_checkpoint(rc, first));
    const auto loaded = cli::restore(cli::load_checkpoint(a));
    cli::save_checkpoint(b, cli::make_checkpoint(loaded.config, loaded.state));
    auto slurp = [](const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in), {});
    };
    const std::string bytes_a = slurp(a), bytes_b = slurp(b);
    const bool bytes_equal = !bytes_a.empty() && bytes_a == bytes_b;
    return {losses_equal && params_equal && bytes_equal,
            fmt("10-step losses %s, parameters %s; checkpoint round trip %zu bytes %s",
                losses_equal ? "bitwise equal" : "DIFFER", params_equal ? "bitwise equal" : "DIFFER",
                bytes_a.size(), bytes_equal ? "identical" : "DIFFER")};
}

Outcome smoke_training() {
    bool pass = true;
    std::string detail = fmt("%zu-byte corpus, d=128 h=4 L=4 ZTT N=3, %zu steps, batch %zu:",
                             kCorpusBytes, kSmokeSteps, kSmokeBatch);
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const SmokeRun& run = smoke_run(seed);
        const auto [initial, final_loss] = loss_endpoints(run.log);
        const bool ok = run.log.size() == kSmokeSteps && final_loss < 0.8 * initial &&
                        run.seconds <= 30 * 60;
        pass = pass && ok;
        detail += fmt(" seed %llu %.3f -> %.3f (x%.2f, %.0f s)%s;",
                      static_cast<unsigned long long>(seed), initial, final_loss,
                      final_loss / initial, run.seconds, ok ? "" : " FAIL");
    }
    return {pass, detail};
}

Outcome cycle_trend() {
    std::size_t up = 0, down = 0;
    std::string detail = "reference zero attn 0.21 0.47 0.54 0.65, gate 0.55 .. 0.15;";
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const SmokeRun& run = smoke_run(seed);
        std::vector<double> z, g;
        for (const auto& cm : run.report.cycles) {
            z.push_back(cm.zero_attn.value_or(NAN));
            g.push_back(cm.gate.value_or(NAN));
        }
        const bool zu = non_decreasing(z);
        const bool gd = std::is_sorted(g.rbegin(), g.rend());
        up += zu ? 1 : 0;
        down += gd ? 1 : 0;
        detail += fmt(" seed %llu zero", static_cast<unsigned long long>(seed));
        for (double v : z) {
            detail += fmt(" %.3f", v);
        }
        detail += " gate";
        for (double v : g) {
            detail += fmt(" %.3f", v);
        }
        detail += ";";
    }
    detail += fmt(" zero attention rising in %zu/3, gate falling in %zu/3", up, down);
    return {up >= 2 && down >= 2, detail};
}

constexpr std::size_t kSweepSteps = 1000;

Outcome budget_sweep() {
    const std::vector<train::Layout> layouts{{Variant::basic_cycling, 3, 2},
                                             {Variant::head_tail_cycling, 3, 4},
                                             {Variant::zero_token, 3, 4}};
    train::SweepSpec spec;
    spec.base = smoke_config();
    spec.plan = smoke_plan(1);
    spec.plan.steps = kSweepSteps;
    spec.seeds = {1, 2, 3};
    spec.eval.max_windows = 512;
    std::cerr << "budget sweep: 3 layouts x 3 seeds, " << kSweepSteps << " steps each\n";
    const auto rows = train::run_sweep(layouts, spec, corpus().split.train, corpus().split.valid,
                                       [](const train::SweepRow& r) {
                                           std::cerr << "  " << model::variant_name(r.layout.variant)
                                                     << " seed " << r.seed << " ppl "
                                                     << r.valid_ppl << "\n";
                                       });
    std::map<std::pair<Variant, std::uint64_t>, double> ppl;
    std::map<Variant, double> mean;
    for (const auto& r : rows) {
        ppl[{r.layout.variant, r.seed}] = r.valid_ppl;
        mean[r.layout.variant] += r.valid_ppl / 3.0;
    }
    bool pass = true;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const double bc = ppl[{Variant::basic_cycling, seed}];
        pass = pass && ppl[{Variant::head_tail_cycling, seed}] <= bc &&
               ppl[{Variant::zero_token, seed}] <= bc;
    }
    std::string detail = fmt("budget 6, %zu steps; valid ppl per seed", kSweepSteps);
    for (const auto& l : layouts) {
        detail += fmt(" %s(%zu,%zu):", std::string(model::variant_name(l.variant)).c_str(),
                      l.all_layers, l.loop_count);
        for (std::uint64_t seed = 1; seed <= 3; ++seed) {
            detail += fmt(" %.3f", ppl[{l.variant, seed}]);
        }
        detail += fmt(" (mean %.3f)", mean[l.variant]);
    }
    return {pass, detail};
}

struct Criterion {
    int id;
    const char* name;
    bool gated;
    Outcome (*run)();
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance criteria"};
    std::vector<int> only;
    app.add_option("--only", only, "criterion ids to run")->delimiter(',');
    CLI11_PARSE(app, argc, argv);

    const std::vector<Criterion> criteria{
        {1, "gradient suite", true, gradient_suite},
        {2, "zero-token identities", true, zero_token_identities},
        {3, "gate identities", true, gate_identities},
        {4, "schedule formula", true, schedule_formula},
        {5, "parameter accounting", true, parameter_accounting},
        {6, "early exit", true, early_exit},
        {7, "decode cache", true, decode_cache},
        {8, "determinism", true, determinism},
        {9, "smoke training", true, smoke_training},
        {10, "cycle trend (soft)", false, cycle_trend},
        {11, "budget sweep ordering (soft)", false, budget_sweep},
    };
    int gated_failures = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) {
            continue;
        }
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const char* status = o.pass ? "PASS" : (c.gated ? "FAIL" : "FAIL (not gated)");
        std::cout << "criterion " << c.id << " " << status << " " << c.name << ": " << o.detail
                  << std::endl;
        if (!o.pass && c.gated) {
            ++gated_failures;
        }
    }
    std::cout << (gated_failures == 0 ? "acceptance: all gated criteria pass"
                                      : "acceptance: " + std::to_string(gated_failures) +
                                            " gated criteria failed")
              << std::endl;
    return gated_failures == 0 ? 0 : 1;
}
