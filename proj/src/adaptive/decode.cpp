// SPDX-License-Identifier: Apache-2.0
#include "ztt/adaptive/decode.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "ztt/errors.hpp"
#include "ztt/numerics/kernels.hpp"

namespace ztt::adaptive {

namespace kernels = numerics::kernels;
using numerics::Shape;

template <Real S>
DecodeCache<S>::DecodeCache(const ModelConfig& config)
    : config_(config), schedule_(model::build_schedule(config)) {
    const std::size_t T = config.t_max, d = config.d_model;
    auto make_slot = [&] {
        Slot s;
        s.keys = Tensor<S>(Shape{T, d});
        s.values = Tensor<S>(Shape{T, d});
        s.outputs = Tensor<S>(Shape{T, d});
        s.zero_attn.assign(T, 0.0);
        s.gate.assign(T, 1.0);
        s.ready.assign(T, 0);
        return s;
    };
    embedded_ = Tensor<S>(Shape{T, d});
    for (std::size_t i = 0; i < schedule_.length(); ++i) {
        main_.push_back(make_slot());
    }
    const std::size_t suffix = schedule_.length() - schedule_.suffix_begin();
    if (schedule_.block_length > 0 && schedule_.loop_count > 1) {
        for (std::size_t i = 0; i < (schedule_.loop_count - 1) * suffix; ++i) {
            exits_.push_back(make_slot());
        }
    }
}

namespace {

struct SlotRef {
    bool exit = false;
    std::size_t index = 0;  // main: schedule position; exit: cycle * suffix_len + i
};

}  // namespace

template <Real S>
class Decoder {
public:
    Decoder(DecodeCache<S>& cache, const ModelParameters<S>& params)
        : c_(cache), p_(params), d_(cache.config_.d_model) {}

    const model::CycleSchedule& schedule() const { return c_.schedule_; }

    void append(TokenId token) {
        const std::size_t pos = c_.tokens_.size();
        auto row = c_.embedded_.row(pos);
        auto tok = p_.token_embedding.value.row(static_cast<std::size_t>(token));
        auto posv = p_.position_embedding.value.row(pos);
        for (std::size_t c = 0; c < row.size(); ++c) {
            row[c] = tok[c] + posv[c];
        }
        c_.tokens_.push_back(token);
    }

    std::size_t suffix_length() const { return c_.schedule_.length() - c_.schedule_.suffix_begin(); }

    typename DecodeCache<S>::Slot& slot(SlotRef s) {
        return s.exit ? c_.exits_[s.index] : c_.main_[s.index];
    }

    const model::Application& application(SlotRef s) const {
        if (!s.exit) {
            return c_.schedule_.applications[s.index];
        }
        return c_.schedule_.applications[c_.schedule_.suffix_begin() + s.index % suffix_length()];
    }

    // Hidden state feeding slot s at position pos; nullptr means the embedding.
    std::optional<SlotRef> predecessor(SlotRef s) const {
        if (!s.exit) {
            if (s.index == 0) {
                return std::nullopt;
            }
            return SlotRef{false, s.index - 1};
        }
        const std::size_t i = s.index % suffix_length();
        if (i > 0) {
            return SlotRef{true, s.index - 1};
        }
        const std::size_t cycle = s.index / suffix_length();
        return SlotRef{false, c_.schedule_.exit_points[cycle]};
    }

    std::span<const S> input_row(SlotRef s, std::size_t pos) {
        auto pred = predecessor(s);
        if (!pred) {
            return c_.embedded_.row(pos);
        }
        return std::as_const(slot(*pred).outputs).row(pos);
    }

    // Makes slot s ready at every position up to and including pos.
    void ensure(SlotRef s, std::size_t pos) {
        auto& sl = slot(s);
        for (std::size_t q = 0; q <= pos; ++q) {
            if (sl.ready[q]) {
                continue;
            }
            if (auto pred = predecessor(s)) {
                ensure(*pred, q);
            }
            compute(s, q);
        }
    }

    std::span<const S> output_row(SlotRef s, std::size_t pos) {
        return std::as_const(slot(s).outputs).row(pos);
    }

    Tensor<S> logits(std::span<const S> hidden) {
        Tensor<S> h(Shape{1, d_}, std::vector<S>(hidden.begin(), hidden.end()));
        auto n = kernels::layer_norm(h, p_.final_gamma.value, p_.final_beta.value,
                                     static_cast<S>(c_.config_.ln_eps));
        Tensor<S> out = kernels::matmul_nt(n.y, p_.output_matrix().value);
        return out.reshaped(Shape{out.size()});
    }

private:
    Tensor<S> linear(const Tensor<S>& x, const numerics::Parameter<S>& w,
                     const numerics::Parameter<S>& b) {
        Tensor<S> out = kernels::matmul(x, w.value);
        kernels::add_row_bias(out, b.value);
        return out;
    }

    // One layer application at one position; positions before pos must
    // already be ready in this slot.
    void compute(SlotRef s, std::size_t pos) {
        const ModelConfig& cfg = c_.config_;
        const model::Application& app = application(s);
        const model::LayerParameters<S>& layer = p_.layers.at(app.layer);
        auto& sl = slot(s);
        const S eps = static_cast<S>(cfg.ln_eps);
        const std::size_t H = cfg.n_heads, dh = d_ / H;
        const S scale = S{1} / std::sqrt(static_cast<S>(dh));

        auto in_span = input_row(s, pos);
        Tensor<S> h_in(Shape{1, d_}, std::vector<S>(in_span.begin(), in_span.end()));
        auto x = kernels::layer_norm(h_in, layer.ln1_gamma.value, layer.ln1_beta.value, eps);
        Tensor<S> q = linear(x.y, layer.wq, layer.bq);
        Tensor<S> k = linear(x.y, layer.wk, layer.bk);
        Tensor<S> v = linear(x.y, layer.wv, layer.bv);
        std::copy(k.data().begin(), k.data().end(), sl.keys.row(pos).begin());
        std::copy(v.data().begin(), v.data().end(), sl.values.row(pos).begin());

        const bool has_zero = cfg.use_zero_token && app.cycled;
        const S* zk = has_zero
                          ? p_.zero_keys.at(cfg.zero_key_index(app.layer, app.cycle)).value.data().data()
                          : nullptr;
        Tensor<S> ctx(Shape{1, d_});
        std::vector<S> logits(pos + 2);
        double zero_total = 0.0;
        for (std::size_t h = 0; h < H; ++h) {
            const std::size_t col = h * dh;
            const S* qh = q.data().data() + col;
            const std::size_t first = has_zero ? 0 : 1;
            if (has_zero) {
                S acc = 0;
                for (std::size_t c = 0; c < dh; ++c) {
                    acc += qh[c] * zk[col + c];
                }
                logits[0] = acc * scale;
            }
            for (std::size_t j = 0; j <= pos; ++j) {
                const S* kj = &sl.keys.at(j, col);
                S acc = 0;
                for (std::size_t c = 0; c < dh; ++c) {
                    acc += qh[c] * kj[c];
                }
                logits[1 + j] = acc * scale;
            }
            kernels::softmax_row<S>(std::span<S>(logits.data() + first, pos + 2 - first));
            if (has_zero) {
                zero_total += static_cast<double>(logits[0]);
            }
            S* out = ctx.data().data() + col;
            for (std::size_t j = 0; j <= pos; ++j) {
                const S pj = logits[1 + j];
                const S* vj = &sl.values.at(j, col);
                for (std::size_t c = 0; c < dh; ++c) {
                    out[c] += pj * vj[c];
                }
            }
        }
        Tensor<S> proj = linear(ctx, layer.wo, layer.bo);
        Tensor<S> h_a = h_in;
        for (std::size_t c = 0; c < d_; ++c) {
            h_a[c] += proj[c];
        }

        auto y = kernels::layer_norm(h_a, layer.ln2_gamma.value, layer.ln2_beta.value, eps);
        Tensor<S> hidden = linear(y.y, layer.w_in, layer.b_in);
        for (S& val : hidden.data()) {
            val = kernels::gelu(val);
        }
        Tensor<S> f = linear(hidden, layer.w_out, layer.b_out);
        double gate_value = 1.0;
        if (layer.gate_w) {
            Tensor<S> g = linear(y.y, *layer.gate_w, *layer.gate_b);
            const S gate = kernels::sigmoid(g[0]);
            gate_value = static_cast<double>(gate);
            for (S& val : f.data()) {
                val *= gate;
            }
        }
        auto out = sl.outputs.row(pos);
        for (std::size_t c = 0; c < d_; ++c) {
            out[c] = h_a[c] + f[c];
        }
        sl.zero_attn[pos] = has_zero ? zero_total / static_cast<double>(H) : 0.0;
        sl.gate[pos] = gate_value;
        sl.ready[pos] = 1;
        ++c_.computed_;
    }

    DecodeCache<S>& c_;
    const ModelParameters<S>& p_;
    std::size_t d_;
};

template <Real S>
DecodeStep<S> decode_step(DecodeCache<S>& cache, TokenId token, const ModelParameters<S>& params,
                          const ModelConfig& config, const ExitPolicy& policy) {
    const ModelConfig& cc = cache.config();
    if (!(cc == config)) {
        throw UsageError("decode cache was built for a different model configuration");
    }
    const std::size_t pos = cache.position();
    if (pos >= config.t_max) {
        throw UsageError("decode position " + std::to_string(pos) + " is beyond t_max " +
                         std::to_string(config.t_max));
    }
    if (token < 0 || static_cast<std::size_t>(token) >= config.vocab) {
        throw IndexError("token id " + std::to_string(token) + " outside vocabulary of " +
                         std::to_string(config.vocab));
    }
    if (policy.mode == ExitMode::adaptive && !config.use_zero_token) {
        throw UsageError("adaptive exit needs a model with zero tokens");
    }
    model::check_shapes(params, config);

    Decoder<S> dec(cache, params);
    dec.append(token);

    const model::CycleSchedule& sched = dec.schedule();
    DecodeStep<S> step;
    step.telemetry.loop_count = sched.loop_count;

    if (sched.block_length == 0) {
        const SlotRef last{false, sched.length() - 1};
        dec.ensure(last, pos);
        step.logits = dec.logits(dec.output_row(last, pos));
        step.cycles_used = 1;
        return step;
    }

    std::vector<double> trace;
    std::size_t exit_cycle = sched.loop_count - 1;
    for (std::size_t c = 0; c < sched.loop_count; ++c) {
        const std::size_t end = sched.exit_points[c];
        dec.ensure(SlotRef{false, end}, pos);
        std::vector<double> layer_means;
        for (std::size_t i = end + 1 - sched.block_length; i <= end; ++i) {
            const auto& sl = dec.slot(SlotRef{false, i});
            LayerCycleStats stats;
            stats.layer = sched.applications[i].layer;
            stats.cycle = c;
            if (config.use_zero_token) {
                stats.zero_attn_by_sequence = {sl.zero_attn[pos]};
            }
            if (config.use_gate) {
                stats.gate_by_sequence = {sl.gate[pos]};
            }
            step.telemetry.entries.push_back(std::move(stats));
        }
        if (policy.mode == ExitMode::adaptive) {
            trace.push_back(cycle_zero_attention(step.telemetry, c, policy.aggregation));
            if (should_exit(trace, policy)) {
                exit_cycle = c;
                break;
            }
        }
    }
    step.cycles_used = exit_cycle + 1;

    const std::size_t suffix = dec.suffix_length();
    std::span<const S> final_hidden;
    if (suffix == 0) {
        final_hidden = dec.output_row(SlotRef{false, sched.exit_points[exit_cycle]}, pos);
    } else if (exit_cycle + 1 == sched.loop_count) {
        const SlotRef last{false, sched.length() - 1};
        dec.ensure(last, pos);
        final_hidden = dec.output_row(last, pos);
    } else {
        const SlotRef last{true, exit_cycle * suffix + suffix - 1};
        dec.ensure(last, pos);
        final_hidden = dec.output_row(last, pos);
    }
    step.logits = dec.logits(final_hidden);
    return step;
}

template <Real S>
Generation generate(std::span<const TokenId> prompt, std::size_t max_new_tokens,
                    const ModelParameters<S>& params, const ModelConfig& config,
                    const ExitPolicy& policy, const Sampler& sampler) {
    Generation gen;
    gen.ids.assign(prompt.begin(), prompt.end());
    if (max_new_tokens == 0) {
        return gen;
    }
    if (prompt.empty()) {
        throw UsageError("generation needs a non-empty prompt");
    }
    if (prompt.size() + max_new_tokens > config.t_max) {
        throw UsageError("prompt of " + std::to_string(prompt.size()) + " tokens plus " +
                         std::to_string(max_new_tokens) + " new tokens exceeds t_max " +
                         std::to_string(config.t_max));
    }
    DecodeCache<S> cache(config);
    std::mt19937_64 rng(sampler.seed);
    DecodeStep<S> step;
    for (TokenId id : prompt) {
        step = decode_step(cache, id, params, config, policy);
    }
    for (std::size_t n = 0; n < max_new_tokens; ++n) {
        const auto logits = step.logits.data();
        TokenId next = 0;
        if (sampler.kind == Sampler::Kind::greedy) {
            next = static_cast<TokenId>(std::max_element(logits.begin(), logits.end()) -
                                        logits.begin());
        } else {
            if (!(sampler.temperature > 0.0)) {
                throw UsageError("sampling temperature must be positive");
            }
            std::vector<double> probs(logits.begin(), logits.end());
            const double max = *std::max_element(probs.begin(), probs.end());
            double total = 0.0;
            for (double& p : probs) {
                p = std::exp((p - max) / sampler.temperature);
                total += p;
            }
            std::uniform_real_distribution<double> uni(0.0, total);
            double r = uni(rng);
            std::size_t i = 0;
            for (; i + 1 < probs.size(); ++i) {
                if (r < probs[i]) {
                    break;
                }
                r -= probs[i];
            }
            next = static_cast<TokenId>(i);
        }
        gen.ids.push_back(next);
        gen.cycles_used.push_back(step.cycles_used);
        if (n + 1 < max_new_tokens) {
            step = decode_step(cache, next, params, config, policy);
        }
    }
    return gen;
}

template class DecodeCache<float>;
template class DecodeCache<double>;
template DecodeStep<float> decode_step<float>(DecodeCache<float>&, TokenId,
                                              const ModelParameters<float>&, const ModelConfig&,
                                              const ExitPolicy&);
template DecodeStep<double> decode_step<double>(DecodeCache<double>&, TokenId,
                                                const ModelParameters<double>&, const ModelConfig&,
                                                const ExitPolicy&);
template Generation generate<float>(std::span<const TokenId>, std::size_t,
                                    const ModelParameters<float>&, const ModelConfig&,
                                    const ExitPolicy&, const Sampler&);
template Generation generate<double>(std::span<const TokenId>, std::size_t,
                                     const ModelParameters<double>&, const ModelConfig&,
                                     const ExitPolicy&, const Sampler&);

}  // namespace ztt::adaptive
