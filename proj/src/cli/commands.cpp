// SPDX-License-Identifier: Apache-2.0
#include "ztt/cli/commands.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include "ztt/adaptive/decode.hpp"
#include "ztt/cli/checkpoint.hpp"
#include "ztt/cli/run_config.hpp"
#include "ztt/data/batches.hpp"
#include "ztt/data/synthetic.hpp"
#include "ztt/data/vocab.hpp"
#include "ztt/errors.hpp"
#include "ztt/model/retrofit.hpp"
#include "ztt/train/evaluate.hpp"
#include "ztt/train/sweep.hpp"
#include "ztt/train/trainer.hpp"

namespace ztt::cli {

namespace {

constexpr double kTrainFraction = 0.9;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

adaptive::ExitPolicy policy_for(const std::optional<double>& threshold) {
    return threshold ? adaptive::ExitPolicy::adaptive_at(*threshold) : adaptive::ExitPolicy::fixed();
}

void print_report(std::ostream& out, const train::EvalReport& report, bool per_exit,
                  const std::optional<double>& threshold) {
    out << "tokens " << report.tokens << '\n';
    const std::size_t first = per_exit ? 0 : report.exits.size() - 1;
    for (std::size_t e = first; e < report.exits.size(); ++e) {
        const auto& x = report.exits[e];
        out << "exit " << x.exit << " loss " << num(x.loss) << " ppl " << num(x.ppl) << '\n';
    }
    if (report.adaptive) {
        out << "adaptive P " << num(*threshold) << " loss " << num(report.adaptive->loss) << " ppl "
            << num(report.adaptive->ppl) << " avg_loop " << num(report.adaptive->avg_loop) << '\n';
    }
    for (const auto& c : report.cycles) {
        out << "cycle " << c.cycle;
        if (c.zero_attn) {
            out << " zero_attn " << num(*c.zero_attn);
        }
        if (c.gate) {
            out << " gate " << num(*c.gate);
        }
        out << '\n';
    }
}

void emit_valid_rows(const train::MetricsSink& sink, std::size_t step,
                     const train::EvalReport& report) {
    for (const auto& x : report.exits) {
        train::MetricsRow row;
        row.step = step;
        row.split = "valid";
        row.exit = x.exit;
        row.loss = x.loss;
        row.ppl = x.ppl;
        sink(row);
    }
    if (report.adaptive) {
        train::MetricsRow row;
        row.step = step;
        row.split = "valid";
        row.loss = report.adaptive->loss;
        row.ppl = report.adaptive->ppl;
        row.avg_loop = report.adaptive->avg_loop;
        sink(row);
    }
    for (const auto& c : report.cycles) {
        train::MetricsRow row;
        row.step = step;
        row.split = "valid";
        row.cycle = c.cycle;
        row.zero_attn_mean = c.zero_attn;
        row.gate_mean = c.gate;
        sink(row);
    }
}

struct TrainArgs {
    std::string config, resume, out, metrics;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
    RunConfig rc = load_run_config(a.config);
    rc.model.validate();
    const auto corpus = data::load_corpus(rc.corpus());
    const auto split = data::split_corpus(corpus, kTrainFraction);

    train::TrainState<float> state;
    if (!a.resume.empty()) {
        LoadedRun prev = restore(load_checkpoint(a.resume));
        if (!(prev.config.model == rc.model)) {
            throw ConfigError("--resume checkpoint " + a.resume +
                              " was trained with a different model configuration");
        }
        state = std::move(prev.state);
        out << "resuming at step " << state.step << '\n';
    } else {
        state = train::fresh_state<float>(rc.model, rc.plan.seed);
    }

    train::CsvMetrics metrics(a.metrics);
    const std::size_t interval = rc.plan.log_interval;
    const train::MetricsSink sink = [&](const train::MetricsRow& row) {
        metrics.write(row);
        if (!row.exit && !row.cycle && row.loss && interval > 0 &&
            (row.step % interval == 0 || row.step + 1 == rc.plan.steps)) {
            out << "step " << row.step << " loss " << num(*row.loss) << " lr " << num(*row.lr)
                << '\n';
        }
    };
    train::train(state, rc.plan, rc.model, split.train, sink);
    save_checkpoint(a.out, make_checkpoint(rc, state));

    train::EvalOptions opts;
    std::optional<double> threshold;
    if (rc.model.use_zero_token && rc.exit_threshold < 1.0) {
        threshold = rc.exit_threshold;
        opts.policy = adaptive::ExitPolicy::adaptive_at(rc.exit_threshold);
    }
    if (data::window_count(split.valid.size(), rc.model.t_max) > 0) {
        const auto report = train::evaluate(state.params, rc.model, split.valid, opts);
        emit_valid_rows(metrics.sink(), state.step, report);
        out << "validation\n";
        print_report(out, report, true, threshold);
    }
    out << "wrote " << a.out << '\n';
    return kOk;
}

struct EvalArgs {
    std::string ckpt, data;
    std::optional<double> threshold;
    bool per_exit = false;
    std::size_t batch = 8;
    std::size_t max_windows = 0;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
    const LoadedRun run = restore(load_checkpoint(a.ckpt));
    const auto corpus = data::load_corpus(a.data);
    train::EvalOptions opts;
    opts.policy = policy_for(a.threshold);
    opts.batch = a.batch;
    opts.max_windows = a.max_windows;
    const auto report = train::evaluate(run.state.params, run.config.model, corpus, opts);
    print_report(out, report, a.per_exit, a.threshold);
    return kOk;
}

struct GenerateArgs {
    std::string ckpt, prompt;
    std::size_t max_tokens = 0;
    std::optional<double> threshold;
    std::optional<double> temperature;
    std::uint64_t seed = 0;
};

int cmd_generate(const GenerateArgs& a, std::ostream& out) {
    const LoadedRun run = restore(load_checkpoint(a.ckpt));
    const auto prompt = data::encode(a.prompt);
    adaptive::Sampler sampler;
    if (a.temperature) {
        sampler.kind = adaptive::Sampler::Kind::temperature;
        sampler.temperature = *a.temperature;
    }
    sampler.seed = a.seed;
    const auto gen = adaptive::generate<float>(prompt, a.max_tokens, run.state.params,
                                               run.config.model, policy_for(a.threshold), sampler);
    out << data::decode(gen.ids) << '\n';
    if (a.threshold) {
        out << "cycles";
        for (std::size_t c : gen.cycles_used) {
            out << ' ' << c;
        }
        out << '\n';
    }
    return kOk;
}

struct SweepArgs {
    std::size_t budget = 0;
    std::string variants, config, out;
    std::vector<std::uint64_t> seeds;
};

int cmd_sweep(const SweepArgs& a, std::ostream& out) {
    const RunConfig rc = load_run_config(a.config);
    std::vector<model::Variant> variants;
    std::stringstream list(a.variants);
    for (std::string item; std::getline(list, item, ',');) {
        try {
            variants.push_back(model::parse_variant(item));
        } catch (const Error&) {
            throw ConfigError("--variants: unknown variant '" + item + "'");
        }
    }
    const auto layouts = train::enumerate_layouts(a.budget, variants);
    const auto corpus = data::load_corpus(rc.corpus());
    const auto split = data::split_corpus(corpus, kTrainFraction);
    train::SweepSpec spec;
    spec.base = rc.model;
    spec.plan = rc.plan;
    spec.seeds = a.seeds.empty() ? std::vector<std::uint64_t>{rc.plan.seed} : a.seeds;
    const auto rows =
        train::run_sweep(layouts, spec, split.train, split.valid, [&](const train::SweepRow& r) {
            out << model::variant_name(r.layout.variant) << " L=" << r.layout.all_layers
                << " N=" << r.layout.loop_count << " seed=" << r.seed << " ppl "
                << num(r.valid_ppl) << '\n';
        });
    std::ofstream file(a.out);
    if (!file) {
        throw Error("cannot open " + a.out + " for writing");
    }
    train::write_sweep_csv(file, rows);
    return kOk;
}

struct RetrofitArgs {
    std::string from, variant, out;
    std::size_t loop_count = 0;
    std::size_t layers = 3;
    std::optional<std::uint64_t> seed;
};

int cmd_retrofit(const RetrofitArgs& a, std::ostream& out) {
    const LoadedRun source = restore(load_checkpoint(a.from));
    const model::Variant v = model::parse_variant(a.variant);
    RunConfig rc = source.config;
    model::ModelConfig target = model::config_for(v, a.layers, a.loop_count);
    target.d_model = rc.model.d_model;
    target.n_heads = rc.model.n_heads;
    target.d_ff = rc.model.d_ff;
    target.vocab = rc.model.vocab;
    target.t_max = rc.model.t_max;
    target.tie_embeddings = rc.model.tie_embeddings;
    target.ln_eps = rc.model.ln_eps;
    train::TrainState<float> state;
    state.params = model::init_from_vanilla(source.state.params, rc.model, target,
                                            a.seed.value_or(rc.plan.seed));
    rc.model = target;
    save_checkpoint(a.out, make_checkpoint(rc, state));
    out << "wrote " << model::variant_name(v) << " L=" << target.all_layers
        << " N=" << target.loop_count << " (" << model::param_count(target).total
        << " parameters) to " << a.out << '\n';
    return kOk;
}

struct CorpusArgs {
    std::size_t bytes = 1 << 20;
    std::uint64_t seed = 1;
    std::string out;
};

int cmd_corpus(const CorpusArgs& a, std::ostream& out) {
    std::ofstream file(a.out, std::ios::binary);
    if (!file) {
        throw Error("cannot open " + a.out + " for writing");
    }
    const std::string text = data::synthetic_text(a.bytes, a.seed);
    file.write(text.data(), static_cast<std::streamsize>(text.size()));
    out << "wrote " << text.size() << " bytes to " << a.out << '\n';
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Cycled transformer language models: train, evaluate, generate"};
    app.name("ztt");
    app.require_subcommand(1);

    TrainArgs ta;
    auto* train_cmd = app.add_subcommand("train", "Train from a config file");
    train_cmd->add_option("--config", ta.config, "key=value run config")->required();
    train_cmd->add_option("--resume", ta.resume, "Checkpoint to continue from");
    train_cmd->add_option("--out", ta.out, "Checkpoint to write")->required();
    train_cmd->add_option("--metrics", ta.metrics, "Metrics CSV (appended)")->required();

    EvalArgs ea;
    auto* eval_cmd = app.add_subcommand("eval", "Perplexity of a checkpoint on a file");
    eval_cmd->add_option("--ckpt", ea.ckpt)->required();
    eval_cmd->add_option("--data", ea.data)->required();
    eval_cmd->add_option("--exit-threshold", ea.threshold, "Adaptive exit threshold P");
    eval_cmd->add_flag("--per-exit", ea.per_exit, "One row per exit");
    eval_cmd->add_option("--batch", ea.batch);
    eval_cmd->add_option("--max-windows", ea.max_windows);

    GenerateArgs ga;
    auto* gen_cmd = app.add_subcommand("generate", "Continue a prompt");
    gen_cmd->add_option("--ckpt", ga.ckpt)->required();
    gen_cmd->add_option("--prompt", ga.prompt)->required();
    gen_cmd->add_option("--max-tokens", ga.max_tokens)->required();
    gen_cmd->add_option("--exit-threshold", ga.threshold);
    gen_cmd->add_option("--temp", ga.temperature, "Sample at this temperature instead of greedy");
    gen_cmd->add_option("--seed", ga.seed);

    SweepArgs sa;
    auto* sweep_cmd = app.add_subcommand("sweep", "Train every layout with a fixed layer budget");
    sweep_cmd->add_option("--budget", sa.budget)->required();
    sweep_cmd->add_option("--variants", sa.variants, "Comma separated: V,BC,HTC,ZTT")->required();
    sweep_cmd->add_option("--config", sa.config)->required();
    sweep_cmd->add_option("--out", sa.out)->required();
    sweep_cmd->add_option("--seeds", sa.seeds)->delimiter(',');

    RetrofitArgs ra;
    auto* retro_cmd = app.add_subcommand("retrofit", "Convert a vanilla checkpoint to a cycled one");
    retro_cmd->add_option("--from", ra.from)->required();
    retro_cmd->add_option("--variant", ra.variant)->required()->check(CLI::IsMember({"HTC", "ZTT"}));
    retro_cmd->add_option("--loop-count", ra.loop_count)->required();
    retro_cmd->add_option("--layers", ra.layers, "Distinct layers of the result");
    retro_cmd->add_option("--seed", ra.seed);
    retro_cmd->add_option("--out", ra.out)->required();

    CorpusArgs ca;
    auto* corpus_cmd = app.add_subcommand("corpus", "Write a synthetic text corpus");
    corpus_cmd->add_option("--bytes", ca.bytes);
    corpus_cmd->add_option("--seed", ca.seed);
    corpus_cmd->add_option("--out", ca.out)->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kBadInput;
    }

    try {
        if (train_cmd->parsed()) {
            return cmd_train(ta, out);
        }
        if (eval_cmd->parsed()) {
            return cmd_eval(ea, out);
        }
        if (gen_cmd->parsed()) {
            return cmd_generate(ga, out);
        }
        if (sweep_cmd->parsed()) {
            return cmd_sweep(sa, out);
        }
        if (retro_cmd->parsed()) {
            return cmd_retrofit(ra, out);
        }
        return cmd_corpus(ca, out);
    } catch (const NumericError& e) {
        err << "error: " << e.what() << '\n';
        return kNumeric;
    } catch (const CheckpointError& e) {
        err << "error: " << e.what() << '\n';
        return kCheckpoint;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kBadInput;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kBadInput;
    } catch (const ConversionError& e) {
        err << "error: " << e.what() << '\n';
        return kBadInput;
    } catch (const DataError& e) {
        err << "error: " << e.what() << '\n';
        return kBadInput;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kFailure;
    }
}

}  // namespace ztt::cli
