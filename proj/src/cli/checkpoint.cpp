// SPDX-License-Identifier: Apache-2.0
#include "ztt/cli/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>

#include "ztt/errors.hpp"

namespace ztt::cli {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

using numerics::Tensor;

namespace {

constexpr std::uint32_t kMaxString = 1u << 24;

template <typename T>
void put(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_string(std::ostream& out, const std::string& s) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <typename T>
T get(std::istream& in, const char* what) {
    T v{};
    if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) {
        throw CheckpointError(std::string("checkpoint truncated while reading ") + what);
    }
    return v;
}

std::string get_string(std::istream& in, const char* what) {
    const auto len = get<std::uint32_t>(in, what);
    if (len > kMaxString) {
        throw CheckpointError(std::string("checkpoint ") + what + " length " + std::to_string(len) +
                              " is implausible");
    }
    std::string s(len, '\0');
    if (!in.read(s.data(), len)) {
        throw CheckpointError(std::string("checkpoint truncated while reading ") + what);
    }
    return s;
}

template <typename S>
Tensor<S> read_tensor(std::istream& in, const numerics::Shape& shape, const std::string& name) {
    Tensor<S> t(shape);
    const auto bytes = static_cast<std::streamsize>(t.size() * sizeof(S));
    if (!in.read(reinterpret_cast<char*>(t.data().data()), bytes)) {
        throw CheckpointError("checkpoint truncated in tensor '" + name + "'");
    }
    return t;
}

Tensor<double> scalar_tensor(double v) { return Tensor<double>::scalar(v); }

}  // namespace

const NamedTensor* Checkpoint::find(const std::string& name) const {
    for (const auto& t : tensors) {
        if (t.name == name) {
            return &t;
        }
    }
    return nullptr;
}

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
    out.write(kCheckpointMagic, 4);
    put<std::uint32_t>(out, kCheckpointVersion);
    put_string(out, ckpt.config_text);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
    for (const NamedTensor& nt : ckpt.tensors) {
        put_string(out, nt.name);
        std::visit(
            [&](const auto& t) {
                using S = typename std::decay_t<decltype(t)>::value_type;
                put<std::uint8_t>(out, static_cast<std::uint8_t>(numerics::dtype_of<S>()));
                put<std::uint8_t>(out, static_cast<std::uint8_t>(t.rank()));
                for (std::size_t d : t.shape()) {
                    put<std::uint64_t>(out, d);
                }
                out.write(reinterpret_cast<const char*>(t.data().data()),
                          static_cast<std::streamsize>(t.size() * sizeof(S)));
            },
            nt.value);
    }
    if (!out) {
        throw CheckpointError("failed writing checkpoint");
    }
}

Checkpoint read_checkpoint(std::istream& in) {
    char magic[4] = {};
    if (!in.read(magic, 4) || std::memcmp(magic, kCheckpointMagic, 4) != 0) {
        throw BadMagicError("not a checkpoint: magic bytes are not ZTTC");
    }
    const auto version = get<std::uint32_t>(in, "version");
    if (version != kCheckpointVersion) {
        throw BadVersionError("unsupported checkpoint version " + std::to_string(version) +
                              " (expected " + std::to_string(kCheckpointVersion) + ")");
    }
    Checkpoint ckpt;
    ckpt.config_text = get_string(in, "config");
    const auto count = get<std::uint32_t>(in, "tensor count");
    for (std::uint32_t i = 0; i < count; ++i) {
        NamedTensor nt;
        nt.name = get_string(in, "tensor name");
        const auto dtype = get<std::uint8_t>(in, "dtype");
        const auto ndim = get<std::uint8_t>(in, "rank");
        numerics::Shape shape;
        std::uint64_t total = 1;
        for (std::uint8_t d = 0; d < ndim; ++d) {
            const auto dim = get<std::uint64_t>(in, "dims");
            if (dim > (1ull << 32) || (dim != 0 && total > (1ull << 34) / dim)) {
                throw CheckpointError("tensor '" + nt.name + "' has implausible dimensions");
            }
            total *= dim;
            shape.push_back(static_cast<std::size_t>(dim));
        }
        if (dtype == static_cast<std::uint8_t>(numerics::DType::f32)) {
            nt.value = read_tensor<float>(in, shape, nt.name);
        } else if (dtype == static_cast<std::uint8_t>(numerics::DType::f64)) {
            nt.value = read_tensor<double>(in, shape, nt.name);
        } else {
            throw CheckpointError("tensor '" + nt.name + "' has unknown dtype code " +
                                  std::to_string(dtype));
        }
        ckpt.tensors.push_back(std::move(nt));
    }
    if (in.peek() != std::char_traits<char>::eof()) {
        throw CheckpointError("trailing bytes after the last tensor");
    }
    return ckpt;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw CheckpointError("cannot open " + path + " for writing");
    }
    write_checkpoint(out, ckpt);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw CheckpointError("cannot open checkpoint " + path);
    }
    return read_checkpoint(in);
}

Checkpoint make_checkpoint(const RunConfig& config, const train::TrainState<float>& state) {
    Checkpoint ckpt;
    ckpt.config_text = to_text(config);
    const auto params = state.params.all();
    for (const auto* p : params) {
        ckpt.tensors.push_back({p->name, p->value});
    }
    const auto& opt = state.optimizer;
    if (!opt.first_moment.empty()) {
        for (std::size_t i = 0; i < params.size(); ++i) {
            ckpt.tensors.push_back({"adamw.m." + params[i]->name, opt.first_moment.at(i)});
            ckpt.tensors.push_back({"adamw.v." + params[i]->name, opt.second_moment.at(i)});
        }
    }
    ckpt.tensors.push_back({"adamw.step", scalar_tensor(static_cast<double>(opt.step))});
    ckpt.tensors.push_back({"train.step", scalar_tensor(static_cast<double>(state.step))});
    return ckpt;
}

namespace {

const Tensor<float>& float_tensor(const Checkpoint& ckpt, const std::string& name) {
    const NamedTensor* nt = ckpt.find(name);
    if (nt == nullptr) {
        throw CheckpointError("checkpoint has no tensor '" + name + "'");
    }
    const auto* t = std::get_if<Tensor<float>>(&nt->value);
    if (t == nullptr) {
        throw CheckpointError("tensor '" + name + "' is not f32");
    }
    return *t;
}

std::size_t counter(const Checkpoint& ckpt, const std::string& name) {
    const NamedTensor* nt = ckpt.find(name);
    if (nt == nullptr) {
        return 0;
    }
    const auto* t = std::get_if<Tensor<double>>(&nt->value);
    if (t == nullptr || t->size() != 1 || !(t->data()[0] >= 0.0)) {
        throw CheckpointError("counter '" + name + "' is malformed");
    }
    return static_cast<std::size_t>(t->data()[0]);
}

}  // namespace

LoadedRun restore(const Checkpoint& ckpt) {
    LoadedRun run;
    try {
        run.config = parse_run_config(ckpt.config_text, "checkpoint config");
        run.config.model.validate();
    } catch (const ConfigError& e) {
        throw CheckpointError(e.what());
    }
    // Shapes and names come from a fresh init; values from the file.
    run.state.params = model::init_parameters<float>(run.config.model, 0);
    auto params = run.state.params.all();
    for (auto* p : params) {
        const Tensor<float>& t = float_tensor(ckpt, p->name);
        if (t.shape() != p->value.shape()) {
            throw CheckpointError("tensor '" + p->name + "' has shape " +
                                  numerics::shape_string(t.shape()) + ", config implies " +
                                  numerics::shape_string(p->value.shape()));
        }
        p->value = t;
    }
    auto& opt = run.state.optimizer;
    if (ckpt.find("adamw.m." + params.front()->name) != nullptr) {
        for (auto* p : params) {
            opt.first_moment.push_back(float_tensor(ckpt, "adamw.m." + p->name));
            opt.second_moment.push_back(float_tensor(ckpt, "adamw.v." + p->name));
            if (opt.first_moment.back().shape() != p->value.shape() ||
                opt.second_moment.back().shape() != p->value.shape()) {
                throw CheckpointError("optimizer moments for '" + p->name + "' have the wrong shape");
            }
        }
    }
    opt.step = counter(ckpt, "adamw.step");
    run.state.step = counter(ckpt, "train.step");
    return run;
}

}  // namespace ztt::cli
