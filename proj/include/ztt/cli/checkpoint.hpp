// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "ztt/cli/run_config.hpp"
#include "ztt/numerics/tensor.hpp"
#include "ztt/train/trainer.hpp"

namespace ztt::cli {

inline constexpr char kCheckpointMagic[4] = {'Z', 'T', 'T', 'C'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
    std::string name;
    std::variant<numerics::Tensor<float>, numerics::Tensor<double>> value;
};

// On disk, little endian:
//   "ZTTC" | u32 version | u32 len + config text | u32 count |
//   count x (u32 len + name | u8 dtype | u8 ndim | ndim x u64 | data)
struct Checkpoint {
    std::string config_text;
    std::vector<NamedTensor> tensors;

    const NamedTensor* find(const std::string& name) const;
};

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
// BadMagicError / BadVersionError for foreign or newer files, CheckpointError
// for truncated or malformed ones.
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

// Parameters by name, then AdamW moments ("adamw.m.<name>", "adamw.v.<name>")
// and the step counters as f64 scalars.
Checkpoint make_checkpoint(const RunConfig& config, const train::TrainState<float>& state);

struct LoadedRun {
    RunConfig config;
    train::TrainState<float> state;
};

// Rebuilds config and training state; missing optimizer tensors give a
// fresh optimizer.
LoadedRun restore(const Checkpoint& ckpt);

}  // namespace ztt::cli
