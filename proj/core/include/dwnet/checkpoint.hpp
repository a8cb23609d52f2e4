#pragma once

#include <filesystem>

#include "dwnet/data.hpp"
#include "dwnet/training.hpp"

namespace dwnet {

/// Binary checkpoint container, version 1. All integers and reals are
/// little-endian.
///
///   "DWNETCKP"  8-byte magic
///   u32         format version
///   u32         entry count
///   entries:    u8 kind, u32 name length, name bytes, payload
///     kind 1 tensor:  u32 rank, u64 extents[rank], f64 values[]
///     kind 2 u64:     u64
///     kind 3 string:  u64 length, bytes
///     kind 4 u64[]:   u64 count, u64 values[]
///
/// Entries: "spec" (JSON echo), "param.<name>", "adam.m.<name>",
/// "adam.v.<name>", "adam.t", "iteration", "iterator.permutation",
/// "iterator.cursor", "iterator.epoch", "iterator.rng".
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const Trainer& trainer);
/// Rebuilds a trainer over `train_set` (which must be the dataset the run
/// was started with) positioned exactly where the saved one stopped.
Trainer load_checkpoint(const std::filesystem::path& path, const Dataset& train_set);

}  // namespace dwnet
