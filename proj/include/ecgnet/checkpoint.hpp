#pragma once

#include "ecgnet/kv.hpp"
#include "ecgnet/model.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace ecgnet {

/// Checkpoint layout (all integers little-endian):
///
///   8 bytes   magic "ECGNETCK"
///   u32       format version (1)
///   u64       length of the config text, then that many bytes of
///             key=value lines: the model config plus caller extras
///             (extras are stored with an "extra." prefix)
///   u32       number of arrays
///   per array:
///     u32 name length, name bytes
///     u32 rank, u64 dims[rank]
///     f64 values[prod(dims)] (IEEE-754 binary64, row-major)
///
/// Arrays are every model parameter followed by every buffer, in the
/// order SeResNet::refs() lists them.
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::byte> encode_checkpoint(SeResNet& model, const KeyValues& extra = {});
void save_checkpoint(const std::filesystem::path& path, SeResNet& model, const KeyValues& extra = {});

struct LoadedCheckpoint {
    SeResNet model;
    KeyValues extra;
};

LoadedCheckpoint decode_checkpoint(std::span<const std::byte> bytes);
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

} // namespace ecgnet
