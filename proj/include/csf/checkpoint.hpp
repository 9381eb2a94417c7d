#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "csf/tape.hpp"

namespace csf {

// Checkpoint container: magic, format version, a config-echo text block, then
// named float64 tensors (little-endian). Byte-stable for identical parameters.
//
//   "CSFCKPT\0" | u32 version | u32 cfg_len | cfg bytes | u64 count |
//   per tensor: u32 name_len | name | u32 rows | u32 cols | rows*cols f64
inline constexpr uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::string& path, const std::string& config_echo,
                     std::span<Param* const> params);

struct CheckpointInfo {
    std::string config_echo;
    std::vector<std::string> loaded;    // names filled into params
    std::vector<std::string> skipped;   // names present in file but not requested
};

// Fills matching params by name, validating shapes. Throws ConfigError when a
// requested param is missing or has a different shape. Extra tensors in the
// file are reported in skipped unless strict is true (then they throw too).
CheckpointInfo load_checkpoint(const std::string& path, std::span<Param* const> params,
                               bool strict = false);

// Reads only the config echo block.
std::string read_checkpoint_config(const std::string& path);

// FNV-1a 64-bit content hash of a file, hex-encoded.
std::string file_content_hash(const std::string& path);

}  // namespace csf
